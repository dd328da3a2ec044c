"""Noisy/clean training-pair synthesis from clean RGGB images and a sensor profile.

The signal path follows the ratio paradigm: a normalized clean value c at
digital gain g corresponds to c*(white-black)/(g*K) photo-electrons, so the
brightness-aligned ground truth of the synthesized noisy image is the clean
image itself.  Shot noise is sampled exactly (Poisson) below a configurable
electron mean and via a rounded Gaussian above it.

Signal-independent noise comes from one of three sources:

* ``parametric``  - Gaussian pixel noise + Gaussian row (banding) noise +
  uniform quantization dither, per the profile's NoiseParams;
* ``dark_sample`` - a random crop of a real corrected dark residual from
  the profile's library;
* ``hybrid``      - per image, a Bernoulli(rho) pick between the two, which
  keeps the spatial correlation of real dark noise intact in the samples
  that use it.

All randomness is driven by counter-derived streams, so batches are
bit-identical regardless of execution order or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .calibration import NoiseParams, SensorProfile
from .core import (
    PackedImage,
    RawFrame,
    SPACE_DN_ABOVE_BLACK,
    SPACE_NORMALIZED,
    normalize,
    pack_rggb,
)
from .errors import DimensionError, DomainError, ProfileError

_MODES = ("parametric", "dark_sample", "hybrid")


@dataclass(frozen=True)
class SynthConfig:
    """One synthesis draw: ISO/dgain point, noise source, component toggles."""

    iso: int
    dgain: float
    mode: str = "parametric"
    hybrid_rho: float = 0.5
    clip_hi: float = 1.0
    shot: bool = True
    read: bool = True
    row: bool = True
    quant: bool = True
    frame_sigma: float = 0.0
    seed: int = 0
    gauss_threshold: float = 30.0

    def __post_init__(self):
        if not self.dgain > 0:
            raise DomainError(f"dgain must be > 0, got {self.dgain}")
        if self.mode not in _MODES:
            raise DomainError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if not 0.0 <= self.hybrid_rho <= 1.0:
            raise DomainError(f"hybrid_rho must be in [0, 1], got {self.hybrid_rho}")


def sample_shot(
    clean_norm: PackedImage,
    params: NoiseParams,
    dgain: float,
    rng: np.random.Generator,
    gauss_threshold: float = 30.0,
) -> PackedImage:
    """Sample shot noise: DN_above_black = Poisson(e) * K with e = c*(w-b)/(dgain*K).

    Poisson counts are drawn exactly below ``gauss_threshold`` electrons and
    approximated by round(N(e, e)) clamped at zero above it.
    """
    if clean_norm.space != SPACE_NORMALIZED:
        raise DomainError("sample_shot expects a normalized clean image")
    c = clean_norm.channels.astype(np.float64)
    if np.min(c) < 0:
        raise DomainError("clean image must be >= 0")
    span = (clean_norm.white_level - clean_norm.black_level)[:, None, None]
    electrons = c * span / (dgain * params.K)
    counts = np.empty_like(electrons)
    small = electrons < gauss_threshold
    counts[small] = rng.poisson(electrons[small])
    big = ~small
    if np.any(big):
        e_big = electrons[big]
        counts[big] = np.maximum(np.rint(rng.normal(e_big, np.sqrt(e_big))), 0.0)
    return replace(clean_norm, channels=counts * params.K, space=SPACE_DN_ABOVE_BLACK)


def sample_parametric_read(
    shape: tuple[int, int, int],
    params: NoiseParams,
    rng: np.random.Generator,
    read: bool = True,
    row: bool = True,
    quant: bool = True,
    frame_sigma: float = 0.0,
) -> np.ndarray:
    """Signal-independent DN residual for a packed (4, H, W) shape.

    Pixel noise is N(0, sigma_read^2); banding is N(0, sigma_row^2) shared
    along each mosaic row (even rows feed the R/Gr planes, odd rows Gb/B);
    quantization is uniform dither over one quant step.  ``frame_sigma``
    optionally adds a single Gaussian offset for the whole frame (off by
    default).  Disabled components contribute exactly zero.
    """
    if len(shape) != 3 or shape[0] != 4:
        raise DimensionError(f"expected a packed (4, H, W) shape, got {shape}")
    _, h, w = shape
    res = np.zeros(shape, dtype=np.float64)
    if read and params.sigma_read > 0:
        res += rng.normal(0.0, params.sigma_read, shape)
    if row and params.sigma_row > 0:
        offsets = rng.normal(0.0, params.sigma_row, 2 * h)
        res[0] += offsets[0::2, None]
        res[1] += offsets[0::2, None]
        res[2] += offsets[1::2, None]
        res[3] += offsets[1::2, None]
    if quant and params.quant_step > 0:
        half = params.quant_step / 2.0
        res += rng.uniform(-half, half, shape)
    if frame_sigma > 0:
        res += rng.normal(0.0, frame_sigma)
    return res


def sample_dark_patch(
    profile: SensorProfile,
    iso: int,
    shape: tuple[int, int, int],
    rng: np.random.Generator,
) -> np.ndarray:
    """Random crop of a random corrected dark residual from the ISO's library.

    Crop offsets are drawn in the packed domain, so the patch is always
    even-aligned on the mosaic and keeps CFA phase.
    """
    library = profile.dark_library.get(iso)
    if not library:
        raise ProfileError(f"dark library for ISO {iso} is empty")
    if len(shape) != 3 or shape[0] != 4:
        raise DimensionError(f"expected a packed (4, H, W) shape, got {shape}")
    _, h, w = shape
    idx = int(rng.integers(len(library)))
    planes = library[idx].channels
    lib_h, lib_w = planes.shape[1], planes.shape[2]
    if h > lib_h or w > lib_w:
        raise DimensionError(
            f"patch {h}x{w} larger than library frame {lib_h}x{lib_w}"
        )
    y0 = int(rng.integers(lib_h - h + 1))
    x0 = int(rng.integers(lib_w - w + 1))
    return planes[:, y0 : y0 + h, x0 : x0 + w].astype(np.float64)


def _rng_streams(seed: int) -> tuple[np.random.Generator, ...]:
    # Independent substreams for shot / signal-independent noise / branch
    # selection keep hybrid_rho=0 bit-identical to parametric mode and
    # rho=1 to dark_sample mode under the same seed.
    children = np.random.SeedSequence(seed).spawn(3)
    return tuple(np.random.default_rng(c) for c in children)


def synthesize_noisy(
    clean_norm: PackedImage,
    profile: SensorProfile,
    cfg: SynthConfig,
    clip: bool = True,
) -> PackedImage:
    """Full noisy-image synthesis for one clean patch.

    noisy = clamp(signal_norm + dgain * residual_DN / (white - black), 0, clip_hi)
    where signal_norm is the shot-noise draw mapped back to normalized units
    (or exactly the clean image when shot noise is disabled).  ``clip=False``
    skips the final clamp, exposing the pre-clip field for moment checks.
    """
    if clean_norm.space != SPACE_NORMALIZED:
        raise DomainError("synthesize_noisy expects a normalized clean image")
    params = profile.params_for(cfg.iso)
    shot_rng, noise_rng, select_rng = _rng_streams(cfg.seed)
    span = (profile.white_level - profile.black_level)[:, None, None]
    shape = clean_norm.channels.shape

    if cfg.shot:
        shot = sample_shot(
            replace(
                clean_norm,
                black_level=profile.black_level,
                white_level=profile.white_level,
            ),
            params,
            cfg.dgain,
            shot_rng,
            cfg.gauss_threshold,
        )
        signal_norm = cfg.dgain * shot.channels / span
    else:
        signal_norm = clean_norm.channels.astype(np.float64)

    if cfg.mode == "hybrid":
        use_dark = bool(select_rng.random() < cfg.hybrid_rho)
    else:
        use_dark = cfg.mode == "dark_sample"
    if use_dark:
        residual = sample_dark_patch(profile, cfg.iso, shape, noise_rng)
    else:
        residual = sample_parametric_read(
            shape,
            params,
            noise_rng,
            read=cfg.read,
            row=cfg.row,
            quant=cfg.quant,
            frame_sigma=cfg.frame_sigma,
        )

    noisy = signal_norm + cfg.dgain * residual / span
    if clip:
        noisy = np.clip(noisy, 0.0, cfg.clip_hi)
    return PackedImage(
        channels=noisy,
        space=SPACE_NORMALIZED,
        black_level=profile.black_level,
        white_level=profile.white_level,
        camera_id=profile.camera_id,
        iso=cfg.iso,
        exposure_s=clean_norm.exposure_s,
        cfa=clean_norm.cfa,
        clip_hi=cfg.clip_hi,
    )


@dataclass(frozen=True)
class BatchConfig:
    """Preset ranges a training batch samples ISO/dgain points from.

    Exactly one of ``dgain_choices`` (discrete presets, e.g. the paired
    scenes' {100, 200}) or ``dgain_range`` (continuous uniform, e.g. the
    in-the-wild (10, 100)) must be given.
    """

    iso_choices: tuple[int, ...]
    dgain_choices: tuple[float, ...] | None = None
    dgain_range: tuple[float, float] | None = None
    mode: str = "parametric"
    hybrid_rho: float = 0.5
    clip_hi: float = 1.0
    shot: bool = True
    read: bool = True
    row: bool = True
    quant: bool = True
    frame_sigma: float = 0.0

    def __post_init__(self):
        if not self.iso_choices:
            raise DomainError("iso_choices must be non-empty")
        if (self.dgain_choices is None) == (self.dgain_range is None):
            raise DomainError("set exactly one of dgain_choices / dgain_range")


def make_pair_batch(
    clean_frames: list[RawFrame],
    profile: SensorProfile,
    sampler: BatchConfig,
    patch: int,
    patches_per_image: int,
    master_seed: int,
) -> list[tuple[PackedImage, PackedImage]]:
    """Draw (noisy, clean) patch pairs from clean mosaic frames.

    ``patch`` is the packed-plane side length (a 512 patch is a 512x512x4
    tensor).  Per-patch randomness is derived from
    SeedSequence(master_seed, spawn_key=(image_index, patch_index)), so the
    output is independent of execution order.
    """
    if patch <= 0 or patch % 2:
        raise DimensionError(f"patch side must be even and > 0, got {patch}")
    pairs: list[tuple[PackedImage, PackedImage]] = []
    for i, frame in enumerate(clean_frames):
        packed = normalize(pack_rggb(frame), clip_hi=sampler.clip_hi)
        h, w = packed.plane_height, packed.plane_width
        if patch > h or patch > w:
            raise DimensionError(
                f"patch {patch} does not fit image planes {h}x{w} (image {i})"
            )
        for j in range(patches_per_image):
            rng = np.random.default_rng(
                np.random.SeedSequence(master_seed, spawn_key=(i, j))
            )
            iso = int(sampler.iso_choices[rng.integers(len(sampler.iso_choices))])
            if sampler.dgain_choices is not None:
                dgain = float(sampler.dgain_choices[rng.integers(len(sampler.dgain_choices))])
            else:
                lo, hi = sampler.dgain_range
                dgain = float(rng.uniform(lo, hi))
            y0 = int(rng.integers(h - patch + 1))
            x0 = int(rng.integers(w - patch + 1))
            clean_patch = replace(
                packed,
                channels=packed.channels[:, y0 : y0 + patch, x0 : x0 + patch],
            )
            cfg = SynthConfig(
                iso=iso,
                dgain=dgain,
                mode=sampler.mode,
                hybrid_rho=sampler.hybrid_rho,
                clip_hi=sampler.clip_hi,
                shot=sampler.shot,
                read=sampler.read,
                row=sampler.row,
                quant=sampler.quant,
                frame_sigma=sampler.frame_sigma,
                seed=int(rng.integers(np.iinfo(np.int64).max)),
            )
            pairs.append((synthesize_noisy(clean_patch, profile, cfg), clean_patch))
    return pairs
