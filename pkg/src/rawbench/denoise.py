"""Classical baseline denoiser: VST -> sliding-DCT hard threshold -> inverse VST.

The shrinkage stage slides an 8x8 orthonormal DCT over each plane at
stride 4, zeroes AC coefficients below ``threshold_mult * sigma``, and
averages the overlapping reconstructions.  After a variance-stabilizing
transform the noise std is ~1, making the threshold parameter-free; with
``transform="none"`` the caller supplies the DN-domain sigma instead.

Large planes are processed in overlapping tiles.  Each tile is computed
with an 8-pixel halo so that every DCT block contributing to a tile's core
is seen in full; tiles are then blended with linear feathering across the
overlap band.  When the tile step is a multiple of the DCT stride this
makes the tiled result identical to a single pass.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import fft as sfft

from .calibration import NoiseParams
from .core import PackedImage, SPACE_NORMALIZED
from .errors import DimensionError, DomainError, ProfileError
from .transforms import PgParams, gat_forward, gat_inverse, ksigma_forward, ksigma_inverse

_BLOCK = 8
_TRANSFORMS = ("gat", "ksigma", "none")


@dataclass(frozen=True)
class DenoiseConfig:
    transform: str = "gat"
    shrink: str = "dct8_hard"
    threshold_mult: float = 3.0
    tile: int = 256
    overlap: int = 32
    stride: int = 4
    sigma_dn: float | None = None  # required for transform == "none"

    def __post_init__(self):
        if self.transform not in _TRANSFORMS:
            raise DomainError(f"transform must be one of {_TRANSFORMS}")
        if self.shrink != "dct8_hard":
            raise DomainError(f"unknown shrinkage {self.shrink!r}")
        if self.threshold_mult < 0:
            raise DomainError("threshold_mult must be >= 0")
        if not self.tile > self.overlap >= 0:
            raise DomainError("need tile > overlap >= 0")
        if self.stride < 1:
            raise DomainError("stride must be >= 1")


def _block_starts(extent: int, stride: int) -> np.ndarray:
    starts = list(range(0, extent - _BLOCK + 1, stride))
    if starts[-1] != extent - _BLOCK:
        starts.append(extent - _BLOCK)
    return np.asarray(starts)


def dct8_shrink(
    plane: np.ndarray, sigma: float, threshold_mult: float = 3.0, stride: int = 4
) -> np.ndarray:
    """Sliding 8x8 DCT hard-threshold denoiser for additive Gaussian noise.

    AC coefficients with magnitude below ``threshold_mult * sigma`` are
    zeroed; the DC coefficient is always kept, so constant planes pass
    through unchanged and sigma = 0 reproduces the input exactly.
    """
    p = np.asarray(plane, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] < _BLOCK or p.shape[1] < _BLOCK:
        raise DimensionError(f"plane must be at least 8x8, got {p.shape}")
    if sigma < 0:
        raise DomainError("sigma must be >= 0")
    h, w = p.shape
    ys = _block_starts(h, stride)
    xs = _block_starts(w, stride)
    iy = ys[:, None] + np.arange(_BLOCK)[None, :]          # (ny, 8)
    ix = xs[:, None] + np.arange(_BLOCK)[None, :]          # (nx, 8)
    blocks = p[iy[:, None, :, None], ix[None, :, None, :]]  # (ny, nx, 8, 8)
    coef = sfft.dctn(blocks, axes=(2, 3), norm="ortho")
    kill = np.abs(coef) < threshold_mult * sigma
    kill[..., 0, 0] = False
    coef[kill] = 0.0
    rec = sfft.idctn(coef, axes=(2, 3), norm="ortho")
    out = np.zeros_like(p)
    cnt = np.zeros_like(p)
    for a in range(_BLOCK):
        for b in range(_BLOCK):
            out[np.ix_(ys + a, xs + b)] += rec[:, :, a, b]
            cnt[np.ix_(ys + a, xs + b)] += 1.0
    return out / cnt


def _feather(tile: int, overlap: int, first: bool, last: bool) -> np.ndarray:
    w = np.ones(tile)
    if overlap > 0:
        ramp = (np.arange(overlap) + 1.0) / (overlap + 1.0)
        if not first:
            w[:overlap] = np.minimum(w[:overlap], ramp)
        if not last:
            w[tile - overlap :] = np.minimum(w[tile - overlap :], ramp[::-1])
    return w


_HALO = 8  # one DCT block: every block touching a tile core fits in the padded patch


def _tiled_shrink(
    plane: np.ndarray, sigma: float, threshold_mult: float, tile: int, overlap: int, stride: int
) -> np.ndarray:
    h, w = plane.shape
    if tile >= h and tile >= w:
        return dct8_shrink(plane, sigma, threshold_mult, stride)
    step = tile - overlap
    ys = sorted({min(a, max(h - tile, 0)) for a in range(0, max(h - tile, 0) + step, step)})
    xs = sorted({min(a, max(w - tile, 0)) for a in range(0, max(w - tile, 0) + step, step)})
    acc = np.zeros_like(plane, dtype=np.float64)
    wsum = np.zeros_like(acc)
    for ay in ys:
        cy = min(tile, h - ay)
        wy = _feather(cy, min(overlap, cy - 1), ay == ys[0], ay == ys[-1])
        y0, y1 = max(0, ay - _HALO), min(h, ay + cy + _HALO)
        for ax in xs:
            cx = min(tile, w - ax)
            wx = _feather(cx, min(overlap, cx - 1), ax == xs[0], ax == xs[-1])
            x0, x1 = max(0, ax - _HALO), min(w, ax + cx + _HALO)
            patch = dct8_shrink(plane[y0:y1, x0:x1], sigma, threshold_mult, stride)
            core = patch[ay - y0 : ay - y0 + cy, ax - x0 : ax - x0 + cx]
            weight = wy[:, None] * wx[None, :]
            acc[ay : ay + cy, ax : ax + cx] += core * weight
            wsum[ay : ay + cy, ax : ax + cx] += weight
    return acc / wsum


def effective_pg_params(params: NoiseParams, dgain: float) -> PgParams:
    """DN-domain Poisson-Gaussian parameters of a digitally amplified frame.

    Denormalizing noisy_norm * (white - black) yields dgain*(K*Poisson(e) + n),
    i.e. gain dgain*K and Gaussian std dgain*sqrt(read^2 + row^2 + quant^2/12).
    """
    sigma_total = np.sqrt(
        params.sigma_read**2 + params.sigma_row**2 + params.quant_step**2 / 12.0
    )
    return PgParams(K=dgain * params.K, sigma=dgain * float(sigma_total))


def denoise_raw(
    noisy_norm: PackedImage,
    params: PgParams | list[PgParams] | tuple[PgParams, ...],
    cfg: DenoiseConfig = DenoiseConfig(),
) -> PackedImage:
    """Denoise a normalized RGGB image channel by channel.

    ``params`` may be a single PgParams shared by all channels or one per
    channel, already scaled for the applied digital gain (see
    :func:`effective_pg_params`).  The pipeline per channel is
    scale to DN above black -> VST forward -> dct8 shrinkage (sigma = 1
    post-VST, or cfg.sigma_dn for transform="none") -> VST inverse ->
    rescale -> clamp to [0, clip_hi].  The output is deterministic.
    """
    if noisy_norm.space != SPACE_NORMALIZED:
        raise DomainError("denoise_raw expects a normalized image")
    if isinstance(params, PgParams):
        per_channel = [params] * 4
    else:
        per_channel = list(params)
        if len(per_channel) != 4 or not all(isinstance(p, PgParams) for p in per_channel):
            raise ProfileError("params must be one PgParams or a sequence of 4")
    if cfg.transform == "none" and cfg.sigma_dn is None:
        raise ProfileError('transform="none" requires cfg.sigma_dn')

    span = noisy_norm.white_level - noisy_norm.black_level
    out = np.empty_like(noisy_norm.channels, dtype=np.float64)
    for c in range(4):
        p = per_channel[c]
        y = noisy_norm.channels[c].astype(np.float64) * span[c]
        if cfg.transform == "gat":
            t, sigma = gat_forward(y, p), 1.0
        elif cfg.transform == "ksigma":
            t, sigma = ksigma_forward(y, p), 1.0
        else:
            t, sigma = y, float(cfg.sigma_dn)
        t = _tiled_shrink(t, sigma, cfg.threshold_mult, cfg.tile, cfg.overlap, cfg.stride)
        if cfg.transform == "gat":
            # shrinkage can overshoot slightly below the stabilized range
            y_hat = gat_inverse(np.maximum(t, 0.0), p)
        elif cfg.transform == "ksigma":
            y_hat = ksigma_inverse(t, p)
        else:
            y_hat = t
        out[c] = np.clip(y_hat / span[c], 0.0, noisy_norm.clip_hi)
    return replace(noisy_norm, channels=out)
