"""Command-line front end: calibrate, synth, denoise, isp, eval, rank, budget, bench.

Exit codes: 0 success, 1 budget-constraint failure, 2 validation error,
3 missing data.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import budget as budget_mod
from . import calibration, core, harness, isp, metrics, ranking, synth
from .denoise import DenoiseConfig, denoise_raw, effective_pg_params
from .errors import MissingDataError, RawBenchError


def _parse_roi(text: str) -> core.Roi:
    x0, y0, w, h = (int(v) for v in text.split(","))
    return core.Roi(x0, y0, w, h)


def _parse_gains(text: str) -> dict[int, float]:
    out = {}
    for part in text.split(","):
        iso, gain = part.split("=")
        out[int(iso)] = float(gain)
    return out


def _cmd_calibrate(args) -> int:
    darks_root = Path(args.darks)
    iso_dirs = sorted(p for p in darks_root.iterdir() if p.is_dir())
    if not iso_dirs:
        raise MissingDataError(f"{darks_root}: expected one subdirectory per ISO")
    darks_by_iso = {}
    for iso_dir in iso_dirs:
        iso = int(iso_dir.name)
        frames = [core.read_frame(p) for p in sorted(iso_dir.glob("*.rawb"))]
        if frames:
            darks_by_iso[iso] = frames
    gains = _parse_gains(args.gains) if args.gains else None
    ptc = None
    if args.ptc_csv:
        ptc = {}
        with open(args.ptc_csv, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                ptc.setdefault(int(row["iso"]), []).append(
                    (float(row["mean"]), float(row["variance"]))
                )
    profile = calibration.build_profile(
        camera_id=args.camera_id or next(iter(darks_by_iso.values()))[0].camera_id,
        isos=sorted(darks_by_iso),
        darks_by_iso=darks_by_iso,
        ptc_points_by_iso=ptc,
        provided_gains=gains,
        roi=_parse_roi(args.roi) if args.roi else None,
        band_axis=args.band_axis,
    )
    calibration.save_profile(profile, args.out)
    print(f"wrote profile for {len(profile.iso_params)} ISO settings to {args.out}")
    return 0


def _parse_dgain_spec(args) -> dict:
    if args.dgain_set:
        return {"dgain_choices": tuple(float(v) for v in args.dgain_set.split(","))}
    lo, hi = (float(v) for v in args.dgain_range.split(":"))
    return {"dgain_range": (lo, hi)}


def _cmd_synth(args) -> int:
    profile = calibration.load_profile(args.profile)
    clean_paths = sorted(Path(args.clean).glob("*.rawb"))
    if not clean_paths:
        raise MissingDataError(f"{args.clean}: no .rawb clean frames found")
    frames = [core.read_frame(p) for p in clean_paths]
    sampler = synth.BatchConfig(
        iso_choices=tuple(int(v) for v in args.iso_set.split(",")),
        mode=args.mode,
        hybrid_rho=args.rho,
        clip_hi=args.clip_hi,
        **_parse_dgain_spec(args),
    )
    pairs = synth.make_pair_batch(
        frames, profile, sampler, args.patch, args.per_image, args.seed
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    per_image = args.per_image
    for idx, (noisy, clean) in enumerate(pairs):
        stem = f"{clean_paths[idx // per_image].stem}_p{idx % per_image:02d}"
        core.write_packed(_as_f32(noisy), out_dir / f"{stem}_noisy.rawb")
        core.write_packed(_as_f32(clean), out_dir / f"{stem}_clean.rawb")
    print(f"wrote {len(pairs)} noisy/clean pairs to {out_dir}")
    return 0


def _as_f32(img: core.PackedImage) -> core.PackedImage:
    return replace(img, channels=img.channels.astype(np.float32))


def _cmd_denoise(args) -> int:
    profile = calibration.load_profile(args.profile)
    frame = core.read_frame(args.infile)
    noisy = core.normalize(core.pack_rggb(frame), clip_hi=args.clip_hi)
    params = effective_pg_params(profile.params_for(args.iso), args.dgain)
    cfg = DenoiseConfig(
        transform=args.transform,
        threshold_mult=args.threshold,
        tile=args.tile,
        overlap=args.overlap,
        sigma_dn=args.sigma_dn,
    )
    den = denoise_raw(noisy, params, cfg)
    dn = core.denormalize(den)
    out_frame = core.unpack_rggb(replace(dn, channels=dn.channels.astype(np.float32)))
    core.write_frame(out_frame, args.out)
    print(f"denoised {args.infile} -> {args.out} (transform={args.transform})")
    return 0


def _cmd_isp(args) -> int:
    path = Path(args.infile)
    with path.open("rb") as fh:
        layout = json.loads(fh.readline()).get("layout", "mosaic")
    if layout == "rggb":
        img = core.read_packed(path)
        if img.space != core.SPACE_NORMALIZED:
            img = core.normalize(img)
    else:
        img = core.normalize(core.pack_rggb(core.read_frame(path)))
    cfg = isp.IspConfig(
        wb="gray_world" if args.wb == "gray-world" else tuple(float(v) for v in args.wb.split(",")),
        gamma=args.gamma,
    )
    rgb = isp.run_isp(img, cfg)
    out = Path(args.out)
    meta = {"isp": {"wb": args.wb, "gamma": args.gamma, "ccm": "identity"}}
    if out.suffix.lower() == ".ppm":
        isp.write_ppm16(rgb, out)
    else:
        core.write_rgb(rgb, out, extra=meta)
    print(f"rendered {args.infile} -> {out} ({rgb.shape[1]}x{rgb.shape[0]})")
    return 0


def _cmd_eval(args) -> int:
    pred_dir, gt_dir = Path(args.pred), Path(args.gt)
    pred_paths = sorted(pred_dir.glob("*.rawb"))
    if not pred_paths:
        raise MissingDataError(f"{pred_dir}: no predictions found")
    missing = [p.name for p in pred_paths if not (gt_dir / p.name).exists()]
    if missing:
        raise MissingDataError(f"missing ground truth for: {', '.join(missing)}")
    rows = []
    for p in pred_paths:
        pred = core.read_frame(p)
        gt = core.read_frame(gt_dir / p.name)
        res = metrics.evaluate_pair(pred, gt, args.phase)
        # dgain is a manifest-level attribute; directory mode leaves it blank
        rows.append([p.stem, pred.camera_id, pred.iso, "", res.psnr, res.ssim])
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "camera", "iso", "dgain", "psnr_db", "ssim"])
        for row in rows:
            writer.writerow([*row[:4], repr(row[4]), repr(row[5])])
    print(f"evaluated {len(rows)} pairs -> {args.out}")
    return 0


def _cmd_rank(args) -> int:
    records = []
    with open(args.scores, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    for row in csv.DictReader(lines):
        kwargs = {
            m: float(row[m]) if row.get(m) not in (None, "") else None
            for m in ranking.ALL_METRICS
        }
        records.append(ranking.MetricRecord(team=row["team"], **kwargs))
    categories = tuple(
        cat
        for cat, metric_set in ranking.CATEGORY_METRICS.items()
        if all(r.get(m) is not None for r in records for m in metric_set)
    )
    table = ranking.final_table(records, categories)
    harness.write_ranktable(table, args.out)
    print(f"ranked {len(records)} teams over {list(categories)} -> {args.out}")
    return 0


def _cmd_budget(args) -> int:
    layers, ensemble, input_shape = budget_mod.load_model_spec(args.model)
    if args.input:
        input_shape = tuple(int(v) for v in args.input.split(","))
    report = budget_mod.build_report(layers, input_shape, ensemble=ensemble)
    result = budget_mod.check_constraints(report)
    print(f"params: {report.total_params:,}  (limit {budget_mod.MAX_PARAMS:,})")
    print(
        f"macs:   {report.total_macs:,}  ({report.total_macs / 1e9:.2f} GMacs, "
        f"limit < {budget_mod.MAX_MACS / 1e9:.0f} G)"
    )
    if result.passed:
        print("constraints: PASS")
        return 0
    for reason in result.reasons:
        print(f"constraints: FAIL - {reason}")
    return 1


def _cmd_bench(args) -> int:
    manifest = harness.load_manifest(args.manifest, strict=args.strict)
    scores_path, rank_path = harness.run_benchmark(
        manifest,
        args.pred_root,
        external_scores_path=args.external,
        out_dir=args.out_dir,
        threads=args.threads,
    )
    print(f"wrote {scores_path} and {rank_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rawbench")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master RNG seed")
    common.add_argument("--threads", type=int, default=1, help="worker threads for batch work")
    common.add_argument("--strict", action="store_true", help="eagerly validate referenced files")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=argparse.ArgumentParser)

    def add_parser(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    p = add_parser("calibrate", help="build a sensor profile from dark frames")
    p.add_argument("--darks", required=True, help="directory with one <iso>/ subdir of .rawb darks")
    p.add_argument("--camera-id", default="")
    p.add_argument("--out", required=True)
    p.add_argument("--roi", default=None, help="x0,y0,w,h (even values)")
    p.add_argument("--gains", default=None, help="provided gains, e.g. 800=0.8,1600=1.6")
    p.add_argument("--ptc-csv", default=None, help="CSV iso,mean,variance for gain fitting")
    p.add_argument("--band-axis", choices=("row", "col"), default="row")
    p.set_defaults(func=_cmd_calibrate)

    p = add_parser("synth", help="synthesize noisy/clean training pairs")
    p.add_argument("--profile", required=True)
    p.add_argument("--clean", required=True, help="directory of clean mosaic .rawb frames")
    p.add_argument("--out", required=True)
    p.add_argument("--iso-set", default="800,1600,3200")
    p.add_argument("--dgain-range", default="10:200", help="lo:hi continuous range")
    p.add_argument("--dgain-set", default=None, help="discrete presets, e.g. 100,200")
    p.add_argument("--mode", choices=synth._MODES, default="hybrid")
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--patch", type=int, default=512)
    p.add_argument("--per-image", type=int, default=8)
    p.add_argument("--clip-hi", type=float, default=1.0)
    p.set_defaults(func=_cmd_synth)

    p = add_parser("denoise", help="classical VST + sliding-DCT denoiser")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--iso", type=int, required=True)
    p.add_argument("--dgain", type=float, default=1.0)
    p.add_argument("--transform", choices=("gat", "ksigma", "none"), default="gat")
    p.add_argument("--sigma-dn", type=float, default=None, help="DN sigma for transform=none")
    p.add_argument("--threshold", type=float, default=3.0)
    p.add_argument("--out", required=True)
    p.add_argument("--tile", type=int, default=256)
    p.add_argument("--overlap", type=int, default=32)
    p.add_argument("--clip-hi", type=float, default=1.0)
    p.set_defaults(func=_cmd_denoise)

    p = add_parser("isp", help="render RAW to sRGB (PPM or RAWB rgb)")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--wb", default="gray-world", help="'gray-world' or r,g,b gains")
    p.add_argument("--gamma", choices=("srgb", "none"), default="srgb")
    p.set_defaults(func=_cmd_isp)

    p = add_parser("eval", help="PSNR/SSIM over prediction/ground-truth directories")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--phase", choices=("dev", "final"), default="dev")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval)

    p = add_parser("rank", help="challenge ranking from a wide scores CSV")
    p.add_argument("--scores", required=True, help="CSV: team,psnr,ssim,lpips,arniqa,topiq")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_rank)

    p = add_parser("budget", help="parameter/MAC accounting for a model JSON")
    p.add_argument("--model", required=True)
    p.add_argument("--input", default=None, help="override input shape, e.g. 1,4,512,512")
    p.set_defaults(func=_cmd_budget)

    p = add_parser("bench", help="full benchmark: evaluate, merge externals, rank")
    p.add_argument("--manifest", required=True)
    p.add_argument("--pred-root", required=True)
    p.add_argument("--external", default=None, help="team,metric,value CSV")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MissingDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (RawBenchError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
