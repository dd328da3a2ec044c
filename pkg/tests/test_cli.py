import json

import numpy as np
import pytest

from rawbench.cli import main
from rawbench.core import read_frame, read_packed, write_frame
from rawbench.isp import read_ppm16

from conftest import make_frame


@pytest.fixture
def workspace(tmp_path):
    """Dark frames for two ISOs plus one clean frame, all on disk."""
    rng = np.random.default_rng(0)
    for iso in (800, 1600):
        d = tmp_path / "darks" / str(iso)
        d.mkdir(parents=True)
        for k in range(4):
            dark = make_frame(
                rng.normal(512.0, 2.0 + iso / 800.0, (64, 64)).clip(0).astype(np.float32),
                iso=iso,
            )
            write_frame(dark, d / f"dark{k}.rawb")
    clean_dir = tmp_path / "clean"
    clean_dir.mkdir()
    ramp = np.linspace(2000, 12000, 64 * 64).reshape(64, 64).astype(np.uint16)
    write_frame(make_frame(ramp), clean_dir / "scene.rawb")
    return tmp_path


def test_full_pipeline(workspace, capsys):
    profile = workspace / "profile.json"
    rc = main(["calibrate", "--darks", str(workspace / "darks"), "--camera-id", "camA",
               "--gains", "800=0.8,1600=1.6", "--out", str(profile)])
    assert rc == 0
    doc = json.loads(profile.read_text())
    assert set(doc["isos"]) == {"800", "1600"}
    assert doc["isos"]["800"]["K"] == 0.8

    out_pairs = workspace / "pairs"
    rc = main(["synth", "--profile", str(profile), "--clean", str(workspace / "clean"),
               "--out", str(out_pairs), "--iso-set", "800,1600", "--dgain-set", "100,200",
               "--mode", "hybrid", "--rho", "0.5", "--patch", "16", "--per-image", "2",
               "--seed", "7"])
    assert rc == 0
    noisy_files = sorted(out_pairs.glob("*_noisy.rawb"))
    assert len(noisy_files) == 2
    noisy_img = read_packed(noisy_files[0])
    assert noisy_img.channels.shape == (4, 16, 16)

    den = workspace / "den.rawb"
    rc = main(["denoise", "--in", str(workspace / "clean" / "scene.rawb"),
               "--profile", str(profile), "--iso", "800", "--dgain", "100",
               "--transform", "gat", "--out", str(den), "--tile", "64", "--overlap", "16"])
    assert rc == 0
    assert read_frame(den).data.shape == (64, 64)

    ppm = workspace / "img.ppm"
    rc = main(["isp", "--in", str(den), "--out", str(ppm), "--wb", "gray-world",
               "--gamma", "srgb"])
    assert rc == 0
    rgb = read_ppm16(ppm)
    assert rgb.shape == (64, 64, 3)


def test_synth_rerun_byte_identical(workspace):
    profile = workspace / "profile.json"
    assert main(["calibrate", "--darks", str(workspace / "darks"), "--camera-id", "camA",
                 "--gains", "800=0.8,1600=1.6", "--out", str(profile)]) == 0
    outs = []
    for name in ("run1", "run2"):
        out = workspace / name
        assert main(["synth", "--profile", str(profile), "--clean", str(workspace / "clean"),
                     "--out", str(out), "--iso-set", "800", "--dgain-set", "100",
                     "--mode", "parametric", "--patch", "16", "--per-image", "3",
                     "--seed", "42"]) == 0
        outs.append(out)
    files1 = sorted(outs[0].iterdir())
    files2 = sorted(outs[1].iterdir())
    assert [f.name for f in files1] == [f.name for f in files2]
    for a, b in zip(files1, files2):
        assert a.read_bytes() == b.read_bytes()


def test_eval_and_rank(workspace, tmp_path):
    rng = np.random.default_rng(1)
    gt_dir = tmp_path / "gt"
    pred_dir = tmp_path / "pred"
    gt_dir.mkdir()
    pred_dir.mkdir()
    data = rng.integers(2000, 14000, (1024, 1024)).astype(np.uint16)
    write_frame(make_frame(data), gt_dir / "a.rawb")
    write_frame(make_frame(data), pred_dir / "a.rawb")
    out_csv = tmp_path / "metrics.csv"
    rc = main(["eval", "--pred", str(pred_dir), "--gt", str(gt_dir), "--phase", "dev",
               "--out", str(out_csv)])
    assert rc == 0
    lines = out_csv.read_text().splitlines()
    assert lines[0] == "image_id,camera,iso,dgain,psnr_db,ssim"
    assert "inf" in lines[1]

    scores = tmp_path / "scores.csv"
    scores.write_text(
        "team,psnr,ssim,lpips,arniqa,topiq\n"
        "one,41.0,0.96,0.22,0.45,0.26\n"
        "two,40.0,0.95,0.25,0.44,0.25\n"
    )
    rank_out = tmp_path / "rank.csv"
    rc = main(["rank", "--scores", str(scores), "--out", str(rank_out)])
    assert rc == 0
    rows = rank_out.read_text().splitlines()
    assert rows[1].startswith("one,1.0")


def test_budget_exit_codes(tmp_path):
    ok_model = tmp_path / "ok.json"
    ok_model.write_text(json.dumps([
        {"kind": "bgc", "in_ch": 4, "out_ch": 16, "kernel": 5},
        {"kind": "conv2d", "in_ch": 16, "out_ch": 4, "kernel": 3},
    ]))
    assert main(["budget", "--model", str(ok_model)]) == 0

    fat_model = tmp_path / "fat.json"
    fat_model.write_text(json.dumps([
        {"kind": "conv2d", "in_ch": 4, "out_ch": 4096, "kernel": 31},
    ]))
    assert main(["budget", "--model", str(fat_model)]) == 1


def test_bench_subcommand(workspace, tmp_path):
    rng = np.random.default_rng(2)
    data = rng.integers(2000, 14000, (1024, 1024)).astype(np.uint16)
    (tmp_path / "gt").mkdir()
    write_frame(make_frame(data), tmp_path / "gt" / "img1.rawb")
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({
        "phase": "dev",
        "entries": [{"image_id": "img1", "camera": "camA", "scene_type": "paired",
                     "iso": 800, "dgain": 100, "noisy_path": "gt/img1.rawb",
                     "gt_path": "gt/img1.rawb"}],
    }))
    pred_root = tmp_path / "preds"
    (pred_root / "solo").mkdir(parents=True)
    write_frame(make_frame(data), pred_root / "solo" / "img1.rawb")
    out_dir = tmp_path / "out"
    rc = main(["bench", "--manifest", str(manifest), "--pred-root", str(pred_root),
               "--out-dir", str(out_dir)])
    assert rc == 0
    assert (out_dir / "scores.csv").exists()
    assert (out_dir / "ranktable.csv").exists()
    assert (out_dir / "per_image.csv").exists()


def test_validation_error_exit_code(tmp_path):
    bad_manifest = tmp_path / "m.json"
    bad_manifest.write_text(json.dumps({"phase": "nope", "entries": []}))
    rc = main(["bench", "--manifest", str(bad_manifest), "--pred-root", str(tmp_path)])
    assert rc == 2


def test_missing_data_exit_code(tmp_path):
    manifest = tmp_path / "m.json"
    manifest.write_text(json.dumps({"phase": "dev", "entries": []}))
    rc = main(["bench", "--manifest", str(manifest), "--pred-root", str(tmp_path / "nothing")])
    assert rc in (2, 3)
    (tmp_path / "empty").mkdir()
    rc = main(["bench", "--manifest", str(manifest), "--pred-root", str(tmp_path / "empty")])
    assert rc == 3
