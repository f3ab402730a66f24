# Copyright (C) 2026 The reenact authors
# SPDX-License-Identifier: Apache-2.0
#
import json
import math

import numpy as np
import pytest

import reenact


def test_loss_values():
    assert reenact.identity_loss([1.0, 0.0], [0.0, 1.0]) == pytest.approx(2.0)
    assert reenact.ralsgan_generator_loss([0.0], [1.0]) == pytest.approx(0.0)
    assert reenact.ralsgan_discriminator_loss([0.0], [1.0]) == pytest.approx(8.0)
    parts = reenact.total_loss(identity=30, content=10, adversarial=20)
    assert parts["total"] == pytest.approx(0.15, abs=1e-12)


def test_non_finite_loss_raises():
    with pytest.raises(RuntimeError, match="content"):
        reenact.total_loss(identity=0, content=math.nan, adversarial=0)


def test_metrics():
    assert reenact.csim([1.0, 2.0], [2.0, 4.0]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        reenact.csim([0.0, 0.0], [1.0, 1.0])
    rng = np.random.default_rng(0)
    a = rng.normal(size=(40, 6))
    assert reenact.fid(a, a.copy()) == pytest.approx(0.0, abs=1e-6)

    _, pts = reenact.synthetic_face(3, size=64)
    iod = reenact.interocular_distance(pts)
    assert reenact.nmse(pts, pts + [3.0, 4.0]) == pytest.approx(500.0 / iod)


def test_similarity_recovery():
    src = np.array([[90.0, 102], [166, 102], [128, 148], [100, 195], [156, 195]])
    truth = reenact.SimilarityTransform(1.3, 0.4, 5.0, -7.0)
    dst = np.array([truth.apply(*p) for p in src])
    est = reenact.estimate_similarity(src, dst)
    assert est.scale == pytest.approx(1.3, abs=1e-9)
    assert est.rotation == pytest.approx(0.4, abs=1e-9)
    assert est.translation == pytest.approx((5.0, -7.0), abs=1e-9)


def test_synthetic_face_and_boundaries():
    image, pts = reenact.synthetic_face(7, size=64, expression=1, expression_seed=3)
    assert image.shape == (3, 64, 64)
    assert pts.shape == (18, 2)
    assert image.min() >= -1.0 and image.max() <= 1.0
    bmap = reenact.render_boundary_map(pts, size=64, channels=3)
    assert bmap.shape == (3, 64, 64)
    assert set(np.unique(bmap)) <= {0.0, 1.0}
    assert bmap.sum() > 0


def test_generator_residual_and_shapes():
    g = reenact.Generator(crop_size=64, lateral_channels=8, seed=3)
    rng = np.random.default_rng(1)
    src, tgt = rng.uniform(-1, 1, (2, 3, 64, 64))
    levels = g.encode(src)
    assert [lvl.shape for lvl in levels] == [(8, 64 // s, 64 // s) for s in (2, 4, 8, 16, 32)]
    out = g.generate(src, tgt)
    assert out.shape == (3, 64, 64)
    assert not np.array_equal(out, tgt)
    g.zero_output_projection()
    assert np.array_equal(g.generate(src, tgt), tgt)
    with pytest.raises(ValueError):
        g.generate(src[:, :32, :32], tgt)


def test_lr_schedule():
    assert reenact.lr_schedule(10) == pytest.approx(1e-4)
    assert reenact.lr_schedule(100) == pytest.approx(1e-7)
    assert reenact.lr_schedule(70) == pytest.approx((1e-4 + 1e-7) / 2)


def test_cli_pipeline(tmp_path):
    data, ckpt = tmp_path / "data", tmp_path / "ckpt"
    code, out, _ = reenact.run_cli(["synth", "--out", str(data), "--identities", "2", "--expressions", "2",
                                    "--size", "64", "--seed", "4"])
    assert code == 0, out
    assert len((data / "manifest.jsonl").read_text().splitlines()) == 4
    code, out, err = reenact.run_cli(["train", "--manifest", str(data / "manifest.jsonl"), "--checkpoint",
                                      str(ckpt), "--epochs", "0", "--size", "64", "--lateral-channels", "8"])
    assert code == 0, err
    assert "config digest" in out
    g = reenact.Generator.from_checkpoint(ckpt)
    assert g.crop_size == 64
    code, out, err = reenact.run_cli(["evaluate", "--manifest", str(data / "manifest.jsonl"), "--checkpoint",
                                      str(ckpt), "--out", str(tmp_path / "r.json"), "--pairs", "2"])
    assert code == 0, err
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["aggregate"]["sample_count"] == len(report["records"])
    code, _, err = reenact.run_cli(["align"])
    assert code == 1
