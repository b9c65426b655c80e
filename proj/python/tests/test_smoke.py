import json
import os
import subprocess

import numpy as np
import pytest

import metacast as mc


@pytest.fixture(scope="module")
def shell():
    cloud = mc.gen_dataset("shell", target=3000, noise=2000, seed=4)
    field = mc.build_density(cloud, dims=32)
    return cloud, field


def arc(n=10, r=0.68):
    theta = np.linspace(0.3, 1.2, n)
    return np.stack([r * np.cos(theta), np.zeros(n), r * np.sin(theta)], axis=1)


def test_dataset_shapes():
    cloud = mc.gen_dataset("filament", target=100, noise=50, seed=2)
    assert len(cloud) == 150
    assert cloud.positions.shape == (150, 3)
    assert cloud.labels == [True] * 100 + [False] * 50
    with pytest.raises(ValueError):
        mc.gen_dataset("torus")


def test_cloud_from_numpy():
    pts = np.random.default_rng(0).normal(size=(200, 3))
    cloud = mc.ParticleCloud(pts)
    assert np.array_equal(cloud.positions, pts)
    assert cloud.labels is None


def test_density_grid(shell):
    cloud, field = shell
    assert field.values.shape == (32, 32, 32)
    assert field.peak == pytest.approx(float(field.values.max()))
    assert cloud.adaptive_lengths.shape == (len(cloud), 3)
    r = field.spec.node_position(3, 4, 5)
    assert mc.sample_density(field, r) == pytest.approx(float(field.values[5, 4, 3]), rel=1e-6)
    with pytest.raises(IndexError):
        mc.ascend(field, (9.0, 0.0, 0.0))


def test_ascent_climbs(shell):
    _, field = shell
    seed = (0.0, 0.0, 0.2)
    res = mc.ascend(field, seed, compute_lambda1=True)
    assert res.converged
    assert mc.sample_density(field, res.destination) >= mc.sample_density(field, seed)


def test_techniques(shell):
    cloud, field = shell
    paint = mc.meta_paint(field, cloud, arc(), 0.03)
    assert paint.technique == mc.Technique.paint
    stats = mc.confusion_stats(paint.particles, cloud.labels)
    assert stats.tp + stats.fp == len(paint.particles)
    assert stats.f1 > 0.0
    assert paint.mesh_vertices.shape[1] == 3
    assert paint.to_obj().startswith("# metacast mesh")
    assert json.loads(paint.to_json())["technique"] == "paint"

    looser = mc.adjust_threshold(field, cloud, paint, -1.0)
    assert looser.threshold == pytest.approx(paint.threshold / 2, rel=1e-15)
    assert set(paint.particles) <= set(looser.particles)

    brush = mc.meta_brush(field, cloud, arc(), 0.05)
    assert len(brush.anchors) >= 1
    point = mc.meta_point(field, cloud, arc(1))
    assert len(point.particles) > 0

    base = mc.baseline_brush(cloud, arc(), 0.05)
    union = mc.combine(paint.particles, base, mc.CombineMode.union)
    assert set(union) == set(paint.particles) | set(base)
    minus = mc.combine(paint.particles, base, mc.CombineMode.subtract)
    assert set(minus) == set(paint.particles) - set(base)


def test_files_roundtrip(shell, tmp_path):
    cloud, field = shell
    mc.save_cloud(str(tmp_path / "c.mtcc"), cloud)
    mc.save_field(str(tmp_path / "f.mtcf"), field)
    back = mc.load_cloud(str(tmp_path / "c.mtcc"))
    assert np.array_equal(back.positions, cloud.positions)
    assert np.array_equal(mc.load_field(str(tmp_path / "f.mtcf")).values, field.values)


@pytest.mark.skipif("METACAST_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_matches_module(tmp_path):
    cli = os.environ["METACAST_CLI"]
    cloud_path = tmp_path / "cloud.csv"
    subprocess.run([cli, "gen", "shell", "--target", "300", "--noise", "200", "--seed", "4",
                    "--out", str(cloud_path)], check=True)
    cloud = mc.load_cloud(str(cloud_path))
    ref = mc.gen_dataset("shell", target=300, noise=200, seed=4)
    assert np.array_equal(cloud.positions, ref.positions)
    assert cloud.labels == ref.labels
