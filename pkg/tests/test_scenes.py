import json

import numpy as np
import pytest
import sympy as sp

from infbend.bending import associated_pair
from infbend.scenes import (CatalogError, default_resolution, dump_bending, dump_pair, dump_scene, fourier_profile,
                            load_bending, load_pair, load_scene, make_bending, make_pair, make_product, make_scene,
                            parse_token, variation, write_atomic)

from conftest import geom_for


@pytest.mark.parametrize("k", [2, 3, 5])
def test_fourier_profile_matches_symbolic_antiderivative(k):
    t = sp.symbols("t")
    x = sp.lambdify(t, sp.integrate(sp.cos(k * t) * sp.cos(t), t), "numpy")
    y = sp.lambdify(t, sp.integrate(sp.cos(k * t) * sp.sin(t), t), "numpy")
    th = np.linspace(0, 2 * np.pi, 41)
    prof = fourier_profile(th, k)
    # antiderivatives agree up to a constant
    dx = prof[:, 0] - x(th)
    dy = prof[:, 1] - y(th)
    assert np.ptp(dx) <= 1e-12 and np.ptp(dy) <= 1e-12


@pytest.mark.parametrize("k", [2, 3])
def test_fourier_profile_periodic(k):
    prof = fourier_profile(np.array([0.0, 2 * np.pi]), k)
    assert np.abs(prof[0] - prof[1]).max() <= 1e-14


def test_default_resolutions():
    assert default_resolution("cylinder") == 64
    assert default_resolution("torus") == 32
    assert default_resolution("product:sphere,sphere") == 12


def test_scene_dimensions():
    for token, (n, m) in {"plane:3:5": (3, 5), "cylinder_r4": (2, 4), "circle": (1, 2), "sphere:2": (2, 3)}.items():
        s = make_scene(token, 16)
        assert (s.n, s.m) == (n, m)
    assert np.abs(np.linalg.norm(make_scene("sphere:2", 16).map, axis=-1) - 2).max() <= 1e-14


def test_chart_override_is_non_periodic():
    s = make_scene("cylinder", 16, [(0.0, 1.0), (0.0, 1.0)])
    assert s.grid.periodic == (False, False)


@pytest.mark.parametrize("bad", ["nowhere", "plane:3:2", "sphere:-1", "graph:saddle:x", "plane:1:2:3", ""])
def test_bad_scene_tokens(bad):
    with pytest.raises(CatalogError):
        make_scene(bad, 16)


def test_bad_chart_length():
    with pytest.raises(CatalogError):
        make_scene("cylinder", 16, [(0, 1)])


@pytest.mark.parametrize("bad", ["product:circle", "product:circle,product", "product:circle,nowhere"])
def test_bad_products(bad):
    with pytest.raises(CatalogError):
        make_product(bad, 8)


def test_bending_tokens():
    scene = make_scene("cylinder", 16)
    for bad in ["killing:spin", "circle_fourier:1", "normal_field", "warp"]:
        with pytest.raises(CatalogError):
            make_bending(bad, scene)
    with pytest.raises(CatalogError):
        make_bending("circle_fourier:2", make_scene("plane:2:3", 16))


def test_pair_tokens():
    geom = geom_for("torus", 32)
    for bad in ["codazzi:A", "constant:1", "perturbed", "mystery"]:
        with pytest.raises(CatalogError):
            make_pair(bad, geom)


def test_token_round_trip():
    assert str(parse_token("circle_fourier:2:3")) == "circle_fourier:2:3"


def test_perturbation_is_seeded_and_symmetric():
    geom = geom_for("cylinder", 32)
    a = make_pair("perturbed:circle_fourier/2", geom)
    b = make_pair("perturbed:circle_fourier/2", geom)
    assert np.array_equal(a.beta, b.beta)
    assert np.abs(a.beta - np.swapaxes(a.beta, -2, -3)).max() <= 1e-12


def test_variation_is_first_order_isometric():
    scene = make_scene("cylinder", 64)
    T = make_bending("circle_fourier:2", scene)
    from infbend.geometry import build_geometry
    g0 = build_geometry(scene).g
    errs = [np.abs(build_geometry(variation(scene, T, t)).g - g0).max() for t in (0.2, 0.1)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_file_round_trip(tmp_path):
    geom = geom_for("torus", 32)
    scene = geom.scene
    T = make_bending("circle_fourier:2:3", scene)
    _, pair = associated_pair(geom, T)
    write_atomic(tmp_path / "s.json", dump_scene(scene))
    write_atomic(tmp_path / "b.json", dump_bending(T))
    write_atomic(tmp_path / "p.json", dump_pair(geom.grid, pair))
    s2 = load_scene(str(tmp_path / "s.json"))
    assert s2.grid == scene.grid and np.array_equal(s2.map, scene.map)
    assert np.array_equal(load_bending(str(tmp_path / "b.json"), s2).T, T.T)
    p2 = load_pair(str(tmp_path / "p.json"), geom)
    assert np.array_equal(p2.beta, pair.beta) and np.array_equal(p2.E, pair.E)
    assert not list(tmp_path.glob("*.tmp"))


def test_malformed_files(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(CatalogError):
        load_scene(str(bad))
    bad.write_text(json.dumps({"kind": "scene"}))
    with pytest.raises(CatalogError):
        load_scene(str(bad))
    with pytest.raises(CatalogError):
        load_scene(str(tmp_path / "missing.json"))
    geom = geom_for("torus", 32)
    doc = json.loads(dump_bending(make_bending("zero", geom.scene)))
    doc["values"] = doc["values"][:-1]
    bad.write_text(json.dumps(doc))
    with pytest.raises(CatalogError):
        load_bending(str(bad), geom.scene)
