import numpy as np
import pytest

from infbend.bending import associated_pair
from infbend.classify import (ClassifyError, codazzi_sensitivity, fit_killing, killing_pair_exact, normal_part,
                              pair_triviality, skew_basis, solve_E_from_beta)
from infbend.fundsys import system_scale
from infbend.scenes import killing_field, killing_generator, make_bending

from conftest import CYL_PATCH, geom_for, product_for


def test_skew_basis():
    b = skew_basis(4)
    assert b.shape == (6, 4, 4)
    assert np.abs(b + np.swapaxes(b, 1, 2)).max() == 0.0
    assert skew_basis(1).shape == (0, 1, 1)


@pytest.mark.parametrize("scene", ["sphere", "torus", "graph"])
def test_fit_killing_recovers_generator(scene):
    geom = geom_for(scene, 32)
    D, v = killing_generator("rand", geom.m, seed=3)
    fit = fit_killing(geom.scene.map, killing_field(geom.scene, D, v))
    assert fit.residual <= 1e-10
    assert np.abs(fit.D - D).max() <= 1e-8
    assert np.abs(fit.v - v).max() <= 1e-8
    assert fit.verdict(1e-6)[0] == "trivial"


def test_fit_killing_flags_fourier_bending():
    geom = geom_for("cylinder", 64)
    T = make_bending("circle_fourier:2", geom.scene)
    verdict, margin = fit_killing(geom.scene.map, T).verdict(30 * geom.h**2)
    assert verdict == "nontrivial" and margin > 1


def test_fit_killing_rank_deficient_on_flat_plane():
    geom = geom_for("plane:2:4", 16)
    with pytest.raises(ClassifyError):
        fit_killing(geom.scene.map, np.zeros(geom.scene.map.shape))


def test_fit_is_gauge_invariant():
    geom = geom_for("cylinder", 64)
    T = make_bending("circle_fourier:2", geom.scene)
    D, v = killing_generator("rand", 3, seed=1)
    shifted = T.T + 1e-2 * killing_field(geom.scene, D, v).T
    a = fit_killing(geom.scene.map, T)
    b = fit_killing(geom.scene.map, shifted)
    assert a.scale == b.scale == 1.0
    assert b.residual == pytest.approx(a.residual, rel=1e-8)


@pytest.mark.parametrize("scene,preset", [("torus", "mix"), ("sphere", "rand"), ("cylinder", "rot")])
def test_killing_pairs_are_trivial(scene, preset):
    geom = geom_for(scene, 32)
    D, v = killing_generator(preset, geom.m, seed=0)
    _, pair = associated_pair(geom, killing_field(geom.scene, D, v))
    res = pair_triviality(geom, pair)
    assert res.verdict == "trivial", (res.res_beta, res.res_E, res.tol)
    if geom.p > 1:
        C_err = np.abs(res.C - normal_part(geom, D))[geom.grid.interior_mask()].max()
        assert C_err <= res.tol


def test_closed_form_killing_pair_matches_differences():
    geom = geom_for("torus", 32)
    D, v = killing_generator("rand", 4, seed=5)
    _, pair = associated_pair(geom, killing_field(geom.scene, D, v))
    exact = killing_pair_exact(geom, D)
    assert np.abs(exact.beta - pair.beta).max() <= 1e-10
    assert np.abs(exact.E - pair.E).max() <= 1e-10


def test_fourier_pair_is_nontrivial():
    geom = geom_for("cylinder", 64, tuple(CYL_PATCH))
    _, pair = associated_pair(geom, make_bending("circle_fourier:2", geom.scene))
    res = pair_triviality(geom, pair)
    assert res.verdict == "nontrivial"
    assert res.margin >= 100


def test_flat_normal_with_curved_beta_is_degenerate():
    geom = geom_for("plane:2:3", 16)
    beta = np.zeros(geom.grid.shape + (2, 2, 1))
    beta[..., 0, 0, 0] = 1.0
    from infbend.bending import AssociatedPair
    pair = AssociatedPair.from_coefficients(geom, beta, np.zeros(geom.grid.shape + (2, 1, 1)))
    res = pair_triviality(geom, pair)
    assert res.degenerate and res.verdict == "nontrivial" and res.margin == float("inf")


@pytest.mark.parametrize("token", ["killing:mix", "circle_fourier:2:3"])
def test_solve_E_on_torus(token):
    geom = geom_for("torus", 32)
    _, pair = associated_pair(geom, make_bending(token, geom.scene))
    E = solve_E_from_beta(geom, pair.beta)
    mask = geom.grid.interior_mask()
    assert np.abs(E - pair.E)[mask].max() <= 50 * geom.h**2 * system_scale(geom, pair)


def test_solve_E_on_product_of_circles():
    geom, _ = product_for("product:circle,circle", 64)
    _, pair = associated_pair(geom, make_bending("circle_fourier:2:0", geom.scene))
    E = solve_E_from_beta(geom, pair.beta)
    assert np.abs(E - pair.E).max() <= 50 * geom.h**2 * system_scale(geom, pair)


def test_solve_E_hypersurface_is_zero():
    geom = geom_for("cylinder", 32)
    _, pair = associated_pair(geom, make_bending("circle_fourier:2", geom.scene))
    assert np.abs(solve_E_from_beta(geom, pair.beta)).max() == 0.0


def test_solve_E_refuses_without_full_first_normal_space():
    geom = geom_for("cylinder_r4", 32)
    beta = np.zeros(geom.grid.shape + (2, 2, 2))
    with pytest.raises(ClassifyError):
        solve_E_from_beta(geom, beta)
    with pytest.raises(ClassifyError):
        solve_E_from_beta(geom, beta[..., :1])


def test_codazzi_grows_with_perturbation_size():
    geom = geom_for("torus", 32)
    _, pair = associated_pair(geom, make_bending("killing:mix", geom.scene))
    sizes, res = codazzi_sensitivity(geom, pair)
    assert len(sizes) == 100
    assert np.corrcoef(sizes, res)[0, 1] >= 0.9
    again = codazzi_sensitivity(geom, pair)
    assert np.array_equal(again[1], res)
