import numpy as np
import pytest

from infbend.bending import associated_pair
from infbend.classify import fit_killing
from infbend.products import (ProductError, adaptedness_residual, cross_alpha, cross_L, direct_sum, s_nullity,
                              sample_nodes, split_bending)
from infbend.scenes import circle_fourier, make_bending, make_product, make_scene

from conftest import geom_for, product_for


def test_circle_times_circle_is_the_torus():
    scene, structure = make_product("product:circle,circle", 32)
    torus = make_scene("torus", 32)
    assert scene.grid == torus.grid
    assert np.abs(scene.map - torus.map).max() <= 1e-15
    assert structure.n == 2 and structure.m == 4
    assert structure.axis_blocks == ((0,), (1,))


def test_circle_times_line_is_the_cylinder():
    scene, structure = make_product("product:circle,line", 32)
    assert scene.m == 3 and scene.n == 2
    assert structure.ambient_blocks == ((0, 1), (2,))


def test_cross_mask_blocks():
    _, structure = make_product("product:circle,circle", 16)
    mask = structure.cross_mask()
    assert mask.shape == (2, 2) and mask[0, 1] and mask[1, 0] and not mask[0, 0]


@pytest.mark.parametrize("token", ["product:circle,circle", "product:sphere,sphere"])
def test_product_alpha_is_adapted(token):
    geom, structure = product_for(token)
    assert cross_alpha(geom, structure) <= 1e-10


def test_direct_sum_of_factor_bendings_is_adapted():
    geom, structure = product_for("product:circle,circle", 64)
    parts = [circle_fourier(f, [k]) for f, k in zip(structure.factors, (2, 3))]
    T = direct_sum(parts, structure, geom.grid)
    assert np.abs(T.T - make_bending("circle_fourier:2:3", geom.scene).T).max() <= 1e-14
    _, pair = associated_pair(geom, T)
    scale = max(1.0, pair.norm())
    assert adaptedness_residual(geom, pair, structure) <= 10 * geom.h**2 * scale
    assert cross_L(geom, T, structure) <= 1e-12


def test_sphere_times_sphere_nullities():
    geom, _ = product_for("product:sphere,sphere")
    node = sample_nodes(geom.grid)[0]
    assert s_nullity(geom, node, 1).nullity == 2
    res2 = s_nullity(geom, node, 2)
    assert res2.nullity == 0 and res2.exact


def test_nullity_monotone_in_s():
    geom, _ = product_for("product:sphere,sphere")
    node = sample_nodes(geom.grid)[0]
    # adding directions to the subspace can only shrink the common kernel
    assert s_nullity(geom, node, 1).nullity >= s_nullity(geom, node, 2).nullity


def test_s_nullity_subspace_is_orthonormal():
    geom, _ = product_for("product:sphere,sphere")
    U = s_nullity(geom, sample_nodes(geom.grid)[0], 1, samples=50).subspace
    assert np.abs(U.T @ U - np.eye(1)).max() <= 1e-12


def test_s_nullity_is_seeded():
    geom, _ = product_for("product:sphere,sphere")
    node = sample_nodes(geom.grid)[0]
    a = s_nullity(geom, node, 1, samples=100)
    b = s_nullity(geom, node, 1, samples=100)
    assert np.array_equal(a.subspace, b.subspace)


def test_s_out_of_range():
    geom, _ = product_for("product:sphere,sphere")
    with pytest.raises(ProductError):
        s_nullity(geom, (6, 6, 6, 6), 3)


def test_sample_nodes_interior():
    geom = geom_for("cylinder", 64)
    nodes = sample_nodes(geom.grid)
    assert nodes[0] == (32, 32) and len(nodes) <= 9
    assert all(3 <= nd[1] <= 60 for nd in nodes)


def test_split_circle_times_circle():
    geom, structure = product_for("product:circle,circle", 64)
    T = make_bending("circle_fourier:2:3", geom.scene)
    res = split_bending(geom, structure, T)
    assert res.passed
    for piece, factor, k in zip(res.factors, structure.factors, (2, 3)):
        ref = circle_fourier(factor, [k])
        assert fit_killing(factor.map, piece.T - ref.T).residual <= res.tol
    back = direct_sum(res.factors, structure, geom.grid)
    assert fit_killing(geom.scene.map, T.T - back.T).residual <= res.tol


def test_split_refuses_non_adapted_bending():
    geom, structure = product_for("product:circle,circle", 32)
    T = make_bending("killing:rand", geom.scene)
    X = geom.grid.mesh()
    T2 = T.T.copy()
    T2[..., 2] += 0.5 * np.sin(X[..., 0]) * np.cos(X[..., 1])  # couples the factors
    from infbend.bending import BendingField
    with pytest.raises((ProductError, ValueError)):
        split_bending(geom, structure, BendingField(geom.grid, T2, "coupled"))


def test_split_refuses_flat_normal():
    geom, structure = product_for("product:line/2,line", 16)
    with pytest.raises(ProductError):
        split_bending(geom, structure, make_bending("zero", geom.scene))


@pytest.fixture(scope="module")
def sphere_pair_report():
    from infbend.products import product_hypotheses
    geom, structure = product_for("product:sphere,sphere")
    return product_hypotheses(geom, structure)


def test_sphere_pair_hypotheses(sphere_pair_report):
    rep = sphere_pair_report
    assert rep.nullities == {1: 2, 2: 0}
    assert rep.check("nu_1 < n - s").passed
    assert not rep.check("nu_1 < n - 2s").passed
    assert rep.check("p < n").passed and not rep.check("2p < n").passed
    assert rep.to_dict()["nullities"] == {"1": 2, "2": 0}


def test_torus_as_product_hypotheses():
    from infbend.products import product_hypotheses
    geom, structure = product_for("product:circle,circle", 32)
    rep = product_hypotheses(geom, structure, samples=500)
    assert rep.nullities[1] == 1
    assert not rep.check("p_1 < n_1").passed and not rep.check("p_2 < n_2").passed
    assert not rep.check("p < n").passed
