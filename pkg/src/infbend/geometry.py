"""Extrinsic geometry of a sampled immersion f: M^n -> R^m.

Index conventions (per node, after the grid axes):

* ``e[i, :]``            tangent frame f_* d_i
* ``xi[a, :]``           orthonormal normal frame
* ``Gamma[k, i, j]``     Christoffel symbols
* ``alpha[i, j, a]``     <d_i e_j, xi_a>
* ``omega[i, a, b]``     <d_i xi_a, xi_b>
* ``A[a, k, j]``         shape operator of xi_a, (A_a)^k_j
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import expm, logm

from .numgrid import ChartGrid, GridError, Node, grad, node_sup, sup

logger = logging.getLogger(__name__)

RANK_THRESHOLD = 1e-6
PIVOT_ACCEPT = 0.25


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class ImmersionScene:
    grid: ChartGrid
    map: np.ndarray
    label: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        values = np.asarray(self.map, dtype=float)
        if values.shape[: self.grid.dim] != self.grid.shape or values.ndim != self.grid.dim + 1:
            raise GeometryError(f"map shape {values.shape} does not fit grid {self.grid.shape} + (m,)")
        if not np.all(np.isfinite(values)):
            raise GeometryError("map contains non-finite values")
        object.__setattr__(self, "map", values)
        if self.m <= self.n:
            raise GeometryError(f"ambient dimension {self.m} must exceed chart dimension {self.n}")

    @property
    def n(self) -> int:
        return self.grid.dim

    @property
    def m(self) -> int:
        return self.map.shape[-1]

    @property
    def p(self) -> int:
        return self.m - self.n


@dataclass(frozen=True, eq=False)
class FramedGeometry:
    scene: ImmersionScene
    e: np.ndarray
    xi: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    Gamma: np.ndarray
    alpha: np.ndarray
    omega: np.ndarray
    A: np.ndarray
    frame_method: str

    @property
    def grid(self) -> ChartGrid:
        return self.scene.grid

    @property
    def n(self) -> int:
        return self.scene.n

    @property
    def m(self) -> int:
        return self.scene.m

    @property
    def p(self) -> int:
        return self.scene.p

    @property
    def h(self) -> float:
        return self.grid.h

    def frame(self) -> np.ndarray:
        """Stacked (n+p) x m frame [e; xi] at every node."""
        return np.concatenate([self.e, self.xi], axis=-2)

    def alpha_norm(self) -> float:
        return float(np.abs(self.alpha).max(initial=0.0))


@dataclass(frozen=True)
class CurvatureData:
    R: np.ndarray       # R[l, k, i, j]: R(d_i, d_j) d_k = R^l_kij d_l
    Rperp: np.ndarray   # Rperp[i, j, a, c] = <R_perp(d_i, d_j) xi_a, xi_c>


@dataclass(frozen=True)
class StructureResiduals:
    gauss: float
    codazzi: float
    ricci: float
    scale: float
    h: float

    def tol(self, c: float = 20.0) -> float:
        return c * self.h**2 * self.scale

    def passed(self, c: float = 20.0) -> bool:
        return max(self.gauss, self.codazzi, self.ricci) <= self.tol(c)


def _normal_projector(e: np.ndarray, g_inv: np.ndarray) -> np.ndarray:
    m = e.shape[-1]
    tangential = np.einsum("...ia,...ij,...jb->...ab", e, g_inv, e)
    return np.eye(m) - tangential


def _gram_schmidt(cols: np.ndarray) -> np.ndarray:
    """Orthonormalize columns (..., m, p) in order, keeping orientation of each pivot."""
    q, r = np.linalg.qr(cols)
    signs = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    signs[signs == 0] = 1.0
    return q * signs[..., None, :]


def _polar(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    u, s, vt = np.linalg.svd(mat, full_matrices=False)
    return u @ vt, s[..., -1]


def _min_singular(mat: np.ndarray) -> np.ndarray:
    return np.linalg.svd(mat, compute_uv=False)[..., -1]


def _choose_pivot(P: np.ndarray, p: int) -> tuple[tuple[int, ...], float, np.ndarray]:
    m = P.shape[-1]
    best = None
    for subset in itertools.combinations(range(m), p):
        smin = _min_singular(P[..., list(subset)])
        worst = float(smin.min())
        if best is None or worst > best[1]:
            best = (subset, worst, smin)
    return best


def _transport_frames(P: np.ndarray, seed: np.ndarray, grid: ChartGrid) -> np.ndarray:
    """Normal frames by discrete transport from node 0 along an axis-ordered sweep."""
    n = grid.dim
    m, p = seed.shape
    X = np.zeros(grid.shape + (m, p))
    X[(0,) * n] = seed
    for axis in range(n):
        # nodes already framed: axes < axis free, axis and later at index 0
        proj = P[tuple(slice(None) if k <= axis else 0 for k in range(n))]
        frames = X[tuple(slice(None) if k <= axis else 0 for k in range(n))]
        r = grid.resolution[axis]
        fr = np.moveaxis(frames, axis, 0)
        pr = np.moveaxis(proj, axis, 0)
        for t in range(1, r):
            nxt, smin = _polar(pr[t] @ fr[t - 1])
            if np.any(smin < 1e-6):
                raise GeometryError(f"normal frame transport breaks down along axis {axis} at step {t}")
            fr[t] = nxt
        if grid.periodic[axis]:
            _close_periodic(fr, pr, axis)
        X[tuple(slice(None) if k <= axis else 0 for k in range(n))] = np.moveaxis(fr, 0, axis)
    return X


def _close_periodic(fr: np.ndarray, pr: np.ndarray, axis: int) -> None:
    """Spread the transport mismatch around a periodic loop (in place)."""
    r = fr.shape[0]
    wrap, _ = _polar(pr[0] @ fr[r - 1])
    R = np.swapaxes(fr[0], -1, -2) @ wrap
    p = R.shape[-1]
    flat_R = R.reshape(-1, p, p)
    flat_fr = fr.reshape(r, -1, fr.shape[-2], p)
    for idx, Rk in enumerate(flat_R):
        if np.linalg.det(Rk) < 0:
            raise GeometryError(f"normal bundle is not orientable along periodic axis {axis}")
        if np.abs(Rk - np.eye(p)).max() < 1e-13:
            continue
        gen = np.real(logm(Rk))
        gen = 0.5 * (gen - gen.T)
        for t in range(r):
            flat_fr[t, idx] = flat_fr[t, idx] @ expm(-(t / r) * gen)
    fr[...] = flat_fr.reshape(fr.shape)


def normal_frames(e: np.ndarray, g_inv: np.ndarray, grid: ChartGrid) -> tuple[np.ndarray, str]:
    """Smooth orthonormal normal frame, rows xi_a, shape grid + (p, m)."""
    m = e.shape[-1]
    n = grid.dim
    p = m - n
    P = _normal_projector(e, g_inv)
    subset, worst, smin = _choose_pivot(P, p)
    if worst >= PIVOT_ACCEPT:
        X = _gram_schmidt(P[..., list(subset)])
        method = f"pivot{list(subset)}"
    else:
        P0 = P[(0,) * n]
        seeds = [(s, float(_min_singular(P0[:, list(s)]))) for s in itertools.combinations(range(m), p)]
        s0 = max(seeds, key=lambda t: t[1])[0]
        seed = _gram_schmidt(P0[:, list(s0)])
        X = _transport_frames(P, seed, grid)
        method = f"transport{list(s0)}"
    return np.swapaxes(X, -1, -2), method


def build_geometry(scene: ImmersionScene) -> FramedGeometry:
    grid = scene.grid
    f = scene.map
    e = grad(f, grid)
    s = np.linalg.svd(e, compute_uv=False)
    ratio = s[..., -1] / np.maximum(s[..., 0], 1e-300)
    if np.any(ratio < 1e-8):
        node = np.unravel_index(int(np.argmin(ratio)), grid.shape)
        raise GeometryError(f"differential is rank deficient at node {tuple(int(k) for k in node)}")
    g = np.einsum("...im,...jm->...ij", e, e)
    g_inv = np.linalg.inv(g)
    dg = grad(g, grid)  # dg[k, i, j] = d_k g_ij
    # lowered[i, j, l] = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    lowered = 0.5 * (dg + np.einsum("...jil->...ijl", dg) - np.einsum("...lij->...ijl", dg))
    Gamma = np.einsum("...kl,...ijl->...kij", g_inv, lowered)
    xi, method = normal_frames(e, g_inv, grid)
    de = grad(e, grid)  # de[i, j, :] = d_i e_j
    alpha = np.einsum("...ijm,...am->...ija", de, xi)
    dxi = grad(xi, grid)
    omega = np.einsum("...iam,...bm->...iab", dxi, xi)
    omega = 0.5 * (omega - np.swapaxes(omega, -1, -2))
    A = np.einsum("...kl,...lja->...akj", g_inv, alpha)
    logger.debug("built geometry for %s with %s normal frame", scene.label, method)
    return FramedGeometry(scene, e, xi, g, g_inv, Gamma, alpha, omega, A, method)


def curvature(geom: FramedGeometry) -> CurvatureData:
    grid = geom.grid
    G = geom.Gamma
    dG = grad(G, grid)  # dG[i, l, j, k] = d_i Gamma^l_jk
    R = (np.einsum("...iljk->...lkij", dG) - np.einsum("...jlik->...lkij", dG)
         + np.einsum("...lim,...mjk->...lkij", G, G) - np.einsum("...ljm,...mik->...lkij", G, G))
    w = geom.omega
    dw = grad(w, grid)  # dw[i, j, a, c] = d_i omega_j^{ac}
    Rperp = (dw - np.swapaxes(dw, grid.dim, grid.dim + 1)
             + np.einsum("...jab,...ibc->...ijac", w, w) - np.einsum("...iab,...jbc->...ijac", w, w))
    return CurvatureData(R, Rperp)


def cov_normal_form(geom: FramedGeometry, T: np.ndarray) -> np.ndarray:
    """Covariant derivative of a normal-valued 2-tensor T[j, k, a]; result [i, j, k, a]."""
    dT = grad(T, geom.grid)
    G = geom.Gamma
    return (dT - np.einsum("...lij,...lka->...ijka", G, T) - np.einsum("...lik,...jla->...ijka", G, T)
            + np.einsum("...jkb,...iba->...ijka", T, geom.omega))


def structure_residual_fields(geom: FramedGeometry) -> dict[str, np.ndarray]:
    """Per-node max-abs residuals of the Gauss, Codazzi and Ricci equations of f."""
    grid = geom.grid
    alpha, A = geom.alpha, geom.A
    curv = curvature(geom)
    gauss_rhs = (np.einsum("...jka,...ali->...lkij", alpha, A)
                 - np.einsum("...ika,...alj->...lkij", alpha, A))
    na = cov_normal_form(geom, alpha)
    ricci_rhs = (np.einsum("...ikc,...akj->...ijac", alpha, A)
                 - np.einsum("...aki,...kjc->...ijac", A, alpha))
    return {
        "gauss": node_sup(curv.R - gauss_rhs, grid),
        "codazzi": node_sup(na - np.swapaxes(na, grid.dim, grid.dim + 1), grid),
        "ricci": node_sup(curv.Rperp - ricci_rhs, grid),
    }


def structure_residuals(geom: FramedGeometry) -> StructureResiduals:
    fields = structure_residual_fields(geom)
    grid = geom.grid
    vals = {k: sup(v, grid) for k, v in fields.items()}
    scale = max(1.0, geom.alpha_norm()) ** 2
    return StructureResiduals(vals["gauss"], vals["codazzi"], vals["ricci"], scale, geom.h)


def convergence_factors(make_scene: Callable[[ChartGrid], ImmersionScene], grid: ChartGrid,
                        floor: float = 1e-10) -> dict[str, float | None]:
    """Ratio coarse/fine of each structure residual after halving h.

    Both runs are compared on the coarse interior nodes, which are also fine
    nodes, so the ratio measures the order at fixed points of the chart.
    ``None`` marks a residual that is below ``floor`` on both grids.
    """
    fine_grid = grid.refine()
    coarse = structure_residual_fields(build_geometry(make_scene(grid)))
    fine = structure_residual_fields(build_geometry(make_scene(fine_grid)))
    mask = grid.interior_mask()
    sub = tuple(slice(None, None, 2) for _ in range(grid.dim))
    out: dict[str, float | None] = {}
    for key in coarse:
        c = float(coarse[key][mask].max(initial=0.0))
        f = float(fine[key][sub][mask].max(initial=0.0))
        out[key] = None if max(c, f) < floor else c / max(f, 1e-300)
    return out


def first_normal_rank(geom: FramedGeometry, node: Node) -> int:
    node = geom.grid.check_node(node)
    a = geom.alpha[node]
    n = geom.n
    iu = np.triu_indices(n)
    mat = a[iu[0], iu[1], :].T  # p x n(n+1)/2
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > RANK_THRESHOLD * s[0]))


def first_normal_full(geom: FramedGeometry) -> tuple[bool, Node | None]:
    """Whether N_1 is the whole normal space at every interior node; first failing node otherwise."""
    grid = geom.grid
    mask = grid.interior_mask()
    for flat in np.flatnonzero(mask.ravel()):
        node = grid.unravel(int(flat))
        if first_normal_rank(geom, node) < geom.p:
            return False, node
    return True, None


def frame_condition(geom: FramedGeometry) -> np.ndarray:
    return np.linalg.cond(geom.frame())


__all__ = [
    "CurvatureData", "FramedGeometry", "GeometryError", "GridError", "ImmersionScene",
    "StructureResiduals", "build_geometry", "convergence_factors", "cov_normal_form", "curvature",
    "first_normal_full", "first_normal_rank", "frame_condition", "structure_residual_fields",
    "structure_residuals",
]
