"""Rebuild a bending from a pair (beta, E).

Along the immersion the ambient endomorphism field D obeys ``d_i D = M_i`` where

    M_i e_j  = sum_a beta^a_ij xi_a
    M_i xi_a = -sum_k (B_a)^k_i e_k + sum_b E[i, a, b] xi_b

so D is a line integral of the pair data alone.  M_i is skew exactly when E is
(the compatibility condition), and the integrability of ``d D = M`` is what the
fundamental system guarantees.  Once D is known, ``d_i T = D e_i``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .bending import AssociatedPair, BendingField, bending_residual
from .fundsys import system_scale, verify
from .geometry import FramedGeometry
from .numgrid import ChartGrid, Node, sup, sweep_integrate

COND_GUARD = 1e6
TOL_SKEW = 20.0
TOL_LOOP = 30.0
TOL_PATH = 50.0


class ReconstructError(ValueError):
    pass


class HolonomyError(ReconstructError):
    pass


@dataclass(frozen=True)
class EndoField:
    grid: ChartGrid
    D: np.ndarray  # grid + (m, m)
    base: Node

    def at(self, node) -> np.ndarray:
        return self.D[tuple(node)]


@dataclass(frozen=True)
class ReconstructReport:
    verify_passed: bool
    skewness: float
    cell_loop: float
    path_independence: float
    periodic_holonomy: float
    bending: float
    scale: float
    h: float
    tol_skew: float
    tol_loop: float
    tol_path: float

    @property
    def passed(self) -> bool:
        return (self.verify_passed and self.skewness <= self.tol_skew and self.cell_loop <= self.tol_loop
                and self.path_independence <= self.tol_path and self.bending <= self.tol_loop
                and self.periodic_holonomy <= self.tol_loop)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = self.passed
        return d


def connection_form(geom: FramedGeometry, pair: AssociatedPair) -> np.ndarray:
    """M[i] as ambient m x m matrices, shape grid + (n, m, m)."""
    e, xi = geom.e, geom.xi
    F = np.concatenate([e, xi], axis=-2)  # rows are the frame vectors; F^T has them as columns
    cond = np.linalg.cond(F)
    if not np.all(np.isfinite(cond)) or cond.max() > COND_GUARD:
        worst = np.unravel_index(int(np.nanargmax(np.where(np.isfinite(cond), cond, np.inf))), geom.grid.shape)
        raise ReconstructError(f"frame matrix ill-conditioned (cond {cond.max():.3e}) at node {worst}")
    img_e = np.einsum("...ija,...am->...ijm", pair.beta, xi)
    img_xi = (-np.einsum("...aki,...km->...iam", pair.Bop, e)
              + np.einsum("...iab,...bm->...iam", pair.E, xi))
    images = np.concatenate([img_e, img_xi], axis=-2)  # [i, col, m]
    # M_i F^T = images^T  =>  F M_i^T = images  (per i)
    Fi = np.broadcast_to(F[..., None, :, :], images.shape[:-2] + F.shape[-2:])
    Mt = np.linalg.solve(Fi, images)
    return np.swapaxes(Mt, -1, -2)


def cell_loop_residuals(rates: np.ndarray, grid: ChartGrid) -> np.ndarray:
    """Trapezoid circulation of a 1-form around every elementary cell, per axis pair.

    ``rates`` has shape grid + (dim,) + tensor.  Returns per-cell Frobenius norms of
    shape (pairs,) + cell grid; cells across periodic seams are included.
    """
    n = grid.dim
    out = []
    for a in range(n):
        for b in range(a + 1, n):
            ra = np.take(rates, a, axis=n)
            rb = np.take(rates, b, axis=n)

            def shift(x, axis):
                return np.roll(x, -1, axis=axis)

            ha, hb = grid.spacing[a], grid.spacing[b]
            circ = (0.5 * ha * (ra + shift(ra, a)) + 0.5 * hb * (shift(rb, a) + shift(shift(rb, a), b))
                    - 0.5 * ha * (shift(ra, b) + shift(shift(ra, a), b)) - 0.5 * hb * (rb + shift(rb, b)))
            norms = np.sqrt((circ.reshape(grid.shape + (-1,)) ** 2).sum(axis=-1))
            keep = tuple(slice(None) if grid.periodic[k] or k not in (a, b) else slice(0, grid.resolution[k] - 1)
                         for k in range(n))
            full = np.full(grid.shape, np.nan)
            full[keep] = norms[keep]
            out.append(full)
    if not out:
        return np.zeros((0,) + grid.shape)
    return np.stack(out)


def max_cell_loop(rates: np.ndarray, grid: ChartGrid, density: bool = False) -> float:
    cells = cell_loop_residuals(rates, grid)
    if cells.size == 0:
        return 0.0
    if density:
        n = grid.dim
        areas = [grid.spacing[a] * grid.spacing[b] for a in range(n) for b in range(a + 1, n)]
        cells = cells / np.asarray(areas).reshape((-1,) + (1,) * n)
    return float(np.nanmax(cells))


def periodic_holonomy(rates: np.ndarray, grid: ChartGrid) -> float:
    """Largest change of the integrated quantity around any closed periodic line."""
    n = grid.dim
    worst = 0.0
    for a in range(n):
        if not grid.periodic[a]:
            continue
        ra = np.take(rates, a, axis=n)
        total = grid.spacing[a] * ra.sum(axis=a)
        norms = np.sqrt((total.reshape(total.shape[: n - 1] + (-1,)) ** 2).sum(axis=-1))
        worst = max(worst, float(norms.max(initial=0.0)))
    return worst


def default_base(grid: ChartGrid) -> Node:
    return tuple(r // 2 for r in grid.resolution)


def integrate_endo(geom: FramedGeometry, pair: AssociatedPair, base: Node | None = None,
                   order=None, M: np.ndarray | None = None) -> EndoField:
    base = default_base(geom.grid) if base is None else geom.grid.check_node(base)
    if M is None:
        M = connection_form(geom, pair)
    D = sweep_integrate(M, geom.grid, base, order=order)
    return EndoField(geom.grid, D, base)


def skewness_residual(D: EndoField, scale: float = 1.0) -> float:
    return sup(D.D + np.swapaxes(D.D, -1, -2), D.grid) / scale


def integrate_bending(geom: FramedGeometry, D: EndoField, base: Node | None = None, order=None,
                      label: str = "reconstructed") -> BendingField:
    base = D.base if base is None else geom.grid.check_node(base)
    L = np.einsum("...mk,...ik->...im", D.D, geom.e)
    T = sweep_integrate(L, geom.grid, base, order=order)
    return BendingField(geom.grid, T, label)


def reconstruct(geom: FramedGeometry, pair: AssociatedPair, base: Node | None = None,
                tol_scale: float = 1.0, check: bool = True,
                allow_periodic: bool = True) -> tuple[BendingField, EndoField, ReconstructReport]:
    grid = geom.grid
    scale = system_scale(geom, pair)
    h2 = geom.h**2
    tol_skew = tol_scale * TOL_SKEW * h2 * scale
    tol_loop = tol_scale * TOL_LOOP * h2 * scale
    tol_path = tol_scale * TOL_PATH * h2 * scale
    report = verify(geom, pair, c=20.0 * tol_scale)
    if check and not report.passed:
        key, val = report.worst
        raise ReconstructError(f"pair fails the fundamental system ({key} residual {val:.3e} > tol {report.tol:.3e})")
    M = connection_form(geom, pair)
    hol = periodic_holonomy(M, grid)
    if any(grid.periodic) and (not allow_periodic or hol > tol_loop):
        raise HolonomyError(f"periodic-loop holonomy {hol:.3e} exceeds tol {tol_loop:.3e}; "
                            "the chart is not simply connected")
    D = integrate_endo(geom, pair, base, M=M)
    skew = skewness_residual(D)
    if check and skew > tol_skew:
        raise ReconstructError(f"integrated D is not skew: residual {skew:.3e} > {tol_skew:.3e}")
    Dt = integrate_endo(geom, pair, D.base, order=list(range(grid.dim))[::-1], M=M)
    path = sup(D.D - Dt.D, grid)
    T = integrate_bending(geom, D)
    bres = bending_residual(geom, T)
    report_r = ReconstructReport(
        verify_passed=report.passed,
        skewness=skew,
        cell_loop=max_cell_loop(M, grid),
        path_independence=path,
        periodic_holonomy=hol,
        bending=bres,
        scale=scale,
        h=geom.h,
        tol_skew=tol_skew,
        tol_loop=tol_loop,
        tol_path=tol_path,
    )
    return T, D, report_r
