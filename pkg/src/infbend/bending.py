"""Variational fields, the bending condition and the associated pair (beta, E).

Pair coefficients are taken relative to the frames of a ``FramedGeometry``:

* ``beta[i, j, a]``  = <B(d_i, d_j), xi_a>
* ``E[i, a, b]``     = <E(d_i, xi_a), xi_b>
* ``Bop[a, k, j]``   = (B_{xi_a})^k_j
* ``Ycal[a, k]``     = tangent components of Y xi_a
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import FramedGeometry
from .numgrid import ChartGrid, grad, node_sup, sup

TOL_BEND = 10.0


class BendingError(ValueError):
    pass


@dataclass(frozen=True)
class BendingField:
    grid: ChartGrid
    T: np.ndarray
    label: str = ""

    def __post_init__(self):
        T = np.asarray(self.T, dtype=float)
        if T.shape[: self.grid.dim] != self.grid.shape or T.ndim != self.grid.dim + 1:
            raise BendingError(f"bending shape {T.shape} does not fit grid {self.grid.shape} + (m,)")
        if not np.all(np.isfinite(T)):
            raise BendingError("bending contains non-finite values")
        object.__setattr__(self, "T", T)

    def __add__(self, other: "BendingField") -> "BendingField":
        return BendingField(self.grid, self.T + other.T, f"{self.label}+{other.label}")

    def __sub__(self, other: "BendingField") -> "BendingField":
        return BendingField(self.grid, self.T - other.T, f"{self.label}-{other.label}")

    def scaled(self, c: float) -> "BendingField":
        return BendingField(self.grid, c * self.T, f"{c}*{self.label}")


@dataclass(frozen=True)
class DerivedTensors:
    L: np.ndarray  # L[i, :] = d_i T
    B: np.ndarray  # B[i, j, :] = d_i L_j - Gamma^k_ij L_k


@dataclass(frozen=True)
class AssociatedPair:
    beta: np.ndarray
    E: np.ndarray
    Bop: np.ndarray
    Ycal: np.ndarray | None = None

    @classmethod
    def from_coefficients(cls, geom: FramedGeometry, beta, E) -> "AssociatedPair":
        beta = np.asarray(beta, dtype=float)
        E = np.asarray(E, dtype=float)
        shape = geom.grid.shape
        n, p = geom.n, geom.p
        if beta.shape != shape + (n, n, p):
            raise BendingError(f"beta shape {beta.shape} != {shape + (n, n, p)}")
        if E.shape != shape + (n, p, p):
            raise BendingError(f"E shape {E.shape} != {shape + (n, p, p)}")
        Bop = np.einsum("...kl,...lja->...akj", geom.g_inv, beta)
        return cls(beta, E, Bop, None)

    @classmethod
    def zero(cls, geom: FramedGeometry) -> "AssociatedPair":
        shape = geom.grid.shape
        n, p = geom.n, geom.p
        return cls.from_coefficients(geom, np.zeros(shape + (n, n, p)), np.zeros(shape + (n, p, p)))

    def combine(self, geom: FramedGeometry, other: "AssociatedPair", a: float = 1.0, b: float = 1.0):
        return AssociatedPair.from_coefficients(geom, a * self.beta + b * other.beta, a * self.E + b * other.E)

    def scaled(self, geom: FramedGeometry, c: float) -> "AssociatedPair":
        return AssociatedPair.from_coefficients(geom, c * self.beta, c * self.E)

    def norm(self) -> float:
        return float(max(np.abs(self.beta).max(initial=0.0), np.abs(self.E).max(initial=0.0)))


def bending_scale(geom: FramedGeometry, L: np.ndarray) -> float:
    return max(1.0, float(np.abs(L).max(initial=0.0)), geom.alpha_norm())


def _check_grid(geom: FramedGeometry, T: BendingField) -> None:
    if T.grid != geom.grid:
        raise BendingError("bending and scene live on different grids")
    if T.T.shape[-1] != geom.m:
        raise BendingError(f"bending has {T.T.shape[-1]} components, ambient dimension is {geom.m}")


def bending_residual_field(geom: FramedGeometry, L: np.ndarray) -> np.ndarray:
    S = np.einsum("...im,...jm->...ij", L, geom.e)
    return node_sup(S + np.swapaxes(S, -1, -2), geom.grid)


def bending_residual(geom: FramedGeometry, T: BendingField) -> float:
    """Sup of |<L_i, e_j> + <e_i, L_j>|; compare with ``TOL_BEND * h**2 * scale``."""
    _check_grid(geom, T)
    L = grad(T.T, geom.grid)
    return sup(bending_residual_field(geom, L), geom.grid)


def bending_tolerance(geom: FramedGeometry, T: BendingField, c: float = TOL_BEND) -> float:
    return c * geom.h**2 * bending_scale(geom, grad(T.T, geom.grid))


def derived_tensors(geom: FramedGeometry, L: np.ndarray) -> DerivedTensors:
    dL = grad(L, geom.grid)
    B = dL - np.einsum("...kij,...km->...ijm", geom.Gamma, L)
    return DerivedTensors(L, B)


def pair_from_derived(geom: FramedGeometry, derived: DerivedTensors) -> AssociatedPair:
    L, B = derived.L, derived.B
    xi, g_inv = geom.xi, geom.g_inv
    beta = np.einsum("...ijm,...am->...ija", B, xi)
    Bop = np.einsum("...kl,...lja->...akj", g_inv, beta)
    Lxi = np.einsum("...jm,...am->...ja", L, xi)
    Ycal = -np.einsum("...kj,...ja->...ak", g_inv, Lxi)
    E = (np.einsum("...ak,...ikb->...iab", Ycal, geom.alpha)
         + np.einsum("...aki,...kb->...iab", geom.A, Lxi))
    return AssociatedPair(beta, E, Bop, Ycal)


def associated_pair(geom: FramedGeometry, T: BendingField, check: bool = True,
                    tol: float | None = None) -> tuple[DerivedTensors, AssociatedPair]:
    _check_grid(geom, T)
    L = grad(T.T, geom.grid)
    if check:
        res = sup(bending_residual_field(geom, L), geom.grid)
        bound = TOL_BEND * geom.h**2 * bending_scale(geom, L) if tol is None else tol
        if res > bound:
            raise BendingError(f"{T.label or 'field'} is not an infinitesimal bending: residual {res:.3e} > {bound:.3e}")
    derived = derived_tensors(geom, L)
    return derived, pair_from_derived(geom, derived)


def tangential_identity_field(geom: FramedGeometry, derived: DerivedTensors, pair: AssociatedPair) -> np.ndarray:
    BT = np.einsum("...ijm,...km->...ijk", derived.B, geom.e)
    Lxi = np.einsum("...km,...am->...ka", derived.L, geom.xi)
    return node_sup(BT + np.einsum("...ija,...ka->...ijk", geom.alpha, Lxi), geom.grid)


def tangential_identity_residual(geom: FramedGeometry, derived: DerivedTensors, pair: AssociatedPair) -> float:
    """Sup of <B(d_i, d_j), e_k> - <Y alpha(d_i, d_j), e_k>."""
    return sup(tangential_identity_field(geom, derived, pair), geom.grid)


def compatibility_field(pair: AssociatedPair, grid: ChartGrid) -> np.ndarray:
    return node_sup(pair.E + np.swapaxes(pair.E, -1, -2), grid)


def compatibility_residual(pair: AssociatedPair, grid: ChartGrid | None = None) -> float:
    """Sup of |E[i, a, b] + E[i, b, a]|."""
    sym = pair.E + np.swapaxes(pair.E, -1, -2)
    if grid is None:
        return float(np.abs(sym).max(initial=0.0))
    return sup(sym, grid)


def beta_symmetry_residual(pair: AssociatedPair, grid: ChartGrid) -> float:
    return sup(pair.beta - np.swapaxes(pair.beta, -2, -3), grid)
