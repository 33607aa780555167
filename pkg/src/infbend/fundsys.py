"""Residuals of the fundamental system satisfied by a pair (beta, E).

All residual functions return absolute sup-norms over the trusted interior;
``verify`` compares them with ``c * h**2 * scale``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .bending import AssociatedPair, BendingError, compatibility_field
from .geometry import FramedGeometry, cov_normal_form
from .numgrid import grad, node_sup, sup

TOL_SYSTEM = 20.0


class FundamentalSystemError(ValueError):
    pass


@dataclass(frozen=True)
class SystemReport:
    gauss: float
    codazzi: float
    codazzi2: float
    ricci: float
    anti: float
    tol: float
    scale: float

    @property
    def passed(self) -> bool:
        return max(self.gauss, self.codazzi, self.codazzi2, self.ricci, self.anti) <= self.tol

    @property
    def worst(self) -> tuple[str, float]:
        items = {k: getattr(self, k) for k in ("gauss", "codazzi", "codazzi2", "ricci", "anti")}
        key = max(items, key=items.get)
        return key, items[key]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = self.passed
        return d


def _check(geom: FramedGeometry, pair: AssociatedPair) -> None:
    shape = geom.grid.shape
    n, p = geom.n, geom.p
    if pair.beta.shape != shape + (n, n, p) or pair.E.shape != shape + (n, p, p):
        raise BendingError(
            f"pair shapes {pair.beta.shape}, {pair.E.shape} do not match geometry (n={n}, p={p}, grid={shape})"
        )


def system_scale(geom: FramedGeometry, pair: AssociatedPair) -> float:
    return max(1.0, geom.alpha_norm()) * max(1.0, pair.norm())


def gauss_field(geom: FramedGeometry, pair: AssociatedPair) -> np.ndarray:
    _check(geom, pair)
    beta, alpha, A, Bop = pair.beta, geom.alpha, geom.A, pair.Bop
    # v[i, j, k, l] = sum_a beta^a_jk (A_a)^l_i + alpha^a_jk (B_a)^l_i
    v = np.einsum("...jka,...ali->...ijkl", beta, A) + np.einsum("...jka,...ali->...ijkl", alpha, Bop)
    r = v - np.swapaxes(v, geom.grid.dim, geom.grid.dim + 1)
    norm2 = np.einsum("...ijkl,...lm,...ijkm->...ijk", r, geom.g, r)
    return node_sup(np.sqrt(np.maximum(norm2, 0.0)), geom.grid)


def gauss_residual(geom: FramedGeometry, pair: AssociatedPair) -> float:
    return sup(gauss_field(geom, pair), geom.grid)


def codazzi_field(geom: FramedGeometry, pair: AssociatedPair) -> np.ndarray:
    _check(geom, pair)
    d = geom.grid.dim
    nb = cov_normal_form(geom, pair.beta)  # nb[i, j, k, c]
    lhs = nb - np.swapaxes(nb, d, d + 1)
    # E(d_j, alpha(d_i, d_k)) - E(d_i, alpha(d_j, d_k))
    t = np.einsum("...ika,...jac->...ijkc", geom.alpha, pair.E)
    rhs = t - np.swapaxes(t, d, d + 1)
    return node_sup(lhs - rhs, geom.grid)


def codazzi_residual(geom: FramedGeometry, pair: AssociatedPair) -> float:
    return sup(codazzi_field(geom, pair), geom.grid)


def codazzi2_field(geom: FramedGeometry, pair: AssociatedPair) -> np.ndarray:
    _check(geom, pair)
    d = geom.grid.dim
    Bop, G, w, E, A = pair.Bop, geom.Gamma, geom.omega, pair.E, geom.A
    dB = grad(Bop, geom.grid)  # dB[i, a, l, j]
    # (nabla_i B_a)^l_j, stored as [i, j, a, l]
    nB = (np.einsum("...ialj->...ijal", dB) + np.einsum("...lim,...amj->...ijal", G, Bop)
          - np.einsum("...mij,...alm->...ijal", G, Bop))
    t = (nB - np.einsum("...iab,...blj->...ijal", w, Bop)
         - np.einsum("...iab,...blj->...ijal", E, A))
    r = t - np.swapaxes(t, d, d + 1)
    lowered = np.einsum("...ijal,...lk->...ijak", r, geom.g)
    return node_sup(lowered, geom.grid)


def codazzi2_residual(geom: FramedGeometry, pair: AssociatedPair) -> float:
    return sup(codazzi2_field(geom, pair), geom.grid)


def cov_E(geom: FramedGeometry, E: np.ndarray) -> np.ndarray:
    """Covariant derivative of E[j, a, c]; result [i, j, a, c]."""
    dE = grad(E, geom.grid)
    G, w = geom.Gamma, geom.omega
    return (dE - np.einsum("...lij,...lac->...ijac", G, E) - np.einsum("...iab,...jbc->...ijac", w, E)
            + np.einsum("...jab,...ibc->...ijac", E, w))


def ricci_field(geom: FramedGeometry, pair: AssociatedPair) -> np.ndarray:
    _check(geom, pair)
    d = geom.grid.dim
    nE = cov_E(geom, pair.E)
    lhs = nE - np.swapaxes(nE, d, d + 1)
    beta, alpha, A, Bop = pair.beta, geom.alpha, geom.A, pair.Bop
    rhs = (np.einsum("...ikc,...akj->...ijac", beta, A) - np.einsum("...aki,...kjc->...ijac", A, beta)
           + np.einsum("...ikc,...akj->...ijac", alpha, Bop) - np.einsum("...aki,...kjc->...ijac", Bop, alpha))
    return node_sup(lhs - rhs, geom.grid)


def ricci_residual(geom: FramedGeometry, pair: AssociatedPair) -> float:
    return sup(ricci_field(geom, pair), geom.grid)


def residual_fields(geom: FramedGeometry, pair: AssociatedPair) -> dict[str, np.ndarray]:
    return {
        "gauss": gauss_field(geom, pair),
        "codazzi": codazzi_field(geom, pair),
        "codazzi2": codazzi2_field(geom, pair),
        "ricci": ricci_field(geom, pair),
        "anti": compatibility_field(pair, geom.grid),
    }


def verify(geom: FramedGeometry, pair: AssociatedPair, tol: float | None = None,
           c: float = TOL_SYSTEM) -> SystemReport:
    fields = residual_fields(geom, pair)
    vals = {k: sup(v, geom.grid) for k, v in fields.items()}
    scale = system_scale(geom, pair)
    if tol is None:
        tol = c * geom.h**2 * scale
    return SystemReport(vals["gauss"], vals["codazzi"], vals["codazzi2"], vals["ricci"], vals["anti"],
                        float(tol), scale)


# hypersurfaces


def wedge_residual(geom: FramedGeometry, bhat: np.ndarray) -> float:
    """Sup of |Bhat X ^ A Y - Bhat Y ^ A X| over coordinate pairs, in the induced metric."""
    if geom.p != 1:
        raise FundamentalSystemError("wedge condition is defined for hypersurfaces only")
    op = np.einsum("...kl,...lj->...kj", geom.g_inv, bhat)  # (Bhat)^k_j
    A = geom.A[..., 0, :, :]
    # W[i, j, k, l] = u^k v^l - u^l v^k with u = op d_i, v = A d_j, antisymmetrised in (i, j)
    w = np.einsum("...ki,...lj->...ijkl", op, A)
    w = w - np.swapaxes(w, -1, -2)
    d = geom.grid.dim
    w = w - np.swapaxes(w, d, d + 1)
    g = geom.g
    norm2 = 0.5 * (np.einsum("...ijkl,...ijmn,...km,...ln->...ij", w, w, g, g)
                   - np.einsum("...ijkl,...ijmn,...kn,...lm->...ij", w, w, g, g))
    return sup(np.sqrt(np.maximum(norm2, 0.0)), geom.grid)


def tensor_codazzi_residual(geom: FramedGeometry, bhat: np.ndarray) -> float:
    """Codazzi residual of a symmetric (0,2) tensor on a hypersurface (normal slot trivial)."""
    pair = AssociatedPair.from_coefficients(geom, bhat[..., None], np.zeros(geom.grid.shape + (geom.n, 1, 1)))
    return codazzi_residual(geom, pair)


@dataclass(frozen=True)
class HypersurfacePair:
    pair: AssociatedPair
    wedge: float
    codazzi: float
    tol: float
    report: SystemReport

    @property
    def passed(self) -> bool:
        return self.wedge <= self.tol and self.codazzi <= self.tol and self.report.passed


def hypersurface_pair(geom: FramedGeometry, bhat: np.ndarray, tol: float | None = None,
                      c: float = TOL_SYSTEM, strict: bool = True) -> HypersurfacePair:
    """Pair (<Bhat ., .> xi, 0) for a symmetric Codazzi tensor Bhat on a hypersurface."""
    if geom.p != 1:
        raise FundamentalSystemError(f"hypersurface pair needs codimension 1, scene has p={geom.p}")
    bhat = np.asarray(bhat, dtype=float)
    if bhat.shape != geom.grid.shape + (geom.n, geom.n):
        raise FundamentalSystemError(f"Bhat shape {bhat.shape} != {geom.grid.shape + (geom.n, geom.n)}")
    asym = sup(bhat - np.swapaxes(bhat, -1, -2), geom.grid)
    pair = AssociatedPair.from_coefficients(geom, bhat[..., None], np.zeros(geom.grid.shape + (geom.n, 1, 1)))
    scale = system_scale(geom, pair)
    if tol is None:
        tol = c * geom.h**2 * scale
    wedge = wedge_residual(geom, bhat)
    codazzi = codazzi_residual(geom, pair)
    if strict:
        if asym > tol:
            raise FundamentalSystemError(f"Bhat is not symmetric (residual {asym:.3e})")
        if wedge > tol:
            raise FundamentalSystemError(f"wedge condition violated: residual {wedge:.3e} > tol {tol:.3e}")
        if codazzi > tol:
            raise FundamentalSystemError(f"Bhat is not a Codazzi tensor: residual {codazzi:.3e} > tol {tol:.3e}")
    return HypersurfacePair(pair, wedge, codazzi, float(tol), verify(geom, pair, tol=tol))
