"""Triviality tests for bendings and pairs, and recovery of E from beta."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bending import AssociatedPair, BendingField
from .fundsys import codazzi_field
from .geometry import FramedGeometry, cov_normal_form, first_normal_full
from .numgrid import grad, sup

TOL_TRIVIAL = 30.0
DEFAULT_SEED = 0x5EED


class ClassifyError(ValueError):
    pass


def skew_basis(m: int) -> np.ndarray:
    """Basis of so(m), shape (m(m-1)/2, m, m), ordered by (i < j)."""
    iu = np.triu_indices(m, 1)
    basis = np.zeros((len(iu[0]), m, m))
    for q, (i, j) in enumerate(zip(*iu)):
        basis[q, i, j] = 1.0
        basis[q, j, i] = -1.0
    return basis


@dataclass(frozen=True)
class KillingFit:
    D: np.ndarray
    v: np.ndarray
    residual: float
    scale: float

    def verdict(self, tol: float) -> tuple[str, float]:
        """('trivial' | 'nontrivial', margin) with margin = residual / tol."""
        margin = self.residual / tol if tol > 0 else np.inf
        return ("trivial" if self.residual <= tol else "nontrivial"), float(margin)


def fit_killing(f: np.ndarray, T: BendingField | np.ndarray, rcond: float = 1e-10) -> KillingFit:
    """Least-squares fit T(x) ~ D f(x) + v with D skew; residual is the scaled sup misfit."""
    f = np.asarray(f, dtype=float)
    Tv = np.asarray(T.T if isinstance(T, BendingField) else T, dtype=float)
    m = f.shape[-1]
    F = f.reshape(-1, m)
    Y = Tv.reshape(-1, m)
    basis = skew_basis(m)
    # columns: each skew generator applied to f, then translations
    cols = [np.einsum("km,nm->nk", b, F).ravel() for b in basis]
    eye = np.eye(m)
    cols += [np.broadcast_to(eye[k], F.shape).ravel() for k in range(m)]
    X = np.stack(cols, axis=1)
    coef, _, rank, sv = np.linalg.lstsq(X, Y.ravel(), rcond=None)
    if rank < X.shape[1] or sv[-1] < rcond * sv[0]:
        raise ClassifyError(f"Killing fit is under-determined (rank {rank} of {X.shape[1]}); "
                            "the sampled immersion does not pin down a rigid motion")
    nq = len(basis)
    D = np.einsum("q,qij->ij", coef[:nq], basis)
    v = coef[nq:]
    misfit = Y - F @ D.T - v
    scale = max(1.0, float(np.abs(Y).max(initial=0.0)))
    return KillingFit(D, v, float(np.abs(misfit).max(initial=0.0)) / scale, scale)


def normal_part(geom: FramedGeometry, Dhat: np.ndarray) -> np.ndarray:
    """D^N[c, a] = <Dhat xi_a, xi_c> per node."""
    return np.einsum("...cm,mk,...ak->...ca", geom.xi, Dhat, geom.xi)


def killing_pair_exact(geom: FramedGeometry, Dhat: np.ndarray) -> AssociatedPair:
    """Pair of the Killing bending Dhat f + v evaluated from closed-form first derivatives."""
    Dhat = np.asarray(Dhat, dtype=float)
    DN = normal_part(geom, Dhat)
    beta = np.einsum("...ca,...ija->...ijc", DN, geom.alpha)
    De_xi = np.einsum("...km,mr,...cr->...kc", geom.e, Dhat.T, geom.xi)  # <Dhat e_k, xi_c>
    Dxi_e = np.einsum("...lm,mr,...ar->...al", geom.e, Dhat, geom.xi)  # <Dhat xi_a, e_l>
    Y = np.einsum("...kl,...al->...ak", geom.g_inv, Dxi_e)
    E = np.einsum("...aki,...kc->...iac", geom.A, De_xi) + np.einsum("...ak,...ikc->...iac", Y, geom.alpha)
    return AssociatedPair.from_coefficients(geom, beta, E)


def cov_normal_endo(geom: FramedGeometry, C: np.ndarray) -> np.ndarray:
    """K[i, a, c] = <(nabla_i C) xi_a, xi_c> for C[c, a] = <C xi_a, xi_c>."""
    dC = grad(C, geom.grid)  # [i, c, a]
    w = geom.omega
    return (np.einsum("...ica->...iac", dC) + np.einsum("...ba,...ibc->...iac", C, w)
            - np.einsum("...iab,...cb->...iac", w, C))


def trivial_pair(geom: FramedGeometry, C: np.ndarray) -> AssociatedPair:
    """(C alpha, -nabla C) for a skew normal-endomorphism field C[c, a]."""
    beta = np.einsum("...ca,...ija->...ijc", C, geom.alpha)
    return AssociatedPair.from_coefficients(geom, beta, -cov_normal_endo(geom, C))


@dataclass(frozen=True)
class PairTriviality:
    C: np.ndarray
    res_beta: float
    res_E: float
    scale: float
    tol: float
    degenerate: bool  # alpha vanishes somewhere beta does not

    @property
    def trivial(self) -> bool:
        return not self.degenerate and self.res_beta <= self.tol and self.res_E <= self.tol

    @property
    def margin(self) -> float:
        if self.degenerate:
            return float("inf")
        return max(self.res_beta, self.res_E) / self.tol

    @property
    def verdict(self) -> str:
        return "trivial" if self.trivial else "nontrivial"


def pair_triviality(geom: FramedGeometry, pair: AssociatedPair, c: float = TOL_TRIVIAL) -> PairTriviality:
    p, n = geom.p, geom.n
    shape = geom.grid.shape
    basis = skew_basis(p)
    beta = pair.beta
    alpha_n = np.abs(geom.alpha).reshape(shape + (-1,)).max(axis=-1)
    beta_n = np.abs(beta).reshape(shape + (-1,)).max(axis=-1)
    degenerate_nodes = (alpha_n <= 1e-12) & (beta_n > 1e-12)
    degenerate = bool(degenerate_nodes[geom.grid.interior_mask()].any())
    if len(basis) == 0:
        C = np.zeros(shape + (p, p))
    else:
        # design[..., (i, j, c), q] = sum_a basis[q, c, a] alpha[i, j, a]
        X = np.einsum("qca,...ija->...ijcq", basis, geom.alpha).reshape(shape + (n * n * p, len(basis)))
        y = beta.reshape(shape + (n * n * p,))
        coef = np.einsum("...qr,...r->...q", np.linalg.pinv(X, rcond=1e-10), y)
        C = np.einsum("...q,qca->...ca", coef, basis)
    fitted = trivial_pair(geom, C)
    res_beta = sup(beta - fitted.beta, geom.grid)
    res_E = sup(pair.E - fitted.E, geom.grid)
    scale = max(1.0, geom.alpha_norm(), pair.norm())
    tol = c * geom.h**2 * scale
    return PairTriviality(C, res_beta, res_E, scale, tol, degenerate)


def solve_E_from_beta(geom: FramedGeometry, beta: np.ndarray, check_full: bool = True) -> np.ndarray:
    """The unique anti-compatible E making the Codazzi equation hold for beta (full N_1 required)."""
    shape = geom.grid.shape
    n, p = geom.n, geom.p
    beta = np.asarray(beta, dtype=float)
    if beta.shape != shape + (n, n, p):
        raise ClassifyError(f"beta shape {beta.shape} != {shape + (n, n, p)}")
    if p == 1:
        return np.zeros(shape + (n, 1, 1))
    if check_full:
        full, node = first_normal_full(geom)
        if not full:
            raise ClassifyError(f"first normal space is not full at node {node}; E is not determined by beta")
    d = geom.grid.dim
    nb = cov_normal_form(geom, beta)
    lhs = nb - np.swapaxes(nb, d, d + 1)  # [i, j, k, c]
    sk = skew_basis(p)
    # unknown E[l, a, c] = sum_{l', q} x[l', q] delta_{l l'} sk[q, a, c]
    basis = np.einsum("lL,qac->Lqlac", np.eye(n), sk).reshape(n * len(sk), n, p, p)
    t = np.einsum("...ika,Bjac->...ijkcB", geom.alpha, basis)
    X = (t - np.swapaxes(t, d, d + 1)).reshape(shape + (n * n * n * p, len(basis)))
    y = lhs.reshape(shape + (n * n * n * p,))
    coef = np.einsum("...qr,...r->...q", np.linalg.pinv(X, rcond=1e-10), y)
    return np.einsum("...B,Blac->...lac", coef, basis)


def codazzi_sensitivity(geom: FramedGeometry, pair: AssociatedPair, count: int = 100,
                        seed: int = DEFAULT_SEED, size_range=(1e-3, 1e-1)) -> tuple[np.ndarray, np.ndarray]:
    """Random anti-compatible perturbations of E: (sizes, codazzi residuals)."""
    rng = np.random.default_rng(seed)
    sizes = np.exp(rng.uniform(np.log(size_range[0]), np.log(size_range[1]), count))
    res = np.empty(count)
    for k, s in enumerate(sizes):
        P = rng.standard_normal(pair.E.shape)
        P = P - np.swapaxes(P, -1, -2)
        P *= s / np.abs(P).max()
        pert = AssociatedPair.from_coefficients(geom, pair.beta, pair.E + P)
        res[k] = sup(codazzi_field(geom, pert), geom.grid)
    return sizes, res
