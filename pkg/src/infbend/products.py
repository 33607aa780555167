"""Extrinsic products, adapted tensors, s-nullities and splitting of bendings."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .bending import AssociatedPair, BendingField, associated_pair, bending_scale
from .classify import DEFAULT_SEED
from .geometry import FramedGeometry, ImmersionScene, first_normal_full
from .numgrid import RESIDUAL_MARGIN, ChartGrid, Node, diff, grad, sup, sweep_integrate

TOL_ADAPTED = 10.0
TOL_SPLIT = 50.0
NULLITY_THRESHOLD = 1e-6
DEFAULT_SAMPLES = 2000
REFINE_STEPS = 50


class ProductError(ValueError):
    pass


@dataclass(frozen=True)
class Factor:
    """Sampled factor map; unlike a scene it may be flat (m = n), e.g. a line in R^1."""

    grid: ChartGrid
    map: np.ndarray
    label: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n(self) -> int:
        return self.grid.dim

    @property
    def m(self) -> int:
        return self.map.shape[-1]

    @property
    def p(self) -> int:
        return self.m - self.n


@dataclass(frozen=True)
class ProductStructure:
    factors: tuple[ImmersionScene | Factor, ...]
    axis_blocks: tuple[tuple[int, ...], ...]
    ambient_blocks: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.axis_blocks)

    @property
    def m(self) -> int:
        return sum(len(b) for b in self.ambient_blocks)

    def axis_owner(self) -> np.ndarray:
        owner = np.empty(self.n, dtype=int)
        for k, block in enumerate(self.axis_blocks):
            owner[list(block)] = k
        return owner

    def cross_mask(self) -> np.ndarray:
        """Boolean n x n mask of index pairs in different factors."""
        owner = self.axis_owner()
        return owner[:, None] != owner[None, :]


def _embed(values: np.ndarray, axes: tuple[int, ...], shape: tuple[int, ...]) -> np.ndarray:
    """Broadcast a factor field (factor grid + tensor) onto the product grid."""
    nf = len(axes)
    tshape = values.shape[nf:]
    index = [1] * len(shape)
    for k, ax in enumerate(axes):
        index[ax] = values.shape[k]
    return np.broadcast_to(values.reshape(tuple(index) + tshape), shape + tshape)


def extrinsic_product(factors, label: str | None = None) -> tuple[ImmersionScene, ProductStructure]:
    factors = tuple(factors)
    if len(factors) < 2:
        raise ProductError("a product needs at least two factors")
    bounds, res, per = [], [], []
    axis_blocks, ambient_blocks = [], []
    a0 = m0 = 0
    for f in factors:
        g = f.grid
        bounds += list(g.bounds)
        res += list(g.resolution)
        per += list(g.periodic)
        axis_blocks.append(tuple(range(a0, a0 + g.dim)))
        ambient_blocks.append(tuple(range(m0, m0 + f.m)))
        a0 += g.dim
        m0 += f.m
    grid = ChartGrid(tuple(bounds), tuple(res), tuple(per))
    parts = [_embed(f.map, axis_blocks[k], grid.shape) for k, f in enumerate(factors)]
    fmap = np.concatenate(parts, axis=-1)
    label = label or " x ".join(f.label or "factor" for f in factors)
    structure = ProductStructure(factors, tuple(axis_blocks), tuple(ambient_blocks))
    meta = {"product": structure}
    return ImmersionScene(grid, fmap, label, meta), structure


def cross_components(values: np.ndarray, structure: ProductStructure, grid: ChartGrid) -> float:
    """Sup of entries values[..., i, j, a] with i, j in different factors."""
    mask = structure.cross_mask()
    d = grid.dim
    sel = values[(slice(None),) * d + (mask,)]
    return sup(sel, grid) if sel.size else 0.0


def cross_alpha(geom: FramedGeometry, structure: ProductStructure) -> float:
    return cross_components(geom.alpha, structure, geom.grid)


def adaptedness_residual(geom: FramedGeometry, pair: AssociatedPair, structure: ProductStructure) -> float:
    if structure.n != geom.n or structure.m != geom.m:
        raise ProductError("product structure does not match the geometry")
    return cross_components(pair.beta, structure, geom.grid)


def cross_L(geom: FramedGeometry, T: BendingField, structure: ProductStructure) -> float:
    """Sup of ambient components of d_i T outside the block of the factor owning axis i."""
    L = grad(T.T, geom.grid)
    mask = np.zeros((geom.n, geom.m), dtype=bool)
    for axes, amb in zip(structure.axis_blocks, structure.ambient_blocks):
        for i in axes:
            mask[i] = True
            mask[i, list(amb)] = False
    sel = L[(slice(None),) * geom.grid.dim + (mask,)]
    return sup(sel, geom.grid) if sel.size else 0.0


# s-nullity


def _nullity_matrix(alpha: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Rows (r, l), columns j: sum_a U[a, r] alpha[j, l, a]."""
    n = alpha.shape[0]
    return np.einsum("ar,jla->rlj", U, alpha).reshape(-1, n)


def _score(alpha: np.ndarray, U: np.ndarray, thresh: float) -> tuple[int, float]:
    n = alpha.shape[0]
    sv = np.linalg.svd(_nullity_matrix(alpha, U), compute_uv=False)
    sv = np.concatenate([sv, np.zeros(max(0, n - sv.size))])[:n]
    rank = int(np.sum(sv > thresh))
    nxt = float(sv[rank - 1]) if rank > 0 else 0.0
    return n - rank, -nxt


def _givens(p: int, a: int, b: int, t: float) -> np.ndarray:
    G = np.eye(p)
    c, s = np.cos(t), np.sin(t)
    G[a, a] = G[b, b] = c
    G[a, b], G[b, a] = -s, s
    return G


def _refine(alpha: np.ndarray, U: np.ndarray, thresh: float, steps: int) -> tuple[np.ndarray, tuple[int, float]]:
    p = U.shape[0]
    best = _score(alpha, U, thresh)
    delta = 0.25
    pairs = list(itertools.combinations(range(p), 2))
    for _ in range(steps):
        improved = False
        for a, b in pairs:
            for t in (delta, -delta):
                cand = _givens(p, a, b, t) @ U
                sc = _score(alpha, cand, thresh)
                if sc > best:
                    U, best, improved = cand, sc, True
        if not improved:
            delta *= 0.5
    return U, best


@dataclass(frozen=True)
class NullityResult:
    s: int
    nullity: int
    subspace: np.ndarray  # p x s, coefficients in the normal frame
    exact: bool
    samples: int


def s_nullity(geom: FramedGeometry, node, s: int, samples: int = DEFAULT_SAMPLES,
              steps: int = REFINE_STEPS, seed: int = DEFAULT_SEED, keep: int = 4) -> NullityResult:
    """Certified lower bound for the s-nullity at a node, with the maximizing subspace."""
    p = geom.p
    if not 1 <= s <= p:
        raise ProductError(f"s = {s} out of range 1..{p}")
    node = geom.grid.check_node(node)
    alpha = geom.alpha[node]
    smax = np.linalg.svd(_nullity_matrix(alpha, np.eye(p)), compute_uv=False)
    thresh = NULLITY_THRESHOLD * (smax[0] if smax.size and smax[0] > 0 else 1.0)
    if s == p:
        U = np.eye(p)
        return NullityResult(s, _score(alpha, U, thresh)[0], U, True, 1)
    rng = np.random.default_rng(seed)
    cands = []
    for _ in range(samples):
        Q, R = np.linalg.qr(rng.standard_normal((p, s)))
        Q = Q * np.sign(np.diag(R))
        cands.append((_score(alpha, Q, thresh), Q))
    # coordinate axes are cheap and often optimal on adapted frames
    for idx in itertools.combinations(range(p), s):
        Q = np.eye(p)[:, list(idx)]
        cands.append((_score(alpha, Q, thresh), Q))
    cands.sort(key=lambda c: c[0], reverse=True)
    best_sc, best_U = cands[0]
    for sc, U in cands[:keep]:
        U2, sc2 = _refine(alpha, U, thresh, steps)
        if sc2 > best_sc:
            best_sc, best_U = sc2, U2
    return NullityResult(s, best_sc[0], best_U, False, samples)


def sample_nodes(grid: ChartGrid, count: int = 9, margin: int = RESIDUAL_MARGIN) -> list[Node]:
    """Grid center followed by interior corners, at most ``count`` nodes."""
    lo = [0 if per else margin for per in grid.periodic]
    hi = [r - 1 - (0 if per else margin) for r, per in zip(grid.resolution, grid.periodic)]
    nodes = [tuple(r // 2 for r in grid.resolution)]
    for corner in itertools.product(*zip(lo, hi)):
        if len(nodes) >= count:
            break
        if corner not in nodes:
            nodes.append(tuple(int(c) for c in corner))
    return nodes


@dataclass
class HypothesisCheck:
    name: str
    lhs: float
    rhs: float
    passed: bool
    sampling_limited: bool = False

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "pass": self.passed,
                "margin": self.rhs - self.lhs, "sampling_limited": self.sampling_limited}


@dataclass
class HypothesisReport:
    nullities: dict[int, int]
    nodes: list[Node]
    checks: list[HypothesisCheck] = field(default_factory=list)

    def check(self, name: str) -> HypothesisCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"nullities": {str(k): v for k, v in self.nullities.items()},
                "nodes": [list(nd) for nd in self.nodes],
                "checks": [c.to_dict() for c in self.checks]}


def nullity_sweep(geom: FramedGeometry, nodes=None, samples: int = DEFAULT_SAMPLES,
                  seed: int = DEFAULT_SEED, full_grid: bool = False) -> tuple[dict[int, int], list[Node]]:
    grid = geom.grid
    if full_grid:
        mask = grid.interior_mask()
        nodes = [grid.unravel(int(k)) for k in np.flatnonzero(mask.ravel())]
    elif nodes is None:
        nodes = sample_nodes(grid)
    nodes = [grid.check_node(nd) for nd in nodes]
    out = {}
    for s in range(1, geom.p + 1):
        out[s] = max(s_nullity(geom, nd, s, samples=samples, seed=seed).nullity for nd in nodes)
    return out, nodes


def product_hypotheses(geom: FramedGeometry, structure: ProductStructure, nodes=None,
                       samples: int = DEFAULT_SAMPLES, seed: int = DEFAULT_SEED,
                       full_grid: bool = False) -> HypothesisReport:
    nul, nodes = nullity_sweep(geom, nodes, samples, seed, full_grid)
    n, p = geom.n, geom.p
    rep = HypothesisReport(nul, nodes)
    for s, v in nul.items():
        sampled = s < p
        rep.checks.append(HypothesisCheck(f"nu_{s} < n - s", v, n - s, v < n - s,
                                          sampled and (n - s) - v == 1))
        rep.checks.append(HypothesisCheck(f"nu_{s} < n - 2s", v, n - 2 * s, v < n - 2 * s,
                                          sampled and (n - 2 * s) - v == 1))
    for k, f in enumerate(structure.factors):
        rep.checks.append(HypothesisCheck(f"p_{k + 1} < n_{k + 1}", f.p, f.n, f.p < f.n))
        rep.checks.append(HypothesisCheck(f"n_{k + 1} >= 2", 2, f.n, f.n >= 2))
    rep.checks.append(HypothesisCheck("p < n", p, n, p < n))
    rep.checks.append(HypothesisCheck("2p < n", 2 * p, n, 2 * p < n))
    return rep


# splitting


@dataclass(frozen=True)
class SplitResult:
    factors: list[BendingField]
    constancy: float
    factor_bending: list[float]
    adaptedness: float
    tol: float

    @property
    def residual(self) -> float:
        return max([self.constancy] + list(self.factor_bending))

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol


def split_bending(geom: FramedGeometry, structure: ProductStructure, T: BendingField,
                  pair: AssociatedPair | None = None, base: Node | None = None,
                  tol_scale: float = 1.0, check_full: bool = True) -> SplitResult:
    grid = geom.grid
    if pair is None:
        _, pair = associated_pair(geom, T)
    L = grad(T.T, grid)
    scale = bending_scale(geom, L)
    h2 = geom.h**2
    adapted = adaptedness_residual(geom, pair, structure)
    tol_adapt = tol_scale * TOL_ADAPTED * h2 * max(scale, pair.norm())
    if adapted > tol_adapt:
        raise ProductError(f"beta is not adapted to the product: cross residual {adapted:.3e} > {tol_adapt:.3e}")
    if check_full:
        full, node = first_normal_full(geom)
        if not full:
            raise ProductError(f"first normal space not full at node {node}")
    tol = tol_scale * TOL_SPLIT * h2 * scale
    base = tuple(r // 2 for r in grid.resolution) if base is None else grid.check_node(base)
    pieces, bres = [], []
    constancy = 0.0
    for k, f in enumerate(structure.factors):
        axes, amb = list(structure.axis_blocks[k]), list(structure.ambient_blocks[k])
        Lk = L[..., axes, :][..., amb]  # grid + (n_k, m_k)
        others = [a for a in range(grid.dim) if a not in axes]
        for a in others:
            constancy = max(constancy, sup(diff(Lk, grid, a), grid))
        # restrict to the factor grid through the base node
        idx = tuple(slice(None) if a in axes else base[a] for a in range(grid.dim))
        Lf = Lk[idx]
        if f.grid.shape != Lf.shape[: f.grid.dim]:
            raise ProductError("factor grid does not match the product axes")
        fbase = tuple(base[a] for a in axes)
        Tk = BendingField(f.grid, sweep_integrate(Lf, f.grid, fbase), f"{T.label}[{k + 1}]")
        pieces.append(Tk)
        bres.append(factor_bending_residual(f, Tk))
    if constancy > tol:
        raise ProductError(f"factor derivatives are not constant along the other factors "
                           f"(residual {constancy:.3e} > {tol:.3e})")
    return SplitResult(pieces, constancy, bres, adapted, tol)


def factor_bending_residual(factor, T: BendingField) -> float:
    """Bending residual on a factor, computed from its map alone (flat factors allowed)."""
    e = grad(factor.map, factor.grid)
    L = grad(T.T, factor.grid)
    S = np.einsum("...im,...jm->...ij", L, e)
    return sup(S + np.swapaxes(S, -1, -2), factor.grid)


def direct_sum(fields, structure: ProductStructure, grid: ChartGrid, label: str = "") -> BendingField:
    parts = [_embed(np.asarray(F.T if isinstance(F, BendingField) else F), structure.axis_blocks[k], grid.shape)
             for k, F in enumerate(fields)]
    labels = [getattr(F, "label", "") for F in fields]
    return BendingField(grid, np.concatenate(parts, axis=-1), label or "+".join(labels))
