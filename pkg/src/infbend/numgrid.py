"""Rectangular chart grids, finite differences and line integration.

Field values are plain numpy arrays whose leading axes are the grid axes
(row-major, declaration order) followed by the tensor index axes.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

MIN_RESOLUTION = 8

# Boundary layers excluded from residual sup-norms on non-periodic axes.
# Iterated one-sided stencils lose one order per iteration there.
RESIDUAL_MARGIN = 3

Node = tuple[int, ...]
EdgeRHS = Callable[[Node, int], np.ndarray]


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class ChartGrid:
    bounds: tuple[tuple[float, float], ...]
    resolution: tuple[int, ...]
    periodic: tuple[bool, ...]

    def __post_init__(self):
        bounds = tuple((float(a), float(b)) for a, b in self.bounds)
        resolution = tuple(int(r) for r in self.resolution)
        periodic = tuple(bool(p) for p in self.periodic)
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "resolution", resolution)
        object.__setattr__(self, "periodic", periodic)
        if not (len(bounds) == len(resolution) == len(periodic)) or not bounds:
            raise GridError("bounds, resolution and periodic must have equal nonzero length")
        for axis, ((a, b), r) in enumerate(zip(bounds, resolution)):
            if r < MIN_RESOLUTION:
                raise GridError(f"axis {axis}: resolution {r} < {MIN_RESOLUTION}")
            if not b > a:
                raise GridError(f"axis {axis}: empty interval [{a}, {b}]")

    @classmethod
    def uniform(cls, bounds, resolution: int | Sequence[int], periodic=None) -> "ChartGrid":
        n = len(bounds)
        if isinstance(resolution, (int, np.integer)):
            resolution = (int(resolution),) * n
        if periodic is None:
            periodic = (False,) * n
        return cls(tuple(bounds), tuple(resolution), tuple(periodic))

    @property
    def dim(self) -> int:
        return len(self.resolution)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.resolution

    @property
    def size(self) -> int:
        return int(np.prod(self.resolution))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(
            (b - a) / (r if p else r - 1)
            for (a, b), r, p in zip(self.bounds, self.resolution, self.periodic)
        )

    @property
    def h(self) -> float:
        """Largest spacing; the length scale of every c*h**2 tolerance."""
        return max(self.spacing)

    def coords(self, axis: int) -> np.ndarray:
        a, _ = self.bounds[axis]
        return a + self.spacing[axis] * np.arange(self.resolution[axis])

    def mesh(self) -> np.ndarray:
        """Coordinates of every node, shape ``grid.shape + (dim,)``."""
        axes = np.meshgrid(*[self.coords(i) for i in range(self.dim)], indexing="ij")
        return np.stack(axes, axis=-1)

    def node_coords(self, node: Node) -> np.ndarray:
        return np.array([self.coords(i)[k] for i, k in enumerate(node)])

    def center(self) -> Node:
        return tuple(r // 2 for r in self.resolution)

    def ravel(self, node: Node) -> int:
        return int(np.ravel_multi_index(node, self.shape))

    def unravel(self, index: int) -> Node:
        return tuple(int(i) for i in np.unravel_index(index, self.shape))

    def check_node(self, node: Sequence[int]) -> Node:
        node = tuple(int(k) for k in node)
        if len(node) != self.dim or any(not 0 <= k < r for k, r in zip(node, self.resolution)):
            raise GridError(f"node {node} outside grid of shape {self.shape}")
        return node

    def refine(self) -> "ChartGrid":
        """Grid with every spacing halved over the same chart."""
        res = tuple(2 * r if p else 2 * r - 1 for r, p in zip(self.resolution, self.periodic))
        return ChartGrid(self.bounds, res, self.periodic)

    def interior_mask(self, margin: int = RESIDUAL_MARGIN) -> np.ndarray:
        mask = np.ones(self.shape, dtype=bool)
        for axis, (r, p) in enumerate(zip(self.resolution, self.periodic)):
            if p or margin <= 0:
                continue
            m = min(margin, (r - 1) // 2)
            sl = [slice(None)] * self.dim
            sl[axis] = slice(0, m)
            mask[tuple(sl)] = False
            sl[axis] = slice(r - m, r)
            mask[tuple(sl)] = False
        return mask

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "bounds": [list(b) for b in self.bounds],
            "resolution": list(self.resolution),
            "periodic": list(self.periodic),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChartGrid":
        grid = cls(
            tuple(tuple(b) for b in d["bounds"]),
            tuple(d["resolution"]),
            tuple(d.get("periodic", [False] * len(d["bounds"]))),
        )
        if "dim" in d and int(d["dim"]) != grid.dim:
            raise GridError(f"grid dim {d['dim']} does not match {grid.dim} bounds")
        return grid


@dataclass(frozen=True)
class GridField:
    grid: ChartGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape[: self.grid.dim] != self.grid.shape:
            raise GridError(
                f"field leading shape {values.shape[: self.grid.dim]} != grid shape {self.grid.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise GridError("field contains non-finite values")
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape[self.grid.dim:]

    def at(self, node: Node) -> np.ndarray:
        return self.values[tuple(node)]


def diff(values: np.ndarray, grid: ChartGrid, axis: int) -> np.ndarray:
    """Second-order derivative of node data along one chart axis."""
    if not 0 <= axis < grid.dim:
        raise GridError(f"axis {axis} out of range for {grid.dim}-dimensional grid")
    h = grid.spacing[axis]
    if grid.periodic[axis]:
        return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2.0 * h)
    return np.gradient(values, h, axis=axis, edge_order=2)


def partial(field: GridField, axis: int) -> GridField:
    return GridField(field.grid, diff(field.values, field.grid, axis))


def grad(values: np.ndarray, grid: ChartGrid) -> np.ndarray:
    """All first partials; the derivative index is inserted after the grid axes."""
    return np.stack([diff(values, grid, i) for i in range(grid.dim)], axis=grid.dim)


def sup(values: np.ndarray, grid: ChartGrid, margin: int = RESIDUAL_MARGIN) -> float:
    """Sup-norm over the trusted interior of the grid."""
    a = np.abs(np.asarray(values))
    a = a.reshape(grid.shape + (-1,)) if a.ndim > grid.dim else a.reshape(grid.shape + (1,))
    return float(a[grid.interior_mask(margin)].max(initial=0.0))


def node_sup(values: np.ndarray, grid: ChartGrid) -> np.ndarray:
    """Per-node max-abs over the tensor axes (for field dumps)."""
    a = np.abs(np.asarray(values))
    return a.reshape(grid.shape + (-1,)).max(axis=-1)


def _step(grid: ChartGrid, a: Node, b: Node) -> tuple[int, int]:
    """Return (axis, +1/-1) for a unit grid step a -> b, wrapping periodic axes."""
    moved = [i for i in range(grid.dim) if a[i] != b[i]]
    if len(moved) != 1:
        raise GridError(f"nodes {a} and {b} are not grid neighbours")
    i = moved[0]
    d = b[i] - a[i]
    r = grid.resolution[i]
    if grid.periodic[i] and abs(d) == r - 1:
        d = -int(np.sign(d))
    if abs(d) != 1:
        raise GridError(f"nodes {a} and {b} are not grid neighbours")
    return i, d


def _edge_increment(rhs: EdgeRHS, a: Node, b: Node, axis: int, sign: int, h: float) -> np.ndarray:
    # classical RK4 with midpoint rates linearly interpolated between endpoints
    k1 = np.asarray(rhs(a, axis), dtype=float)
    k4 = np.asarray(rhs(b, axis), dtype=float)
    k2 = k3 = 0.5 * (k1 + k4)
    return sign * h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def line_integrate(rhs: EdgeRHS, base_value, path: Sequence[Node], grid: ChartGrid) -> np.ndarray:
    """Integrate ``d value / d x_axis = rhs(node, axis)`` along a grid path."""
    value = np.array(base_value, dtype=float)
    nodes = [tuple(int(k) for k in p) for p in path]
    for a, b in zip(nodes[:-1], nodes[1:]):
        axis, sign = _step(grid, a, b)
        value = value + _edge_increment(rhs, a, b, axis, sign, grid.spacing[axis])
    return value


def loop_residual(rhs: EdgeRHS, base_value, loop: Sequence[Node], grid: ChartGrid) -> float:
    nodes = [tuple(int(k) for k in p) for p in loop]
    if len(nodes) < 2 or nodes[0] != nodes[-1]:
        raise GridError("loop is not closed")
    base = np.asarray(base_value, dtype=float)
    end = line_integrate(rhs, base, nodes, grid)
    return float(np.linalg.norm(end - base) / max(1.0, np.linalg.norm(base)))


def rectangle_loop(corner: Node, axes: tuple[int, int], sizes: tuple[int, int] = (1, 1)) -> list[Node]:
    """Counter-clockwise closed node list around an axis-aligned rectangle."""
    i, j = axes
    path = [tuple(corner)]

    def walk(axis, count, sign):
        for _ in range(count):
            node = list(path[-1])
            node[axis] += sign
            path.append(tuple(node))

    walk(i, sizes[0], 1)
    walk(j, sizes[1], 1)
    walk(i, sizes[0], -1)
    walk(j, sizes[1], -1)
    return path


def field_rhs(rates: np.ndarray, grid: ChartGrid) -> EdgeRHS:
    """Edge provider backed by node data of shape ``grid.shape + (dim,) + shape``."""

    def rhs(node: Node, axis: int) -> np.ndarray:
        return rates[tuple(node) + (axis,)]

    return rhs


def _cumulative_from(line_rates: np.ndarray, axis: int, start: int, h: float) -> np.ndarray:
    """Integral from index ``start`` to every index along ``axis`` (edge rule as above)."""
    r = np.moveaxis(line_rates, axis, 0)
    inc = 0.5 * h * (r[1:] + r[:-1])
    out = np.zeros_like(r)
    if start + 1 < r.shape[0]:
        out[start + 1:] = np.cumsum(inc[start:], axis=0)
    if start > 0:
        out[:start] = -np.cumsum(inc[:start][::-1], axis=0)[::-1]
    return np.moveaxis(out, 0, axis)


def sweep_integrate(rates: np.ndarray, grid: ChartGrid, base: Node, order: Sequence[int] | None = None,
                    base_value=None) -> np.ndarray:
    """Integrate a gradient field over the whole grid with an axis-ordered sweep.

    The first axis in ``order`` is integrated along the line through ``base``;
    each later axis extends every already-reached node along its own line.
    Periodic seams are never crossed.
    """
    n = grid.dim
    order = list(range(n)) if order is None else list(order)
    if sorted(order) != list(range(n)):
        raise GridError(f"sweep order {order} is not a permutation of the axes")
    base = grid.check_node(base)
    tshape = rates.shape[n + 1:]
    out = np.zeros(grid.shape + tshape)
    if base_value is not None:
        out[...] = np.asarray(base_value, dtype=float)
    done: list[int] = []
    for axis in order:
        # restrict to nodes whose not-yet-swept axes sit at the base index
        sl = tuple(slice(None) if (k in done or k == axis) else slice(base[k], base[k] + 1) for k in range(n))
        line = np.take(rates[sl], axis, axis=n)
        start_sl = tuple(slice(base[axis], base[axis] + 1) if k == axis else slice(None) for k in range(n))
        start_vals = out[sl][start_sl]
        out[sl] = start_vals + _cumulative_from(line, axis, base[axis], grid.spacing[axis])
        done.append(axis)
    return out
