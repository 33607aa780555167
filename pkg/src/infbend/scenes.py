"""Catalog of closed-form immersions, bendings and pairs, plus the scene-file format.

Tokens name catalog entries on the command line: ``id`` followed by
colon-separated positional parameters, e.g. ``plane:2:4``, ``circle_fourier:2``,
``killing:rot``, ``product:sphere,sphere``.  Anything ending in ``.json`` is
read as a scene file instead.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .bending import AssociatedPair, BendingField, associated_pair
from .geometry import FramedGeometry, ImmersionScene, build_geometry
from .numgrid import ChartGrid, GridError
from .products import Factor, ProductStructure, extrinsic_product

TWO_PI = 2.0 * np.pi


class CatalogError(ValueError):
    pass


# immersions


@dataclass(frozen=True)
class SceneEntry:
    dim: Callable[[dict], int]
    bounds: Callable[[dict], list]
    periodic: Callable[[dict], list]
    build: Callable[[np.ndarray, dict], np.ndarray]
    meta: Callable[[dict], dict]
    defaults: dict
    resolution: int


def _plane_map(X, prm):
    n, m = prm["n"], prm["m"]
    out = np.zeros(X.shape[:-1] + (m,))
    out[..., :n] = X
    return out


def _cylinder_map(X, prm):
    th, z = X[..., 0], X[..., 1]
    cols = [np.cos(th), np.sin(th), z] + [np.zeros_like(th)] * (prm.get("extra", 0))
    return np.stack(cols, -1)


def _circle_map(X, prm):
    th = X[..., 0]
    return prm["r"] * np.stack([np.cos(th), np.sin(th)], -1)


def _torus_map(X, prm):
    u, v = X[..., 0], X[..., 1]
    return np.stack([np.cos(u), np.sin(u), np.cos(v), np.sin(v)], -1)


def _sphere_map(X, prm):
    th, ph = X[..., 0], X[..., 1]
    r = prm["r"]
    return r * np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], -1)


def _graph_map(X, prm):
    u, v = X[..., 0], X[..., 1]
    c = prm["c"]
    kind = prm["kind"]
    if kind == "saddle":
        h = c * (u**2 - v**2)
    elif kind == "bowl":
        h = 0.5 * c * (u**2 + v**2)
    elif kind == "wave":
        h = c * np.sin(u) * np.cos(v)
    else:
        raise CatalogError(f"unknown graph kind {kind!r} (saddle, bowl, wave)")
    return np.stack([u, v, h], -1)


def _line_map(X, prm):
    out = np.zeros(X.shape[:-1] + (prm.get("m", 1),))
    out[..., 0] = X[..., 0]
    return out


SCENES: dict[str, SceneEntry] = {
    "plane": SceneEntry(lambda p: p["n"], lambda p: [(-1.0, 1.0)] * p["n"], lambda p: [False] * p["n"],
                        _plane_map, lambda p: {}, {"n": 2, "m": 3}, 32),
    "cylinder": SceneEntry(lambda p: 2, lambda p: [(0.0, TWO_PI), (0.0, 1.0)], lambda p: [True, False],
                           _cylinder_map, lambda p: {"circles": [(0, (0, 1), 1.0)]}, {}, 64),
    "cylinder_r4": SceneEntry(lambda p: 2, lambda p: [(0.0, TWO_PI), (0.0, 1.0)], lambda p: [True, False],
                              lambda X, p: _cylinder_map(X, {"extra": 1}),
                              lambda p: {"circles": [(0, (0, 1), 1.0)], "flat_normal": [0.0, 0.0, 0.0, 1.0]},
                              {}, 64),
    "circle": SceneEntry(lambda p: 1, lambda p: [(0.0, TWO_PI)], lambda p: [True], _circle_map,
                         lambda p: {"circles": [(0, (0, 1), p["r"])]}, {"r": 1.0}, 128),
    "torus": SceneEntry(lambda p: 2, lambda p: [(0.0, TWO_PI)] * 2, lambda p: [True, True], _torus_map,
                        lambda p: {"circles": [(0, (0, 1), 1.0), (1, (2, 3), 1.0)]}, {}, 32),
    "sphere": SceneEntry(lambda p: 2, lambda p: [(np.pi / 4, 3 * np.pi / 4), (0.0, TWO_PI)],
                         lambda p: [False, True], _sphere_map, lambda p: {}, {"r": 1.0}, 32),
    "graph": SceneEntry(lambda p: 2, lambda p: [(-1.0, 1.0)] * 2, lambda p: [False, False], _graph_map,
                        lambda p: {}, {"kind": "saddle", "c": 0.5}, 32),
}

FACTOR_ONLY = {"line"}
PRODUCT_RESOLUTION = 12

_PARAM_ORDER = {"plane": ["n", "m"], "circle": ["r"], "sphere": ["r"], "graph": ["kind", "c"]}


@dataclass(frozen=True)
class Token:
    id: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        return ":".join((self.id,) + self.args)


def parse_token(text: str) -> Token:
    text = text.strip()
    if not text:
        raise CatalogError("empty catalog token")
    parts = text.split(":")
    return Token(parts[0], tuple(parts[1:]))


def _coerce(value: str):
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


def scene_params(sid: str, args=(), params: dict | None = None) -> dict:
    if sid not in SCENES:
        raise CatalogError(f"unknown scene {sid!r}; known: {', '.join(sorted(SCENES) + ['product'])}")
    prm = dict(SCENES[sid].defaults)
    names = _PARAM_ORDER.get(sid, [])
    if len(args) > len(names):
        raise CatalogError(f"scene {sid!r} takes at most {len(names)} parameters, got {len(args)}")
    for name, val in zip(names, args):
        prm[name] = _coerce(val)
    prm.update(params or {})
    if sid == "plane":
        if not (isinstance(prm["n"], int) and isinstance(prm["m"], int)) or not 1 <= prm["n"] < prm["m"]:
            raise CatalogError(f"plane needs integers 1 <= n < m, got n={prm['n']}, m={prm['m']}")
    if sid in ("circle", "sphere"):
        if not isinstance(prm["r"], (int, float)) or prm["r"] <= 0:
            raise CatalogError(f"{sid} radius must be positive, got {prm['r']!r}")
        prm["r"] = float(prm["r"])
    if sid == "graph":
        if not isinstance(prm["c"], (int, float)):
            raise CatalogError(f"graph coefficient must be a number, got {prm['c']!r}")
        prm["c"] = float(prm["c"])
    return prm


def _grid_for(dim: int, bounds, periodic, resolution, chart) -> ChartGrid:
    if chart is not None:
        chart = [tuple(map(float, c)) for c in chart]
        if len(chart) != dim:
            raise CatalogError(f"chart has {len(chart)} intervals, scene dimension is {dim}")
        bounds, periodic = chart, [False] * dim
    if isinstance(resolution, (list, tuple)):
        if len(resolution) != dim:
            raise CatalogError(f"resolution has {len(resolution)} entries, scene dimension is {dim}")
    try:
        return ChartGrid.uniform(bounds, resolution, periodic)
    except GridError as exc:
        raise CatalogError(str(exc)) from exc


def default_resolution(token: str | Token) -> int:
    tok = parse_token(token) if isinstance(token, str) else token
    if tok.id == "product":
        return PRODUCT_RESOLUTION
    entry = SCENES.get(tok.id)
    return entry.resolution if entry else 32


def make_scene(token: str | Token, resolution=None, chart=None, params: dict | None = None) -> ImmersionScene:
    tok = parse_token(token) if isinstance(token, str) else token
    if tok.id == "product":
        return make_product(tok, resolution, chart)[0]
    prm = scene_params(tok.id, tok.args, params)
    entry = SCENES[tok.id]
    dim = entry.dim(prm)
    resolution = entry.resolution if resolution is None else resolution
    grid = _grid_for(dim, entry.bounds(prm), entry.periodic(prm), resolution, chart)
    meta = dict(entry.meta(prm))
    meta.update({"id": tok.id, "params": prm})
    return ImmersionScene(grid, entry.build(grid.mesh(), prm), str(tok), meta)


def make_factor(text: str, resolution=None, chart=None):
    tok = parse_token(text)
    if tok.id == "line":
        m = int(_coerce(tok.args[0])) if tok.args else 1
        if len(tok.args) > 1 or m < 1:
            raise CatalogError("line takes one optional ambient dimension >= 1")
        grid = _grid_for(1, [(0.0, 1.0)], [False], resolution or 32, chart)
        return Factor(grid, _line_map(grid.mesh(), {"m": m}), str(tok), {"id": "line", "circles": []})
    if tok.id == "product":
        raise CatalogError("nested products are not supported")
    return make_scene(tok, resolution, chart)


def make_product(token: str | Token, resolution=None, chart=None) -> tuple[ImmersionScene, ProductStructure]:
    tok = parse_token(token) if isinstance(token, str) else token
    if len(tok.args) != 1:
        raise CatalogError("product expects one comma-separated factor list, e.g. product:circle,circle")
    names = [s for s in tok.args[0].split(",") if s]
    if len(names) < 2:
        raise CatalogError("product needs at least two factors")
    res = PRODUCT_RESOLUTION if resolution is None else resolution
    factors = []
    offset = 0
    for name in names:
        sub_tok = parse_token(name.replace("/", ":"))
        if sub_tok.id == "line":
            dim = 1
        elif sub_tok.id in SCENES:
            dim = SCENES[sub_tok.id].dim(scene_params(sub_tok.id, sub_tok.args))
        else:
            raise CatalogError(f"unknown factor {sub_tok.id!r}")
        sub_chart = None if chart is None else chart[offset: offset + dim]
        factors.append(make_factor(name.replace("/", ":"), res, sub_chart))
        offset += dim
    if chart is not None and offset != len(chart):
        raise CatalogError(f"chart has {len(chart)} intervals, product dimension is {offset}")
    scene, structure = extrinsic_product(factors, label=str(tok))
    circles = []
    for k, f in enumerate(factors):
        a0 = structure.axis_blocks[k][0]
        m0 = structure.ambient_blocks[k][0]
        for ax, (b0, b1), r in f.meta.get("circles", []):
            circles.append((a0 + ax, (m0 + b0, m0 + b1), r))
    scene.meta.update({"id": "product", "factors": names, "circles": circles})
    return scene, structure


# bendings


def killing_generator(preset: str, m: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    D = np.zeros((m, m))
    v = np.zeros(m)
    if preset == "rot":
        D[0, 1], D[1, 0] = -1.0, 1.0
    elif preset == "mix":
        D[0, m - 1], D[m - 1, 0] = 1.0, -1.0
        D[1, 2 % m], D[2 % m, 1] = 0.5, -0.5
        v[:] = 0.25
    elif preset == "trans":
        v[:] = 1.0
    elif preset == "rand":
        rng = np.random.default_rng(seed)
        S = rng.standard_normal((m, m))
        D = 0.5 * (S - S.T)
        v = rng.standard_normal(m)
    else:
        raise CatalogError(f"unknown Killing preset {preset!r} (rot, mix, trans, rand)")
    return D, v


def killing_field(scene, D, v=None, label: str = "killing") -> BendingField:
    D = np.asarray(D, dtype=float)
    m = scene.m
    if D.shape != (m, m) or not np.allclose(D, -D.T, atol=1e-14):
        raise CatalogError(f"Killing generator must be a skew {m}x{m} matrix")
    v = np.zeros(m) if v is None else np.asarray(v, dtype=float)
    if v.shape != (m,):
        raise CatalogError(f"translation must have {m} components")
    return BendingField(scene.grid, scene.map @ D.T + v, label)


def fourier_profile(theta: np.ndarray, k: int) -> np.ndarray:
    """Closed-form antiderivative of cos(k t) (cos t, sin t), periodic for integer k >= 2."""
    a, b = k + 1, k - 1
    x = 0.5 * (np.sin(a * theta) / a + np.sin(b * theta) / b)
    y = 0.5 * (-np.cos(a * theta) / a + np.cos(b * theta) / b)
    return np.stack([x, y], -1)


def circle_fourier(scene, modes, amp: float = 1.0) -> BendingField:
    """Sum over circle factors of the mode-k plane-curve bending, constant along other axes.

    ``modes`` lists one k per circle of the scene (0 leaves that circle alone).
    """
    circles = scene.meta.get("circles", [])
    if not circles:
        raise CatalogError(f"scene {scene.label!r} has no circle factor for circle_fourier")
    modes = list(modes)
    if len(modes) > len(circles):
        raise CatalogError(f"{len(modes)} modes given, scene has {len(circles)} circle factor(s)")
    T = np.zeros(scene.map.shape)
    X = scene.grid.mesh()
    for (axis, (c0, c1), _r), k in zip(circles, modes):
        if k == 0:
            continue
        if not isinstance(k, int) or k < 2:
            raise CatalogError(f"circle_fourier mode must be an integer >= 2, got {k!r}")
        prof = fourier_profile(X[..., axis], k)
        T[..., c0] += amp * prof[..., 0]
        T[..., c1] += amp * prof[..., 1]
    return BendingField(scene.grid, T, "circle_fourier:" + ":".join(map(str, modes)))


def normal_field(scene, amp: float = 1.0, mode: str = "const") -> BendingField:
    """Multiple of a constant ambient vector orthogonal to the tangent spaces and to N_1."""
    w = scene.meta.get("flat_normal")
    if w is None:
        raise CatalogError(f"scene {scene.label!r} has no flat normal direction")
    X = scene.grid.mesh()
    if mode == "const":
        phi = np.ones(scene.grid.shape)
    elif mode == "wave":
        phi = np.sin(X[..., 0]) * np.cos(np.pi * X[..., 1])
    else:
        raise CatalogError(f"unknown normal_field mode {mode!r} (const, wave)")
    return BendingField(scene.grid, amp * phi[..., None] * np.asarray(w, dtype=float), f"normal_field:{amp}:{mode}")


def make_bending(token: str | Token, scene, seed: int = 0) -> BendingField:
    tok = parse_token(token) if isinstance(token, str) else token
    args = [_coerce(a) for a in tok.args]
    if tok.id == "killing":
        preset = args[0] if args else "rot"
        D, v = killing_generator(str(preset), scene.m, seed)
        return killing_field(scene, D, v, str(tok))
    if tok.id == "circle_fourier":
        modes = args or [2]
        return circle_fourier(scene, modes)
    if tok.id == "normal_field":
        amp = float(args[0]) if args else 1.0
        mode = str(args[1]) if len(args) > 1 else "const"
        return normal_field(scene, amp, mode)
    if tok.id == "zero":
        return BendingField(scene.grid, np.zeros(scene.map.shape), "zero")
    if tok.id == "radial":
        return BendingField(scene.grid, scene.map.copy(), "radial")
    raise CatalogError(f"unknown bending {tok.id!r} (killing, circle_fourier, normal_field, zero, radial)")


BENDINGS = {"killing", "circle_fourier", "normal_field", "zero", "radial"}
PAIRS = {"codazzi", "constant", "perturbed", "zero_pair"}


def codazzi_tensor(geom: FramedGeometry, which: str) -> np.ndarray:
    """Symmetric (0,2) tensors for the hypersurface pair: A (second fundamental form), identity (g), zero."""
    if which in ("A", "alpha"):
        return geom.alpha[..., 0].copy()
    if which in ("identity", "g", "I"):
        return geom.g.copy()
    if which == "zero":
        return np.zeros_like(geom.g)
    raise CatalogError(f"unknown Codazzi tensor {which!r} (A, identity, zero)")


def make_pair(token: str | Token, geom: FramedGeometry, seed: int = 0x5EED) -> AssociatedPair:
    """Catalog pairs.

    ``codazzi:<A|identity|zero>``   hypersurface pair of a symmetric tensor
    ``constant:c``                  beta_00 = c on a hypersurface (solves the system, not periodic)
    ``perturbed:<bending>[:sigma]`` pair of a catalog bending with symmetric noise added to beta
    ``zero_pair``
    """
    tok = parse_token(token) if isinstance(token, str) else token
    if tok.id == "codazzi":
        if geom.p != 1:
            raise CatalogError("codazzi pairs need a hypersurface scene")
        bhat = codazzi_tensor(geom, tok.args[0] if tok.args else "A")
        return AssociatedPair.from_coefficients(geom, bhat[..., None], np.zeros(geom.grid.shape + (geom.n, 1, 1)))
    if tok.id == "constant":
        if geom.p != 1:
            raise CatalogError("constant pairs need a hypersurface scene")
        c = float(tok.args[0]) if tok.args else 1.0
        beta = np.zeros(geom.grid.shape + (geom.n, geom.n, 1))
        beta[..., 0, 0, 0] = c
        return AssociatedPair.from_coefficients(geom, beta, np.zeros(geom.grid.shape + (geom.n, 1, 1)))
    if tok.id == "zero_pair":
        return AssociatedPair.zero(geom)
    if tok.id == "perturbed":
        if not tok.args:
            raise CatalogError("perturbed needs a bending, e.g. perturbed:circle_fourier/2")
        inner = tok.args[0].replace("/", ":")
        sigma = float(tok.args[1]) if len(tok.args) > 1 else 1e-2
        T = make_bending(inner, geom.scene)
        _, pair = associated_pair(geom, T)
        return perturb_beta(geom, pair, sigma, seed)
    raise CatalogError(f"unknown pair {tok.id!r} (codazzi, constant, perturbed, zero_pair)")


def perturb_beta(geom: FramedGeometry, pair: AssociatedPair, sigma: float = 1e-2, seed: int = 0x5EED):
    """Add symmetric Gaussian noise of standard deviation sigma to beta."""
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, pair.beta.shape)
    noise = 0.5 * (noise + np.swapaxes(noise, -2, -3))
    return AssociatedPair.from_coefficients(geom, pair.beta + noise, pair.E)


def variation(scene: ImmersionScene, T: BendingField, t: float) -> ImmersionScene:
    """The deformed immersion f + t T."""
    return ImmersionScene(scene.grid, scene.map + t * T.T, f"{scene.label}+{t}*{T.label}", dict(scene.meta))


# scene files


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _dump_array(a: np.ndarray) -> str:
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        return _fmt(a)
    return "[" + ",".join(_dump_array(x) for x in a) + "]"


def grid_to_dict(grid: ChartGrid) -> dict:
    return {"dim": grid.dim, "bounds": [list(b) for b in grid.bounds],
            "resolution": list(grid.resolution), "periodic": list(grid.periodic)}


def grid_from_dict(d: dict) -> ChartGrid:
    try:
        grid = ChartGrid(tuple(tuple(b) for b in d["bounds"]), tuple(d["resolution"]), tuple(d["periodic"]))
    except (KeyError, TypeError) as exc:
        raise CatalogError(f"malformed grid block: {exc}") from exc
    except GridError as exc:
        raise CatalogError(str(exc)) from exc
    if "dim" in d and d["dim"] != grid.dim:
        raise CatalogError(f"grid dim {d['dim']} disagrees with {grid.dim} bounds")
    return grid


def document(kind: str, grid: ChartGrid, **payload: np.ndarray) -> str:
    """Serialize node values (flattened row-major over nodes) as a scene file."""
    head = {"kind": kind, "grid": grid_to_dict(grid)}
    body = json.dumps(head)[:-1]
    parts = []
    for key, arr in payload.items():
        arr = np.asarray(arr, dtype=float).reshape((grid.size,) + np.asarray(arr).shape[grid.dim:])
        parts.append(f'"{key}": {_dump_array(arr)}')
    return body + ", " + ", ".join(parts) + "}\n"


def write_atomic(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_scene(scene: ImmersionScene) -> str:
    return document("scene", scene.grid, values=scene.map)


def dump_bending(T: BendingField) -> str:
    return document("bending", T.grid, values=T.T)


def dump_pair(grid: ChartGrid, pair: AssociatedPair) -> str:
    return document("pair", grid, beta=pair.beta, E=pair.E)


def read_document(path: str | os.PathLike) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise CatalogError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise CatalogError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from exc
    if not isinstance(doc, dict) or doc.get("kind") not in ("scene", "bending", "pair"):
        raise CatalogError(f"{path}: top-level 'kind' must be scene, bending or pair")
    if "grid" not in doc:
        raise CatalogError(f"{path}: missing 'grid'")
    return doc


def _node_array(doc: dict, key: str, grid: ChartGrid, tail: tuple[int, ...] | None = None) -> np.ndarray:
    if key not in doc:
        raise CatalogError(f"missing '{key}' array")
    try:
        arr = np.asarray(doc[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise CatalogError(f"'{key}' is not a numeric array") from exc
    if arr.shape[:1] != (grid.size,):
        raise CatalogError(f"'{key}' has {arr.shape[0] if arr.ndim else 0} nodes, grid has {grid.size}")
    if tail is not None and arr.shape[1:] != tail:
        raise CatalogError(f"'{key}' per-node shape {arr.shape[1:]} != expected {tail}")
    return arr.reshape(grid.shape + arr.shape[1:])


def scene_from_doc(doc: dict, source: str = "") -> ImmersionScene:
    if doc["kind"] != "scene":
        raise CatalogError(f"{source}: expected a scene file, got kind {doc['kind']!r}")
    grid = grid_from_dict(doc["grid"])
    if "catalog" in doc:
        cat = doc["catalog"]
        scene = make_scene(Token(cat["id"], ()), grid.resolution, None, cat.get("params"))
        if scene.grid != grid:
            scene = make_scene(Token(cat["id"], ()), grid.resolution, [list(b) for b in grid.bounds],
                               cat.get("params"))
        return scene
    values = _node_array(doc, "values", grid)
    if values.ndim != grid.dim + 1:
        raise CatalogError(f"{source}: scene values must be vectors per node")
    return ImmersionScene(grid, values, Path(source).stem if source else "file")


def load_scene(ref: str, resolution=None, chart=None) -> ImmersionScene:
    if ref.endswith(".json"):
        return scene_from_doc(read_document(ref), ref)
    return make_scene(ref, resolution, chart)


def load_bending(ref: str, scene, seed: int = 0) -> BendingField:
    if not ref.endswith(".json"):
        return make_bending(ref, scene, seed)
    doc = read_document(ref)
    if doc["kind"] != "bending":
        raise CatalogError(f"{ref}: expected a bending file, got kind {doc['kind']!r}")
    grid = grid_from_dict(doc["grid"])
    if grid != scene.grid:
        raise CatalogError(f"{ref}: bending grid does not match the scene grid")
    if "catalog" in doc:
        cat = doc["catalog"]
        args = tuple(str(a) for a in cat.get("params", []))
        return make_bending(Token(cat["id"], args), scene, seed)
    return BendingField(grid, _node_array(doc, "values", grid, (scene.m,)), Path(ref).stem)


def load_pair(ref: str, geom: FramedGeometry, seed: int = 0x5EED) -> AssociatedPair:
    if not ref.endswith(".json"):
        return make_pair(ref, geom, seed)
    doc = read_document(ref)
    if doc["kind"] != "pair":
        raise CatalogError(f"{ref}: expected a pair file, got kind {doc['kind']!r}")
    grid = grid_from_dict(doc["grid"])
    if grid != geom.grid:
        raise CatalogError(f"{ref}: pair grid does not match the scene grid")
    n, p = geom.n, geom.p
    beta = _node_array(doc, "beta", grid, (n, n, p))
    E = _node_array(doc, "E", grid, (n, p, p))
    return AssociatedPair.from_coefficients(geom, beta, E)


def file_kind(ref: str) -> str | None:
    """'bending' / 'pair' for files or catalog tokens, None if unknown."""
    if ref.endswith(".json"):
        return read_document(ref)["kind"]
    tok = parse_token(ref)
    if tok.id in BENDINGS:
        return "bending"
    if tok.id in PAIRS:
        return "pair"
    return None


def geometry_for(ref: str, resolution=None, chart=None) -> tuple[ImmersionScene, FramedGeometry]:
    scene = load_scene(ref, resolution, chart)
    return scene, build_geometry(scene)


def catalog_matrix() -> list[tuple[str, str]]:
    """(scene, bending-or-pair) tokens that are meaningful together."""
    return [
        ("cylinder", "killing:rot"), ("cylinder", "killing:trans"), ("cylinder", "circle_fourier:2"),
        ("cylinder", "circle_fourier:3"), ("cylinder", "codazzi:A"), ("cylinder", "zero"),
        ("cylinder_r4", "normal_field:1.0:const"), ("cylinder_r4", "normal_field:0.5:wave"),
        ("cylinder_r4", "killing:mix"), ("torus", "killing:mix"), ("torus", "circle_fourier:2:3"),
        ("circle", "circle_fourier:2"), ("sphere", "killing:rand"), ("sphere", "codazzi:A"),
        ("plane:2:3", "killing:rot"), ("graph", "killing:rand"), ("graph", "codazzi:zero"),
    ]

