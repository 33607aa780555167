"""Command-line interface.

Exit codes: 0 when every requested check passes, 1 when a check fails,
2 on bad input (unknown command, token, malformed file, precondition on the data).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Any

import numpy as np

from . import bending as bnd
from . import classify, fundsys, geometry, products, reconstruct, scenes
from .numgrid import GridError

log = logging.getLogger("infbend")

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


# report plumbing


class Report:
    def __init__(self, command: str):
        self.data: dict[str, Any] = {"command": command}
        self.fields: dict[str, np.ndarray] = {}
        self.grid = None
        self.checks: list[tuple[str, float, float]] = []

    def set(self, key: str, value) -> None:
        self.data[key] = value

    def check(self, name: str, value: float, tol: float) -> bool:
        ok = bool(value <= tol)
        self.checks.append((name, float(value), float(tol)))
        return ok

    @property
    def passed(self) -> bool:
        return all(v <= t for _, v, t in self.checks)

    def as_dict(self) -> dict:
        d = dict(self.data)
        d["checks"] = [{"name": n, "value": v, "tol": t, "margin": (v / t if t > 0 else None), "pass": v <= t}
                       for n, v, t in self.checks]
        d["pass"] = self.passed
        return d

    def text(self) -> str:
        lines = [f"command: {self.data['command']}"]
        for k, v in self.data.items():
            if k == "command":
                continue
            lines.append(f"{k}: {v}")
        for n, v, t in self.checks:
            verdict = "ok" if v <= t else "FAIL"
            lines.append(f"  {n:28s} {v:.3e}  tol {t:.3e}  [{verdict}]")
        lines.append("result: " + ("pass" if self.passed else "fail"))
        return "\n".join(lines)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def fields_csv(grid, fields: dict[str, np.ndarray]) -> str:
    names = list(fields)
    coords = grid.mesh().reshape(grid.size, grid.dim)
    cols = [np.asarray(fields[k]).reshape(grid.size) for k in names]
    head = ["node_index"] + [f"x{i}" for i in range(grid.dim)] + names
    rows = [",".join(head)]
    for k in range(grid.size):
        vals = [str(k)] + [format(c, ".17g") for c in coords[k]] + [format(c[k], ".17g") for c in cols]
        rows.append(",".join(vals))
    return "\n".join(rows) + "\n"


# argument helpers


def _resolution(text: str | None):
    if text is None:
        return None
    try:
        vals = [int(x) for x in text.split(",")]
    except ValueError as exc:
        raise InputError(f"bad --resolution {text!r}") from exc
    return vals[0] if len(vals) == 1 else vals


def _chart(text: str | None):
    if text is None:
        return None
    try:
        return [tuple(float(x) for x in part.split(":")) for part in text.split(",")]
    except ValueError as exc:
        raise InputError(f"bad --chart {text!r}; expected a:b,c:d") from exc


def _node(text: str | None):
    if text is None:
        return None
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError as exc:
        raise InputError(f"bad node {text!r}; expected i,j,...") from exc


def _scene(args):
    res = _resolution(args.resolution)
    return scenes.geometry_for(args.scene, res, _chart(args.chart))


def _tol(args, c: float, h: float, scale: float) -> float:
    return args.tol_scale * c * h**2 * scale


def _bending_or_pair(args, geom, ref: str):
    kind = scenes.file_kind(ref)
    if kind == "bending":
        return "bending", scenes.load_bending(ref, geom.scene, args.seed)
    if kind == "pair":
        return "pair", scenes.load_pair(ref, geom, args.seed)
    raise InputError(f"{ref!r} is neither a bending nor a pair")


def _pair_from_bending(args, rep: Report, geom, T, name="bending") -> tuple | None:
    res = bnd.bending_residual(geom, T)
    tol = args.tol_scale * bnd.bending_tolerance(geom, T)
    if not rep.check(f"{name}_residual", res, tol):
        return None
    return bnd.associated_pair(geom, T, check=False)


# commands


def cmd_sanity(args, rep: Report) -> None:
    scene, geom = _scene(args)
    rep.set("scene", scene.label)
    rep.set("h", geom.h)
    rep.set("frame", geom.frame_method)
    sr = geometry.structure_residuals(geom)
    tol = args.tol_scale * sr.tol()
    for key in ("gauss", "codazzi", "ricci"):
        rep.check(key, getattr(sr, key), tol)
    rep.fields = geometry.structure_residual_fields(geom)
    rep.grid = geom.grid


def _verify_pair(args, rep: Report, geom, pair) -> None:
    sysrep = fundsys.verify(geom, pair, c=args.tol_scale * fundsys.TOL_SYSTEM)
    for key in ("gauss", "codazzi", "codazzi2", "ricci", "anti"):
        rep.check(key, getattr(sysrep, key), sysrep.tol)
    rep.fields.update(fundsys.residual_fields(geom, pair))
    rep.grid = geom.grid


def cmd_verify(args, rep: Report) -> None:
    scene, geom = _scene(args)
    rep.set("scene", scene.label)
    rep.set("h", geom.h)
    kind, obj = _bending_or_pair(args, geom, args.target)
    rep.set("target", args.target)
    if kind == "bending":
        out = _pair_from_bending(args, rep, geom, obj)
        if out is None:
            return
        derived, pair = out
        L = derived.L
        tol10 = _tol(args, 10.0, geom.h, bnd.bending_scale(geom, L))
        rep.check("tangential_identity", bnd.tangential_identity_residual(geom, derived, pair), tol10)
        rep.check("b_symmetry", bnd.beta_symmetry_residual(pair, geom.grid), tol10)
        _verify_pair(args, rep, geom, pair)
        return
    tok = scenes.parse_token(args.target) if not args.target.endswith(".json") else None
    if tok is not None and tok.id == "codazzi":
        hp = fundsys.hypersurface_pair(geom, obj.beta[..., 0], c=args.tol_scale * fundsys.TOL_SYSTEM, strict=False)
        rep.check("wedge", hp.wedge, hp.tol)
        rep.check("tensor_codazzi", hp.codazzi, hp.tol)
    _verify_pair(args, rep, geom, obj)


def cmd_reconstruct(args, rep: Report) -> None:
    scene, geom = _scene(args)
    rep.set("scene", scene.label)
    rep.set("h", geom.h)
    kind, obj = _bending_or_pair(args, geom, args.target)
    if kind == "bending":
        out = _pair_from_bending(args, rep, geom, obj)
        if out is None:
            return
        pair = out[1]
    else:
        pair = obj
    base = _node(args.base)
    try:
        T, D, rr = reconstruct.reconstruct(geom, pair, base=base, tol_scale=args.tol_scale, check=False)
    except reconstruct.HolonomyError as exc:
        rep.set("error", str(exc))
        rep.check("periodic_holonomy", float("inf"), 0.0)
        return
    rep.set("base", list(D.base))
    sysrep = fundsys.verify(geom, pair, c=args.tol_scale * fundsys.TOL_SYSTEM)
    rep.check("system", max(sysrep.gauss, sysrep.codazzi, sysrep.codazzi2, sysrep.ricci, sysrep.anti), sysrep.tol)
    rep.check("skewness", rr.skewness, rr.tol_skew)
    rep.check("cell_loop", rr.cell_loop, rr.tol_loop)
    rep.check("path_independence", rr.path_independence, rr.tol_path)
    rep.check("periodic_holonomy", rr.periodic_holonomy, rr.tol_loop)
    rep.check("bending_residual", rr.bending, rr.tol_loop)
    if kind == "bending":
        try:
            fit = classify.fit_killing(scene.map, T.T - obj.T)
            rep.check("round_trip_killing_fit", fit.residual, _tol(args, 50.0, geom.h, rr.scale))
        except classify.ClassifyError as exc:
            rep.set("round_trip", str(exc))
    if args.out:
        scenes.write_atomic(args.out, scenes.dump_bending(T))
        rep.set("written", args.out)


def cmd_classify(args, rep: Report) -> None:
    scene, geom = _scene(args)
    rep.set("scene", scene.label)
    rep.set("h", geom.h)
    kind, obj = _bending_or_pair(args, geom, args.target)
    tol_c = args.tol_scale * classify.TOL_TRIVIAL
    if kind == "bending":
        out = _pair_from_bending(args, rep, geom, obj)
        if out is None:
            return
        pair = out[1]
        try:
            fit = classify.fit_killing(scene.map, obj)
            tol = tol_c * geom.h**2
            verdict, margin = fit.verdict(tol)
            rep.set("killing_fit", {"residual": fit.residual, "tol": tol, "verdict": verdict, "margin": margin,
                                    "D": fit.D, "v": fit.v})
        except classify.ClassifyError as exc:
            rep.set("killing_fit", {"error": str(exc)})
    else:
        pair = obj
    pt = classify.pair_triviality(geom, pair, c=tol_c)
    rep.set("pair_triviality", {"res_beta": pt.res_beta, "res_E": pt.res_E, "tol": pt.tol,
                                "verdict": pt.verdict, "margin": pt.margin, "degenerate": pt.degenerate})
    rep.set("verdict", pt.verdict)


def cmd_snullity(args, rep: Report) -> None:
    scene, geom = _scene(args)
    rep.set("scene", scene.label)
    nodes = None
    if args.nodes:
        nodes = [_node(t) for t in args.nodes.split(";") if t]
    svals = [args.s] if args.s else list(range(1, geom.p + 1))
    if nodes is None and not args.full_grid:
        nodes = products.sample_nodes(geom.grid)
    elif args.full_grid:
        mask = geom.grid.interior_mask()
        nodes = [geom.grid.unravel(int(k)) for k in np.flatnonzero(mask.ravel())]
    out = {}
    for s in svals:
        if not 1 <= s <= geom.p:
            raise InputError(f"--s {s} out of range 1..{geom.p}")
        best = None
        for nd in nodes:
            r = products.s_nullity(geom, nd, s, samples=args.samples, seed=args.seed)
            if best is None or r.nullity > best.nullity:
                best, where = r, nd
        out[str(s)] = {"nullity": best.nullity, "node": list(where), "exact": best.exact,
                       "subspace": best.subspace}
    rep.set("nodes", len(nodes))
    rep.set("s_nullity", out)


def cmd_product(args, rep: Report) -> None:
    res = _resolution(args.resolution)
    token = "product:" + ",".join(f.replace(":", "/") for f in args.factors)
    scene, structure = scenes.make_product(token, res, _chart(args.chart))
    geom = geometry.build_geometry(scene)
    rep.set("scene", scene.label)
    rep.set("h", geom.h)
    T = scenes.load_bending(args.target, scene, args.seed)
    out = _pair_from_bending(args, rep, geom, T)
    hyp = products.product_hypotheses(geom, structure, samples=args.samples, seed=args.seed,
                                      full_grid=args.full_grid)
    rep.set("hypotheses", hyp.to_dict())
    rep.set("cross_alpha", products.cross_alpha(geom, structure))
    if out is None:
        return
    pair = out[1]
    L = out[0].L
    tol10 = _tol(args, products.TOL_ADAPTED, geom.h, max(bnd.bending_scale(geom, L), pair.norm()))
    rep.check("adaptedness", products.adaptedness_residual(geom, pair, structure), tol10)
    if not rep.passed:
        return
    try:
        sp = products.split_bending(geom, structure, T, pair, tol_scale=args.tol_scale)
    except products.ProductError as exc:
        rep.set("split_error", str(exc))
        rep.check("split", float("inf"), 0.0)
        return
    rep.check("split_constancy", sp.constancy, sp.tol)
    for k, r in enumerate(sp.factor_bending):
        rep.check(f"factor_{k + 1}_bending", r, sp.tol)
    summed = products.direct_sum(sp.factors, structure, scene.grid)
    try:
        fit = classify.fit_killing(scene.map, T.T - summed.T)
        rep.check("reassembly_killing_fit", fit.residual, sp.tol)
    except classify.ClassifyError as exc:
        rep.set("reassembly", str(exc))


def cmd_solve_e(args, rep: Report) -> None:
    scene, geom = _scene(args)
    rep.set("scene", scene.label)
    rep.set("h", geom.h)
    kind, obj = _bending_or_pair(args, geom, args.target)
    if kind == "bending":
        out = _pair_from_bending(args, rep, geom, obj)
        if out is None:
            return
        pair = out[1]
    else:
        pair = obj
    try:
        E = classify.solve_E_from_beta(geom, pair.beta)
    except classify.ClassifyError as exc:
        raise InputError(str(exc)) from exc
    solved = bnd.AssociatedPair.from_coefficients(geom, pair.beta, E)
    scale = max(1.0, geom.alpha_norm(), pair.norm())
    rep.check("E_difference", float(np.abs(E - pair.E)[geom.grid.interior_mask()].max(initial=0.0)),
              _tol(args, 50.0, geom.h, scale))
    _verify_pair(args, rep, geom, solved)
    if args.out:
        scenes.write_atomic(args.out, scenes.dump_pair(geom.grid, solved))
        rep.set("written", args.out)


def cmd_export(args, rep: Report) -> None:
    scene, geom = _scene(args)
    rep.set("scene", scene.label)
    if not args.out:
        raise InputError("export needs --out")
    if args.target is None:
        text = scenes.dump_scene(scene)
        what = "scene"
    else:
        kind, obj = _bending_or_pair(args, geom, args.target)
        if kind == "bending" and args.t is not None:
            text = scenes.dump_scene(scenes.variation(scene, obj, args.t))
            what = "variation"
        elif kind == "bending":
            text = scenes.dump_bending(obj)
            what = "bending"
        else:
            text = scenes.dump_pair(geom.grid, obj)
            what = "pair"
    scenes.write_atomic(args.out, text)
    rep.set("exported", what)
    rep.set("written", args.out)


COMMANDS = {
    "sanity": cmd_sanity, "verify": cmd_verify, "reconstruct": cmd_reconstruct, "classify": cmd_classify,
    "snullity": cmd_snullity, "product": cmd_product, "solve-e": cmd_solve_e, "export": cmd_export,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--resolution", help="nodes per axis (int or comma list)")
    common.add_argument("--chart", help="non-periodic sub-chart bounds, e.g. 0.2:1.0,0:0.8")
    common.add_argument("--tol-scale", type=float, default=1.0, help="multiplies every tolerance constant")
    common.add_argument("--seed", type=lambda s: int(s, 0), default=classify.DEFAULT_SEED)
    common.add_argument("--report", help="write the report to this path")
    common.add_argument("--fields", help="write residual fields as CSV")
    common.add_argument("--json", action="store_true", help="machine-readable report")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="infbend", description="Infinitesimal bendings of sampled submanifolds.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sanity", parents=[common], help="structure equations of the immersion")
    s.add_argument("scene")
    for name, hlp in (("verify", "bending condition and fundamental system"),
                      ("classify", "triviality of a bending or pair"),
                      ("solve-e", "recover E from beta (full first normal space)")):
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("scene")
        s.add_argument("target")
        if name == "solve-e":
            s.add_argument("--out")
    s = sub.add_parser("reconstruct", parents=[common], help="integrate a pair back to a bending")
    s.add_argument("scene")
    s.add_argument("target")
    s.add_argument("--base", help="base node i,j,...")
    s.add_argument("--out", help="write the reconstructed bending")
    s = sub.add_parser("snullity", parents=[common], help="s-nullities at sample nodes")
    s.add_argument("scene")
    s.add_argument("--s", type=int)
    s.add_argument("--nodes", help="semicolon-separated nodes, e.g. '3,3;5,7'")
    s.add_argument("--samples", type=int, default=products.DEFAULT_SAMPLES)
    s.add_argument("--full-grid", action="store_true")
    s = sub.add_parser("product", parents=[common], help="extrinsic product, hypotheses and splitting")
    s.add_argument("factors", nargs="+")
    s.add_argument("target")
    s.add_argument("--samples", type=int, default=products.DEFAULT_SAMPLES)
    s.add_argument("--full-grid", action="store_true")
    s = sub.add_parser("export", parents=[common], help="write a scene, bending or pair file")
    s.add_argument("scene")
    s.add_argument("target", nargs="?")
    s.add_argument("--out")
    s.add_argument("--t", type=float, help="export the variation f + t T instead of T")
    return p


INPUT_ERRORS = (InputError, scenes.CatalogError, GridError, geometry.GeometryError, bnd.BendingError,
                classify.ClassifyError, products.ProductError, fundsys.FundamentalSystemError, reconstruct.ReconstructError)


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_INPUT
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    rep = Report(args.command)
    try:
        COMMANDS[args.command](args, rep)
    except INPUT_ERRORS as exc:
        print(f"infbend: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.json:
        text = json.dumps(_jsonable(rep.as_dict()), indent=2) + "\n"
    else:
        text = rep.text() + "\n"
    stdout.write(text)
    if args.report:
        scenes.write_atomic(args.report, text)
    if args.fields and rep.fields and rep.grid is not None:
        scenes.write_atomic(args.fields, fields_csv(rep.grid, rep.fields))
    return EXIT_OK if rep.passed else EXIT_FAIL


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
