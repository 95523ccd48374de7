"""Command line entry point: ``pseudospec COMMAND MATRIX [options]``.

Commands write their artifacts into ``--out`` (default: current directory)
and print a short summary.  Exit status is 0 on success, 2 when the
arguments or the matrix file cannot be parsed and 3 on a numerical failure.
"""
from __future__ import annotations

import argparse
import ast
import json
import math
import operator
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._validation import Box, check_grid, check_region
from .blocks import default_zero_tol
from .exceptions import MalformedMatrix, NotNormal, PseudospectraError
from .faults import (FaultSet, Line, SinglePoint, Voronoi, essential_fault_small,
                     fault_scan, voronoi_faults)
from .field import SigmaField, surface_profile
from .io import matrix_to_json, parse_matrix
from .linalg import schur_decompose
from .singular import classify_singular_points, critical_deltas
from .svg import emit_svg
from .tracer import default_region, trace_boundary

SCHEMA = 1

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_FUNCS = {"sqrt": math.sqrt, "exp": math.exp, "log": math.log}
_CONSTS = {"pi": math.pi, "e": math.e}


def real_expression(text: str) -> float:
    """Evaluate ``2/5``, ``sqrt((3-sqrt(5))/2)``, ``(48-8*sqrt(5))/31`` and the like."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords:
            return _FUNCS[node.func.id](ev(node.args[0]))
        if isinstance(node, ast.Name) and node.id in _CONSTS:
            return _CONSTS[node.id]
        raise ValueError
    try:
        val = ev(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError, OverflowError, TypeError):
        raise argparse.ArgumentTypeError(f"not a real number or expression: {text!r}") from None
    if not math.isfinite(val):
        raise argparse.ArgumentTypeError(f"not finite: {text!r}")
    return val


def _positive(text: str) -> float:
    v = real_expression(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pseudospec",
                                     description="Pseudospectral boundaries and fault points.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("matrix", help="matrix file (text or JSON format)")
    common.add_argument("--delta", type=_positive, action="append", default=[],
                        help="level; repeat for several; accepts expressions such as 'sqrt(5)/4'")
    common.add_argument("--region", type=real_expression, nargs=4,
                        metavar=("X0", "Y0", "X1", "Y1"))
    common.add_argument("--grid", type=int, nargs=2, metavar=("NX", "NY"), default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path, default=Path("."), metavar="DIR")
    common.add_argument("--zero-tol", type=_positive, default=None)
    common.add_argument("--fault-tol", type=_positive, default=None)
    common.add_argument("--level-tol", type=_positive, default=None)
    common.add_argument("--grad-tol", type=_positive, default=None)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    sub.add_parser("blocks", parents=[common], help="Schur form and block decomposition")
    sub.add_parser("faults", parents=[common], help="fault set samples and analytic descriptors")
    sub.add_parser("trace", parents=[common], help="boundary curves, one CSV per delta")
    sub.add_parser("classify", parents=[common], help="singular points of the boundaries")
    sw = sub.add_parser("sweep", parents=[common], help="critical deltas by component counting")
    sw.add_argument("--range", type=_positive, nargs=2, metavar=("LO", "HI"), required=True)
    sub.add_parser("render", parents=[common], help="SVG of boundaries, faults and spectrum")
    return parser


# serialisation helpers -------------------------------------------------------

def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _cplx(z) -> list:
    return [_num(z.real), _num(z.imag)]


def _descriptor(d) -> dict:
    if d is None:
        return {"kind": "none"}
    if isinstance(d, Line):
        return {"kind": d.kind, "point": _cplx(d.point), "direction": _cplx(d.direction)}
    if isinstance(d, SinglePoint):
        return {"kind": d.kind, "point": _cplx(d.lam)}
    if isinstance(d, Voronoi):
        return {"kind": d.kind, "sites": [_cplx(s) for s in d.sites],
                "edges": [{"p": _cplx(p), "q": _cplx(q), "sites": [int(i), int(j)]}
                          for p, q, i, j in d.edges]}
    out = {"kind": d.kind}
    for name in ("alpha", "beta"):
        if hasattr(d, name):
            out[name] = _cplx(getattr(d, name))
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, allow_nan=False) + "\n", encoding="utf-8")


def _g(x) -> str:
    return repr(float(x))


# command bodies ---------------------------------------------------------------

class _Run:
    def __init__(self, args, a):
        self.args = args
        self.a = a
        self.field = SigmaField(a, zero_tol=args.zero_tol)
        self.deltas = sorted(set(args.delta))
        self.out = args.out
        self.out.mkdir(parents=True, exist_ok=True)
        self.written: list[Path] = []

    @property
    def region(self) -> Box:
        if self.args.region is not None:
            return check_region(self.args.region)
        return default_region(self.a, max(self.deltas, default=1.0), field=self.field)

    def grid(self, default):
        return check_grid(self.args.grid) if self.args.grid is not None else default

    def header(self, command, **extra) -> dict:
        args = self.args
        s = self.field.decomposition
        schur_zero = args.zero_tol
        if schur_zero is None:
            schur_zero = default_zero_tol(schur_decompose(self.a).s)
        head = {
            "schema": SCHEMA,
            "command": command,
            "matrix": matrix_to_json(self.a),
            "deltas": [_num(d) for d in self.deltas],
            "seed": args.seed,
            "tolerances": {
                "zero_tol": _num(schur_zero),
                "fault_tol": _num(args.fault_tol) if args.fault_tol else "1e-08*(1+s_n)",
                "level_tol": _num(args.level_tol) if args.level_tol else "1e-08*(1+delta)",
                "grad_tol": _num(args.grad_tol) if args.grad_tol else "1e-06*(1+delta)",
            },
            "block_sizes": [int(k) for k in s.block_sizes],
        }
        head.update(extra)
        return head

    def save_json(self, name, obj):
        p = self.out / name
        _write_json(p, obj)
        self.written.append(p)

    def save_text(self, name, text):
        p = self.out / name
        p.write_text(text, encoding="utf-8")
        self.written.append(p)

    def need_deltas(self, parser):
        if not self.deltas:
            parser.error(f"{self.args.command} needs at least one --delta")

    # ---------------------------------------------------------------------
    def blocks(self):
        dec = self.field.decomposition
        prof = surface_profile(self.a, seed=self.args.seed)
        ev = self.field.eigenvalues
        report = self.header(
            "blocks",
            eigenvalues=[_cplx(z) for z in ev],
            classes=[[int(i) for i in c] for c in dec.classes],
            class_eigenvalues=[[_cplx(ev[i]) for i in c] for c in dec.classes],
            sigma=[int(i) for i in dec.sigma],
            swaps=[int(k) for k in dec.swaps],
            residual=_num(dec.residual),
            blocks=[[[_cplx(v) for v in row] for row in np.asarray(b)] for b in dec.blocks],
            surface_multiplicities=[int(m) for m in prof.multiplicities],
        )
        self.save_json("blocks.json", report)
        groups = ["{" + ", ".join(_fmt_c(ev[i]) for i in c) + "}" for c in dec.classes]
        return f"{len(dec.classes)} classes: " + " ".join(groups)

    def _fault_set(self) -> tuple[FaultSet, list]:
        box = self.region
        ft = self.args.fault_tol
        a = self.a
        try:
            fs = voronoi_faults(a, box, fault_tol=ft)
        except NotNormal:
            fs = fault_scan(a, box, self.grid((256, 256)), fault_tol=ft, field=self.field)
        per_block = []
        for l, b in enumerate(self.field.blocks):
            entry = {"block": l, "size": int(b.shape[0])}
            if b.shape[0] <= 3:
                try:
                    res = essential_fault_small(b, fault_tol=ft, zero_tol=self.args.zero_tol)
                    entry["essential"] = _descriptor(res.result)
                    if res.certificate is not None:
                        entry["line"] = _descriptor(res.certificate)
                except PseudospectraError as exc:
                    entry["essential"] = {"kind": "unavailable", "reason": type(exc).__name__}
            else:
                entry["essential"] = {"kind": "unknown"}
            per_block.append(entry)
        return fs, per_block

    def faults(self):
        fs, per_block = self._fault_set()
        box = fs.region or self.region
        rows = ["x,y,gap,kind"] + [f"{_g(s.lam.real)},{_g(s.lam.imag)},{_g(s.gap)},{s.kind}"
                                   for s in fs.samples]
        self.save_text("faults.csv", "\n".join(rows) + "\n")
        self.save_json("faults.json", self.header(
            "faults", region=list(map(_num, box)),
            analytic=_descriptor(fs.analytic), blocks=per_block,
            sample_count=len(fs.samples),
            kinds={k: len(fs.of_kind(k)) for k in ("regular", "essential")}))
        return f"{len(fs.samples)} fault samples, analytic: {_descriptor(fs.analytic)['kind']}"

    def _curves(self, delta, box):
        return trace_boundary(self.a, delta, box, self.grid((128, 128)),
                              level_tol=self.args.level_tol, fault_tol=self.args.fault_tol,
                              field=self.field)

    def trace(self):
        box = self.region
        summary = []
        for k, d in enumerate(self.deltas):
            curves = self._curves(d, box)
            rows = ["x,y,s_n,flags"]
            for c in curves:
                corners = set(c.corner_indices)
                stalls = {int(np.argmin(np.abs(c.vertices - p))) for p in c.stall_points}
                last = len(c.vertices) - 1
                for i, (z, s) in enumerate(zip(c.vertices, c.s_min)):
                    flags = ("B" if i == 0 else "") + ("Z" if c.closed and i == last else "") \
                        + ("F" if c.fault_flags[i] else "") + ("C" if i in corners else "") \
                        + ("S" if i in stalls else "")
                    rows.append(f"{_g(z.real)},{_g(z.imag)},{_g(s)},{flags or '-'}")
            self.save_text(f"trace_{k}.csv", "\n".join(rows) + "\n")
            summary.append({"delta": _num(d), "file": f"trace_{k}.csv",
                            "curves": [{"vertices": len(c), "closed": bool(c.closed),
                                        "length": _num(c.length),
                                        "corners": len(c.corner_indices),
                                        "stalls": len(c.stall_points)} for c in curves]})
        self.save_json("trace.json", self.header("trace", region=list(map(_num, box)),
                                                 levels=summary))
        return "; ".join(f"delta={s['delta']:.9g}: {len(s['curves'])} curve(s)" for s in summary)

    def _records(self, box):
        out = []
        for d in self.deltas:
            curves = self._curves(d, box)
            recs = classify_singular_points(self.a, d, curves, self.field.decomposition,
                                            fault_tol=self.args.fault_tol,
                                            level_tol=self.args.level_tol,
                                            grad_tol=self.args.grad_tol, field=self.field)
            out.append((d, curves, recs))
        return out

    def classify(self):
        box = self.region
        levels = []
        for d, _, recs in self._records(box):
            levels.append({"delta": _num(d), "points": [
                {"location": _cplx(r.location), "kind": r.kind, "gap": _num(r.gap),
                 "grad_norm": _num(r.grad_norm), "blocks": [int(b) for b in r.blocks],
                 "sector_angle": _num(r.sector_angle), "source": r.source} for r in recs]})
        self.save_json("classify.json", self.header("classify", region=list(map(_num, box)),
                                                    levels=levels))
        return "; ".join(f"delta={lv['delta']:.9g}: " +
                         (", ".join(p["kind"] for p in lv["points"]) or "none") for lv in levels)

    def sweep(self):
        lo, hi = sorted(self.args.range)
        box = self.region if self.args.region is not None else \
            default_region(self.a, hi, field=self.field)
        found = critical_deltas(self.a, lo, hi, region=box, grid=self.grid((256, 256)),
                                field=self.field)
        rows = ["delta,count_below,count_above,x,y,kind"]
        rows += [f"{_g(c.delta)},{c.count_below},{c.count_above},"
                 f"{_g(c.location.real)},{_g(c.location.imag)},{c.kind}" for c in found]
        self.save_text("sweep.csv", "\n".join(rows) + "\n")
        self.save_json("sweep.json", self.header(
            "sweep", region=list(map(_num, box)), range=[_num(lo), _num(hi)],
            critical=[{"delta": _num(c.delta), "count_below": c.count_below,
                       "count_above": c.count_above, "location": _cplx(c.location),
                       "kind": c.kind, "grid_delta": _num(c.grid_delta)} for c in found]))
        return ", ".join(f"{c.delta:.9g} ({c.count_below}->{c.count_above})" for c in found) \
            or "no transitions"

    def render(self):
        box = self.region
        fs, _ = self._fault_set()
        curves, recs = [], []
        for _, cs, rs in self._records(box):
            curves += cs
            recs += rs
        doc = emit_svg(curves, fs, self.field.eigenvalues,
                       {"region": tuple(box), "title": "pseudospectral boundaries"}, recs)
        self.save_text("render.svg", doc)
        return f"{len(curves)} curve(s), {len(fs.samples)} fault samples, {len(recs)} point(s)"


def _fmt_c(z) -> str:
    return f"{z.real:.6g}{z.imag:+.6g}i"


_NEEDS_DELTA = {"trace", "classify", "render"}


def run_command(argv=None, *, stdout=None, stderr=None) -> int:
    """Run one command; returns the exit status instead of exiting."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        a = parse_matrix(args.matrix)
    except MalformedMatrix as exc:
        print(f"error: MalformedMatrix: {exc}", file=stderr)
        return 2
    except OSError as exc:
        print(f"error: cannot read {args.matrix}: {exc.strerror or exc}", file=stderr)
        return 2
    except PseudospectraError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=stderr)
        return 2
    try:
        run = _Run(args, a)
        if args.command in _NEEDS_DELTA:
            try:
                run.need_deltas(parser)
            except SystemExit as exc:
                return int(exc.code or 2)
        message = getattr(run, args.command)()
    except PseudospectraError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=stderr)
        return 3
    print(f"{args.command}: {message}", file=stdout)
    for p in run.written:
        print(f"  wrote {p}", file=stdout)
    return 0


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
