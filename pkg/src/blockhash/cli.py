"""Command-line runner: ``blockhash check|witness|sweep|selftest``.

Data goes to ``--out`` (or stdout) and is byte-stable for a fixed command
line; timing and host details go to a separate ``<out>.meta.json``.
Exit status: 0 when every asserted bound holds, 2 when one fails (the
failing report is dumped next to the data, or to stderr), 1 on usage,
descriptor, file or guard errors.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from pathlib import Path
from typing import Callable

from . import acceptance, adversary, bounds
from .blocksrc import DEFAULT_GUARD_CELLS, FlatSource, as_block_source, parse_source
from .exactdist import EXACT, MODES, Dist, DistError, JointDist, cond_cp, dist_from_json
from .hashfam import GuardError, parse_family
from .serialize import REPORT_HEADER, csv_text, dumps, fmt, report_row, to_jsonable

EXIT_OK, EXIT_ERROR, EXIT_UNSATISFIED = 0, 1, 2


class UsageError(Exception):
    pass


def _masses(text: str) -> list[Fraction]:
    return [Fraction(v) for v in text.split(",")]


# dest -> (flag, type, help); commands list the dests they take
PARAMS: dict[str, tuple[str, Callable, str]] = {
    "family": ("--family", str, "hash family descriptor, e.g. affine:q8:m2"),
    "source": ("--source", str, "source descriptor: flat:n8:support=0,1,2,3, iid:<file>:t2, tree:<file>, "
                                "random:n8:t2:k3"),
    "k": ("--k", Fraction, "min-entropy parameter K (per block)"),
    "T": ("--T", int, "number of blocks"),
    "eps": ("--eps", Fraction, "epsilon"),
    "alpha": ("--alpha", Fraction, "alpha"),
    "alphas": ("--alphas", _masses, "comma-separated alpha_i, one per axis"),
    "delta": ("--delta", Fraction, "delta"),
    "beta": ("--beta", Fraction, "beta"),
    "n": ("--n", int, "population size N"),
    "tset": ("--tset", int, "size of the fixed set T"),
    "L": ("--L", Fraction, "window centre (default K|T|/N)"),
    "x": ("--x", _masses, "comma-separated masses of X"),
    "y": ("--y", _masses, "comma-separated masses of Y"),
    "joint": ("--joint", str, "distribution file (JSON with mass and axes)"),
    "m": ("--m", int, "field base M"),
    "t": ("--t", int, "extension degree t"),
    "s": ("--s", int, "number of blocks s"),
    "trials": ("--trials", int, "random supports tried when not exhaustive"),
    "target": ("--target", Fraction, "distance the witness must reach (default eps)"),
}


@dataclass(frozen=True)
class Command:
    group: str
    name: str
    params: tuple[str, ...]
    required: tuple[str, ...]
    run: Callable
    help: str


def _family(a):
    return parse_family(a.family)


def _source(a):
    return parse_source(a.source, mode=a.mode, seed=a.seed)


def _guarded(a, f, T: int) -> None:
    cells = f.size * f.range_size ** T
    if cells > a.guard_cells:
        raise GuardError(f"{f.size}*{f.range_size}^{T} = {cells} cells exceed guard {a.guard_cells}")


def _block_source(a):
    return as_block_source(_source(a), a.T or 1)


def _single_dist(a) -> Dist:
    src = _source(a)
    if isinstance(src, FlatSource):
        return src.dist(a.mode)
    if src.T != 1:
        raise UsageError("this check takes a single-block source")
    return src.joint(a.guard_cells).flatten()


def _hashed(fn, with_eps: bool = True):
    def run(a):
        f, src = _family(a), _block_source(a)
        _guarded(a, f, src.T)
        return [fn(f, src, a.k, a.eps) if with_eps else fn(f, src, a.k)]
    return run


def _check_lhl(a):
    f = _family(a)
    _guarded(a, f, 1)
    return [bounds.lhl_check(f, _single_dist(a), a.k)]


def _check_variance4(a):
    f = _family(a)
    _guarded(a, f, 1)
    return [bounds.fourwise_variance_check(f, _single_dist(a), a.k)]


def _check_closeness(a):
    if a.joint:
        joint = dist_from_json(Path(a.joint).read_text(), a.mode)
        if isinstance(joint, Dist):
            joint = joint.as_joint()
    else:
        joint = _block_source(a).joint(a.guard_cells)
    if not isinstance(joint, JointDist):
        raise UsageError("closeness needs --joint or --source")
    # default: the tightest alphas the premise allows
    alphas = a.alphas or [cond_cp(joint, n, joint.names[:i]) * s for i, (n, s) in enumerate(joint.axes)]
    return [bounds.closeness_chain_check(joint, alphas)]


def _dist_arg(v, mode) -> Dist:
    return Dist(tuple(v), EXACT).to_mode(mode)


def _check_prodsmall(a):
    x, y = _dist_arg(a.x, a.mode), _dist_arg(a.y, a.mode)
    res = bounds.product_growth_small(x, y, a.T, a.guard_cells)
    out, prev = [], None
    for T, d in res["rows"]:
        # each row asserts Delta(X^T, Y^T) >= Delta(X^(T-1), Y^(T-1))
        extras = {"reduction_ok": res["reduction_ok"]} if T == 1 else {}
        out.append(bounds.BoundReport("prodsmall", d, d if prev is None else prev, bounds.GE,
                                      {"x": a.x, "y": a.y, "T": T},
                                      checks={"reduction_ok": res["reduction_ok"]}, extras=extras))
        prev = d
    return out


def _check_prodlarge(a):
    return [bounds.product_growth_large(a.eps, a.T)]


def _check_hypergeom(a):
    return [bounds.hypergeom_claim_check(a.n, _integral(a.k, "--k"), a.tset, a.beta, a.L)]


def _integral(v, flag: str) -> int:
    if Fraction(v).denominator != 1:
        raise UsageError(f"{flag} must be an integer here")
    return int(v)


def _witness_flatsearch(a):
    f = _family(a)
    _guarded(a, f, 1)
    return adversary.search_flat_source(f, _integral(a.k, "--k"), a.eps, a.trials, a.seed)


def _witness_lbstat(a):
    f = _family(a)
    _guarded(a, f, a.T)
    return adversary.lb_stat_witness(f, _integral(a.k, "--k"), a.eps, a.T, a.trials, a.seed, a.target, a.guard_cells)


def _witness_lb2univ(a):
    return adversary.lb_2univ_witness(a.m, a.t, a.s, a.T, a.alpha or 2, a.guard_cells)


def _witness_lbnoh(a):
    f = _family(a)
    _guarded(a, f, a.T)
    src = _source(a) if a.source else None
    return adversary.lb_no_H_witness(f, _integral(a.k, "--k"), a.T, a.alpha, src, a.eps or Fraction(1, 8), a.trials,
                                     a.seed, guard=a.guard_cells)


def _witness_supportcount(a):
    f = _family(a)
    _guarded(a, f, a.T)
    src = _source(a) if a.source else None
    return [adversary.support_counting_bound(f, _integral(a.k, "--k"), a.T, a.alpha, a.delta, src, a.guard_cells)]


_FS = ("family", "source")
COMMANDS = [
    Command("check", "lhl", _FS + ("k",), _FS, _check_lhl, "E_h cp(h(X)) <= 1/M + 1/K"),
    Command("check", "condchain", _FS + ("k", "T"), _FS + ("k",),
            _hashed(bounds.cond_cp_chain_check, with_eps=False), "cp(Y_i | H, Y_<i) <= 1/M + 1/K for every block"),
    Command("check", "markov", _FS + ("k", "T", "eps"), _FS + ("k", "eps"), _hashed(bounds.markov_tail),
            "Markov tail of the per-prefix collision probability"),
    Command("check", "thm2cp", _FS + ("k", "T", "eps"), _FS + ("k", "eps"),
            _hashed(bounds.thm_2univ_cp_check), "2-universal hashing: close to low collision probability"),
    Command("check", "thm4cp", _FS + ("k", "T", "eps"), _FS + ("k", "eps"),
            _hashed(bounds.thm_4wise_cp_check), "4-wise independent hashing: sharper threshold"),
    Command("check", "thm2stat", _FS + ("k", "T", "eps"), _FS + ("k", "eps"),
            _hashed(bounds.thm_2univ_stat_check), "statistical distance to (H, U) when K > MT/eps^2"),
    Command("check", "variance4", _FS + ("k",), _FS, _check_variance4, "Var_h cp(h(X)) <= 2/(M K^2)"),
    Command("check", "closeness", ("joint", "source", "T", "alphas"), (), _check_closeness,
            "Hellinger closeness chain"),
    Command("check", "prodsmall", ("x", "y", "T"), ("x", "y", "T"), _check_prodsmall,
            "Delta(X^T, Y^T) for T = 1..T, monotone"),
    Command("check", "prodlarge", ("eps", "T"), ("eps", "T"), _check_prodlarge,
            "Delta(X^T, U^T) >= 1 - exp(-T eps^2 / 2)"),
    Command("check", "hypergeom", ("n", "k", "tset", "beta", "L"), ("n", "k", "tset", "beta"),
            _check_hypergeom, "hypergeometric window probability <= c'' beta"),
    Command("witness", "flatsearch", ("family", "k", "eps", "trials"), ("family", "k", "eps"),
            _witness_flatsearch, "search for a flat K-source hashed far from uniform"),
    Command("witness", "lbstat", ("family", "k", "eps", "T", "trials", "target"), ("family", "k", "eps", "T"),
            _witness_lbstat, "(H, Y) far from (H, U) for a searched flat source"),
    Command("witness", "lb2univ", ("m", "t", "s", "T", "alpha"), ("m", "t", "s", "T"), _witness_lb2univ,
            "the explicit lower-bound family and its bad members"),
    Command("witness", "lbnoh", ("family", "source", "k", "T", "alpha", "eps", "trials"),
            ("family", "k", "T", "alpha"), _witness_lbnoh, "hashed values without H far from low cp"),
    Command("witness", "supportcount", ("family", "source", "k", "T", "alpha", "delta"),
            ("family", "k", "T", "alpha", "delta"), _witness_supportcount, "support-counting farness bound"),
]
BY_NAME = {(c.group, c.name): c for c in COMMANDS}
DEFAULTS = {"trials": 200}


# output --------------------------------------------------------------------

def _report_json(r) -> dict:
    row = dict(zip(REPORT_HEADER, report_row(r)))
    row.update(checks=to_jsonable(r.checks), extras=to_jsonable(r.extras))
    return row


def render_reports(reports, fmt_name: str, lead: list[str] | None = None) -> str:
    lead = lead or []
    if fmt_name == "json":
        rows = []
        for vals, r in reports:
            row = dict(zip(lead, vals)) if lead else {}
            row.update(_report_json(r) if r is not None else {})
            rows.append(row)
        return dumps(rows)
    return csv_text(lead + REPORT_HEADER, [list(vals) + (report_row(r) if r is not None else [""] * 7)
                                           for vals, r in reports])


def render_witness(w, fmt_name: str) -> str:
    if fmt_name == "json":
        return dumps(w)
    flat = to_jsonable(w)
    rows = []

    def walk(prefix, v):
        if isinstance(v, dict):
            for k in sorted(v):
                walk(f"{prefix}.{k}" if prefix else k, v[k])
        else:
            rows.append([prefix, json.dumps(v) if isinstance(v, list) else fmt(v)])
    walk("", flat)
    return csv_text(["field", "value"], rows)


def _emit(a, text: str, started: float, extra_meta: dict | None = None) -> None:
    if a.out is None:
        sys.stdout.write(text)
        return
    out = Path(a.out)
    out.write_text(text)
    meta = {"runtime_ms": round((time.perf_counter() - started) * 1000, 3), "host": platform.node(),
            "python": platform.python_version(), "argv": a.argv, **(extra_meta or {})}
    Path(f"{out}.meta.json").write_text(json.dumps(meta, sort_keys=True, indent=1) + "\n")


def _dump_failure(a, payload) -> None:
    text = dumps(payload)
    if a.out is None:
        sys.stderr.write(text)
    else:
        Path(f"{a.out}.witness.json").write_text(text)


# commands ------------------------------------------------------------------

def _missing(cmd: Command, ns: argparse.Namespace) -> list[str]:
    return [PARAMS[p][0] for p in cmd.required if getattr(ns, p, None) is None]


def _run_leaf(a, started: float) -> int:
    cmd = BY_NAME[(a.group, a.command)]
    if miss := _missing(cmd, a):
        raise UsageError(f"missing {', '.join(miss)}")
    result = cmd.run(a)
    if isinstance(result, list):
        _emit(a, render_reports([((), r) for r in result], a.format), started)
        bad = [r for r in result if not r.ok]
        if bad:
            _dump_failure(a, [_report_json(r) for r in bad])
            return EXIT_UNSATISFIED
        return EXIT_OK
    _emit(a, render_witness(result, a.format), started)
    if getattr(result, "certified", True):
        return EXIT_OK
    _dump_failure(a, result)
    return EXIT_UNSATISFIED


def parse_grid(specs: list[str], params: tuple[str, ...]) -> tuple[list[str], list[list]]:
    """``name=v1,v2`` specs to axis names and value lists.

    Numeric axes are sorted ascending, descriptor axes keep the given order.
    Descriptors containing commas are separated with ';' instead.
    """
    names, axes = [], []
    for spec in specs:
        name, sep, raw = spec.partition("=")
        if not sep or name not in params:
            raise UsageError(f"bad grid axis {spec!r}; axes for this command: {', '.join(params)}")
        if name in names:
            raise UsageError(f"grid axis {name!r} given twice")
        conv = PARAMS[name][1]
        parts = [p for p in raw.split(";" if ";" in raw else ",") if p]
        try:
            vals = [conv(p) for p in parts]
        except (ValueError, ZeroDivisionError) as e:
            raise UsageError(f"grid axis {name!r}: {e}") from None
        uniq = list(dict.fromkeys(vals))
        if conv in (int, Fraction):
            uniq.sort()
        names.append(name)
        axes.append(uniq)
    return names, axes


_ERRORS = (bounds.PreconditionError, DistError, GuardError, ValueError)


def _run_cell(group: str, name: str, ns: dict):
    """Evaluate one sweep cell; returns (reports or None, note)."""
    cmd = BY_NAME[(group, name)]
    a = argparse.Namespace(**ns)
    try:
        res = cmd.run(a)
    except _ERRORS as e:
        return None, f"{type(e).__name__}: {e}"
    return (res if isinstance(res, list) else None), ("" if isinstance(res, list) else "not a report")


def _run_sweep(a, started: float) -> int:
    cmd = BY_NAME[("check", a.command)] if ("check", a.command) in BY_NAME else BY_NAME[("witness", a.command)]
    names, axes = parse_grid(a.grid or [], cmd.params)
    cells = list(product(*axes)) if names else []
    if len(cells) > a.guard_cells:
        raise UsageError(f"grid of {len(cells)} cells exceeds guard {a.guard_cells}")
    base = vars(a).copy()
    jobs = []
    for vals in cells:
        ns = {**base, **dict(zip(names, vals))}
        if miss := _missing(cmd, argparse.Namespace(**ns)):
            raise UsageError(f"missing {', '.join(miss)} (neither fixed nor on the grid)")
        jobs.append(ns)
    if a.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(a.jobs) as pool:
            results = list(pool.map(_run_cell, [cmd.group] * len(jobs), [cmd.name] * len(jobs), jobs))
    else:
        results = [_run_cell(cmd.group, cmd.name, ns) for ns in jobs]
    rows, notes, failed = [], [], []
    for vals, (reports, note) in zip(cells, results):
        lead = [fmt(v) if not isinstance(v, list) else ",".join(map(fmt, v)) for v in vals]
        for r in reports or [None]:
            rows.append((lead, r))
            notes.append(note)
            if r is not None and not r.ok:
                failed.append(r)
    if a.format == "json":
        text = render_reports(rows, "json", names)
        if notes and any(notes):
            data = json.loads(text)
            for row, note in zip(data, notes):
                row["note"] = note
            text = json.dumps(data, sort_keys=True, indent=1) + "\n"
    else:
        header = names + REPORT_HEADER + ["note"]
        body = [list(lead) + (report_row(r) if r is not None else [""] * 7) + [note]
                for (lead, r), note in zip(rows, notes)]
        text = csv_text(header, body)
    _emit(a, text, started, {"cells": len(cells), "jobs": a.jobs})
    if failed:
        _dump_failure(a, [_report_json(r) for r in failed])
        return EXIT_UNSATISFIED
    return EXIT_OK


def _run_selftest(a, started: float) -> int:
    results = acceptance.run(a.criteria, a.seed if a.seed is not None else acceptance.DEFAULT_SEED)
    for r in results:
        print(r.line())
    if a.out is not None:
        payload = [{"criterion": r.number, "title": r.title, "passed": r.passed, "detail": r.detail}
                   for r in results]
        _emit(a, dumps(payload), started)
    return EXIT_OK if all(r.passed for r in results) else EXIT_UNSATISFIED


# parser --------------------------------------------------------------------

GLOBAL_DEFAULTS = {"seed": None, "mode": EXACT, "out": None, "format": "csv", "guard_cells": DEFAULT_GUARD_CELLS}


def _global_options() -> argparse.ArgumentParser:
    # SUPPRESS so a flag given before the subcommand is not reset by the subparser
    g = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g.add_argument("--seed", type=int, help="64-bit seed for all randomized behaviour")
    g.add_argument("--mode", choices=MODES)
    g.add_argument("--out", help="data file (stdout when omitted); metadata goes to <out>.meta.json")
    g.add_argument("--format", choices=("csv", "json"))
    g.add_argument("--guard-cells", type=int, dest="guard_cells", help="refuse to materialize more cells than this")
    return g


def _add_params(p: argparse.ArgumentParser, cmd: Command, sweep: bool = False) -> None:
    for dest in cmd.params:
        flag, conv, text = PARAMS[dest]
        req = "" if sweep or dest not in cmd.required else " (required)"
        p.add_argument(flag, dest=dest, type=conv, default=DEFAULTS.get(dest), help=text + req)


def build_parser() -> argparse.ArgumentParser:
    g = _global_options()
    parser = argparse.ArgumentParser(prog="blockhash", description=__doc__.splitlines()[0], parents=[g])
    top = parser.add_subparsers(dest="group", required=True)
    for group in ("check", "witness"):
        gp = top.add_parser(group, help=f"run one {group}")
        sub = gp.add_subparsers(dest="command", required=True)
        for cmd in COMMANDS:
            if cmd.group == group:
                _add_params(sub.add_parser(cmd.name, help=cmd.help, parents=[g]), cmd)
    sw = top.add_parser("sweep", help="cross-product sweep of a check, one row per grid cell")
    ssub = sw.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        sp = ssub.add_parser(cmd.name, help=cmd.help, parents=[g])
        _add_params(sp, cmd, sweep=True)
        sp.add_argument("--grid", action="append", metavar="NAME=V1,V2",
                        help="grid axis; repeat for a cross product")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes for cell evaluation")
    st = top.add_parser("selftest", help="run the acceptance suite", parents=[g])
    st.add_argument("--criteria", type=int, nargs="*", choices=sorted(acceptance.CRITERIA))
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_ERROR
    for k, v in GLOBAL_DEFAULTS.items():
        if not hasattr(a, k):
            setattr(a, k, v)
    a.argv = argv
    started = time.perf_counter()
    if a.group != "selftest" and a.seed is None:
        a.seed = 0
    try:
        if a.group == "selftest":
            return _run_selftest(a, started)
        if a.group == "sweep":
            return _run_sweep(a, started)
        return _run_leaf(a, started)
    except (UsageError, GuardError, DistError, ValueError, OSError, KeyError, TypeError) as e:
        print(f"blockhash: error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
