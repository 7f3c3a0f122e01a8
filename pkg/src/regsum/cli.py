"""Command line: ``regsum verify | sweep | constants | report``.

Exit codes: 0 success, 1 identity mismatch or failed check, 2 bad configuration.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .arith import KINDS, ArithmeticalFunction
from .constants import DEFAULT_PRIME_BOUND, build_store, k2_series
from .identities import IDENTITY_KINDS, VerifyReport, verify
from .partial_sums import (BRUTE_CAP, EQ_IDS, NONVANISHING_EQS, TheoremEq, _Tables, bound_shape,
                           default_checkpoints, format_decimal, k2_fit, k2_grid, lhs_series,
                           main_term_variants, pillai_regular_cumsum, residual_report,
                           series_json, write_series)

DEFAULT_SIEVE_LIMIT = 10**7
KIND_ALIASES = {"power": "power_sum", "bernoulli": "bernoulli_sum", "gamma": "gamma_sum",
                "coprime": "coprime_count"}


@dataclass
class RunConfig:
    command: str
    sieve_limit: int
    digits: int
    output_dir: str
    formats: tuple
    workers: int


def sieve_limit_from_env() -> int:
    raw = os.environ.get("REGSUM_SIEVE_LIMIT")
    if not raw:
        return DEFAULT_SIEVE_LIMIT
    try:
        value = int(float(raw))
    except ValueError:
        raise ValueError(f"REGSUM_SIEVE_LIMIT={raw!r} is not a number") from None
    if value < 100:
        raise ValueError("REGSUM_SIEVE_LIMIT must be at least 100")
    return value


def _number(text: str) -> int:
    """Integers written plainly or as 1e6."""
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v) or v != int(v):
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    return int(v)


def _function_name(text: str) -> str:
    try:
        return ArithmeticalFunction.of(text).kind
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", default="regsum_out", help="directory for result files")
    common.add_argument("--digits", type=int, default=15, help="significant digits in output (round-half-even)")
    common.add_argument("--workers", type=int, default=os.cpu_count() or 1, help="worker processes/threads")
    common.add_argument("--format", default=None,
                        help="comma list of csv, json, gnuplot (default depends on the command)")

    p = argparse.ArgumentParser(prog="regsum", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="check a finite identity over a range of n")
    v.add_argument("--kind", required=True, choices=sorted(set(IDENTITY_KINDS) | set(KIND_ALIASES)))
    v.add_argument("--f", type=_function_name, default="id", help=f"weight: {', '.join(KINDS)} or mu")
    v.add_argument("--nmax", type=_number, required=True)
    v.add_argument("--nmin", type=_number, default=1)
    v.add_argument("--r", type=int, default=None)
    v.add_argument("--m", type=int, default=None)
    v.add_argument("--x", default="1000", help="x for the coprime count (int or p/q)")
    v.add_argument("--dps", type=int, default=50, help="working digits for log-Gamma")

    s = sub.add_parser("sweep", parents=[common], help="partial sums, main terms and residuals")
    s.add_argument("--eq", required=True, choices=EQ_IDS)
    s.add_argument("--f", type=_function_name, default=None)
    s.add_argument("--r", type=int, default=None)
    s.add_argument("--m", type=int, default=None)
    s.add_argument("--xmax", type=_number, default=10**6)
    s.add_argument("--xmin", type=_number, default=None)
    s.add_argument("--checkpoints", default=None, help="comma list of x values (overrides the grid)")
    s.add_argument("--mode", choices=("convolution", "brute"), default="convolution")
    s.add_argument("--arithmetic", choices=("exact", "float"), default=None)
    s.add_argument("--method", choices=("mobius", "direct"), default="mobius")
    s.add_argument("--variant", choices=("printed", "derived"), default="printed")
    s.add_argument("--prime-bound", type=_number, default=DEFAULT_PRIME_BOUND)

    c = sub.add_parser("constants", parents=[common], help="evaluate and dump the constant store")
    c.add_argument("--prime-bound", type=_number, default=DEFAULT_PRIME_BOUND)
    c.add_argument("--k2-alpha", choices=("log_p", "paper_literal"), default="log_p")

    r = sub.add_parser("report", parents=[common], help="full sweep with figures and a summary")
    r.add_argument("--xmax", type=_number, default=10**6)
    r.add_argument("--xmin", type=_number, default=10**4)
    r.add_argument("--prime-bound", type=_number, default=DEFAULT_PRIME_BOUND)
    r.add_argument("--no-figures", action="store_true", help="skip the matplotlib PNG files")
    return p


def _formats(arg: str | None, default: tuple) -> tuple:
    if arg is None:
        return default
    out = tuple(x.strip() for x in arg.split(",") if x.strip())
    bad = [x for x in out if x not in ("csv", "json", "gnuplot")]
    if bad or not out:
        raise ValueError(f"unknown format(s) {bad or arg!r}; use csv, json, gnuplot")
    return out


# --- verify ---------------------------------------------------------------------------

def _verify_chunk(args):
    kind, f, lo, hi, params, dps = args
    return verify(kind, f, (lo, hi), params, dps=dps)


def run_verify(kind: str, f: str, lo: int, hi: int, params: dict, dps: int, workers: int) -> VerifyReport:
    """Split the range into contiguous chunks and merge reports in ascending n."""
    if workers <= 1 or hi - lo < 200:
        return verify(kind, f, (lo, hi), params, dps=dps)
    step = max(1, (hi - lo + 1) // (4 * workers))
    chunks = [(kind, f, a, min(hi, a + step - 1), params, dps) for a in range(lo, hi + 1, step)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_verify_chunk, chunks))
    rep = VerifyReport(kind, parts[0].f, (lo, hi), params)
    for part in parts:
        rep.mismatches.extend(part.mismatches)
        rep.checked += part.checked
        rep.max_numeric_residual = max(rep.max_numeric_residual, part.max_numeric_residual)
        rep.complete = rep.complete and part.complete
    return rep


def cmd_verify(a, cfg: RunConfig) -> int:
    kind = KIND_ALIASES.get(a.kind, a.kind)
    if a.nmax < max(1, a.nmin) or a.nmin < 1:
        raise ValueError(f"empty range n = {a.nmin}..{a.nmax}")
    params = {}
    if kind == "power_sum":
        if a.r is None or a.r < 1:
            raise ValueError("power identity needs --r >= 1")
        params["r"] = a.r
    elif kind == "bernoulli_sum":
        if a.m is None or a.m < 1:
            raise ValueError("bernoulli identity needs --m >= 1")
        params["m"] = a.m
    elif kind == "coprime_count":
        from fractions import Fraction
        try:
            params["x"] = Fraction(a.x)
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"bad --x {a.x!r}") from None
        if params["x"] < 1:
            raise ValueError("--x must be >= 1")
    if a.nmax > cfg.sieve_limit:
        raise ValueError(f"--nmax {a.nmax} exceeds the sieve limit {cfg.sieve_limit}")
    rep = run_verify(kind, a.f, a.nmin, a.nmax, params, a.dps, cfg.workers)
    os.makedirs(cfg.output_dir, exist_ok=True)
    tag = "_".join([kind, ArithmeticalFunction.of(a.f).short] + [f"{k}{v}" for k, v in sorted(params.items())])
    tag = tag.replace("/", "over")
    data = rep.as_dict()
    data["params"] = {k: str(v) for k, v in params.items()}
    data["max_numeric_residual"] = format_decimal(rep.max_numeric_residual, 3)
    path = os.path.join(cfg.output_dir, f"verify_{tag}.json")
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")
    status = "ok" if rep.ok else "FAILED"
    shown = "".join(f" {k}={v}" for k, v in sorted(params.items()))
    line = f"{kind} f={rep.f} n={a.nmin}..{a.nmax}{shown} checked={rep.checked} mismatches={len(rep.mismatches)}"
    if kind == "gamma_sum":
        line += f" max_residual={format_decimal(rep.max_numeric_residual, 3)}"
    print(f"{status}: {line}")
    return 0 if rep.ok else 1


# --- sweep ----------------------------------------------------------------------------

def _checkpoints(a, sieve_limit: int) -> list[int]:
    if a.checkpoints:
        cps = sorted({_number(x) for x in a.checkpoints.split(",") if x.strip()})
    else:
        xmin = a.xmin if a.xmin is not None else min(10**4, a.xmax)
        cps = default_checkpoints(a.xmax, xmin)
    if not cps or cps[0] < 1:
        raise ValueError("checkpoints must be positive")
    if cps[-1] > sieve_limit:
        raise ValueError(f"checkpoint {cps[-1]} exceeds the sieve limit {sieve_limit} (REGSUM_SIEVE_LIMIT)")
    return cps


def cmd_sweep(a, cfg: RunConfig) -> int:
    eq = TheoremEq.make(a.eq, a.f, r=a.r, m=a.m)
    if a.variant not in main_term_variants(eq.id):
        raise ValueError(f"{eq.id} has no {a.variant!r} main term")
    cps = _checkpoints(a, cfg.sieve_limit)
    if a.mode == "brute" and cps[-1] > BRUTE_CAP:
        raise ValueError(f"brute mode is capped at x <= {BRUTE_CAP}")
    store = build_store(a.prime_bound) if eq.id not in ("eq1", "eq2", "eq3", "eq4", "eq5", "eq6") else None
    series = lhs_series(eq, cps, a.mode, a.arithmetic, a.method, workers=cfg.workers)
    if store is not None:
        series = residual_report(eq, cps, store, series=series, variant=a.variant)
    paths = write_series(series, cfg.output_dir, cfg.formats, cfg.digits)
    for x, l in zip(series.checkpoints, series.lhs):
        print(f"{x} {format_decimal(l, cfg.digits)}")
    for p in paths:
        print(f"wrote {p}")
    return 0


# --- constants ------------------------------------------------------------------------

def cmd_constants(a, cfg: RunConfig) -> int:
    store = build_store(a.prime_bound, dps=max(30, cfg.digits), k2_alpha=a.k2_alpha)
    text = store.to_json(max(30, cfg.digits))
    print(text)
    if cfg.output_dir:
        os.makedirs(cfg.output_dir, exist_ok=True)
        with open(os.path.join(cfg.output_dir, "constants.json"), "w") as fh:
            fh.write(text + "\n")
    return 0


# --- report ---------------------------------------------------------------------------

REPORT_EQS = [
    ("eqcor11", 1), ("eqcor11", 2), ("eqcor12", 1), ("eqcor12", 2), ("eqcor13", 1), ("eqcor14", 1),
    ("eqthm21", 1), ("eqthm22", 1), ("eqthm23", 1), ("eqthm24", 1), ("eqthm25", 1), ("eqthm26", 1),
    ("eqthm61", None), ("eqthm62", None), ("eqthm63", None), ("eqthm64", None), ("eqthm65", None),
]
DECREASE_EQS = {("eqcor12", 1), ("eqcor12", 2), ("eqcor13", 1), ("eqthm21", 1), ("eqthm22", 1),
                ("eqthm25", 1), ("eqthm61", None), ("eqthm62", None), ("eqthm63", None)}


def cmd_report(a, cfg: RunConfig) -> int:
    if a.xmax > cfg.sieve_limit:
        raise ValueError(f"--xmax {a.xmax} exceeds the sieve limit {cfg.sieve_limit}")
    cps = default_checkpoints(a.xmax, a.xmin)
    store = build_store(a.prime_bound)
    tables = _Tables(cps[-1])
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    summary = {"checkpoints": cps, "prime_bound": a.prime_bound, "equations": [], "files": []}
    all_series = []
    for eid, p in REPORT_EQS:
        eq = TheoremEq.make(eid, r=p, m=p)
        base = lhs_series(eq, cps, tables=tables, workers=cfg.workers)
        for variant in main_term_variants(eid):
            s = residual_report(eq, cps, store, series=_copy_series(base), variant=variant)
            suffix = "" if variant == "printed" else f"_{variant}"
            summary["files"] += write_series(s, out, cfg.formats, cfg.digits, suffix)
            info = series_json(s, cfg.digits)
            info.pop("points")
            rel = [abs(v) for v in s.residual_over_main]
            if (eid, p) in DECREASE_EQS and variant == "printed" and all(math.isfinite(v) for v in rel):
                picks = [rel[cps.index(x)] for x in (10**4, 10**5, 10**6) if x in cps]
                info["relative_residual_decreasing"] = all(u > v for u, v in zip(picks, picks[1:]))
                info["relative_residual_last"] = format_decimal(rel[-1], 6)
            summary["equations"].append(info)
            all_series.append(s)

    fit = k2_fit(k2_grid(cps[-1]), store)
    trunc = min(10**6, max(10**4, cps[-1]))
    variants = {name: k2_series(store, trunc, name)[0] for name in ("log_p", "paper_literal")}
    summary["k2"] = {
        "estimate": format_decimal(fit.estimate, 10), "stderr": format_decimal(fit.stderr, 3),
        "points": len(fit.x_points),
        "variants": {k: format_decimal(v, 10) for k, v in variants.items()},
        "within_3se": sorted(k for k, v in variants.items() if fit.matches(v)),
    }
    k2_path = os.path.join(out, "k2_fit.dat")
    with open(k2_path, "w") as fh:
        fh.write("# x K2(x)\n")
        for x, k in zip(fit.x_points, fit.pointwise):
            fh.write(f"{x} {format_decimal(k, cfg.digits)}\n")
    summary["files"].append(k2_path)
    const_path = os.path.join(out, "constants.json")
    with open(const_path, "w") as fh:
        fh.write(store.to_json() + "\n")
    summary["files"].append(const_path)

    if not a.no_figures:
        from . import plotting

        printed = [s for s in all_series if s.variant == "printed" and s.eq.id not in ("eqthm23", "eqthm24")]
        summary["files"].append(plotting.plot_relative_residuals(
            printed, os.path.join(out, "relative_residuals.png"), "stated main terms"))
        derived = [s for s in all_series if s.variant == "derived"]
        if derived:
            summary["files"].append(plotting.plot_relative_residuals(
                derived, os.path.join(out, "relative_residuals_derived.png"), "corrected main terms"))
        summary["files"].append(plotting.plot_k2(fit, {f"series ({k})": v for k, v in variants.items()},
                                                 os.path.join(out, "k2_fit.png")))
        for s in all_series:
            if s.variant == "printed" and s.bound_constant and s.eq.id not in ("eqthm23", "eqthm24"):
                shape = [bound_shape(s.eq.id, x) for x in s.checkpoints]
                summary["files"].append(plotting.plot_residual_vs_bound(
                    s, shape, os.path.join(out, f"{s.eq.tag}_bound.png")))

    summary["files"] = sorted(os.path.relpath(f, out) for f in summary["files"])
    with open(os.path.join(out, "report.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    _print_summary(summary)
    return 0


def _copy_series(s):
    from copy import copy

    c = copy(s)
    c.notes = list(s.notes)
    return c


def _print_summary(summary: dict) -> None:
    for info in summary["equations"]:
        pname = "r" if "r" in info else "m" if "m" in info else None
        tag = f"{info['eq']}_{info['f']}" + (f"_{pname}{info[pname]}" if pname else "")
        if info["variant"] != "printed":
            tag += f" [{info['variant']}]"
        exp = info["fitted_exponent"] or info["growth_exponent"]
        line = f"{tag:30s} exponent={float(exp):+.3f} bound_consistent={info['consistent_with_bound']}"
        if "relative_residual_decreasing" in info:
            line += (f" decreasing={info['relative_residual_decreasing']}"
                     f" rel@xmax={float(info['relative_residual_last']):.3g}")
        print(line)
    k2 = summary["k2"]
    print(f"K2 fit {k2['estimate']} +/- {k2['stderr']}; within 3 SE: {', '.join(k2['within_3se']) or 'none'}")


# --- entry point ------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    try:
        sieve_limit = sieve_limit_from_env()
        default_fmt = {"verify": ("json",), "constants": ("json",)}.get(a.command, ("csv", "json", "gnuplot"))
        if a.digits < 1 or a.digits > 60:
            raise ValueError("--digits must be between 1 and 60")
        if a.workers < 1:
            raise ValueError("--workers must be >= 1")
        cfg = RunConfig(a.command, sieve_limit, a.digits, a.output_dir,
                        _formats(a.format, default_fmt), a.workers)
        if a.command == "sweep":
            # nonvanishing and parameter checks happen before any work starts
            TheoremEq.make(a.eq, a.f, r=a.r, m=a.m)
    except ValueError as exc:
        parser.error(str(exc))
    try:
        handler = {"verify": cmd_verify, "sweep": cmd_sweep, "constants": cmd_constants,
                   "report": cmd_report}[a.command]
        return handler(a, cfg)
    except ValueError as exc:
        print(f"regsum: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
