"""Command-line front end.

Every subcommand builds one table in memory and writes it only when the whole
computation succeeded, so a failing run never leaves a partial file.

Exit codes: 0 success, 2 bad flags or parameters, 3 numerical failure (the
diagnostic goes to stderr as JSON).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Sequence

from .counting import CountPmfQuery, count_gf_check, count_pmf_result, count_table, gf_tail_allowance
from .errors import DomainError, NumericalError
from .fraccalc import gbc
from .mittagleffler import (
    ProcessParams,
    SeriesControl,
    ml_eval,
    ml_survival_result,
    survival_array,
)
from .montecarlo import MODELS, SamplerConfig, mc_compare, simulate_paths
from .renewal import (
    WaitingTimeDist,
    wt_partial_mean,
    wt_pgf_closed,
    wt_pgf_derivative,
    wt_pgf_series,
    wt_pmf_array,
)
from .subordination import (
    DEFAULT_Z_GRID,
    SibuyaDist,
    compare_models,
    sibuya_pmf_array,
    sibuya_survival,
)

TOL_ENV = "DFPP_REL_TOL"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


@dataclass
class Table:
    columns: list[str]
    rows: list[tuple[Any, ...]]
    meta: dict[str, Any] = field(default_factory=dict)


def format_cell(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def to_csv(table: Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def parse_cell(s: str) -> Any:
    """Inverse of :func:`format_cell` for the cell types the CLI emits."""
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def from_csv(text: str) -> Table:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    return Table(header, [tuple(parse_cell(c) for c in row) for row in reader])


def _json_value(v: Any) -> Any:
    if isinstance(v, float) and not math.isfinite(v):
        return format_cell(v)
    return v


def to_json(table: Table) -> str:
    doc = {
        "columns": table.columns,
        "rows": [[_json_value(v) for v in row] for row in table.rows],
    }
    if table.meta:
        doc["meta"] = table.meta
    return json.dumps(doc, indent=1) + "\n"


def render(table: Table, fmt: str) -> str:
    return to_json(table) if fmt == "json" else to_csv(table)


# ---------------------------------------------------------------------------


def _default_tol() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return SeriesControl().rel_tol
    try:
        return float(raw)
    except ValueError:
        raise DomainError(f"{TOL_ENV}={raw!r} is not a number") from None


def _ctl(args) -> SeriesControl:
    tol = args.tol if args.tol is not None else _default_tol()
    return SeriesControl(rel_tol=tol)


def _params(args) -> ProcessParams:
    return ProcessParams(args.q, args.lam)


def cmd_hfun(args) -> Table:
    v = gbc(args.alpha, args.x)
    try:
        value = v.to_real()
    except OverflowError:
        # the log column still carries the number exactly
        value = math.copysign(math.inf, v.sign)
    log_abs = v.log_abs + v.log_lo if v.sign else -math.inf
    return Table(
        ["alpha", "x", "value", "sign", "log_abs"], [(args.alpha, args.x, value, v.sign, log_abs)]
    )


def cmd_ml(args) -> Table:
    ctl = _ctl(args)
    rows = []
    t_values = range(args.t, (args.t_max if args.t_max is not None else args.t) + 1)
    for t in t_values:
        if args.method == "series" or args.lam >= 0:
            r = ml_eval(args.q, args.lam, t, ctl)
        else:
            r = ml_survival_result(ProcessParams(args.q, -args.lam), t, ctl, args.method)
        rows.append((t, r.value, r.terms_used, r.converged, r.max_partial_abs, r.method))
    return Table(["t", "value", "terms_used", "converged", "max_partial_abs", "method"], rows)


def cmd_wt_pmf(args) -> Table:
    d = WaitingTimeDist(_params(args), _ctl(args))
    pmf = wt_pmf_array(d, args.u_max)
    surv = survival_array(d.params, args.u_max)
    return Table(
        ["u", "pmf", "survival"],
        [(u, float(pmf[u]), float(surv[u])) for u in range(1, args.u_max + 1)],
    )


def cmd_wt_pgf(args) -> Table:
    d = WaitingTimeDist(_params(args), _ctl(args))
    zs = args.z if args.z else list(DEFAULT_Z_GRID)
    rows = []
    for z in zs:
        closed = wt_pgf_closed(d, z)
        if 0.0 <= z < 1.0:
            series, tail = wt_pgf_series(d, z, args.u_max)
            deriv = wt_pgf_derivative(d, z)
        else:
            series, tail = math.nan, math.nan
            deriv = wt_pgf_derivative(d, z) if z < 1.0 else math.inf
        rows.append((z, closed, series, tail, deriv))
    return Table(["z", "closed", "series", "tail_bound", "derivative"], rows)


def cmd_wt_mean(args) -> Table:
    d = WaitingTimeDist(_params(args), _ctl(args))
    points = args.t_max
    return Table(["t_max", "partial_mean"], [(t, wt_partial_mean(d, t)) for t in points])


def _count_rows(results) -> list[tuple]:
    return [(n, r.value, r.terms_used, r.converged, r.method) for n, r in results]


_COUNT_COLUMNS = ["n", "prob", "terms_used", "converged", "method"]


def cmd_count_pmf(args) -> Table:
    q = CountPmfQuery(_params(args), args.t, args.n, _ctl(args))
    return Table(_COUNT_COLUMNS, _count_rows([(args.n, count_pmf_result(q, args.method))]))


def cmd_count_table(args) -> Table:
    n_max = args.n_max if args.n_max is not None else args.t
    tbl = count_table(_params(args), args.t, n_max, _ctl(args), args.method, args.workers)
    return Table(
        _COUNT_COLUMNS,
        _count_rows(enumerate(tbl.diagnostics)),
        meta={"t": tbl.t, "tail_mass": tbl.tail_mass},
    )


def cmd_count_gf_check(args) -> Table:
    params, ctl = _params(args), _ctl(args)
    rows = []
    for n in args.n:
        for z in args.z:
            lhs, rhs = count_gf_check(params, n, z, args.t_max, ctl)
            allow = gf_tail_allowance(z, args.t_max)
            rows.append((n, z, lhs, rhs, allow, abs(lhs - rhs) <= allow + 1e-12 * abs(rhs)))
    return Table(["n", "z", "lhs", "rhs", "tail_allowance", "ok"], rows)


def cmd_sibuya(args) -> Table:
    d = SibuyaDist(args.q)
    pmf = sibuya_pmf_array(d, args.k_max)
    return Table(
        ["k", "pmf", "survival"],
        [(k, float(pmf[k]), sibuya_survival(d, k)) for k in range(1, args.k_max + 1)],
    )


def cmd_compare_models(args) -> Table:
    cmp = compare_models(_params(args), args.u_max, _ctl(args))
    pgf = Table(["z", "renewal", "subordinated"], [tuple(r) for r in cmp.pgf_rows])
    if args.pgf_out:
        args.extra_outputs.append((args.pgf_out, render(pgf, args.format)))
    return Table(
        ["u", "renewal", "subordinated", "diff"],
        [tuple(r) for r in cmp.rows],
        meta={
            "max_discrepancy": cmp.max_discrepancy,
            "gap_at_one": cmp.gap_at_one,
            "pgf": {"columns": pgf.columns, "rows": [list(r) for r in pgf.rows]},
        },
    )


def _sampler_config(args) -> SamplerConfig:
    return SamplerConfig(
        seed=args.seed,
        n_paths=args.paths,
        horizon=args.horizon,
        workers=args.workers,
        table_cap=max(args.table_cap, args.horizon),
    )


def cmd_simulate(args) -> Table:
    cfg = _sampler_config(args)
    rows = [
        (i, len(rec.event_times), " ".join(str(s) for s in rec.event_times))
        for i, rec in enumerate(simulate_paths(_params(args), cfg, args.model))
    ]
    return Table(["path", "n_events", "event_times"], rows)


def cmd_mc_compare(args) -> Table:
    cfg = _sampler_config(args)
    t = args.t if args.t is not None else cfg.horizon
    n_max = args.n_max if args.n_max is not None else min(t, 10)
    rows = mc_compare(_params(args), cfg, t, n_max, args.model)
    return Table(["n", "p_hat", "stderr", "exact", "z_score"], rows, meta={"t": t, "model": args.model})


# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, process: bool = True) -> None:
    if process:
        p.add_argument("--q", type=float, required=True, help="fractional order in (0, 1]")
        p.add_argument("--lam", type=float, required=True, help="rate parameter in (0, 1)")
    p.add_argument("--tol", type=float, default=None, help=f"series rel_tol (default ${TOL_ENV} or 1e-12)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="write here instead of stdout")


def _add_mc(p: argparse.ArgumentParser) -> None:
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--paths", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--table-cap", type=int, default=1 << 16)
    p.add_argument("--model", choices=MODELS, default="renewal")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dfpp",
        description="Discrete-time fractional Poisson process: exact laws and simulation.",
        epilog=f"Environment: {TOL_ENV} overrides the default series tolerance (1e-12).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("hfun", help="generalized binomial coefficient hhat_alpha(x)")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--x", type=float, required=True)
    _add_common(p, process=False)
    p.set_defaults(func=cmd_hfun)

    p = sub.add_parser("ml", help="discrete Mittag-Leffler function F_{q,lam}(t)")
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--lam", type=float, required=True, help="signed, |lam| < 1")
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--t-max", type=int, default=None, help="tabulate t..t_max")
    p.add_argument("--method", choices=("auto", "series", "recurrence"), default="auto")
    _add_common(p, process=False)
    p.set_defaults(func=cmd_ml)

    p = sub.add_parser("wt-pmf", help="waiting-time PMF and survival")
    p.add_argument("--u-max", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_wt_pmf)

    p = sub.add_parser("wt-pgf", help="waiting-time PGF, closed form vs series")
    p.add_argument("--z", type=float, nargs="*", default=None)
    p.add_argument("--u-max", type=int, default=500)
    _add_common(p)
    p.set_defaults(func=cmd_wt_pgf)

    p = sub.add_parser("wt-mean", help="partial means E[min(T, t_max)]")
    p.add_argument("--t-max", type=int, nargs="+", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_wt_mean)

    p = sub.add_parser("count-pmf", help="P(N(t) = n)")
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--method", choices=("auto", "series", "resummed"), default="auto")
    _add_common(p)
    p.set_defaults(func=cmd_count_pmf)

    p = sub.add_parser("count-table", help="P(N(t) = n) for n = 0..n_max")
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--method", choices=("auto", "series", "resummed"), default="auto")
    p.add_argument("--workers", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_count_table)

    p = sub.add_parser("count-gf-check", help="generating-function cross-check of the count law")
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--z", type=float, nargs="+", required=True)
    p.add_argument("--t-max", type=int, default=300)
    _add_common(p)
    p.set_defaults(func=cmd_count_gf_check)

    p = sub.add_parser("sibuya", help="Sibuya PMF and survival")
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--k-max", type=int, required=True)
    _add_common(p, process=False)
    p.set_defaults(func=cmd_sibuya)

    p = sub.add_parser("compare-models", help="renewal vs subordinated waiting times")
    p.add_argument("--u-max", type=int, required=True)
    p.add_argument("--pgf-out", default=None, help="also write the z-grid PGF table here")
    _add_common(p)
    p.set_defaults(func=cmd_compare_models)

    p = sub.add_parser("simulate", help="simulate event paths")
    _add_mc(p)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mc-compare", help="Monte Carlo count histogram vs exact law")
    _add_mc(p)
    p.add_argument("--t", type=int, default=None)
    p.add_argument("--n-max", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_mc_compare)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    args.extra_outputs = []
    try:
        table = args.func(args)
    except (DomainError, ValueError) as exc:
        print(f"dfpp {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        diag = {"error": type(exc).__name__, "message": str(exc)}
        diag.update({k: _json_value(v) for k, v in exc.diagnostics.items()})
        print(json.dumps(diag), file=sys.stderr)
        return EXIT_NUMERICAL
    text = render(table, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for path, extra in args.extra_outputs:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(extra)
    return EXIT_OK


def main() -> None:
    sys.exit(run())
