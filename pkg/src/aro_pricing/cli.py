"""Command-line front end.

    aro-pricing solve   --builtin scarf --gamma-q 20
    aro-pricing price   --builtin scarf --gamma-q 20 --scheme uniform
    aro-pricing sweep   --builtin scarf --grid 21 --format csv
    aro-pricing verify  --builtin scarf-capacity --gamma-q 20 --delta-p 0.5
    aro-pricing compare --builtin chen-multiperiod

Exit status: 0 on success, 1 on bad input, 2 when the instance is
infeasible, 3 when a theorem or invariant check fails.
"""

import argparse
import csv
import io
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .checks import all_passed, solve_instance, verify_instance
from .chull import convex_hull_prices
from .errors import AroError, ConsistencyError, InfeasibleError, ResourceLimitError
from .intraday import realization_sweep
from .model import builtin_instance, builtin_names, load_instance
from .norms import NormOrder
from .pricing import (adaptive_uniform_day_ahead, deterministic_marginal, pay_as_bid_day_ahead,
                      worst_case_settlement)
from .uc import deterministic_uc

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_CONSISTENCY = 0, 1, 2, 3
SCHEMES = ("payasbid", "uniform", "marginal", "chull")
FORMATS = ("table", "csv", "json-like")
DIGITS = 6


@dataclass(frozen=True)
class RunConfig:
    command: str
    builtin: str = None
    file: str = None
    norm: str = None
    gamma_q: tuple = None
    delta_p: tuple = None
    scheme: str = "payasbid"
    grid: int = 21
    period: int = 0
    fmt: str = "table"
    out: str = None
    seed: int = 0

    def __post_init__(self):
        if (self.builtin is None) == (self.file is None):
            raise ValueError("give exactly one of --builtin or --file")
        if self.fmt not in FORMATS:
            raise ValueError(f"unknown format {self.fmt!r}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass
class Document:
    """What a command emits: named scalars and named tables."""
    title: str
    scalars: list            # (name, value)
    tables: list             # (name, header, rows)
    # Price and sweep CSVs have fixed layouts, so their scalars stay out of CSV output.
    csv_scalars: bool = True


@dataclass(frozen=True)
class RunOutcome:
    code: int
    text: str = ""
    message: str = ""


# -- formatting ------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if v == 0.0:
            v = 0.0      # no negative zero in golden output
        return f"{v:.{DIGITS}f}"
    return str(v)


def _render_table(doc):
    out = [doc.title]
    for name, value in doc.scalars:
        out.append(f"{name}: {_fmt(value)}")
    for name, header, rows in doc.tables:
        cells = [list(header)] + [[_fmt(v) for v in row] for row in rows]
        widths = [max(len(r[k]) for r in cells) for k in range(len(header))]
        out.append("")
        out.append(f"[{name}]")
        for r in cells:
            out.append("  ".join(c.rjust(w) if k else c.ljust(w) for k, (c, w) in enumerate(zip(r, widths))).rstrip())
    return "\n".join(out) + "\n"


def _render_csv(doc):
    parts = []
    tables = list(doc.tables)
    if doc.csv_scalars and doc.scalars:
        tables.insert(0, ("summary", ("quantity", "value"), doc.scalars))
    for _, header, rows in tables:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        parts.append(buf.getvalue())
    return "\n".join(parts)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer, float, np.floating)):
        if isinstance(v, (float, np.floating)) and not np.isfinite(v):
            return "null"
        return _fmt(v)
    return '"' + str(v).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _render_json(doc):
    lines = ["{", f'  "title": {_json_value(doc.title)},', '  "scalars": {']
    items = [f"    {_json_value(n)}: {_json_value(v)}" for n, v in doc.scalars]
    lines.append(",\n".join(items))
    lines.append("  },")
    lines.append('  "tables": {')
    blocks = []
    for name, header, rows in doc.tables:
        recs = ["      {" + ", ".join(f"{_json_value(h)}: {_json_value(v)}" for h, v in zip(header, row)) + "}"
                for row in rows]
        blocks.append(f"    {_json_value(name)}: [\n" + ",\n".join(recs) + "\n    ]")
    lines.append(",\n".join(blocks))
    lines.append("  }")
    lines.append("}")
    return "\n".join(line for line in lines if line) + "\n"


_RENDER = {"table": _render_table, "csv": _render_csv, "json-like": _render_json}


# -- commands --------------------------------------------------------------------

def _instance(cfg):
    inst = builtin_instance(cfg.builtin) if cfg.builtin else load_instance(Path(cfg.file))
    if cfg.norm is not None or cfg.gamma_q is not None or cfg.delta_p is not None:
        inst = inst.with_uncertainty(cfg.norm, cfg.gamma_q, cfg.delta_p)
    return inst


def _payment_rows(table):
    return [(table.scheme, r.generator, r.commitment, r.energy, r.uncertainty, r.uplift, r.total) for r in table.rows]


PAYMENT_HEADER = ("scheme", "generator", "commitment", "energy", "uncertainty", "uplift", "total")


def _cmd_solve(cfg, inst):
    sol, cert = solve_instance(inst)
    T = inst.periods
    gens = [g.id for g in inst.generators]
    nodes = [n.id for n in inst.demand_nodes]
    scalars = [("objective", sol.objective), ("commitment_cost", sol.commitment_cost), ("eta", sol.eta),
               ("approximate", bool(sol.approximate))]
    scalars += [(f"mu[{t}]", cert.mu[t]) for t in range(T)]
    sched = [(gens[i], t, int(sol.x[i, t]), sol.policy.u[i, t]) for i in range(inst.n_gen) for t in range(T)]
    V = [(gens[i], nodes[j], t, sol.policy.V[i, j, t])
         for t in range(T) for i in range(inst.n_gen) for j in range(inst.n_node)]
    Z = [(gens[i], gens[k], t, sol.policy.Z[i, k, t])
         for t in range(T) for i in range(inst.n_gen) for k in range(inst.n_gen)]
    tables = [("schedule", ("generator", "period", "commitment", "u"), sched),
              ("V", ("generator", "node", "period", "value"), V),
              ("Z", ("generator", "residual_of", "period", "value"), Z)]
    return Document(f"solve {inst.name}", scalars, tables)


def _cmd_price(cfg, inst):
    if cfg.scheme == "chull":
        res = convex_hull_prices(inst)
        rows = [("chull", gid, 0.0, rev, 0.0, lag, rev + lag) for gid, rev, lag in
                zip(res.generators, res.revenue, res.lagrangian)]
        scalars = [("grand_total", float(res.payments.sum())), ("dual_objective", res.dual_objective),
                   ("uc_objective", res.uc_objective), ("duality_gap", res.gap)]
        scalars += [(f"price[{t}]", p) for t, p in enumerate(res.prices)]
        tables = [("payments", PAYMENT_HEADER, rows),
                  ("lost_opportunity", ("generator", "uplift"), list(zip(res.generators, res.uplift)))]
        return Document(f"price chull {inst.name}", scalars, tables, csv_scalars=False)
    if cfg.scheme == "marginal":
        table = deterministic_marginal(inst)
    else:
        sol, cert = solve_instance(inst)
        table = pay_as_bid_day_ahead(sol, inst) if cfg.scheme == "payasbid" else adaptive_uniform_day_ahead(sol, cert, inst)
    scalars = [("grand_total", table.grand_total)]
    if table.prices is not None:
        scalars += [(f"price[{t}]", p) for t, p in enumerate(table.prices)]
    return Document(f"price {table.scheme} {inst.name}", scalars, [("payments", PAYMENT_HEADER, _payment_rows(table))],
                    csv_scalars=False)


def _cmd_sweep(cfg, inst):
    sol, _ = solve_instance(inst)
    results = realization_sweep(inst, sol, cfg.grid, cfg.period)
    rows = [(r.total_residual, r.cost, r.bound, r.price) for r in results]
    header = ("total_residual_mw", "lp_cost", "adaptive_bound", "marginal_price")
    return Document(f"sweep {inst.name} period {cfg.period}", [("points", len(rows))], [("sweep", header, rows)],
                    csv_scalars=False)


def _cmd_verify(cfg, inst):
    sol, _, checks = verify_instance(inst, seed=cfg.seed)
    rows = [(c.name, "skip" if c.skipped else ("pass" if c.passed else "fail"), c.value, c.detail) for c in checks]
    scalars = [("objective", sol.objective), ("checks", len(checks)),
               ("failed", sum(not c.passed for c in checks)), ("passed", all_passed(checks))]
    doc = Document(f"verify {inst.name}", scalars, [("checks", ("check", "status", "value", "detail"), rows)])
    return doc, all_passed(checks)


def _cmd_compare(cfg, inst):
    rows = []
    det = deterministic_uc(inst)
    marg = deterministic_marginal(inst)
    rows.append(("deterministic-marginal", det.objective, marg.grand_total,
                 sum(r.uplift for r in marg.rows), ""))
    sol, cert = solve_instance(inst)
    bid = pay_as_bid_day_ahead(sol, inst)
    uni = adaptive_uniform_day_ahead(sol, cert, inst)
    _, g = worst_case_settlement(sol, cert, inst)
    rows.append(("aro-payasbid", sol.objective, bid.grand_total, 0.0, "day-ahead"))
    rows.append(("aro-uniform", sol.objective, uni.grand_total, sum(r.uplift for r in uni.rows), "day-ahead"))
    rows.append(("aro-worstcase", sol.objective, g.grand_total, sum(r.uplift for r in g.rows), "after worst case"))
    try:
        ch = convex_hull_prices(inst)
        rows.append(("convex-hull", ch.dual_objective, float(ch.payments.sum()), float(ch.uplift.sum()),
                     f"gap {_fmt(ch.gap)}"))
    except ResourceLimitError as exc:
        rows.append(("convex-hull", float("nan"), float("nan"), float("nan"), f"skipped: {exc}"))
    header = ("scheme", "objective", "payments", "uplift", "note")
    return Document(f"compare {inst.name}", [], [("comparison", header, rows)])


def run(cfg):
    """Execute one command; never raises for domain errors."""
    try:
        inst = _instance(cfg)
        ok = True
        if cfg.command == "verify":
            doc, ok = _cmd_verify(cfg, inst)
        else:
            doc = {"solve": _cmd_solve, "price": _cmd_price, "sweep": _cmd_sweep,
                   "compare": _cmd_compare}[cfg.command](cfg, inst)
    except InfeasibleError as exc:
        return RunOutcome(EXIT_INFEASIBLE, message=f"infeasible: {exc}")
    except ConsistencyError as exc:
        return RunOutcome(EXIT_CONSISTENCY, message=f"consistency check failed: {exc}")
    except (AroError, ValueError, OSError) as exc:
        return RunOutcome(EXIT_INPUT, message=f"error: {exc}")
    text = _RENDER[cfg.fmt](doc)
    if ok:
        return RunOutcome(EXIT_OK, text)
    return RunOutcome(EXIT_CONSISTENCY, text, "one or more checks failed")


# -- argument parsing ------------------------------------------------------------

class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _floats(text):
    try:
        return tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from None


def build_parser():
    common = _Parser(add_help=False)
    src = common.add_mutually_exclusive_group(required=True)
    src.add_argument("--builtin", choices=builtin_names())
    src.add_argument("--file", help="instance JSON document")
    common.add_argument("--norm", choices=[o.value for o in NormOrder])
    common.add_argument("--gamma-q", type=_floats, help="load budget, one value or one per period")
    common.add_argument("--delta-p", type=_floats, help="capacity budget, one value or one per period")
    common.add_argument("--format", dest="fmt", choices=FORMATS, default="table")
    common.add_argument("--out", help="write the output here instead of stdout")
    common.add_argument("--seed", type=int, default=0, help="seed for sampling checks")

    parser = _Parser(prog="aro-pricing", description="Adaptive robust unit commitment and pricing.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("solve", parents=[common], help="commitments, decision rules and the energy price")
    p = sub.add_parser("price", parents=[common], help="a payment table")
    p.add_argument("--scheme", choices=SCHEMES, default="payasbid")
    p = sub.add_parser("sweep", parents=[common], help="intra-day cost against the adaptive bound")
    p.add_argument("--grid", type=int, default=21)
    p.add_argument("--period", type=int, default=0)
    sub.add_parser("verify", parents=[common], help="theorem and invariant checks")
    sub.add_parser("compare", parents=[common], help="totals under every scheme")
    return parser


def parse_config(argv):
    ns = build_parser().parse_args(argv)
    return RunConfig(
        command=ns.command, builtin=ns.builtin, file=ns.file, norm=ns.norm,
        gamma_q=ns.gamma_q, delta_p=ns.delta_p, scheme=getattr(ns, "scheme", "payasbid"),
        grid=getattr(ns, "grid", 21), period=getattr(ns, "period", 0), fmt=ns.fmt, out=ns.out, seed=ns.seed,
    )


def main(argv=None):
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    outcome = run(cfg)
    if outcome.text:
        if cfg.out:
            try:
                Path(cfg.out).write_text(outcome.text)
            except OSError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_INPUT
        else:
            sys.stdout.write(outcome.text)
    if outcome.message:
        print(outcome.message, file=sys.stderr)
    return outcome.code


if __name__ == "__main__":
    sys.exit(main())
