"""Command-line entry point.

Data goes to stdout, diagnostics to stderr. Exit codes: 0 success,
2 infeasible parameters, 3 invalid input, 4 strict solver did not converge,
5 reproduced table outside tolerance.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field

from . import experiments, foc, statics
from .io import (
    FORMATS,
    ConfigError,
    comparison_doc,
    comparison_rows,
    load_config,
    parse_assignment,
    policy_from_mapping,
    render,
    scenario_table_doc,
    scenario_table_rows,
    sweep_doc,
)
from .params import ParameterError, validate
from .steady_state import (
    RECORD_FIELDS,
    CapitalWeight,
    ConsumptionFormula,
    InfeasibleParameters,
    compute_constants,
    solve,
)

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_INVALID = 3
EXIT_NO_CONVERGENCE = 4
EXIT_MISMATCH = 5

COMMANDS = ("solve", "verify", "statics", "sweep", "reproduce")

SOLVER_DEFAULTS = {
    "tol": 1e-12,
    "max_iter": 200,
    "lambda_weight": CapitalWeight.TABLE_CONSISTENT.value,
    "fd_step": 1e-5,
    "rel_tol": 1e-6,
    "digits": None,
    "workers": 1,
}


class _Parser(argparse.ArgumentParser):
    # usage errors are invalid input, not the infeasibility code argparse would use
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    policy: object = None
    fmt: str = "table"
    solver: dict = field(default_factory=dict)
    verbose: bool = False
    table: int | None = None
    sweep_fields: tuple[str, ...] = ()
    sweep_grid: list = field(default_factory=list)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML file with parameters and optional "
                        "[policy], [solver], [output] sections")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override one parameter (repeatable)")
    common.add_argument("--capital-weight", choices=[c.value for c in CapitalWeight])
    common.add_argument("--consumption-formula", choices=[c.value for c in ConsumptionFormula])
    common.add_argument("--format", dest="fmt", choices=FORMATS)
    common.add_argument("-v", "--verbose", action="store_true",
                        help="solver trace and notes on stderr")

    p = _Parser(prog="gigrowth", description="Steady states of a two-sector growth model "
                "with a gig-economy sector.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("solve", parents=[common], help="closed-form steady state")

    v = sub.add_parser("verify", parents=[common],
                       help="strict FOC solve and discrepancy against the closed form")
    v.add_argument("--tol", type=float, help="relative residual tolerance (default 1e-12)")
    v.add_argument("--max-iter", type=int, help="Newton iteration cap (default 200)")
    v.add_argument("--lambda-weight", choices=[c.value for c in CapitalWeight])

    s = sub.add_parser("statics", parents=[common], help="TFP comparative statics")
    s.add_argument("--fd-step", type=float, help="relative finite-difference step (default 1e-5)")
    s.add_argument("--rel-tol", type=float, help="agreement tolerance (default 1e-6)")
    s.add_argument("--digits", type=int,
                   help="evaluate finite differences with mpmath at this precision")

    w = sub.add_parser("sweep", parents=[common], help="solve over a parameter grid")
    w.add_argument("--field", required=True,
                   help="parameter name, or comma-separated names for a joint sweep")
    w.add_argument("--grid", nargs="+", required=True,
                   help="grid points; joint points separate values with ':'")
    w.add_argument("--workers", type=int)

    r = sub.add_parser("reproduce", parents=[common], help="rebuild a published table")
    r.add_argument("--table", type=int, choices=(1, 2), required=True)
    return p


def _grid(fields: tuple[str, ...], raw: list[str]) -> list:
    out = []
    for item in raw:
        parts = item.split(":")
        if len(parts) != len(fields):
            raise ConfigError(f"grid point {item!r} needs {len(fields)} values")
        try:
            values = tuple(float(x) for x in parts)
        except ValueError:
            raise ConfigError(f"grid point {item!r} is not numeric") from None
        out.append(values[0] if len(fields) == 1 else values)
    return out


def make_config(args: argparse.Namespace) -> RunConfig:
    loaded = load_config(args.config) if args.config else None
    params = dict(experiments.TABLE1_BASE)
    policy_map, solver, output = {}, dict(SOLVER_DEFAULTS), {}
    if loaded:
        params.update(loaded.params)
        policy_map.update(loaded.policy)
        unknown = set(loaded.solver) - set(SOLVER_DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown solver keys: {sorted(unknown)}")
        solver.update(loaded.solver)
        output = loaded.output
    for text in args.overrides:
        key, value = parse_assignment(text)
        params[key] = value
    if args.capital_weight:
        policy_map["capital_weight"] = args.capital_weight
    if args.consumption_formula:
        policy_map["consumption_formula"] = args.consumption_formula
    for name in ("tol", "max_iter", "lambda_weight", "fd_step", "rel_tol", "digits", "workers"):
        value = getattr(args, name, None)
        if value is not None:
            solver[name] = value
    fmt = args.fmt or output.get("format", "table")
    if fmt not in FORMATS:
        raise ConfigError(f"unknown output format {fmt!r}")
    cfg = RunConfig(command=args.command, params=params, policy=policy_from_mapping(policy_map),
                    fmt=fmt, solver=solver, verbose=args.verbose)
    if args.command == "reproduce":
        cfg.table = args.table
    if args.command == "sweep":
        cfg.sweep_fields = tuple(f.strip() for f in args.field.split(","))
        cfg.sweep_grid = _grid(cfg.sweep_fields, args.grid)
    return cfg


def _kv_output(pairs: dict, fmt: str, doc: dict) -> str:
    return render(["field", "value"], [[k, v] for k, v in pairs.items()], fmt, doc)


def _solve(cfg, out, err):
    params = validate(cfg.params)
    ss = solve(params, cfg.policy)
    record = ss.as_record()
    doc = {"policy": cfg.policy.as_dict(), "params": params.as_dict(),
           "constants": compute_constants(params).as_dict(), "steady_state": record,
           "boundary": ss.boundary}
    if cfg.fmt == "csv":
        out.write(render(list(RECORD_FIELDS), [list(record.values())], "csv"))
    else:
        out.write(_kv_output(record, cfg.fmt, doc))
    return EXIT_OK


def _verify(cfg, out, err):
    params = validate(cfg.params)
    closed = solve(params, cfg.policy)
    weight = CapitalWeight(cfg.solver["lambda_weight"])
    sol = foc.strict_solve(params, tol=float(cfg.solver["tol"]),
                           max_iter=int(cfg.solver["max_iter"]), policy=cfg.policy,
                           lambda_weight=weight, trace_stream=err if cfg.verbose else None)
    report = foc.discrepancy_report(closed, sol.state, params)
    strict_record = foc.as_steady_state(params, sol.state).as_record()
    doc = {
        "policy": cfg.policy.as_dict(), "lambda_weight": weight.value,
        "converged": sol.converged, "iterations": sol.iterations, "message": sol.message,
        "relative_residual_sup_norm": sol.residuals.relative_sup_norm,
        "residuals": sol.residuals.raw, "relative_residuals": sol.residuals.relative,
        "closed_form": closed.as_record(), "strict": strict_record, "discrepancy": report,
        "trace": list(sol.trace),
    }
    header = ["field", "closed_form", "strict", "rel_diff"]
    rows = [[k, closed.as_record()[k], strict_record[k], report[k]] for k in foc.DISCREPANCY_FIELDS]
    out.write(render(header, rows, cfg.fmt, doc))
    print(f"strict solve: {sol.message} after {sol.iterations} iterations, "
          f"relative residual {sol.residuals.relative_sup_norm:.3e}", file=err)
    return EXIT_OK if sol.converged else EXIT_NO_CONVERGENCE


def _statics(cfg, out, err):
    params = validate(cfg.params)
    solve(params, cfg.policy)  # raises when infeasible
    sc = statics.sign_constants(params)
    step, tol, digits = float(cfg.solver["fd_step"]), float(cfg.solver["rel_tol"]), cfg.solver["digits"]
    doc = {"policy": cfg.policy.as_dict(), "sign_constants": sc.as_dict(),
           "printed_sign_constants": statics.printed_sign_constants(params).as_dict(),
           "predicted_signs": statics.predict_signs(sc).as_dict(), "derivatives": {}}
    rows, all_ok = [], True
    for sector in statics.Sector:
        name = statics.TFP_FIELD[sector]
        an = statics.analytic_tfp_derivatives(params, sector, cfg.policy)
        fd = statics.fd_derivatives(params, sector, step, cfg.policy, digits)
        agree = statics.derivative_agreement(params, sector, tol, step, cfg.policy,
                                             ("d_yp", "d_yd", "d_y", "d_c"), digits)
        all_ok &= all(a.ok for a in agree)
        doc["derivatives"][name] = {
            "analytic": an.as_dict(), "fd": fd.as_dict(),
            "agreement": {a.field: {"rel_error": a.rel_error, "ok": a.ok} for a in agree},
        }
        rows += [[name, a.field, a.analytic, a.fd, a.rel_error, a.ok] for a in agree]
    doc["all_agree"] = all_ok
    if not all_ok:
        doc["erratum"] = statics.erratum_report(params, step)
        print("warning: analytic and finite-difference derivatives disagree beyond "
              f"{tol:g}; see the erratum fields in the json output", file=err)
    out.write(render(["tfp", "field", "analytic", "fd", "rel_error", "ok"], rows, cfg.fmt, doc))
    return EXIT_OK


def _sweep(cfg, out, err):
    fields = cfg.sweep_fields[0] if len(cfg.sweep_fields) == 1 else cfg.sweep_fields
    result = experiments.sweep(cfg.params, fields, cfg.sweep_grid, cfg.policy,
                               workers=int(cfg.solver["workers"]))
    header, rows = scenario_table_rows(result.table)
    out.write(render(header, rows, cfg.fmt, sweep_doc(result)))
    for name, t in result.trends.items():
        extra = f" (first sign change at {t.first_sign_change})" if t.first_sign_change else ""
        print(f"{name}: {t.trend}{extra}", file=err)
    dropped = len(result.table.rows) - len(result.feasible_indices)
    if dropped:
        print(f"{dropped} grid point(s) infeasible", file=err)
    return EXIT_OK


def _reproduce(cfg, out, err):
    build = {1: experiments.builtin_table1, 2: experiments.builtin_table2}[cfg.table]
    table = build(cfg.policy)
    cmp = experiments.compare_to_printed(table, cfg.table)
    if cfg.fmt == "json":
        out.write(render([], [], "json", comparison_doc(table, cmp)))
    elif cfg.fmt == "csv":
        out.write(render(*scenario_table_rows(table), "csv"))
    else:
        header, rows = scenario_table_rows(table)
        out.write(render(header, rows, "table", digits=3 if cfg.table == 1 else None))
        out.write("\n")
        out.write(render(*comparison_rows(cmp), "table"))
    failing = [c for c in cmp if not c.ok]
    for c in failing:
        print(f"mismatch {c.label} {c.column}: printed {c.printed}, computed {c.computed!r} "
              f"({c.kind} deviation {c.deviation:.3g} > {c.tolerance:g})", file=err)
    return EXIT_MISMATCH if failing else EXIT_OK


HANDLERS = {"solve": _solve, "verify": _verify, "statics": _statics, "sweep": _sweep,
            "reproduce": _reproduce}


def run(cfg: RunConfig, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        return HANDLERS[cfg.command](cfg, out, err)
    except ParameterError as exc:
        for e in exc.errors:
            print(f"invalid parameters: {e}", file=err)
        return EXIT_INVALID
    except InfeasibleParameters as exc:
        print(str(exc), file=err)
        return EXIT_INFEASIBLE
    except foc.SingularJacobian as exc:
        print(f"strict solver failed: {exc}", file=err)
        return EXIT_NO_CONVERGENCE
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INVALID


def main(argv=None, out=None, err=None) -> int:
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        cfg = make_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INVALID
    return run(cfg, out, err)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
