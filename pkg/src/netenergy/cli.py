"""Command-line entry point.

Exit codes: 0 success, 1 error, 2 infeasible scenario, 64 usage error.
Emission limits on the command line are in MtCO2-eq/y.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources as importlib_resources
from pathlib import Path

from .dataset import MissingFile, ParseError, atomic_write_text, load_bundle
from .gsa import (
    analyze_second_order,
    default_parameters,
    pdf_estimate,
    screen_first_order,
)
from .lp import EnergyInvested, assemble, write_lp
from .model import ValidationError
from .outputs import (
    frontier_tables,
    pdf_csv,
    read_custom_objective,
    report_tables,
    scenario_to_dict,
    screening_csv,
    screening_json,
    sobol_csv,
    sobol_json,
    write_json,
)
from .scenarios import T_PER_MT, InfeasibleScenario, frontier_csv, run_reference, run_scenario, run_sweep

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE, EXIT_USAGE = 0, 1, 2, 64

log = logging.getLogger("netenergy")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise _UsageError(message)


def mini_be_path() -> Path:
    """Directory of the bundled mini-BE dataset."""
    return Path(str(importlib_resources.files("netenergy") / "data" / "mini_be"))


def _dataset(arg: str) -> Path:
    return mini_be_path() if arg == "mini-be" else Path(arg)


def _objective(arg: str):
    if arg == "energy":
        return EnergyInvested()
    if arg.startswith("custom:"):
        return read_custom_objective(arg[len("custom:"):])
    raise _UsageError(f"--objective must be 'energy' or 'custom:FILE', got {arg!r}")


def _limit(mt: float | None) -> float | None:
    return None if mt is None else mt * T_PER_MT


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="netenergy", description="EROI-optimal energy system planning")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, limit=True):
        sp.add_argument("--dataset", required=True, help="bundle directory, or 'mini-be'")
        sp.add_argument("--objective", default="energy", help="energy | custom:FILE")
        sp.add_argument("--method", default="auto", choices=["auto", "simplex", "highs"])
        if limit:
            sp.add_argument("--gwp-limit", type=float, default=None, help="MtCO2-eq/y")

    run = sub.add_parser("run", help="solve one scenario and write the report JSON")
    common(run)
    run.add_argument("--out", required=True)

    sw = sub.add_parser("sweep", help="emission-cap sweep, frontier CSV")
    common(sw, limit=False)
    sw.add_argument("--step", type=float, default=0.05)
    sw.add_argument("--jobs", type=int, default=1)
    sw.add_argument("--include-reference", action="store_true")
    sw.add_argument("--out", required=True)

    g = sub.add_parser("gsa", help="PCE sensitivity analysis of the EROI")
    common(g)
    g.add_argument("--stage", choices=["screen", "full"], default="full")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--samples", type=int, default=None, help="samples per PCE fit")
    g.add_argument("--runs", type=int, default=5)
    g.add_argument("--pdf-samples", type=int, default=10**6)
    g.add_argument("--bins", type=int, default=100)
    g.add_argument("--jobs", type=int, default=1)
    g.add_argument("--out", required=True, help="output directory")

    r = sub.add_parser("report", help="plot-ready CSV tables from a report JSON or frontier CSV")
    r.add_argument("--input", required=True)
    r.add_argument("--out", required=True, help="output directory")

    e = sub.add_parser("export-lp", help="write the LP in text form")
    common(e)
    e.add_argument("--out", required=True)
    return p


def _cmd_run(a) -> int:
    model = load_bundle(_dataset(a.dataset)).model
    result, _ = run_scenario(model, _objective(a.objective), _limit(a.gwp_limit), a.method)
    write_json(scenario_to_dict(result), a.out)
    if not result.feasible:
        log.error("scenario is %s", result.status.value)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _cmd_sweep(a) -> int:
    model = load_bundle(_dataset(a.dataset)).model
    spec = _objective(a.objective)
    ref = run_reference(model, spec, a.method)
    results = run_sweep(model, spec, a.step, ref, a.method, a.jobs)
    frontier_csv(ref, results, a.out, a.include_reference)
    return EXIT_OK


def _cmd_gsa(a) -> int:
    bundle = load_bundle(_dataset(a.dataset))
    params = list(bundle.uncertain) or default_parameters(bundle.model)
    if not params:
        raise ValueError("no uncertain parameters in the bundle and none derivable")
    kw = dict(gwp_limit=_limit(a.gwp_limit), spec=_objective(a.objective), method=a.method, n_jobs=a.jobs)
    out = Path(a.out)
    screen = screen_first_order(bundle.model, params, runs=a.runs, n_samples=a.samples, seed=a.seed, **kw)
    atomic_write_text(out / "screening.json", screening_json(screen))
    atomic_write_text(out / "screening.csv", screening_csv(screen))
    if a.stage == "screen":
        return EXIT_OK
    if not screen.shortlist:
        raise ValueError("screening kept no parameter")
    report, surrogate = analyze_second_order(bundle.model, screen.shortlist, n_samples=a.samples,
                                             seed=a.seed, **kw)
    atomic_write_text(out / "sobol.json", sobol_json(report))
    atomic_write_text(out / "sobol.csv", sobol_csv(report))
    pdf = pdf_estimate(surrogate, n=a.pdf_samples, bins=a.bins, seed=a.seed)
    atomic_write_text(out / "pdf.csv", pdf_csv(pdf))
    return EXIT_OK


def _cmd_report(a) -> int:
    src = Path(a.input)
    text = src.read_text(encoding="utf-8")
    tables = report_tables(json.loads(text)) if src.suffix == ".json" else frontier_tables(text)
    for name, body in tables.items():
        atomic_write_text(Path(a.out) / name, body)
    return EXIT_OK


def _cmd_export_lp(a) -> int:
    model = load_bundle(_dataset(a.dataset)).model
    write_lp(assemble(model, _objective(a.objective), _limit(a.gwp_limit)), a.out)
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "gsa": _cmd_gsa,
    "report": _cmd_report,
    "export-lp": _cmd_export_lp,
}


def cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError:
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"netenergy: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleScenario as exc:
        print(f"netenergy: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (MissingFile, ParseError, ValidationError, ValueError, KeyError, OSError) as exc:
        print(f"netenergy: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
