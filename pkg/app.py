"""
Command-line entry point: runs the worked Deligne-cohomology scenarios and writes JSON reports.

    python app.py run --scenario ex7_1
    python app.py run --scenario "ex7_8(k=3)" --backend all --report reports/ex7_8.json --csv reports/ex7_8/
    python app.py compare --scenario ex7_15
    python app.py list
"""

import argparse
import json
import logging
import sys

from config import (
    DEFAULT_COVER_ARCS, DEFAULT_FIBRE_CONVENTION, DEFAULT_OVERLAP, DEFAULT_POU, DEFAULT_QUAD_ORDER,
    DEFAULT_TOLERANCE, LOG_LEVEL,
)
from core.errors import ConfigurationError
from core.scenarios import BACKEND_CHOICES, SCENARIOS, ScenarioConfig, compare_backends, run_scenario

# --- Setup Logging ---
logging.basicConfig(level=getattr(logging, LOG_LEVEL.upper(), logging.INFO),
                    format='%(asctime)s - %(levelname)s - %(message)s')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Smooth Deligne cohomology of families: scenario runner.")
    commands = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (("run", "run one scenario and verify its checks"),
                            ("compare", "run one scenario on two backends and compare")):
        cmd = commands.add_parser(name, help=help_text)
        cmd.add_argument("--scenario", required=True, help="scenario id, e.g. ex7_1, 'ex7_8(k=3)' or a .json file")
        cmd.add_argument("--backend", choices=BACKEND_CHOICES, default="exact")
        cmd.add_argument("--quad-order", type=int, default=DEFAULT_QUAD_ORDER)
        cmd.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
        cmd.add_argument("--cover-arcs", type=int, default=DEFAULT_COVER_ARCS)
        cmd.add_argument("--overlap", default=DEFAULT_OVERLAP, help="arc overlap as a rational, e.g. 1/24")
        cmd.add_argument("--pou", choices=("c1cubic", "pl"), default=DEFAULT_POU)
        cmd.add_argument("--convention", choices=("join", "shuffle", "signed-shuffle"),
                         default=DEFAULT_FIBRE_CONVENTION)
        cmd.add_argument("--report", help="write the JSON report to this path")
        cmd.add_argument("--csv", help="write form coefficient tables into this directory")

    commands.add_parser("list", help="list the registered scenarios")
    return parser


def config_from_args(args: argparse.Namespace) -> ScenarioConfig:
    return ScenarioConfig(
        scenario=args.scenario,
        backend=args.backend,
        tolerance=args.tolerance,
        quad_order=args.quad_order,
        cover_arcs=args.cover_arcs,
        overlap=args.overlap,
        pou=args.pou,
        convention=args.convention,
        report=args.report,
        csv=args.csv,
    )


def main(argv=None) -> int:
    """Returns 0 iff every check of the requested run passed."""
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name, (_, description) in SCENARIOS.items():
            print(f"{name:<18} {description}")
        return 0
    try:
        cfg = config_from_args(args)
        report = run_scenario(cfg) if args.command == "run" else compare_backends(cfg)
    except ConfigurationError as e:
        logging.error(f"Configuration error: {e}")
        return 2
    failed = [c["name"] for c in report["checks"] if not c["pass"]]
    summary = {"scenario": report["scenario"], "pass": report["pass"], "checks": len(report["checks"]),
               "failed": failed}
    if "error" in report:
        summary["error"] = report["error"]
    print(json.dumps(summary, indent=2))
    return 0 if report["pass"] else 1


if __name__ == '__main__':
    sys.exit(main())
