"""
Runs every registered scenario in a worker pool, writes one JSON report per scenario
into REPORTS_DIR and a summary table next to them.
"""

import logging
import sys
import os
from multiprocessing import Pool

import pandas as pd

# This line allows the script to import from the parent directory (e.g., config.py)
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from config import MAX_WORKERS, REPORTS_DIR
from core.scenarios import ScenarioConfig, run_scenario

# --- Setup Logging ---
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')

BATCH = [
    "ex7_1",
    "ex7_1_s1",
    "ex7_5(g=2)",
    "ex7_5(g=3)",
    "ex7_8(k=2)",
    "ex7_8(k=3)",
    "ex7_8(k=4)",
    "ex7_15",
    "ex7_15_curvature(k=1)",
    "ex7_15_curvature(k=2)",
    "gv_formal",
]


def _report_name(scenario: str) -> str:
    return scenario.replace("(", "_").replace(")", "").replace("=", "").replace(",", "_")


def run_one(scenario: str) -> dict:
    """Worker: one scenario, one report file, one summary row."""
    path = REPORTS_DIR / f"{_report_name(scenario)}.json"
    report = run_scenario(ScenarioConfig(scenario=scenario, backend="all", report=str(path)))
    return {
        "scenario": scenario,
        "pass": report["pass"],
        "checks": len(report["checks"]),
        "failed": sum(1 for c in report["checks"] if not c["pass"]),
        "seconds": report["timings"].get("total"),
        "error": report.get("error", ""),
        "report": str(path),
    }


def run_all(scenarios=BATCH, workers: int = MAX_WORKERS) -> pd.DataFrame:
    REPORTS_DIR.mkdir(parents=True, exist_ok=True)
    logging.info(f"Running {len(scenarios)} scenarios on {workers} workers.")
    with Pool(processes=workers) as pool:
        rows = pool.map(run_one, scenarios)
    summary = pd.DataFrame(rows).sort_values("scenario").reset_index(drop=True)
    summary.to_csv(REPORTS_DIR / "summary.csv", index=False)
    logging.info(f"Summary written to {REPORTS_DIR / 'summary.csv'}")
    return summary


if __name__ == '__main__':
    logging.info("--- Starting Scenario Batch ---")
    summary = run_all()
    print(summary.to_string(index=False))
    failures = int((~summary["pass"]).sum())
    if failures:
        logging.error(f"{failures} scenario(s) failed.")
        sys.exit(1)
    logging.info("--- All scenarios passed ---")
