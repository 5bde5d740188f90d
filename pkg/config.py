import os
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

# --- Project Directories ---
ROOT_DIR = Path(__file__).parent
REPORTS_DIR = ROOT_DIR / "reports"
SCENARIO_DIR = ROOT_DIR / "scenarios"

# --- Verification Tolerances ---
DEFAULT_TOLERANCE = 1e-9
NUMERIC_TOLERANCE = 1e-7
STOKES_TOLERANCE = 1e-8

# --- Numeric Backend ---
DEFAULT_QUAD_ORDER = 8

# --- Covers and Partitions of Unity ---
DEFAULT_COVER_ARCS = 3
DEFAULT_OVERLAP = "1/24"
DEFAULT_POU = "c1cubic"

# --- Fibre Integration ---
DEFAULT_FIBRE_CONVENTION = "join"

# --- Reports ---
REPORT_SCHEMA_VERSION = "1.0"

# --- Runtime Environment ---
MAX_WORKERS = int(os.environ.get("DELIGNE_MAX_WORKERS", "4"))
LOG_LEVEL = os.environ.get("DELIGNE_LOG_LEVEL", "INFO")
