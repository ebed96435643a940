import os
import pathlib

ENTROLAB_HOME = (
    pathlib.Path.cwd() / "entrolab-out"
    if not os.environ.get("ENTROLAB_HOME", "")
    else pathlib.Path(os.environ.get("ENTROLAB_HOME", ""))
)

DEFAULT_JOBS = int(os.environ.get("ENTROLAB_JOBS", "0") or 0) or max(
    1, os.cpu_count() or 1
)

STRICT_MODE = os.environ.get("ENTROLAB_STRICT", "0") in ["1", "true", "True"]

# values this close to 1.0 are snapped to 0.0 after reduction mod 1
MOD1_SNAP_TOL = 1e-12
# atoms closer than this are merged into one
ATOM_MERGE_TOL = 1e-12

EXACT_COVER_LIMIT = 24
DEFAULT_GRID_SIZE = 4096
DEFAULT_TORUS_GRID_SIZE = 256
DEFAULT_ORBIT_LENGTH = 1024
ESCAPE_NORM = 1e12
INVARIANCE_THRESHOLD = 1e-9
# fitted slopes this close to 0 are reported as 0.0
ZERO_RATE_TOL = 1e-12
CHAIN_TOLERANCE = 0.05
SATURATION_FRACTION = 0.25
MIN_FIT_ENTRIES = 4
POWER_ITERATION_RTOL = 1e-10
POWER_ITERATION_MAX_STEPS = 100_000

DEFAULT_EPS_GRID = tuple(2.0**-k for k in range(1, 7))
DEFAULT_SYMBOLIC_BASE = 0.5

REPORT_FILE = "report.json"
SERIES_DIR = "series"
