import os
import sys
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Import validation after loading env vars to avoid circular imports
from utils.env_validator import validate_env_vars, get_thread_count

# Validate environment variables on import
_is_valid, env_problems = validate_env_vars()
if not _is_valid:
    print("\n" + "=" * 60, file=sys.stderr)
    print("ERROR: Invalid BORPS_* environment variables!", file=sys.stderr)
    print("=" * 60, file=sys.stderr)
    for problem in env_problems:
        print(f"  - {problem}", file=sys.stderr)
    print("\nFix or unset them (see .env.example).", file=sys.stderr)
    print("=" * 60 + "\n", file=sys.stderr)
    sys.exit(2)

# Application settings
APP_NAME = "borps"
APP_VERSION = "1.0.0"
APP_DESCRIPTION = "Bayesian ordinal quantile regression with a partially collapsed Gibbs sampler."
SCHEMA_VERSION = 1
DEBUG = os.getenv("BORPS_DEBUG", "False").lower() in ("true", "1")
LOG_LEVEL = os.getenv("BORPS_LOG_LEVEL", "INFO").upper()
THREADS = get_thread_count()

# Sampler defaults
DEFAULT_ITERATIONS = 20000
DEFAULT_BURNIN = 10000
FAST_ITERATIONS = 5000
FAST_BURNIN = 2500
DEFAULT_THIN = 1

# Hyperparameter defaults
DEFAULT_C0 = 1e-3
DEFAULT_D0 = 1e-3
DEFAULT_B0_SCALE = 1e6

# Numerical safeguards
RESIDUAL_FLOOR = 1e-10
JITTER_SCHEDULE = (1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)
TAIL_SWITCH_SD = 4.0
DEGENERATE_SCALE_TOL = 1e-8
MAX_REDRAWS = 100

# Fitting surface
DEFAULT_QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)
DEFAULT_BOOTSTRAP_REPLICATES = 100
DEFAULT_BOOTSTRAP_LEVEL = 0.95
DEFAULT_RUNS = 15

# Simulation study
SIM_N = 300
SIM_CUTPOINTS = (5.0, 8.0)
SIM_QUANTILES = (0.25, 0.5, 0.75)
SIM_NULL_SCALE = 12.0
FIXED_CUTPOINT_SETTINGS = {
    "correct": (5.0, 8.0),
    "slight": (4.0, 9.0),
    "dramatic": (0.0, 13.0),
}

# Baseline solver
BASELINE_EPSILONS = tuple(10.0 ** -k for k in range(1, 9))
BASELINE_MAX_NEWTON = 200
BASELINE_TOL = 1e-8
