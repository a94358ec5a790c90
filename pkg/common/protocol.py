# common/protocol.py

# Grid and solver defaults
DEFAULT_N = 201               # Grid nodes; odd so s = 0 is a node
MIN_N = 11
DEFAULT_R = 3.141592653589793  # Half-length used throughout the examples
NEWTON_TOL = 1e-10            # Sup-norm residual tolerance
NEWTON_MAX_ITER = 25
NEWTON_ROUNDOFF_FACTOR = 16.0    # floor = factor * eps * max|x| / h^4 (rounding of x through the fourth difference)
M_MAX = 10                    # Ray enumeration window

# Linear analysis
KERNEL_THRESHOLD_FACTOR = 10.0   # threshold = factor * h^2 * scale
KERNEL_GAP_FACTOR = 10.0         # required ratio sigma_{dim+1} / sigma_dim
MODE_MATCH_THRESHOLD = 0.999     # cosine similarity for matched_modes
MIN_SCAN_RESOLUTION = 16

# Lyapunov-Schmidt reduction
XI_RADIUS = 0.1               # |xi| allowed in solve_xtilde
PARAM_BOX = 0.25              # Half-width of the (alpha, beta) box around a double point
JACOBIAN_STEP = 1e-4
PROBE_OFFSET = 1e-2
WINDING_RADIUS = 1e-3
WINDING_SAMPLES = 256
MIN_WINDING_SAMPLES = 64
MAX_WINDING_SAMPLES = 4096
NOISE_FLOOR_FACTOR = 10.0

# Continuation
MAX_SEED_AMPLITUDE = 0.1
MAX_STEP = 0.05
MAX_AMPLITUDE = 0.25          # Truncated model stops being trustworthy past this
DETECT_TOL = 1e-8             # Bisection tolerance on the path parameter
MIN_DETECT_STEPS = 8

# Energy finite differences
AMPLITUDE_STEP = 1e-3
PARAMETER_STEP = 1e-4

# Worker pool
MAX_WORKERS = 4               # Limit simultaneous worker threads

# Exit codes
EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_PARTIAL = 4

# Output formats
FMT_JSON = "json"
FMT_CSV = "csv"
FLOAT_FORMAT = ".17g"         # 17 significant digits

# Frozen CSV headers
SCAN_CSV_HEADER = ["alpha", "beta", "sigma_min", "sigma_2", "dim"]
RAYS_CSV_HEADER = ["kind", "m1", "m2", "alpha", "beta"]

# Frozen JSON field names
KERNEL_FIELDS = ["alpha", "beta", "dim", "singular_values", "threshold",
                 "gap_factor", "gap_ok", "matched_modes", "similarities"]
PROBE_FIELDS = ["alpha", "beta", "slope", "classification", "det_closed_form",
                "det_numeric", "winding", "status", "message"]
BRANCH_FIELDS = ["t", "param_name", "param_value", "residual_norm", "x"]

# Probe statuses
STATUS_OK = "ok"
STATUS_BOUNDARY = "boundary"
STATUS_SOLVER_FAILURE = "solver_failure"
STATUS_INDETERMINATE = "indeterminate"

# Branch statuses
BRANCH_COMPLETE = "complete"
BRANCH_NEWTON_FAILED = "newton_failed"
BRANCH_AMPLITUDE_CAP = "amplitude_cap"
DETECT_FIELDS = ["s", "alpha", "beta", "mode", "similarity"]
VERIFY_FIELDS = ["name", "passed", "message"]

# Ray polylines
RAY_SAMPLES = 32              # Points per ray between its beta = 0 crossing and alpha_max
