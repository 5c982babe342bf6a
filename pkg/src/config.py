import os


# Logging / parallelism overrides
LOG_LEVEL = os.environ.get('FDDE_LOG_LEVEL', 'WARNING').upper()
WORKERS = int(os.environ.get('FDDE_WORKERS', '1'))

# Solver defaults
DEFAULT_STEP = 0.01
DEFAULT_T_END = 100.0
DIVERGENCE_THRESHOLD = 1e8
HISTORY_OFFSET = 0.1
# x2 of (delta, epsilon, p, q) = (-0.5, 2, 4, 1) attracts only offsets up to about 0.05
NARROW_BASIN_OFFSET = 0.05

# Core tolerances
EQUILIBRIUM_TOL = 1e-12
DISCRIMINANT_CLAMP = 1e-14
FD_STEP = 1e-6

# Stability / region tolerances
BOUNDARY_TOL = 1e-12
CURVE_TOL = 1e-9
CROSSING_SCAN_POINTS = 512
CROSSING_RESIDUAL_TOL = 1e-9

# Mittag-Leffler series regime
ML_SERIES_LIMIT = 5.0
ML_MAX_TERMS = 2000
ML_LOG_OVERFLOW = 700.0
ML_QUAD_SPLIT = 2.0

# Chaos defaults
MI_BINS = 16
MIN_LAG_SERIES = 1000
MIN_MLE_SERIES = 2000
EMBEDDING_DIM = 3
EVOLVE_STEPS = 5
REPLACEMENT_FRACTION = 0.1
REPLACEMENT_CANDIDATES = 20
MAX_REPLACEMENT_ANGLE = 0.3
CLUSTER_TOL = 1e-3
TRANSIENT_FRACTION = 0.5
CHAOS_T_END = 400.0

# Output configuration
LOCK_TIMEOUT = 5.0
FLOAT_DIGITS = 17

# Exit codes
EXIT_OK = 0
EXIT_STORAGE = 1
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_NUMERIC = 4
EXIT_DIVERGED = 5

# Commands and their CSV headers
VALID_COMMANDS = (
    'simulate',
    'equilibria',
    'classify',
    'crit-delay',
    'region',
    'bifurcation',
    'lyapunov',
)

CSV_HEADERS = {
    'simulate': ('t', 'x'),
    'equilibria': ('branch', 'value', 'a', 'b'),
    'classify': ('branch', 'value', 'a', 'b', 'verdict', 'tau_star', 'source'),
    'crit-delay': ('a', 'b', 'alpha', 'tau_star', 'omega'),
    'region': ('q', 'delta', 'label'),
    'bifurcation': ('tau', 'extremum'),
    'lyapunov': ('tau', 'mle'),
}

OUTPUT_FORMATS = ('csv', 'json')
