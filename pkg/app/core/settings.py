# ======================================================
# Library Defaults (single source of truth)
# ======================================================
#
# Every value here can be overridden from the [tolerances]
# section of a run configuration; the effective values are
# echoed into the output metadata.

LIBRARY_VERSION = "1.0.0"

# ------------------------------------------------------
# Algebra
# ------------------------------------------------------

SYMPLECTIC_TOL = 1e-12

# ------------------------------------------------------
# Cranked oscillator
# ------------------------------------------------------

DIAGONAL_THRESHOLD = 1e-8
CRITICAL_BISECTION_TOL = 1e-8

# ------------------------------------------------------
# Variational cranking
# ------------------------------------------------------

SOLVER_XATOL = 1e-10
SOLVER_FATOL = 1e-12
SOLVER_MAXITER = 20000
STATIONARITY_TOL = 1e-8
BRANCH_TOL = 1e-8

SELFCONSISTENT_MAX_ITER = 100
SEED_DEFORMATION = 0.05

INVERSION_TOL = 1e-10
SWEEP_POINTS = 32
CRITICAL_MARGIN = 1e-3

INERTIA_STEP = 1e-4

# ------------------------------------------------------
# Geometry
# ------------------------------------------------------

TANGENT_STEP = 1e-5
ANGLE_STEP = 1e-5
PAIRING_THRESHOLD = 1e-8

# ------------------------------------------------------
# Scissors mode
# ------------------------------------------------------

RESTORING_STEP = 1e-3
SCISSORS_SPLITTING = "frequency_difference"

# ------------------------------------------------------
# Run configuration defaults
# ------------------------------------------------------

DEFAULT_DEGENERACY = 2
DEFAULT_PRECISION = 12
DEFAULT_FORMAT = "csv"
DEFAULT_BASE_FREQUENCY = 1.0
DEFAULT_QQ_ISOSCALAR = -0.01
DEFAULT_QQ_ISOVECTOR = 0.005
DEFAULT_STEPS = 11
DEFAULT_ETA_MAX = 0.5
