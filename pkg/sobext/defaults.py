# Collinearity tolerance on the orientation determinant used by normalization
COLLINEAR_TOLERANCE = 1e-12

# Good grid selection
DEFAULT_CANDIDATES = 16
BOUNDARY_SAMPLES_PER_SIDE = 64
AREA_SUBGRID = 64
SHIFT_WINDOW_HIGH = 1 / 10
SHIFT_WINDOW_LOW = 1 / 10 - 1 / 40
SEPARATION_FACTOR = 1 / 40

# Boundary maps
CANTOR_DEPTH = 24
MAP_DOMAIN = ((-0.25, -0.25), (1.25, 1.25))
SMOOTH_SHEAR_AMPLITUDE = 0.1

# Geodesics and shortest curve extensions
GEODESIC_CACHE_RESOLUTION = 2**-12
INFLATION_FACTOR = 1e-9
# endpoints this close to the boundary, relative to the diameter, are snapped onto it
SNAP_TOLERANCE = 1e-9
LIPSCHITZ_SCALES = 10

# Linearization
EDGE_SAMPLES = 16
MIN_CLEARANCE = 1e-12
MAX_MARKED_POINTS = 16

# Homotopies and injectivization
NUDGE_DIAL = 0.1
TIME_SAMPLING_EXPONENT = 7
HOMOTOPY_CHECK_SAMPLES = 9
# corridor slack for arm certification, relative to the corridor extent
CORRIDOR_TOLERANCE = 1e-9

# 3D extension
DEFAULT_LEVELS = 4
SLICE_SAMPLES = 24

# Analysis verdict rule
CONVERGING_SLOPE = -0.2
DIVERGING_SLOPE = 0.05

DEFAULT_SEED = 42
