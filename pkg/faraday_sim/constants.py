from pathlib import Path

DEFAULT_SPIN = 4.0
NONLINEARITY_COEFFICIENT = 1.2

#: Larmor frequency in units of |chi| used when no field is configured.
DEFAULT_LARMOR_RATIO = 200.0

DEFAULT_GRID_POINTS = 4000
DEFAULT_GRID_COLLAPSE_TIMES = 8.0
MIN_SAMPLES_PER_LARMOR_PERIOD = 20
#: Upper bound on automatically sized grids.
MAX_GRID_POINTS = 2_000_000

DEFAULT_PUMPING_CALIBRATION = 0.25
DEFAULT_ENSEMBLE_NODES = 7
#: Plateau used by scan-critical when no inhomogeneity is configured (seconds).
DEFAULT_PLATEAU_TIME = 10e-3

DEFAULT_TRIALS = 128
DEFAULT_BIN_TIME = 1e-6  # seconds
DEFAULT_PHOTON_FLUX = 1e12  # photons per second
DEFAULT_ROTATION_GAIN = 1.0

DEFAULT_INTEGRATOR_TOLERANCE = 1e-12
DEFAULT_MAX_SUBSTEPS = 2 ** 22

DEFAULT_FIT_WINDOW = 2.0
DEFAULT_REVIVAL_WINDOW_START = 2.0
#: Low-pass cutoff of the quadrature demodulator as a fraction of the Larmor frequency.
DEMOD_CUTOFF_FRACTION = 0.2
DEMOD_SETTLING_TIME_CONSTANTS = 3.0
MIN_SAMPLES_PER_PERIOD_DEMOD = 8

HERMITIAN_TOLERANCE = 1e-10
NORM_TOLERANCE = 1e-10
IMAGINARY_TOLERANCE = 1e-8
POSITIVITY_TOLERANCE = 1e-9
POSITIVITY_FAILURE = -1e-6

CONFIG_ENV_VAR = "FARADAY_SIM_CONFIG"
PRESET_DIR = Path(__file__).parent / "presets"
DEFAULT_PRESET_FILE = PRESET_DIR / "cesium-d2.json"
TEMPLATE_DIR = Path(__file__).parent / "templates"

#: Scattering time used when the probe section fixes neither intensity nor rate (seconds).
DEFAULT_SCATTERING_TIME = 1e-3
DEFAULT_POLARIZATION_ANGLE_DEG = 90.0
