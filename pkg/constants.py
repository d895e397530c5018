"""
Default knobs for extraction, dataset assembly and parameter search.
"""
import math

SCHEMA_VERSION = "1.0"

DEFAULT_DBU_PER_MICRON = 1000
DEFAULT_PATCH_MULTIPLE = 9
DEFAULT_CLOCK_PERIOD = 1.0e-9  # seconds
DEFAULT_MAX_PATHS = 1000
DEFAULT_MAX_STAGES = 64
DEFAULT_MAX_EXPANSIONS = 200_000
DEFAULT_THREADS = 1

# switching power model
DEFAULT_ACTIVITY = 0.1
DEFAULT_VDD = 0.9
DEFAULT_PORT_DRIVE_RESISTANCE = 100.0  # ohm

LN9 = math.log(9.0)

# RSMT refinement
STEINER_LOOKAHEAD_PINS = 6
STEINER_REFINE_MAX_PINS = 32

# instance classification, first match wins
DEFAULT_CLASS_RULES = [
    ("CLK*", "clock"),
    ("*CLKBUF*", "clock"),
    ("PAD*", "iopad"),
    ("IO*", "iopad"),
    ("SRAM*", "macro"),
]

LEF_CLASS_MAP = {
    "PAD": "iopad",
    "BLOCK": "macro",
    "RING": "macro",
    "COVER": "macro",
}

# dataset engines
DEFAULT_WINDOW = 4
DEFAULT_STRIDE = 3
DEFAULT_MASK_SIZE = 16
DEFAULT_MASK_MARGIN = 2
DEFAULT_MASK_MIN_REGION = 4
DEFAULT_MASK_MAX_REGION = 64
DEFAULT_MASK_THRESHOLD = 0.4
DEFAULT_MASK_MAX_SAMPLES = 1000
DEFAULT_SEQUENCE_LEN = 32
DEFAULT_SPLIT_FRACTIONS = (0.7, 0.1, 0.2)
DEFAULT_STRATA = 3

TABULAR_FEATURES = ["aspect_ratio", "fanout", "hpwl", "rsmt", "l_ness"]
TABULAR_LABELS = ["via_count", "rwl_over_rsmt"]
SEQUENCE_FEATURES = ["resistance", "capacitance", "slew", "incr_delay"]
SPATIAL_CHANNELS = ["cell_density", "pin_density", "net_density", "rudy"]
NODE_CLASSES = ["clock", "logic", "macro", "iopad", "port"]

# MOTPE
DEFAULT_GAMMA = 0.25
DEFAULT_N_CANDIDATES = 24
DEFAULT_N_STARTUP = 10
DEFAULT_DSE_BUDGET = 100
BANDWIDTH_FLOOR = 1e-3

# placement parameter space (name, kind, low/high or choices, default)
DEFAULT_PARAM_SPACE = [
    {"kind": "continuous", "name": "target_density", "low": 0.8, "high": 1.0, "default": 0.9},
    {"kind": "continuous", "name": "init_wirelength_coef", "low": 0.1, "high": 0.5, "default": 0.25},
    {"kind": "continuous", "name": "min_wirelength_force_bar", "low": -500.0, "high": -50.0, "default": -300.0},
    {"kind": "continuous", "name": "max_phi_coef", "low": 1.0, "high": 1.1, "default": 1.04},
    {"kind": "categorical", "name": "bin_count", "choices": ["64", "128", "256", "512"], "default": "128"},
]

# synthetic generator
SYNTH_SITE_WIDTH = 200
SYNTH_ROW_HEIGHT = 1400
SYNTH_PITCH = 200
SYNTH_DEFAULT_PIN_DISTRIBUTION = {
    2: 0.62, 3: 0.19, 4: 0.07, 5: 0.04, 6: 0.03,
    7: 0.02, 8: 0.015, 10: 0.01, 12: 0.005, 16: 0.005,
}

DEFAULT_DESIGN_FILE = "design.def"
DEFAULT_LEF_FILE = "tech.lef"
DEFAULT_TECH_FILE = "tech.json"

# fidelity
FIDELITY_RATIO_TOLERANCE = 0.05
FIDELITY_MIN_CORRELATION = 0.95
DEFAULT_COARSEN = 1
