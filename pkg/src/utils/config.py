import os

# Short names accepted on the command line
KERNEL_ALIASES = {
    "cbmd": "cbmd",
    "original": "lchs_original",
    "improved": "lchs_improved",
    "optimal": "lchs_optimal",
    "lchs_original": "lchs_original",
    "lchs_improved": "lchs_improved",
    "lchs_optimal": "lchs_optimal",
}

SHIFT_ALIASES = {
    "none": "none",
    "exact-min": "exact_min",
    "exact_min": "exact_min",
}

DEFAULT_BETA = 0.8
DEFAULT_C = 1.0

DEFAULT_STEPS = 64
REFERENCE_STEP_FACTOR = 4

EXPM_NORM_LIMIT = 1e3
EXPM_SCALED_NORM = 0.5
EXPM_PADE_ORDER = 6

# Largest m for which log-space factorials stay well inside double range
CBMD_MAX_M = 170

PSD_TOLERANCE = 1e-10

BATCH_CHUNK = 4096

CSV_HEADER = [
    "kernel",
    "eps",
    "K",
    "max_k",
    "total_weight",
    "rel_error",
    "success_prob",
    "rounds_overhead",
    "shift",
]

FLOAT_FORMAT = ".17g"


def max_threads() -> int:
    """Parallelism cap for compare sweeps."""
    value = os.getenv("CBMD_LAB_THREADS")
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            pass
    return max(1, min(4, os.cpu_count() or 1))


def max_terms() -> int:
    """Largest series a single solve may emulate; sampled generators count terms x steps."""
    value = os.getenv("CBMD_LAB_MAX_TERMS")
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            pass
    return 2_000_001


def log_level() -> str:
    return os.getenv("CBMD_LAB_LOG_LEVEL", "WARNING").upper()
