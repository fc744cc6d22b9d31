"""Application-wide constants."""

__all__ = [
    "PROB_CLAMP",
    "POOL_EPSILON",
    "POOL_DEGENERATE_RANGE",
    "POOL_DEGENERATE_VALUE",
    "VARIANCE_FLOOR",
    "FD_DENOMINATOR_FLOOR",
    "RAMPUP_SHARPNESS",
    "CSV_FIXED_COLUMNS",
    "SPLITS",
    "FLOAT_FORMAT",
    "REPORT_SCHEMA",
    "ACCEPTANCE_SCHEMA",
    "MANIFEST_NAME",
    "PARAM_PREFIXES",
]

# Probabilities are clamped into [PROB_CLAMP, 1 - PROB_CLAMP] before any log
PROB_CLAMP = 1e-7

# Pool-level min-max normalization of raw outlier scores
POOL_EPSILON = 1e-6
POOL_DEGENERATE_RANGE = 1e-12
POOL_DEGENERATE_VALUE = 0.5

# Smallest admissible mixture-component variance
VARIANCE_FLOOR = 1e-6

# Relative-error denominator floor for finite-difference checks
FD_DENOMINATOR_FLOOR = 1e-8

# exp(-RAMPUP_SHARPNESS * (1 - t)^2)
RAMPUP_SHARPNESS = 5.0

# Scenario CSV layout: fixed columns, then f0..f{d-1}
CSV_FIXED_COLUMNS = ["split", "class_id", "domain_id", "is_ukc", "is_ukd"]
SPLITS = ("labeled", "unlabeled", "val", "test")

# 17 significant digits round-trip every float64 exactly
FLOAT_FORMAT = ".17g"

REPORT_SCHEMA = "ussl-report/1"
ACCEPTANCE_SCHEMA = "ussl-acceptance/1"
MANIFEST_NAME = "manifest.json"

# ParameterStore name prefixes of the four networks
PARAM_PREFIXES = {
    "extractor": "F",
    "classifier": "C",
    "adversarial": "D",
    "domain": "Dp",
}
