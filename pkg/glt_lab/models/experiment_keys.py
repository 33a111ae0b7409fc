"""
Experiment Keys
===============

This module centralizes the strings used in experiment configurations:
experiment kinds, builder spec keys and tolerance names.
"""


class ExperimentKinds:
    """Experiment names accepted on the command line and in config files."""

    # --- Ladders (no verdict) ---
    RHO = "rho"
    PM = "pm"
    DACS = "dacs"
    DM = "dm"

    # --- Checks (verdict) ---
    CHECK_SYMBOL = "check-symbol"
    CHECK_RHO_PM = "check-rho-pm"
    SPLICE = "splice"
    DENSITY = "density"
    ISOMETRY = "isometry"

    ALL = (RHO, PM, DACS, DM, CHECK_SYMBOL, CHECK_RHO_PM, SPLICE, DENSITY, ISOMETRY)


class SpecKeys:
    """
    Keys of a pair builder spec.

    A spec is a JSON object with exactly one builder key, optionally combined
    with a symbol override and a rearrangement:

        {"toeplitz": "2 - 2*cos(theta)"}
        {"coefficients": {"-1": -1, "0": 2, "1": -1}, "real": true}
        {"diag": "x^2"}
        {"zero": "low_rank", "rate": "sqrt", "seed": 3}
        {"sum": [spec, spec]}, {"product": [spec, spec]}
        {"scale": [re, im], "of": spec}
        {"catalog": "laplacian"}
    """

    # --- Builders ---
    TOEPLITZ = "toeplitz"
    COEFFICIENTS = "coefficients"
    DIAG = "diag"
    ZERO = "zero"
    SUM = "sum"
    PRODUCT = "product"
    SCALE = "scale"
    CATALOG = "catalog"

    BUILDERS = (TOEPLITZ, COEFFICIENTS, DIAG, ZERO, SUM, PRODUCT, SCALE, CATALOG)

    # --- Builder options ---
    DEGREE = "degree"
    REAL = "real"
    RATE = "rate"
    SEED = "seed"
    OF = "of"

    # --- Modifiers ---
    SYMBOL = "symbol"
    REARRANGE = "rearrange"
    OFFSET = "offset"

    # --- Families (splice) ---
    TRUNCATION = "truncation"
    APPROXIMANT = "approximant"


class ToleranceKeys:
    """Names of the tolerances in `ExperimentConfig.tolerances`."""

    KS = "ks"
    FUNCTIONAL = "functional"
    RHO_PM = "rho_pm"
    CAUCHY = "cauchy"
    ISOMETRY = "isometry"
    RANK = "rank"
    DENSITY = "density"

    DEFAULTS = {
        KS: 0.05,
        FUNCTIONAL: 0.05,
        RHO_PM: 0.02,
        CAUCHY: 0.05,
        ISOMETRY: 0.05,
        RANK: 1e-10,
        DENSITY: 0.05,
    }

    # The tolerance `--tol` overrides for each experiment kind.
    PRIMARY = {
        ExperimentKinds.CHECK_SYMBOL: KS,
        ExperimentKinds.CHECK_RHO_PM: RHO_PM,
        ExperimentKinds.SPLICE: CAUCHY,
        ExperimentKinds.DENSITY: KS,
        ExperimentKinds.ISOMETRY: ISOMETRY,
    }
