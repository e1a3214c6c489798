"""Python bindings for the daycare matching library."""

from ._core import (
    CapacityViolation,
    ConfigError,
    DataError,
    DaycareError,
    DomainError,
    IoError,
    LookupError,
    Market,
    NoStableMatching,
    NumericError,
    PolicyScenario,
    Theta,
    blocking_coalitions,
    estimate,
    frontier_slope,
    generate_market,
    inequality_sd,
    km_equivalent,
    quantile_regression,
    read_market,
    run_mechanism,
    simulate_grid,
)

__all__ = [
    "CapacityViolation",
    "ConfigError",
    "DataError",
    "DaycareError",
    "DomainError",
    "IoError",
    "LookupError",
    "Market",
    "NoStableMatching",
    "NumericError",
    "PolicyScenario",
    "Theta",
    "blocking_coalitions",
    "estimate",
    "frontier_slope",
    "generate_market",
    "inequality_sd",
    "km_equivalent",
    "quantile_regression",
    "read_market",
    "run_mechanism",
    "simulate_grid",
]
