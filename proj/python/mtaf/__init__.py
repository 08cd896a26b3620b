"""Multi-trait adaptive Fisher association test."""

from ._mtaf import (
    MtafError,
    af_operator,
    association_scan,
    combine_one_sided,
    minp_operator,
    principal_components,
    score_test,
    simulate_power,
)

__all__ = [
    "MtafError",
    "af_operator",
    "association_scan",
    "combine_one_sided",
    "minp_operator",
    "principal_components",
    "score_test",
    "simulate_power",
]
