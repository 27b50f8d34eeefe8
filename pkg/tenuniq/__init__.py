"""Uniqueness bounds and certificates for canonical polyadic decompositions."""

__version__ = "0.1.0"

from .certify import (  # noqa: E402
    CertParams,
    Certificate,
    ConditionOutcome,
    check_cm_condition,
    check_kruskal,
    certify_cpd,
    certify_sfs,
    certify_sfs_um_a,
    certify_sfs_um_c,
    falsify_um,
    falsify_wm,
)
from .empirical_lab import (  # noqa: E402
    AlsOptions,
    SampleSpec,
    als_cpd,
    als_sfs,
    match_decompositions,
    monte_carlo_generic_check,
    sample_factors,
)
from .empirical_protocol import empirical_uniqueness  # noqa: E402
from .field_linalg import ScalarField, RankTolerance, compound, k_rank, khatri_rao, rank  # noqa: E402
from .generic_bounds import BoundTable, ProblemDims, aggregate  # noqa: E402
from .tensor3 import FactorSet, from_factors, unfold  # noqa: E402

__all__ = [
    "AlsOptions",
    "BoundTable",
    "CertParams",
    "Certificate",
    "ConditionOutcome",
    "FactorSet",
    "ProblemDims",
    "RankTolerance",
    "SampleSpec",
    "ScalarField",
    "aggregate",
    "als_cpd",
    "als_sfs",
    "certify_cpd",
    "certify_sfs",
    "certify_sfs_um_a",
    "certify_sfs_um_c",
    "check_cm_condition",
    "check_kruskal",
    "compound",
    "empirical_uniqueness",
    "falsify_um",
    "falsify_wm",
    "from_factors",
    "k_rank",
    "khatri_rao",
    "match_decompositions",
    "monte_carlo_generic_check",
    "rank",
    "sample_factors",
    "unfold",
]
