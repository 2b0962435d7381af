"""Kirkwood-Dirac quasiprobabilities and the hierarchy of bounds around them."""

from .config import DEFAULT_TOL, Tolerances
from .kd import (
    KdDistribution,
    MarginalSet,
    Witness,
    bound_suite,
    entrywise_bounds_check,
    kd_distribution,
    kd_distribution_n,
    marginals,
    max_overlap,
    multi_bound_suite,
    nonclassicality_witness,
    support_counts,
    support_uncertainty_check,
)
from .postquantum import (
    QuasiDistribution,
    RealQuasiDistribution,
    appendixB_case_check,
    l1_and_trivial_bound,
    make_quasi,
    quasi_marginals,
    real_sup_search,
)
from .quantum import (
    DensityMatrix,
    Povm,
    ValidationError,
    make_rng,
    maximally_mixed,
    pure_state,
    random_density,
    random_povm,
    random_pure,
    random_pvm,
    theorem1_example,
)
from .report import BoundEntry, BoundReport
from .search import SearchResult, UnitaryParams, harvest_violations, maximize_l1, maximize_l2

__version__ = "0.1.0"
