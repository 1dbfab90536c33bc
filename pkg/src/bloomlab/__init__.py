"""Numerical workbench for weighted BMO, Muckenhoupt weights, sparse
averaging operators, and iterated commutators of singular integrals."""

from .grid import Cube, Grid, GridFunction, QuadratureReport, average, integrate, pv_integral
from .dyadic import DyadicTree, SparseFamily, carve_greedy, children, verify_sparse
from .weights import BloomSetup, CubeDictionary, Weight, ap_constant, bmo_eta_norm, build_cube_dictionary
from .oscillation import (
    DecompositionResult,
    OscillationQuery,
    augment_family,
    john_stromberg_upper,
    local_mean_osc,
    median_value,
    rearrangement_value,
    sparse_decompose,
)
from .operators import (
    CommutatorSpec,
    KernelSpec,
    apply_T,
    apply_T_adjoint,
    commutator_kernel_form,
    commutator_recursive,
    dini_modulus,
)
from .sparse_ops import (
    CommutatorSparseForm,
    SparseOperator,
    apply_AS,
    apply_AS_iterated,
    apply_Abmk,
    check_chain_expansion,
    check_iteration_bound,
    check_selfadjoint,
    check_sparse_domination,
    estimate_AS_weighted_norm,
)
from .lowerbound import (
    LowerBoundCertificate,
    build_certificate,
    build_F_alpha,
    choose_delta,
    find_theta0,
    verify_certificate,
    verify_oscillation_bound,
)
from .config import ExperimentConfig

__version__ = "0.1.0"
