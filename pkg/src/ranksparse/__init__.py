"""Sparse plus low-rank matrix decomposition with rank-sparsity incoherence diagnostics."""

from .certificate import (
    CertificateResult,
    GammaRange,
    build_certificate,
    certified_gamma_interval,
    condition_report,
    gamma_range_corollary,
    gamma_range_theorem,
)
from .ensembles import EnsembleSpec, random_lowrank, random_pair, random_sparse
from .experiments import (
    PhaseDiagramConfig,
    RigidityResult,
    SweepResult,
    gamma_sweep,
    phase_diagram,
    recommend_gamma,
    rigidity_demo,
    tol_metric,
)
from .kernels import BACKEND
from .matcore import (
    SupportPattern,
    SvdResult,
    l1_norm,
    linf_norm,
    nuclear_norm,
    read_matrix,
    spectral_norm,
    support_of,
    svd,
    write_matrix,
)
from .solver import (
    DecompositionResult,
    SolverConfig,
    check_optimality,
    decompose,
    decompose_t,
    soft_threshold,
    sv_threshold,
)
from .tangent import IncoherenceReport, TangentSpace

__version__ = "0.1.0"
