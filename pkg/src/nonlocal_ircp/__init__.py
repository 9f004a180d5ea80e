"""Nonlocal diffusion models and reaction-coefficient identification from
average nonlocal flux data."""

from .domain import DomainSpec, NodeLabel, NodeSet, build_nodes
from .fractional import (
    FractionalSpec,
    L1Weights,
    caputo_apply,
    check_extremum_lemma,
    multiterm_apply,
)
from .inversion import (
    BasisSpec,
    IlluminationError,
    ReconstructionResult,
    extend_V1_exterior,
    recover_moments,
    reconstruct_q,
    reconstruct_q_fractional,
    reconstruct_q_nde,
    uniqueness_probe,
)
from .measurement import (
    MeasurementSet,
    SensorSpec,
    adjoint_weighted_source,
    default_sensor,
    measure,
    synthesize_dataset,
)
from .operators import (
    AntisymmetricField,
    KernelSpec,
    OperatorMatrix,
    TensorField,
    apply_interaction_N,
    assemble_L,
    check_gauss,
    check_green,
)
from .solvers import (
    SourceSpec,
    SpaceTimeField,
    solve_adjoint,
    solve_adjoint_mttfnde,
    solve_adjoint_nde,
    solve_mttfnde,
    solve_nde,
    uniform_times,
    verify_strong_mp,
    verify_weak_mp,
)

__version__ = "0.1.0"
