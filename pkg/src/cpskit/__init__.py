"""Coherent-phase-state bases for bosonic simulation, with a number-basis oracle."""

__version__ = "0.1.0"

from .basis import (
    NORMALIZED,
    UNNORMALIZED,
    CpsBasis,
    CpsProductBasis,
    CpsState,
    basis_member,
    cps_to_fock,
    dft_condition,
    fock_to_cps,
    gram_inner,
    log_norm_gradient,
    make_basis,
    norm_gq_direct,
    norm_gq_gamma,
    reexpand_coherent,
    total_number_norm,
)
from .evolution import (
    EvolutionPlan,
    FringeResult,
    PhaseNoiseModel,
    Trajectory,
    anharmonic_analytic,
    cat_fringe,
    hybrid_evolve,
    make_propagator,
    master_evolve_cps,
    propagate_unitary,
    run_anharmonic,
)
from .kernels import BACKEND
from .operators import (
    CpsOperatorMatrix,
    assemble_hamiltonian,
    op_annihilation,
    op_creation,
    op_from_fock_matrix,
    op_number_power,
    op_shifted_quadratic,
)
from .prep import (
    CpsPFunction,
    boson_sampling_correlation,
    pair_normalization,
    pfunc_from_rho,
    pfunc_moment,
    pfunc_reexpand,
    rho_from_pfunc,
)

__all__ = [name for name in dir() if not name.startswith("_")]
