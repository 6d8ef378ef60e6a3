"""Exactly computable Dirichlet-form theory on finite ground sets."""

from .builders import ModelRecipe, path_graph, random_markovian, random_nonmarkovian, random_symmetric, spike_sequence
from .core import (
    Func,
    GroundSet,
    PiecewiseLinearContraction,
    SymForm,
    apply_contraction,
    apply_T_alpha,
    check_unit_contraction_operates,
    chi_cutoff,
    eval_form,
    tranche_decompose,
)
from .decomposition import (
    CoordinateForm,
    JumpKill,
    beurling_deny,
    coordinate_form,
    cutoff_estimate_check,
    cutoff_estimate_terms,
    cutoff_phi_alpha,
    require_markovian,
)
from .dirichlet import (
    SequenceSpec,
    TimeChangedGenerator,
    check_submarkov,
    knapsack_bound,
    lsc_report,
    m_symmetry_residual,
    semigroup_at,
    subsequence_selection,
    time_change,
    uniform_integrability_report,
)
from .errors import *  # noqa: F401,F403
from .gelfand import SpectrumModel, gelfand_transform, spectrum, transfer_dominant_measure, transfer_form
from .killing import (
    box_minimize,
    energy_identity_report,
    envelope,
    killing_functional,
    killing_relativized,
    killing_split,
    sup_representation,
)
from .lagrangian import (
    LagrangianDensity,
    bilinear_sqrt_residual,
    check_contraction_domination,
    check_leibniz,
    check_positivity,
    energy_form,
    lagrangian_apply,
    lagrangian_density,
    lagrangian_norm,
    leibniz_estimate_slack,
)
from .measures import (
    AtomicMeasure,
    carre_du_champ_density,
    check_abs_continuity,
    dominant_measure,
    energy_measure,
    energy_measure_sup,
    measure_triangle_check,
    mutual_energy_measure,
)

__version__ = "0.1.0"
