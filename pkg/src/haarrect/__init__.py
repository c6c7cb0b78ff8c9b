"""Haar-averaging rectification of almost-morphisms.

Finite groupoids with distinguished cores carry normalized right-invariant
fiber weights; maps from their arrows into compact matrix groups are
corrected by exponentials of fiber-averaged defect logs, and the iteration
contracts the defect quadratically under certified constants.
"""

from .errors import (
    ActionError,
    CoreAxiomError,
    DefectOverflow,
    DefectTooLarge,
    GridError,
    GroupMembershipError,
    HaarrectError,
    InvalidAlgebraVector,
    InvarianceError,
    LogDomainError,
    NonContraction,
    NormalizationFailure,
    NotComposable,
    RangeEscape,
)
from .groups import (
    AlgebraVector,
    AmbientSets,
    BchConstants,
    GroupElement,
    NormedAlgebra,
    QuadratureRule,
    estimate_bch_constants,
    exp_map,
    haar_integrate,
    left_distance,
    log_map,
    normalize_algebra_norm,
    revalidate_bch_constants,
)
from .groupoids import (
    Core,
    FiniteGroup,
    FiniteGroupoid,
    HaarDensity,
    ValidationReport,
    attach_haar_density,
    build_action_groupoid,
    build_core,
    build_pair_groupoid,
    validate_groupoid,
)
from .rectifier import (
    AlmostMorphism,
    IterationTrace,
    admissible_defect_radius,
    almost_morphism,
    average_correction,
    correct_once,
    defect,
    defect_element,
    iterate,
    q_bound,
    verify_core_morphism,
)
from .holo import (
    ComplexModel,
    SampledFunction,
    build_complexified_model,
    core_average_function,
    cr_residual,
    real_restriction_check,
)
from .harness import (
    ExperimentConfig,
    RunReport,
    generate_exact_morphism,
    perturb_morphism,
    run_experiment,
)

__version__ = "0.1.0"
