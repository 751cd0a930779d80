"""Couple-stress membrane finite elements with drilling degrees of freedom.

A small 2D analysis library built around a six-field mixed variational
formulation: displacement, drilling rotation, strain, stress, curvature and
couple stress are interpolated independently and the internal fields are
condensed onto nodal DoFs through constant coupling matrices.  Ships with
elastic and J2-softening materials, a displacement-controlled Newton solver,
a JSON model format, a CLI and built-in benchmark studies.
"""

from .basis import (
    BEAM_KIND,
    ELEMENT_KINDS,
    FieldBasis,
    MEMBRANE_KINDS,
    NODE_COUNTS,
    OperatorMatrices,
    QuadratureRule,
    eval_basis,
    operator_matrices,
    quadrature,
    strain_stress_basis,
)
from .elements import (
    FORM_K,
    FORM_KAPPA,
    ElementArrays,
    StabilityReport,
    beam_stiffness,
    build_arrays,
    check_stability,
    recover_fields,
    stiffness_option1,
    stiffness_option2,
    update_and_resist,
)
from .errors import (
    CsfemError,
    ElementConstructionError,
    EvaluationError,
    MaterialFailureError,
    ModelError,
    SingularJacobianError,
    StabilityError,
    StepFailureError,
)
from .materials import (
    ElasticLaw,
    J2PlaneStress,
    MaterialPoint,
    TangentPair,
    couple_update,
    elastic_tangent,
    make_material,
    shear_modulus,
)
from .model import (
    AnalysisConfig,
    Constraint,
    DofMap,
    ElementDef,
    MaterialDef,
    Model,
    NodalLoad,
    Node,
    number_dofs,
    parse_model,
    serialize_model,
    validate_model,
)
from .solver import Analysis, SolutionHistory, StepRecord, run_analysis

__version__ = "0.1.0"
