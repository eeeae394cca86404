"""qfm: quality-and-feature models for ML pipelines.

Model a pipeline family as a feature tree with attributes, cross-tree
constraints and quality properties, state functional and quality
requirements, and derive every pipeline configuration that satisfies them.
"""

from .analysis import (
    AnomalyReport,
    BUILTIN_INFLUENCE,
    EdgeOrigin,
    InfluenceEdge,
    InfluenceReport,
    STEP_IMPACT,
    detect_anomalies,
    influence_report,
    step_impact,
    validate,
)
from .builder import (
    AttrDecl,
    ConstraintDecl,
    FeatureDecl,
    GroupDecl,
    InvolvementDecl,
    MetricDecl,
    ModelDecl,
    Name,
    QualityDecl,
    QualityReqDecl,
    RefDecl,
    RequirementDecl,
    SetDecl,
    ThresholdDecl,
    build_model,
    resolve_model,
    resolve_requirement,
)
from .configurator import (
    ConstraintSet,
    Disjunction,
    ExactlyOne,
    Literal,
    PrunedProblem,
    Reason,
    RequirementUnsatisfiable,
    SearchBudgetExceeded,
    TooLarge,
    Violation,
    apply_requirement,
    base_problem,
    binding,
    brute_force_enumerate,
    count_configurations,
    derive_constraints,
    enumerate_configurations,
    selected,
    verify_configuration,
)
from .diagnostics import Diagnostic, Severity, SourceSpan, format_diagnostics
from .model import (
    AbstractImplementsMetric,
    Attribute,
    AttributeBinding,
    AttributeSpecification,
    AttributeValue,
    Comparator,
    Configuration,
    ConstraintPolarity,
    CrossTreeConstraint,
    DuplicateName,
    Feature,
    FeatureModel,
    Group,
    GroupKind,
    InvalidModel,
    Involvement,
    Level,
    Metric,
    ModelError,
    Nature,
    NotFound,
    QualityKind,
    QualityProperty,
    QualityRequirement,
    Requirement,
    Threshold,
    UnresolvedReference,
    ValueOutOfDomain,
    lookup,
    preorder_features,
)
from .parser import parse_model
from .printer import serialize_model

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
