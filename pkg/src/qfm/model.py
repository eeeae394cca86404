"""In-memory representation of a quality-and-feature model.

A model is a feature tree decorated with attributes, cross-tree constraints,
quality properties (with metrics, implementer and involvement relations) and
an optional requirement. Instances are immutable after construction; build
them through :func:`qfm.builder.build_model` or the DSL parser, which enforce
the structural invariants. Equality is structural and ignores source spans,
so a parse -> serialize -> parse round trip compares equal.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Union

from .diagnostics import SYNTHETIC_SPAN, SourceSpan


class GroupKind(enum.Enum):
    OR = "or"
    ALT = "alt"


class QualityKind(enum.Enum):
    FAIRNESS = "fairness"
    INTERPRETABILITY = "interpretability"
    PRIVACY = "privacy"
    PREDICTION_CORRECTNESS = "prediction_correctness"
    COMPUTATIONAL_COMPLEXITY = "computational_complexity"

    @property
    def label(self) -> str:
        return _KIND_LABELS[self]


_KIND_LABELS = {
    QualityKind.FAIRNESS: "Fairness",
    QualityKind.INTERPRETABILITY: "Interpretability",
    QualityKind.PRIVACY: "Privacy",
    QualityKind.PREDICTION_CORRECTNESS: "Prediction Correctness",
    QualityKind.COMPUTATIONAL_COMPLEXITY: "Computational Complexity",
}

#: Default nature per kind; overridable in every declaration.
DEFAULT_NATURE: dict[QualityKind, "Nature"]


class Nature(enum.Enum):
    QUANTITATIVE = "quantitative"
    QUALITATIVE = "qualitative"


DEFAULT_NATURE = {
    QualityKind.FAIRNESS: Nature.QUANTITATIVE,
    QualityKind.PREDICTION_CORRECTNESS: Nature.QUANTITATIVE,
    QualityKind.COMPUTATIONAL_COMPLEXITY: Nature.QUANTITATIVE,
    QualityKind.PRIVACY: Nature.QUALITATIVE,
    QualityKind.INTERPRETABILITY: Nature.QUALITATIVE,
}


class Level(enum.Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


class Comparator(enum.Enum):
    LE = "<="
    GE = ">="
    LT = "<"
    GT = ">"
    EQ = "="


class ConstraintPolarity(enum.Enum):
    REQUIRE = "requires"
    EXCLUDE = "excludes"


class ModelError(Exception):
    """Base for model construction failures; carries the offending name."""

    def __init__(self, message: str, name: str, span: SourceSpan = SYNTHETIC_SPAN):
        super().__init__(message)
        self.message = message
        self.name = name
        self.span = span

    #: diagnostic code used when surfaced by the parser
    code = "E010"


class DuplicateName(ModelError):
    code = "E010"


class UnresolvedReference(ModelError):
    code = "E011"


class ValueOutOfDomain(ModelError):
    code = "E012"


class AbstractImplementsMetric(ModelError):
    code = "E013"


class InvalidModel(ModelError):
    """Structural invariant violations not covered by the named errors."""

    def __init__(self, message: str, name: str, span: SourceSpan = SYNTHETIC_SPAN, code: str = "E015"):
        super().__init__(message, name, span)
        self.code = code


class NotFound(KeyError):
    def __init__(self, path: str):
        super().__init__(path)
        self.path = path

    def __str__(self) -> str:
        return f"no entity named {self.path!r}"


@dataclass(frozen=True)
class AttributeValue:
    literal: str


@dataclass(frozen=True)
class Attribute:
    name: str
    owner: str  # owning feature name; kept as a name to avoid reference cycles
    values: tuple[AttributeValue, ...]
    span: SourceSpan = field(default=SYNTHETIC_SPAN, compare=False, repr=False)

    def value(self, literal: str) -> AttributeValue:
        for v in self.values:
            if v.literal == literal:
                return v
        raise NotFound(f"{self.owner}.{self.name}={literal}")

    @property
    def path(self) -> str:
        return f"{self.owner}.{self.name}"


@dataclass(frozen=True)
class Group:
    kind: GroupKind
    members: tuple["Feature", ...]


@dataclass(frozen=True)
class Feature:
    name: str
    is_abstract: bool = False
    is_mandatory: bool = False
    is_hidden: bool = False
    attributes: tuple[Attribute, ...] = ()
    plain_children: tuple["Feature", ...] = ()
    groups: tuple[Group, ...] = ()
    span: SourceSpan = field(default=SYNTHETIC_SPAN, compare=False, repr=False)

    @property
    def children(self) -> tuple["Feature", ...]:
        """All child features: plain children first, then group members."""
        out = list(self.plain_children)
        for g in self.groups:
            out.extend(g.members)
        return tuple(out)

    def attribute(self, name: str) -> Attribute:
        for a in self.attributes:
            if a.name == name:
                return a
        raise NotFound(f"{self.name}.{name}")


@dataclass(frozen=True)
class AttributeBinding:
    attribute: Attribute
    value: AttributeValue

    def __str__(self) -> str:
        return f"{self.attribute.path} = {self.value.literal}"


# A constraint object is a feature, a bare attribute, or an attribute binding.
ConstraintObject = Union[Feature, Attribute, AttributeBinding]


@dataclass(frozen=True)
class CrossTreeConstraint:
    subject: Feature
    polarity: ConstraintPolarity
    object: ConstraintObject
    span: SourceSpan = field(default=SYNTHETIC_SPAN, compare=False, repr=False)

    def __str__(self) -> str:
        if isinstance(self.object, Feature):
            obj = self.object.name
        elif isinstance(self.object, Attribute):
            obj = self.object.path
        else:
            obj = str(self.object)
        return f"{self.subject.name} {self.polarity.value} {obj}"


@dataclass(frozen=True)
class Metric:
    name: str
    property: str  # owning quality property name
    implementer: Feature
    span: SourceSpan = field(default=SYNTHETIC_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class Involvement:
    feature: Feature
    level: Level | None = None


@dataclass(frozen=True)
class QualityProperty:
    name: str
    kind: QualityKind
    nature: Nature
    variant_tag: str | None = None
    implemented_by: tuple[Feature, ...] = ()
    involvements: tuple[Involvement, ...] = ()
    # influencing property names; names rather than objects because influence
    # is frequently mutual and the instances are frozen
    influenced_by: tuple[str, ...] = ()
    metrics: tuple[Metric, ...] = ()
    span: SourceSpan = field(default=SYNTHETIC_SPAN, compare=False, repr=False)

    def metric(self, name: str) -> Metric:
        for m in self.metrics:
            if m.name == name:
                return m
        raise NotFound(f"{self.name}.{name}")


@dataclass(frozen=True)
class Threshold:
    metric: Metric
    comparator: Comparator
    value: float


@dataclass(frozen=True)
class QualityRequirement:
    property: QualityProperty
    thresholds: tuple[Threshold, ...] = ()
    required_level: Level | None = None


@dataclass(frozen=True)
class AttributeSpecification:
    attribute: Attribute
    value: AttributeValue


@dataclass(frozen=True)
class Requirement:
    task: str
    attribute_specs: tuple[AttributeSpecification, ...] = ()
    quality_reqs: tuple[QualityRequirement, ...] = ()
    span: SourceSpan = field(default=SYNTHETIC_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class Configuration:
    """One valid product: concrete, non-hidden feature names in canonical
    pre-order, plus the attribute bindings in effect."""

    selected: tuple[str, ...]
    bindings: tuple[AttributeBinding, ...] = ()


@dataclass(frozen=True)
class FeatureModel:
    name: str
    root: Feature
    qualities: tuple[QualityProperty, ...] = ()
    constraints: tuple[CrossTreeConstraint, ...] = ()
    requirement: Requirement | None = None
    span: SourceSpan = field(default=SYNTHETIC_SPAN, compare=False, repr=False)

    # derived lookup tables, excluded from equality
    _features: dict[str, Feature] = field(init=False, compare=False, repr=False)
    _parents: dict[str, str | None] = field(init=False, compare=False, repr=False)
    _order: tuple[Feature, ...] = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        order: list[Feature] = []
        features: dict[str, Feature] = {}
        parents: dict[str, str | None] = {self.root.name: None}

        def walk(f: Feature) -> None:
            order.append(f)
            features[f.name] = f
            for c in f.children:
                parents[c.name] = f.name
                walk(c)

        walk(self.root)
        object.__setattr__(self, "_features", features)
        object.__setattr__(self, "_parents", parents)
        object.__setattr__(self, "_order", tuple(order))

    # -- navigation ---------------------------------------------------------

    def features(self) -> tuple[Feature, ...]:
        """All features in canonical pre-order (declaration order within a node)."""
        return self._order

    def feature(self, name: str) -> Feature:
        try:
            return self._features[name]
        except KeyError:
            raise NotFound(name) from None

    def has_feature(self, name: str) -> bool:
        return name in self._features

    def parent_of(self, feature: Feature | str) -> Feature | None:
        name = feature if isinstance(feature, str) else feature.name
        parent = self._parents[name]
        return None if parent is None else self._features[parent]

    def ancestors_of(self, feature: Feature | str) -> Iterator[Feature]:
        cur = self.parent_of(feature)
        while cur is not None:
            yield cur
            cur = self.parent_of(cur)

    def quality(self, name: str) -> QualityProperty:
        for q in self.qualities:
            if q.name == name:
                return q
        raise NotFound(name)

    def attributes(self) -> Iterator[Attribute]:
        for f in self._order:
            yield from f.attributes


def preorder_features(model: FeatureModel) -> list[Feature]:
    """Depth-first pre-order over the feature tree.

    Within one node: the node itself, then plain children in declaration
    order, then group members in declaration order. Deterministic across runs.
    """
    return list(model.features())


def lookup(model: FeatureModel, path: str) -> Feature | Attribute | QualityProperty | Metric:
    """Resolve a dotted path to the entity declaring it.

    Accepted shapes: ``Feature``, ``Feature.Attribute``, ``Quality`` and
    ``Quality.Metric``. The feature tree namespace is searched before the
    quality namespace, so a bare name shared by a feature and a quality
    resolves to the feature. Names may themselves contain dots (quoted in
    the DSL), so the whole path is tried as one name before splitting, first
    at the first dot and then at the last.
    """
    if model.has_feature(path):
        return model.feature(path)
    for q in model.qualities:
        if q.name == path:
            return q
    head, dot, rest = path.partition(".")
    splits = [(head, rest)] if dot else []
    last_head, _, last_rest = path.rpartition(".")
    if dot and (last_head, last_rest) != (head, rest):
        splits.append((last_head, last_rest))
    for head, rest in splits:
        if model.has_feature(head):
            try:
                return model.feature(head).attribute(rest)
            except NotFound:
                pass
        for q in model.qualities:
            if q.name == head:
                try:
                    return q.metric(rest)
                except NotFound:
                    pass
    raise NotFound(path)
