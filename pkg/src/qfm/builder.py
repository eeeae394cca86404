"""Raw model declarations and their resolution into a FeatureModel.

The parser (and test code) produces a tree of declaration records; this
module checks every structural invariant, resolves every name and assembles
the immutable model. :func:`build_model` raises the first error encountered,
:func:`resolve_model` collects all of them so the parser can report several
problems per file.
"""

from __future__ import annotations

import difflib
import math
from dataclasses import dataclass, field

from .diagnostics import SYNTHETIC_SPAN, SourceSpan
from .model import (
    AbstractImplementsMetric,
    Attribute,
    AttributeBinding,
    AttributeSpecification,
    AttributeValue,
    Comparator,
    ConstraintPolarity,
    CrossTreeConstraint,
    DEFAULT_NATURE,
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
    QualityKind,
    QualityProperty,
    QualityRequirement,
    Requirement,
    Threshold,
    UnresolvedReference,
    ValueOutOfDomain,
)


@dataclass(frozen=True)
class Name:
    """An identifier occurrence with its source position."""

    text: str
    span: SourceSpan = field(default=SYNTHETIC_SPAN, compare=False, repr=False)


def _name(value: "Name | str") -> Name:
    return value if isinstance(value, Name) else Name(value)


@dataclass
class AttrDecl:
    name: Name
    values: list[Name]

    def __post_init__(self) -> None:
        self.name = _name(self.name)
        self.values = [_name(v) for v in self.values]


@dataclass
class GroupDecl:
    kind: GroupKind
    members: list["FeatureDecl"]
    span: SourceSpan = SYNTHETIC_SPAN


@dataclass
class FeatureDecl:
    name: Name
    is_abstract: bool = False
    is_mandatory: bool = False
    is_hidden: bool = False
    attributes: list[AttrDecl] = field(default_factory=list)
    plain_children: list["FeatureDecl"] = field(default_factory=list)
    groups: list[GroupDecl] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.name = _name(self.name)


@dataclass
class RefDecl:
    """A constraint object: Feature, Feature.Attribute or Feature.Attribute=Value."""

    feature: Name
    attribute: Name | None = None
    value: Name | None = None

    def __post_init__(self) -> None:
        self.feature = _name(self.feature)
        self.attribute = _name(self.attribute) if self.attribute is not None else None
        self.value = _name(self.value) if self.value is not None else None


@dataclass
class ConstraintDecl:
    subject: Name
    polarity: ConstraintPolarity
    object: RefDecl

    def __post_init__(self) -> None:
        self.subject = _name(self.subject)


@dataclass
class InvolvementDecl:
    feature: Name
    level: Level | None = None

    def __post_init__(self) -> None:
        self.feature = _name(self.feature)


@dataclass
class MetricDecl:
    name: Name
    implementer: Name

    def __post_init__(self) -> None:
        self.name = _name(self.name)
        self.implementer = _name(self.implementer)


@dataclass
class QualityDecl:
    kind: QualityKind
    name: Name
    nature: Nature | None = None
    variant_tag: str | None = None
    implemented_by: list[Name] = field(default_factory=list)
    involvements: list[InvolvementDecl] = field(default_factory=list)
    influenced_by: list[Name] = field(default_factory=list)
    metrics: list[MetricDecl] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.name = _name(self.name)
        self.implemented_by = [_name(n) for n in self.implemented_by]
        self.influenced_by = [_name(n) for n in self.influenced_by]


@dataclass
class SetDecl:
    feature: Name
    attribute: Name
    value: Name

    def __post_init__(self) -> None:
        self.feature = _name(self.feature)
        self.attribute = _name(self.attribute)
        self.value = _name(self.value)


@dataclass
class ThresholdDecl:
    metric: Name
    comparator: Comparator
    value: float

    def __post_init__(self) -> None:
        self.metric = _name(self.metric)


@dataclass
class QualityReqDecl:
    property: Name
    required_level: Level | None = None
    thresholds: list[ThresholdDecl] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.property = _name(self.property)


@dataclass
class RequirementDecl:
    task: Name
    attribute_specs: list[SetDecl] = field(default_factory=list)
    quality_reqs: list[QualityReqDecl] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.task = _name(self.task)


@dataclass
class ModelDecl:
    name: Name
    root: FeatureDecl
    qualities: list[QualityDecl] = field(default_factory=list)
    constraints: list[ConstraintDecl] = field(default_factory=list)
    requirement: RequirementDecl | None = None
    span: SourceSpan = SYNTHETIC_SPAN

    def __post_init__(self) -> None:
        self.name = _name(self.name)


def _suggest(name: str, candidates: list[str]) -> str:
    close = difflib.get_close_matches(name, candidates, n=1)
    return f"; did you mean {close[0]!r}?" if close else ""


class _Resolver:
    def __init__(self, decl: ModelDecl):
        self.decl = decl
        self.errors: list[ModelError] = []
        self.features: dict[str, Feature] = {}

    def fail(self, err: ModelError) -> None:
        self.errors.append(err)

    # -- feature tree --------------------------------------------------------

    def build_feature(self, decl: FeatureDecl) -> Feature:
        name = decl.name
        if name.text in self.features:
            self.fail(DuplicateName(f"duplicate feature name {name.text!r}", name.text, name.span))

        attributes = []
        seen_attrs: set[str] = set()
        for attr in decl.attributes:
            if attr.name.text in seen_attrs:
                self.fail(DuplicateName(
                    f"duplicate attribute {attr.name.text!r} on feature {name.text!r}",
                    attr.name.text, attr.name.span))
                continue
            seen_attrs.add(attr.name.text)
            values = []
            seen_values: set[str] = set()
            for v in attr.values:
                if v.text in seen_values:
                    self.fail(DuplicateName(
                        f"duplicate value {v.text!r} in attribute {attr.name.text!r}",
                        v.text, v.span))
                    continue
                seen_values.add(v.text)
                values.append(AttributeValue(v.text))
            if not values:
                self.fail(InvalidModel(
                    f"attribute {attr.name.text!r} declares no values",
                    attr.name.text, attr.name.span, code="E012"))
                continue
            attributes.append(Attribute(attr.name.text, name.text, tuple(values), span=attr.name.span))

        plain = tuple(self.build_feature(c) for c in decl.plain_children)
        groups = []
        for g in decl.groups:
            members = tuple(self.build_feature(m) for m in g.members)
            if len(members) < 2:
                self.fail(InvalidModel(
                    f"group under {name.text!r} needs at least two members",
                    name.text, g.span, code="E015"))
            groups.append(Group(g.kind, members))

        feature = Feature(
            name=name.text,
            is_abstract=decl.is_abstract,
            is_mandatory=decl.is_mandatory,
            is_hidden=decl.is_hidden,
            attributes=tuple(attributes),
            plain_children=plain,
            groups=tuple(groups),
            span=name.span,
        )
        self.features[name.text] = feature
        return feature

    # -- reference resolution --------------------------------------------------

    def resolve_feature(self, ref: Name | str) -> Feature | None:
        ref = _name(ref)
        feature = self.features.get(ref.text)
        if feature is None:
            hint = _suggest(ref.text, list(self.features))
            self.fail(UnresolvedReference(
                f"unknown feature {ref.text!r}{hint}", ref.text, ref.span))
        return feature

    def resolve_attribute(self, feature: Feature, ref: Name | str) -> Attribute | None:
        ref = _name(ref)
        for a in feature.attributes:
            if a.name == ref.text:
                return a
        hint = _suggest(ref.text, [a.name for a in feature.attributes])
        self.fail(UnresolvedReference(
            f"feature {feature.name!r} has no attribute {ref.text!r}{hint}",
            ref.text, ref.span))
        return None

    def resolve_value(self, attribute: Attribute, ref: Name | str) -> AttributeValue | None:
        ref = _name(ref)
        for v in attribute.values:
            if v.literal == ref.text:
                return v
        allowed = ", ".join(v.literal for v in attribute.values)
        self.fail(ValueOutOfDomain(
            f"value {ref.text!r} is not in the domain of {attribute.path} ({allowed})",
            ref.text, ref.span))
        return None

    # -- qualities ---------------------------------------------------------------

    def build_quality(self, decl: QualityDecl, quality_names: list[str]) -> QualityProperty | None:
        implemented = []
        for ref in decl.implemented_by:
            f = self.resolve_feature(ref)
            if f is not None:
                implemented.append(f)
        involved = []
        for inv in decl.involvements:
            f = self.resolve_feature(inv.feature)
            if f is not None:
                involved.append(Involvement(f, inv.level))
        implementer_names = {f.name for f in implemented}
        for inv in involved:
            if inv.feature.name in implementer_names:
                self.fail(InvalidModel(
                    f"feature {inv.feature.name!r} is both implementer and involvement of "
                    f"quality {decl.name.text!r}",
                    inv.feature.name, decl.name.span, code="E016"))

        influenced = []
        for ref in map(_name, decl.influenced_by):
            if ref.text == decl.name.text:
                self.fail(InvalidModel(
                    f"quality {decl.name.text!r} cannot influence itself",
                    ref.text, ref.span, code="E017"))
                continue
            if ref.text not in quality_names:
                hint = _suggest(ref.text, quality_names)
                self.fail(UnresolvedReference(
                    f"unknown quality {ref.text!r}{hint}", ref.text, ref.span))
                continue
            influenced.append(ref.text)

        metrics = []
        seen: set[str] = set()
        for m in decl.metrics:
            if m.name.text in seen:
                self.fail(DuplicateName(
                    f"duplicate metric {m.name.text!r} in quality {decl.name.text!r}",
                    m.name.text, m.name.span))
                continue
            seen.add(m.name.text)
            impl = self.resolve_feature(m.implementer)
            if impl is None:
                continue
            if impl.is_abstract:
                self.fail(AbstractImplementsMetric(
                    f"metric {m.name.text!r} is implemented by abstract feature {impl.name!r}",
                    impl.name, m.implementer.span))
                continue
            metrics.append(Metric(m.name.text, decl.name.text, impl, span=m.name.span))

        return QualityProperty(
            name=decl.name.text,
            kind=decl.kind,
            nature=decl.nature if decl.nature is not None else DEFAULT_NATURE[decl.kind],
            variant_tag=decl.variant_tag,
            implemented_by=tuple(implemented),
            involvements=tuple(involved),
            influenced_by=tuple(influenced),
            metrics=tuple(metrics),
            span=decl.name.span,
        )

    # -- constraints ---------------------------------------------------------------

    def build_constraint(self, decl: ConstraintDecl) -> CrossTreeConstraint | None:
        subject = self.resolve_feature(decl.subject)
        if subject is None:
            return None
        ref = decl.object
        target = self.features.get(ref.feature.text)
        if target is None:
            hint = _suggest(ref.feature.text, list(self.features))
            self.fail(UnresolvedReference(
                f"unknown feature {ref.feature.text!r}{hint}",
                ref.feature.text, ref.feature.span))
            return None
        if ref.attribute is None:
            if target.name == subject.name:
                self.fail(InvalidModel(
                    f"constraint subject and object are both {subject.name!r}",
                    subject.name, decl.subject.span, code="E014"))
                return None
            return CrossTreeConstraint(subject, decl.polarity, target, span=decl.subject.span)
        attribute = self.resolve_attribute(target, ref.attribute)
        if attribute is None:
            return None
        if ref.value is None:
            return CrossTreeConstraint(subject, decl.polarity, attribute, span=decl.subject.span)
        value = self.resolve_value(attribute, ref.value)
        if value is None:
            return None
        return CrossTreeConstraint(
            subject, decl.polarity, AttributeBinding(attribute, value), span=decl.subject.span)

    # -- requirement ---------------------------------------------------------------

    def build_requirement(
        self, decl: RequirementDecl, qualities: list[QualityProperty]
    ) -> Requirement | None:
        specs = []
        seen_attrs: set[str] = set()
        for s in decl.attribute_specs:
            feature = self.resolve_feature(s.feature)
            if feature is None:
                continue
            attribute = self.resolve_attribute(feature, s.attribute)
            if attribute is None:
                continue
            if attribute.path in seen_attrs:
                self.fail(InvalidModel(
                    f"attribute {attribute.path} is specified twice in the requirement",
                    attribute.path, s.attribute.span, code="E018"))
                continue
            seen_attrs.add(attribute.path)
            value = self.resolve_value(attribute, s.value)
            if value is None:
                continue
            specs.append(AttributeSpecification(attribute, value))

        by_name = {q.name: q for q in qualities}
        qreqs = []
        for qr in decl.quality_reqs:
            prop = by_name.get(qr.property.text)
            if prop is None:
                hint = _suggest(qr.property.text, list(by_name))
                self.fail(UnresolvedReference(
                    f"unknown quality {qr.property.text!r}{hint}",
                    qr.property.text, qr.property.span))
                continue
            thresholds = []
            for t in qr.thresholds:
                metric = self.resolve_metric(t.metric, prop, qualities)
                if metric is None:
                    continue
                if not math.isfinite(t.value):
                    self.fail(InvalidModel(
                        f"threshold on {metric.name!r} must be a finite number",
                        metric.name, t.metric.span, code="E012"))
                    continue
                thresholds.append(Threshold(metric, t.comparator, t.value))
            qreqs.append(QualityRequirement(prop, tuple(thresholds), qr.required_level))

        return Requirement(decl.task.text, tuple(specs), tuple(qreqs), span=decl.task.span)

    def resolve_metric(
        self, ref: Name | str, prop: QualityProperty, qualities: list[QualityProperty]
    ) -> Metric | None:
        """Resolve a threshold metric: the named property first, then a unique
        match anywhere in the model (validation later flags the mismatch)."""
        ref = _name(ref)
        for m in prop.metrics:
            if m.name == ref.text:
                return m
        global_matches = [m for q in qualities for m in q.metrics if m.name == ref.text]
        if len(global_matches) == 1:
            return global_matches[0]
        all_names = [m.name for q in qualities for m in q.metrics]
        if not global_matches:
            hint = _suggest(ref.text, all_names)
            self.fail(UnresolvedReference(
                f"unknown metric {ref.text!r}{hint}", ref.text, ref.span))
        else:
            owners = ", ".join(sorted(m.property for m in global_matches))
            self.fail(UnresolvedReference(
                f"metric {ref.text!r} is ambiguous (declared by {owners})",
                ref.text, ref.span))
        return None

    # -- whole model ---------------------------------------------------------------

    def run(self) -> FeatureModel | None:
        root = self.build_feature(self.decl.root)

        quality_names: list[str] = []
        for q in self.decl.qualities:
            if q.name.text in quality_names:
                self.fail(DuplicateName(
                    f"duplicate quality name {q.name.text!r}", q.name.text, q.name.span))
            else:
                quality_names.append(q.name.text)

        qualities = []
        seen_q: set[str] = set()
        for q in self.decl.qualities:
            if q.name.text in seen_q:
                continue
            seen_q.add(q.name.text)
            built = self.build_quality(q, quality_names)
            if built is not None:
                qualities.append(built)

        constraints = []
        for c in self.decl.constraints:
            built = self.build_constraint(c)
            if built is not None:
                constraints.append(built)

        requirement = None
        if self.decl.requirement is not None:
            requirement = self.build_requirement(self.decl.requirement, qualities)

        if self.errors:
            return None
        return FeatureModel(
            name=self.decl.name.text,
            root=root,
            qualities=tuple(qualities),
            constraints=tuple(constraints),
            requirement=requirement,
            span=self.decl.span,
        )


def resolve_model(decl: ModelDecl) -> tuple[FeatureModel | None, list[ModelError]]:
    """Resolve declarations, collecting every error instead of stopping."""
    resolver = _Resolver(decl)
    model = resolver.run()
    return model, resolver.errors


def build_model(decl: ModelDecl) -> FeatureModel:
    """Resolve declarations into an immutable model; raise the first error."""
    model, errors = resolve_model(decl)
    if errors:
        raise errors[0]
    assert model is not None
    return model


def resolve_requirement(
    decl: RequirementDecl, model: FeatureModel
) -> tuple[Requirement | None, list[ModelError]]:
    """Resolve a standalone requirement block against an existing model."""
    dummy = ModelDecl(name=model.name, root=FeatureDecl(model.root.name))
    resolver = _Resolver(dummy)
    resolver.features = {f.name: f for f in model.features()}
    requirement = resolver.build_requirement(decl, list(model.qualities))
    if resolver.errors:
        return None, resolver.errors
    return requirement, []
