"""Well-formedness validation, feature anomaly detection and quality reports."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .configurator import base_problem, brute_force_enumerate, probe_satisfiable
from .diagnostics import Diagnostic, warning, error
from .model import (
    Attribute,
    ConstraintPolarity,
    Feature,
    FeatureModel,
    QualityKind,
    Requirement,
)

# Influence knowledge between quality-attribute kinds, editable as a table:
# (influencing kind, influenced kind). Fairness degrades interpretability
# (bias mitigation rewrites attribute values), adds pipeline steps (hence
# complexity) and typically costs prediction performance. Complexity and
# prediction correctness push on each other (more accurate methods tend to
# be heavier). Privacy and interpretability reduce each other.
#
# A complexity -> fairness edge is sometimes argued for as the converse of
# the fairness -> complexity entry; the direction is contested, so it is
# deliberately not listed here.
BUILTIN_INFLUENCE: tuple[tuple[QualityKind, QualityKind], ...] = (
    (QualityKind.FAIRNESS, QualityKind.INTERPRETABILITY),
    (QualityKind.FAIRNESS, QualityKind.COMPUTATIONAL_COMPLEXITY),
    (QualityKind.FAIRNESS, QualityKind.PREDICTION_CORRECTNESS),
    (QualityKind.COMPUTATIONAL_COMPLEXITY, QualityKind.PREDICTION_CORRECTNESS),
    (QualityKind.PREDICTION_CORRECTNESS, QualityKind.COMPUTATIONAL_COMPLEXITY),
    (QualityKind.PRIVACY, QualityKind.INTERPRETABILITY),
    (QualityKind.INTERPRETABILITY, QualityKind.PRIVACY),
)

# Pipeline steps every quality-attribute kind can constrain, in pipeline order.
STEP_IMPACT: dict[QualityKind, tuple[str, ...]] = {
    QualityKind.COMPUTATIONAL_COMPLEXITY: (
        "Feature Engineering",
        "Model Training-Testing",
    ),
    QualityKind.PREDICTION_CORRECTNESS: (
        "Feature Engineering",
        "Model Training-Testing",
        "Model Evaluation",
        "Model Deploy and Monitoring",
    ),
    QualityKind.FAIRNESS: (
        "Data Pre-Processing",
        "Model Training-Testing",
        "Model Evaluation",
        "Model Deploy and Monitoring",
    ),
    QualityKind.PRIVACY: (
        "Data Pre-Processing",
        "Model Evaluation",
        "Model Deploy and Monitoring",
    ),
    QualityKind.INTERPRETABILITY: (
        "Model Evaluation",
        "Model Deploy and Monitoring",
    ),
}


def step_impact(kind: QualityKind) -> list[str]:
    """Pipeline steps a requirement on this quality kind can constrain."""
    return list(STEP_IMPACT[kind])


class EdgeOrigin(enum.Enum):
    MODEL = "model"
    BUILTIN = "builtin"


@dataclass(frozen=True)
class InfluenceEdge:
    source: str
    target: str
    origin: EdgeOrigin


@dataclass(frozen=True)
class InfluenceReport:
    edges: tuple[InfluenceEdge, ...]
    warnings: tuple[str, ...]


@dataclass(frozen=True)
class AnomalyReport:
    """Feature anomalies over the configuration-visible (concrete, non-hidden)
    features. A void model reports empty lists and the flag alone."""

    dead: tuple[str, ...]
    false_optional: tuple[str, ...]
    void: bool


def validate(model: FeatureModel) -> list[Diagnostic]:
    """Checks beyond structural invariants; empty result means a clean model.

    * W010: abstract feature without any concrete feature beneath it
    * W012: exclude constraint between a feature and its ancestor
    * W013: bare-attribute require in a model that carries no requirement
    * E021: requirement threshold on a metric of a different property
    * E022: exclude constraint on an attribute without a value
    * E023: two quality properties with the same kind and variant tag
    """
    diags: list[Diagnostic] = []

    for f in model.features():
        if f.is_abstract and not _has_concrete_descendant(f):
            diags.append(warning(
                "W010",
                f"abstract feature {f.name!r} has no concrete feature beneath it",
                f.span))

    for c in model.constraints:
        if isinstance(c.object, Feature) and c.polarity is ConstraintPolarity.EXCLUDE:
            subject_ancestors = {a.name for a in model.ancestors_of(c.subject)}
            object_ancestors = {a.name for a in model.ancestors_of(c.object)}
            if c.object.name in subject_ancestors or c.subject.name in object_ancestors:
                diags.append(warning(
                    "W012",
                    f"{c} excludes along an ancestor chain; the descendant can "
                    f"never be selected",
                    c.span))
        if isinstance(c.object, Attribute):
            if c.polarity is ConstraintPolarity.EXCLUDE:
                diags.append(error(
                    "E022",
                    f"{c}: excluding an attribute without a value is not supported; "
                    f"exclude a specific value instead",
                    c.span))
            elif model.requirement is None:
                diags.append(warning(
                    "W013",
                    f"{c} only takes effect once a requirement binds {c.object.path}",
                    c.span))

    seen_kinds: dict[tuple[QualityKind, str | None], str] = {}
    for q in model.qualities:
        key = (q.kind, q.variant_tag)
        if key in seen_kinds:
            tag = f" (variant {q.variant_tag!r})" if q.variant_tag else ""
            diags.append(error(
                "E023",
                f"quality {q.name!r} repeats kind {q.kind.value}{tag} already used "
                f"by {seen_kinds[key]!r}",
                q.span))
        else:
            seen_kinds[key] = q.name

    if model.requirement is not None:
        for qreq in model.requirement.quality_reqs:
            for t in qreq.thresholds:
                if t.metric.property != qreq.property.name:
                    diags.append(error(
                        "E021",
                        f"threshold metric {t.metric.name!r} belongs to "
                        f"{t.metric.property!r}, not to required property "
                        f"{qreq.property.name!r}",
                        model.requirement.span))

    return diags


def _has_concrete_descendant(feature: Feature) -> bool:
    for child in feature.children:
        if not child.is_abstract or _has_concrete_descendant(child):
            return True
    return False


def detect_anomalies(model: FeatureModel, *, oracle_limit: int = 24,
                     node_budget: int = 1_000_000) -> AnomalyReport:
    """Dead, false-optional and void analysis by exact search.

    The requirement, if any, is ignored: anomalies are a property of the
    model itself. Small models are handled by the exhaustive oracle; larger
    ones by per-feature satisfiability probes with a node budget
    (:class:`qfm.configurator.SearchBudgetExceeded` when exhausted).
    """
    stripped = FeatureModel(
        name=model.name, root=model.root, qualities=model.qualities,
        constraints=model.constraints, requirement=None)
    problem = base_problem(stripped)
    visible = [f for f in stripped.features() if not (f.is_abstract or f.is_hidden)]
    root_name = stripped.root.name

    if len(stripped.features()) <= min(oracle_limit, 24):
        configs = brute_force_enumerate(problem)
        if not configs:
            return AnomalyReport((), (), True)
        union: set[str] = set()
        common = set(configs[0].selected)
        for c in configs:
            union.update(c.selected)
            common.intersection_update(c.selected)
        dead = tuple(f.name for f in visible if f.name not in union)
        false_optional = tuple(
            f.name for f in visible
            if f.name in common and not f.is_mandatory and f.name != root_name)
        return AnomalyReport(dead, false_optional, False)

    if not probe_satisfiable(problem, (), node_budget=node_budget):
        return AnomalyReport((), (), True)
    dead_list: list[str] = []
    false_optional_list: list[str] = []
    for f in visible:
        if not probe_satisfiable(problem, ((f.name, True),), node_budget=node_budget):
            dead_list.append(f.name)
        elif (not f.is_mandatory and f.name != root_name
              and not probe_satisfiable(problem, ((f.name, False),), node_budget=node_budget)):
            false_optional_list.append(f.name)
    return AnomalyReport(tuple(dead_list), tuple(false_optional_list), False)


def influence_report(model: FeatureModel, requirement: Requirement | None = None,
                     include_builtin: bool = False) -> InfluenceReport:
    """Influence edges between quality properties, plus requirement warnings.

    MODEL edges come from the declared influenced-by relations. With
    `include_builtin`, the kind-level knowledge base is added: targets are
    the model's properties of that kind when present, otherwise the kind
    label itself. A warning is emitted for every edge whose source and
    target are both demanded by the requirement.
    """
    origin_by_pair: dict[tuple[str, str], EdgeOrigin] = {}
    for q in model.qualities:
        for influencer in q.influenced_by:
            origin_by_pair[(influencer, q.name)] = EdgeOrigin.MODEL

    if include_builtin:
        by_kind: dict[QualityKind, list[str]] = {}
        for q in model.qualities:
            by_kind.setdefault(q.kind, []).append(q.name)
        for src_kind, dst_kind in BUILTIN_INFLUENCE:
            for source in by_kind.get(src_kind, ()):
                for target in by_kind.get(dst_kind) or [dst_kind.label]:
                    origin_by_pair.setdefault((source, target), EdgeOrigin.BUILTIN)

    edges = tuple(
        InfluenceEdge(source, target, origin)
        for (source, target), origin in sorted(origin_by_pair.items())
    )

    warnings: list[str] = []
    if requirement is not None:
        required = {qr.property.name for qr in requirement.quality_reqs}
        for edge in edges:
            if edge.source in required and edge.target in required:
                warnings.append(
                    f"requiring {edge.source} may degrade {edge.target} "
                    f"({edge.source} influences {edge.target})")
    return InfluenceReport(edges=edges, warnings=tuple(warnings))
