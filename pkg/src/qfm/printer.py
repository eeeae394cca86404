"""Canonical text form for models: stable indentation, declaration order
preserved, output re-parses to a structurally equal model."""

from __future__ import annotations

import re

from .model import (
    Attribute,
    AttributeBinding,
    Feature,
    FeatureModel,
    QualityProperty,
    Requirement,
)
from .parser import KEYWORDS

_BARE_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_-]*$")
_INDENT = "  "


def format_ident(name: str) -> str:
    """Quote identifiers that are not bare words (or that collide with keywords)."""
    if _BARE_IDENT.match(name) and name not in KEYWORDS:
        return name
    escaped = name.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def format_number(value: float) -> str:
    return repr(value)


def serialize_model(model: FeatureModel) -> str:
    """Render a model in canonical form (UTF-8 text, LF line endings)."""
    lines: list[str] = [f"model {format_ident(model.name)} {{"]
    _feature(lines, model.root, 1)
    for quality in model.qualities:
        lines.append("")
        _quality(lines, quality, 1)
    if model.constraints:
        lines.append("")
        for c in model.constraints:
            lines.append(f"{_INDENT}{format_ident(c.subject.name)} {c.polarity.value} {_ref(c.object)}")
    if model.requirement is not None:
        lines.append("")
        _requirement(lines, model.requirement, 1)
    lines.append("}")
    return "\n".join(lines) + "\n"


def _feature(lines: list[str], feature: Feature, depth: int) -> None:
    indent = _INDENT * depth
    flags = "".join(
        word
        for word, on in (("abstract ", feature.is_abstract),
                         ("mandatory ", feature.is_mandatory),
                         ("hidden ", feature.is_hidden))
        if on
    )
    head = f"{indent}{flags}feature {format_ident(feature.name)}"
    if not feature.attributes and not feature.plain_children and not feature.groups:
        lines.append(head)
        return
    lines.append(head + " {")
    for attr in feature.attributes:
        values = ", ".join(format_ident(v.literal) for v in attr.values)
        lines.append(f"{indent}{_INDENT}attribute {format_ident(attr.name)} in {{ {values} }}")
    for child in feature.plain_children:
        _feature(lines, child, depth + 1)
    for group in feature.groups:
        lines.append(f"{indent}{_INDENT}group {group.kind.value} {{")
        for member in group.members:
            _feature(lines, member, depth + 2)
        lines.append(f"{indent}{_INDENT}}}")
    lines.append(indent + "}")


def _ref(obj) -> str:
    if isinstance(obj, Feature):
        return format_ident(obj.name)
    if isinstance(obj, Attribute):
        return f"{format_ident(obj.owner)}.{format_ident(obj.name)}"
    assert isinstance(obj, AttributeBinding)
    attr = obj.attribute
    return f"{format_ident(attr.owner)}.{format_ident(attr.name)} = {format_ident(obj.value.literal)}"


def _quality(lines: list[str], quality: QualityProperty, depth: int) -> None:
    indent = _INDENT * depth
    head = f"{indent}quality {quality.kind.value} {format_ident(quality.name)} {quality.nature.value}"
    if quality.variant_tag is not None:
        escaped = quality.variant_tag.replace("\\", "\\\\").replace('"', '\\"')
        head += f' variant "{escaped}"'
    lines.append(head + " {")
    inner = indent + _INDENT
    if quality.implemented_by:
        names = ", ".join(format_ident(f.name) for f in quality.implemented_by)
        lines.append(f"{inner}implemented_by {names}")
    if quality.involvements:
        parts = []
        for inv in quality.involvements:
            part = format_ident(inv.feature.name)
            if inv.level is not None:
                part += f" level {inv.level.value}"
            parts.append(part)
        lines.append(f"{inner}involves {', '.join(parts)}")
    if quality.influenced_by:
        names = ", ".join(format_ident(n) for n in quality.influenced_by)
        lines.append(f"{inner}influenced_by {names}")
    for metric in quality.metrics:
        lines.append(f"{inner}metric {format_ident(metric.name)} "
                     f"implemented_by {format_ident(metric.implementer.name)}")
    lines.append(indent + "}")


def _requirement(lines: list[str], req: Requirement, depth: int) -> None:
    indent = _INDENT * depth
    inner = indent + _INDENT
    lines.append(f"{indent}requirement {format_ident(req.task)} {{")
    for spec in req.attribute_specs:
        attr = spec.attribute
        lines.append(f"{inner}set {format_ident(attr.owner)}.{format_ident(attr.name)} "
                     f"= {format_ident(spec.value.literal)}")
    for qreq in req.quality_reqs:
        if qreq.required_level is None and not qreq.thresholds:
            lines.append(f"{inner}require {format_ident(qreq.property.name)}")
            continue
        lines.append(f"{inner}require {format_ident(qreq.property.name)} {{")
        if qreq.required_level is not None:
            lines.append(f"{inner}{_INDENT}level {qreq.required_level.value}")
        for t in qreq.thresholds:
            lines.append(f"{inner}{_INDENT}threshold {format_ident(t.metric.name)} "
                         f"{t.comparator.value} {format_number(t.value)}")
        lines.append(inner + "}")
    lines.append(indent + "}")
