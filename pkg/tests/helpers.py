"""Shared test helpers: tiny model builders and a random model generator."""

from __future__ import annotations

import random

from qfm import (
    AttrDecl,
    Comparator,
    ConstraintDecl,
    ConstraintPolarity,
    FeatureDecl,
    FeatureModel,
    GroupDecl,
    GroupKind,
    InvolvementDecl,
    Level,
    MetricDecl,
    ModelDecl,
    QualityDecl,
    QualityKind,
    QualityReqDecl,
    RefDecl,
    RequirementDecl,
    SetDecl,
    ThresholdDecl,
    build_model,
)

COMPARATORS = [Comparator.LE, Comparator.GE, Comparator.LT, Comparator.GT, Comparator.EQ]
LEVELS = [Level.LOW, Level.MEDIUM, Level.HIGH]
KINDS = list(QualityKind)


def single_feature_model(name: str = "solo", root: str = "ML Pipeline",
                         mandatory: bool = True) -> FeatureModel:
    return build_model(ModelDecl(name=name, root=FeatureDecl(root, is_mandatory=mandatory)))


def chain_model(*names: str, mandatory: bool = True) -> FeatureModel:
    """root -> names[1] -> names[2] ... as plain (optionally mandatory) children."""
    decl: FeatureDecl | None = None
    for name in reversed(names):
        node = FeatureDecl(name, is_mandatory=mandatory)
        if decl is not None:
            node.plain_children.append(decl)
        decl = node
    assert decl is not None
    return build_model(ModelDecl(name="chain", root=decl))


def random_model(seed: int, max_features: int = 12, max_constraints: int = 4,
                 with_requirement: bool = False) -> FeatureModel:
    """Deterministic random model: arbitrary tree, groups, flags, attributes,
    constraints, qualities and (optionally) a requirement. Always satisfies
    the build invariants by construction."""
    rng = random.Random(seed)
    n = rng.randint(1, max_features)
    names = [f"F{i}" for i in range(n)]

    children: dict[int, list[int]] = {i: [] for i in range(n)}
    for i in range(1, n):
        children[rng.randrange(i)].append(i)

    decls: list[FeatureDecl] = []
    for i in range(n):
        decls.append(FeatureDecl(
            names[i],
            is_abstract=rng.random() < 0.25,
            is_mandatory=rng.random() < 0.3,
            is_hidden=rng.random() < 0.1,
        ))

    attributes: list[tuple[str, str, list[str]]] = []  # (feature, attr, values)
    for i in range(n):
        if rng.random() < 0.25:
            values = [f"v{k}" for k in range(rng.randint(2, 3))]
            attr_name = f"A{i}"
            decls[i].attributes.append(AttrDecl(attr_name, list(values)))
            attributes.append((names[i], attr_name, values))

    for i in range(n):
        kids = children[i]
        if len(kids) >= 2 and rng.random() < 0.6:
            size = rng.randint(2, len(kids))
            member_ids = kids[:size]
            rest = kids[size:]
            kind = rng.choice([GroupKind.OR, GroupKind.ALT])
            decls[i].groups.append(GroupDecl(kind, [decls[k] for k in member_ids]))
            decls[i].plain_children.extend(decls[k] for k in rest)
        else:
            decls[i].plain_children.extend(decls[k] for k in kids)

    constraints: list[ConstraintDecl] = []
    for _ in range(rng.randint(0, max_constraints)):
        if n < 2:
            break
        subject = rng.choice(names)
        polarity = rng.choice([ConstraintPolarity.REQUIRE, ConstraintPolarity.EXCLUDE])
        roll = rng.random()
        if roll < 0.45 or not attributes:
            target = rng.choice(names)
            if target == subject:
                continue
            ref = RefDecl(target)
        elif roll < 0.6 and polarity is ConstraintPolarity.REQUIRE:
            owner, attr, _ = rng.choice(attributes)
            ref = RefDecl(owner, attr)
        else:
            owner, attr, values = rng.choice(attributes)
            ref = RefDecl(owner, attr, rng.choice(values))
        constraints.append(ConstraintDecl(subject, polarity, ref))

    concrete = [names[i] for i in range(n) if not decls[i].is_abstract]
    qualities: list[QualityDecl] = []
    used_kinds = rng.sample(KINDS, k=rng.randint(0, min(2, len(KINDS))))
    for qi, kind in enumerate(used_kinds):
        q = QualityDecl(kind=kind, name=f"Q{qi}")
        pool = list(names)
        rng.shuffle(pool)
        implementers = pool[:rng.randint(0, min(2, n))]
        involved = [p for p in pool[len(implementers):len(implementers) + rng.randint(0, 2)]]
        q.implemented_by = list(implementers)
        q.involvements = [
            InvolvementDecl(f, rng.choice(LEVELS) if rng.random() < 0.5 else None)
            for f in involved
        ]
        if qi > 0 and rng.random() < 0.5:
            q.influenced_by = [f"Q{rng.randrange(qi)}"]
        for mi in range(rng.randint(0, 2)):
            if not concrete:
                break
            q.metrics.append(MetricDecl(f"Q{qi}M{mi}", rng.choice(concrete)))
        qualities.append(q)

    requirement = None
    if with_requirement:
        requirement = RequirementDecl(task="task")
        for owner, attr, values in attributes:
            if rng.random() < 0.5:
                requirement.attribute_specs.append(
                    SetDecl(owner, attr, rng.choice(values)))
        for q in qualities:
            if rng.random() < 0.6:
                qreq = QualityReqDecl(property=q.name.text)
                if rng.random() < 0.3:
                    qreq.required_level = rng.choice(LEVELS)
                for m in q.metrics:
                    if rng.random() < 0.6:
                        qreq.thresholds.append(ThresholdDecl(
                            m.name.text, rng.choice(COMPARATORS),
                            round(rng.uniform(0, 10), 2)))
                requirement.quality_reqs.append(qreq)

    decl = ModelDecl(name=f"random{seed}", root=decls[0], qualities=qualities,
                     constraints=constraints, requirement=requirement)
    return build_model(decl)


def visible_names(model: FeatureModel) -> list[str]:
    return [f.name for f in model.features() if not (f.is_abstract or f.is_hidden)]
