"""Constraint encoding and configuration derivation.

The feature tree, group memberships, flags and cross-tree constraints are
compiled into a clause set over boolean feature-selection variables and
finite-domain attribute variables. A requirement prunes the problem by
forcing literals (with a provenance reason per literal); all remaining valid
configurations are enumerated by backtracking with unit propagation.

Two independent routes exist on purpose: the enumerator works on the
compiled clauses, while :func:`verify_configuration` and
:func:`brute_force_enumerate` re-evaluate the model semantics directly
against a selection, sharing nothing with the clause propagation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Union

from .model import (
    Attribute,
    AttributeBinding,
    ConstraintPolarity,
    Configuration,
    Feature,
    FeatureModel,
    GroupKind,
    Requirement,
)


class Reason(enum.Enum):
    MANDATORY_ROOT = "MANDATORY_ROOT"
    ATTR_SPEC = "ATTR_SPEC"
    QUALITY_IMPLEMENTER = "QUALITY_IMPLEMENTER"
    THRESHOLD_METRIC = "THRESHOLD_METRIC"
    UNREQUESTED_QUALITY = "UNREQUESTED_QUALITY"
    UNREQUESTED_METRIC = "UNREQUESTED_METRIC"
    CONSTRAINT_CONFLICT = "CONSTRAINT_CONFLICT"


# -- variables, literals, clauses ---------------------------------------------


@dataclass(frozen=True)
class FeatureVar:
    feature: str

    def __str__(self) -> str:
        return f"feature {self.feature!r}"


@dataclass(frozen=True)
class BindingVar:
    owner: str
    attribute: str
    value: str

    @property
    def path(self) -> str:
        return f"{self.owner}.{self.attribute}"

    def __str__(self) -> str:
        return f"binding {self.path} = {self.value}"


Var = Union[FeatureVar, BindingVar]


@dataclass(frozen=True)
class Literal:
    var: Var
    positive: bool = True

    def negated(self) -> "Literal":
        return Literal(self.var, not self.positive)

    def __str__(self) -> str:
        return str(self.var) if self.positive else f"not {self.var}"


def selected(feature: str, positive: bool = True) -> Literal:
    return Literal(FeatureVar(feature), positive)


def binding(owner: str, attribute: str, value: str, positive: bool = True) -> Literal:
    return Literal(BindingVar(owner, attribute, value), positive)


@dataclass(frozen=True)
class Disjunction:
    """At least one literal holds."""

    literals: tuple[Literal, ...]
    note: str = ""


@dataclass(frozen=True)
class ExactlyOne:
    """If the parent is selected, exactly one member is selected."""

    parent: str
    members: tuple[str, ...]
    note: str = ""


Clause = Union[Disjunction, ExactlyOne]


@dataclass(frozen=True)
class AttributeVar:
    owner: str
    name: str
    values: tuple[str, ...]

    @property
    def path(self) -> str:
        return f"{self.owner}.{self.name}"


@dataclass(frozen=True)
class ConstraintSet:
    feature_vars: tuple[str, ...]  # canonical pre-order
    attribute_vars: tuple[AttributeVar, ...]
    clauses: tuple[Clause, ...]
    forced_true: tuple[Literal, ...] = ()
    forced_false: tuple[Literal, ...] = ()


@dataclass
class PrunedProblem:
    base: ConstraintSet
    provenance: dict[Literal, Reason]
    explanations: dict[Literal, tuple[str, ...]] = field(default_factory=dict)
    model: FeatureModel | None = None
    requirement: Requirement | None = None


@dataclass(frozen=True)
class Violation:
    rule: str
    entities: tuple[str, ...]
    message: str


class RequirementUnsatisfiable(Exception):
    """A literal was forced both ways while applying a requirement."""

    def __init__(self, subject: str, selected_chain: tuple[str, ...],
                 deselected_chain: tuple[str, ...]):
        self.subject = subject
        self.selected_chain = selected_chain
        self.deselected_chain = deselected_chain
        super().__init__(str(self))

    def __str__(self) -> str:
        lines = [f"requirement cannot be satisfied: {self.subject} is forced both ways"]
        lines.append("  forced selected because:")
        lines.extend(f"    - {step}" for step in self.selected_chain)
        lines.append("  forced deselected because:")
        lines.extend(f"    - {step}" for step in self.deselected_chain)
        return "\n".join(lines)


class TooLarge(Exception):
    def __init__(self, feature_count: int, bound: int = 24):
        self.feature_count = feature_count
        self.bound = bound
        super().__init__(
            f"brute-force enumeration is limited to {bound} features, model has {feature_count}")


class SearchBudgetExceeded(Exception):
    def __init__(self, limit: int):
        self.limit = limit
        super().__init__(f"search exceeded its node budget of {limit}")


# -- clause derivation ---------------------------------------------------------


def derive_constraints(model: FeatureModel) -> ConstraintSet:
    """Compile tree shape, flags, groups and cross-tree constraints to clauses."""
    features = model.features()
    clauses: list[Clause] = [Disjunction((selected(model.root.name),), note="root is always selected")]

    for f in features:
        for child in f.plain_children:
            _child_clauses(clauses, f, child)
        for group in f.groups:
            for member in group.members:
                _child_clauses(clauses, f, member)
            member_names = tuple(m.name for m in group.members)
            if group.kind is GroupKind.OR:
                lits = (selected(f.name, False),) + tuple(selected(m) for m in member_names)
                clauses.append(Disjunction(lits, note=f"or group under {f.name!r}"))
            else:
                clauses.append(ExactlyOne(f.name, member_names,
                                          note=f"alt group under {f.name!r}"))

    for c in model.constraints:
        s = c.subject.name
        require = c.polarity is ConstraintPolarity.REQUIRE
        obj = c.object
        if isinstance(obj, Feature):
            lits = (selected(s, False), selected(obj.name, require))
            clauses.append(Disjunction(lits, note=str(c)))
        elif isinstance(obj, AttributeBinding):
            attr = obj.attribute
            blit = binding(attr.owner, attr.name, obj.value.literal, require)
            clauses.append(Disjunction((selected(s, False), blit), note=str(c)))
            if require:
                clauses.append(Disjunction((selected(s, False), selected(attr.owner)),
                                           note=f"{s} requires the owner of {attr.path}"))
        else:
            # bare attribute: only meaningful relative to a requirement; a
            # require is handled while pruning, an exclude is rejected by
            # validation before this point
            if not require:
                raise ValueError(
                    f"exclude constraint on bare attribute {obj.path} must be rejected "
                    f"by validation before deriving constraints")

    attribute_vars = tuple(
        AttributeVar(a.owner, a.name, tuple(v.literal for v in a.values))
        for a in model.attributes()
    )
    return ConstraintSet(
        feature_vars=tuple(f.name for f in features),
        attribute_vars=attribute_vars,
        clauses=tuple(clauses),
    )


def _child_clauses(clauses: list[Clause], parent: Feature, child: Feature) -> None:
    clauses.append(Disjunction((selected(child.name, False), selected(parent.name)),
                               note=f"{child.name!r} implies its parent {parent.name!r}"))
    if child.is_mandatory:
        clauses.append(Disjunction((selected(parent.name, False), selected(child.name)),
                                   note=f"{child.name!r} is mandatory under {parent.name!r}"))


# -- requirement pruning ---------------------------------------------------------


class _Forcer:
    def __init__(self) -> None:
        self.value: dict[Literal, bool] = {}
        self.reason: dict[Literal, Reason] = {}
        self.chain: dict[Literal, tuple[str, ...]] = {}

    def force(self, lit: Literal, value: bool, reason: Reason, chain: tuple[str, ...]) -> bool:
        """Record a forced literal; returns False when it was already forced
        the same way (the first reason wins)."""
        key = Literal(lit.var, True)
        if key in self.value:
            if self.value[key] == value:
                return False
            if value:
                sel, desel = chain, self.chain[key]
            else:
                sel, desel = self.chain[key], chain
            raise RequirementUnsatisfiable(str(key.var), sel, desel)
        self.value[key] = value
        self.reason[key] = reason
        self.chain[key] = chain
        return True

    def is_true(self, lit: Literal) -> bool:
        key = Literal(lit.var, True)
        return self.value.get(key) is True

    def is_false(self, lit: Literal) -> bool:
        key = Literal(lit.var, True)
        return self.value.get(key) is False


def base_problem(model: FeatureModel) -> PrunedProblem:
    """The unpruned problem: only the root feature is forced."""
    cs = derive_constraints(model)
    root = selected(model.root.name)
    forced = ConstraintSet(
        feature_vars=cs.feature_vars,
        attribute_vars=cs.attribute_vars,
        clauses=cs.clauses,
        forced_true=(root,),
    )
    return PrunedProblem(
        base=forced,
        provenance={root: Reason.MANDATORY_ROOT},
        explanations={root: (f"{model.root.name!r} is the root feature",)},
        model=model,
        requirement=None,
    )


def apply_requirement(model: FeatureModel, req: Requirement) -> PrunedProblem:
    """Prune the constraint problem according to a requirement.

    Forcing rules, in application order (the first applicable reason is the
    one recorded for a literal):

    * the root feature is selected (MANDATORY_ROOT);
    * each attribute specification fixes its binding and selects the
      attribute owner (ATTR_SPEC);
    * implementer features of each required quality are selected
      (QUALITY_IMPLEMENTER);
    * each threshold selects its metric's implementer (THRESHOLD_METRIC);
    * implementers of qualities the requirement does not name are
      deselected (UNREQUESTED_QUALITY);
    * implementers of metrics without a threshold are deselected
      (UNREQUESTED_METRIC);
    * constraints contradicting the forced literals propagate to a fixpoint
      (CONSTRAINT_CONFLICT).

    Involvement relations never force anything. A literal forced both ways
    raises :class:`RequirementUnsatisfiable` with both provenance chains.
    """
    cs = derive_constraints(model)
    forcer = _Forcer()
    forcer.force(selected(model.root.name), True, Reason.MANDATORY_ROOT,
                 (f"{model.root.name!r} is the root feature",))

    for spec in req.attribute_specs:
        attr = spec.attribute
        why = f"requirement sets {attr.path} = {spec.value.literal}"
        forcer.force(binding(attr.owner, attr.name, spec.value.literal), True,
                     Reason.ATTR_SPEC, (why,))
        forcer.force(selected(attr.owner), True, Reason.ATTR_SPEC,
                     (why, f"{attr.owner!r} owns the attribute"))

    requested = {qr.property.name for qr in req.quality_reqs}
    for qr in req.quality_reqs:
        for f in qr.property.implemented_by:
            forcer.force(selected(f.name), True, Reason.QUALITY_IMPLEMENTER,
                         (f"requirement asks for quality {qr.property.name!r}",
                          f"{f.name!r} implements {qr.property.name!r}"))
    for qr in req.quality_reqs:
        for t in qr.thresholds:
            forcer.force(selected(t.metric.implementer.name), True, Reason.THRESHOLD_METRIC,
                         (f"requirement sets a threshold on metric {t.metric.name!r}",
                          f"{t.metric.implementer.name!r} implements {t.metric.name!r}"))

    for q in model.qualities:
        if q.name in requested:
            continue
        for f in q.implemented_by:
            forcer.force(selected(f.name), False, Reason.UNREQUESTED_QUALITY,
                         (f"quality {q.name!r} is not named by the requirement",
                          f"{f.name!r} implements {q.name!r}"))

    thresholded = {
        (qr.property.name, t.metric.name)
        for qr in req.quality_reqs
        for t in qr.thresholds
    }
    for q in model.qualities:
        for m in q.metrics:
            if (q.name, m.name) in thresholded:
                continue
            forcer.force(selected(m.implementer.name), False, Reason.UNREQUESTED_METRIC,
                         (f"metric {m.name!r} of quality {q.name!r} has no threshold "
                          f"in the requirement",
                          f"{m.implementer.name!r} implements {m.name!r}"))

    req_bound = {spec.attribute.path: spec.value.literal for spec in req.attribute_specs}
    _propagate_conflicts(model, forcer, req_bound)

    forced_true = tuple(lit for lit, v in forcer.value.items() if v)
    forced_false = tuple(lit.negated() for lit, v in forcer.value.items() if not v)
    pruned_cs = ConstraintSet(
        feature_vars=cs.feature_vars,
        attribute_vars=cs.attribute_vars,
        clauses=cs.clauses,
        forced_true=forced_true,
        forced_false=forced_false,
    )
    provenance = {}
    explanations = {}
    for lit, v in forcer.value.items():
        key = lit if v else lit.negated()
        provenance[key] = forcer.reason[lit]
        explanations[key] = forcer.chain[lit]
    return PrunedProblem(
        base=pruned_cs,
        provenance=provenance,
        explanations=explanations,
        model=model,
        requirement=req,
    )


def _propagate_conflicts(model: FeatureModel, forcer: _Forcer, req_bound: dict[str, str]) -> None:
    changed = True
    while changed:
        changed = False
        for c in model.constraints:
            s = c.subject.name
            if forcer.is_false(selected(s)):
                continue
            obj = c.object
            if c.polarity is ConstraintPolarity.REQUIRE:
                if isinstance(obj, AttributeBinding):
                    attr = obj.attribute
                    bound = req_bound.get(attr.path)
                    if bound is not None and bound != obj.value.literal:
                        changed |= forcer.force(
                            selected(s), False, Reason.CONSTRAINT_CONFLICT,
                            (f"{s!r} requires {attr.path} = {obj.value.literal}",
                             f"requirement sets {attr.path} = {bound}"))
                elif isinstance(obj, Attribute):
                    if obj.path not in req_bound:
                        changed |= forcer.force(
                            selected(s), False, Reason.CONSTRAINT_CONFLICT,
                            (f"{s!r} requires {obj.path} to be specified",
                             f"the requirement does not bind {obj.path}"))
                else:
                    if forcer.is_false(selected(obj.name)):
                        changed |= forcer.force(
                            selected(s), False, Reason.CONSTRAINT_CONFLICT,
                            (f"{s!r} requires {obj.name!r}",)
                            + forcer.chain[selected(obj.name)])
            else:
                if isinstance(obj, AttributeBinding):
                    attr = obj.attribute
                    if req_bound.get(attr.path) == obj.value.literal:
                        changed |= forcer.force(
                            selected(s), False, Reason.CONSTRAINT_CONFLICT,
                            (f"{s!r} excludes {attr.path} = {obj.value.literal}",
                             f"requirement sets {attr.path} = {obj.value.literal}"))
                elif isinstance(obj, Feature):
                    if forcer.is_true(selected(obj.name)):
                        changed |= forcer.force(
                            selected(s), False, Reason.CONSTRAINT_CONFLICT,
                            (f"{s!r} excludes {obj.name!r}",)
                            + forcer.chain[selected(obj.name)])
                    elif forcer.is_true(selected(s)):
                        changed |= forcer.force(
                            selected(obj.name), False, Reason.CONSTRAINT_CONFLICT,
                            (f"{s!r} excludes {obj.name!r}",)
                            + forcer.chain[selected(s)])


# -- backtracking enumeration ------------------------------------------------


class _Search:
    """Backtracking with unit propagation over the compiled clause set.

    Feature variables are decided in canonical pre-order; attribute variables
    are never decision points, they only take values implied by forced
    literals or by require-constraints of selected features (anything else
    stays a wildcard).
    """

    def __init__(self, problem: PrunedProblem):
        if problem.model is None:
            raise ValueError("problem carries no model")
        self.model = problem.model
        cs = problem.base
        self.names = cs.feature_vars
        self.n = len(self.names)
        self.findex = {name: i for i, name in enumerate(self.names)}
        self.attrs = cs.attribute_vars
        self.aindex = {(a.owner, a.name): i for i, a in enumerate(self.attrs)}
        features = self.model.features()
        self.visible = [not (f.is_abstract or f.is_hidden) for f in features]

        self.clauses: list[Clause] = list(cs.clauses)
        self.by_feature: dict[int, list[int]] = {i: [] for i in range(self.n)}
        self.by_attr: dict[int, list[int]] = {i: [] for i in range(len(self.attrs))}
        for ci, clause in enumerate(self.clauses):
            if isinstance(clause, Disjunction):
                for lit in clause.literals:
                    if isinstance(lit.var, FeatureVar):
                        self.by_feature[self.findex[lit.var.feature]].append(ci)
                    else:
                        self.by_attr[self.aindex[(lit.var.owner, lit.var.attribute)]].append(ci)
            else:
                self.by_feature[self.findex[clause.parent]].append(ci)
                for m in clause.members:
                    self.by_feature[self.findex[m]].append(ci)

        self.assign: list[int] = [-1] * self.n  # -1 unknown, 0 false, 1 true
        self.attr_value: list[str | None] = [None] * len(self.attrs)
        self.attr_forbidden: list[set[str]] = [set() for _ in self.attrs]
        self.trail: list[tuple] = []
        self.nodes = 0
        self.node_budget: int | None = None

        self.seed_ok = self._seed(cs)

    def _seed(self, cs: ConstraintSet) -> bool:
        queue: list[tuple[str, int]] = []
        for lit in cs.forced_true:
            if not self._apply_lit(lit, queue):
                return False
        for lit in cs.forced_false:
            # normalize: entries may be stored as negative literals already
            eff = lit if not lit.positive else lit.negated()
            if not self._apply_lit(eff, queue):
                return False
        return self._drain(queue)

    # -- state transitions (all recorded on the trail) -----------------------

    def _set_feature(self, fi: int, value: int, queue: list) -> bool:
        cur = self.assign[fi]
        if cur != -1:
            return cur == value
        self.assign[fi] = value
        self.trail.append(("f", fi))
        queue.append(("f", fi))
        return True

    def _set_attr(self, ai: int, value: str, queue: list) -> bool:
        cur = self.attr_value[ai]
        if cur is not None:
            return cur == value
        if value in self.attr_forbidden[ai]:
            return False
        self.attr_value[ai] = value
        self.trail.append(("a", ai))
        queue.append(("a", ai))
        return True

    def _forbid_attr(self, ai: int, value: str, queue: list) -> bool:
        if self.attr_value[ai] == value:
            return False
        if value in self.attr_forbidden[ai]:
            return True
        self.attr_forbidden[ai].add(value)
        self.trail.append(("x", ai, value))
        queue.append(("a", ai))
        return True

    def _undo_to(self, mark: int) -> None:
        while len(self.trail) > mark:
            entry = self.trail.pop()
            if entry[0] == "f":
                self.assign[entry[1]] = -1
            elif entry[0] == "a":
                self.attr_value[entry[1]] = None
            else:
                self.attr_forbidden[entry[1]].discard(entry[2])

    # -- clause evaluation -----------------------------------------------------

    def _lit_state(self, lit: Literal) -> int:
        """1 satisfied, 0 falsified, -1 undetermined."""
        var = lit.var
        if isinstance(var, FeatureVar):
            a = self.assign[self.findex[var.feature]]
            if a == -1:
                return -1
            return 1 if (a == 1) == lit.positive else 0
        ai = self.aindex[(var.owner, var.attribute)]
        value = self.attr_value[ai]
        if lit.positive:
            if value == var.value:
                return 1
            if value is not None or var.value in self.attr_forbidden[ai]:
                return 0
            return -1
        if value == var.value:
            return 0
        if value is not None or var.value in self.attr_forbidden[ai]:
            return 1
        return -1

    def _apply_lit(self, lit: Literal, queue: list) -> bool:
        var = lit.var
        if isinstance(var, FeatureVar):
            return self._set_feature(self.findex[var.feature], 1 if lit.positive else 0, queue)
        ai = self.aindex[(var.owner, var.attribute)]
        if lit.positive:
            return self._set_attr(ai, var.value, queue)
        return self._forbid_attr(ai, var.value, queue)

    def _eval_clause(self, ci: int, queue: list) -> bool:
        clause = self.clauses[ci]
        if isinstance(clause, Disjunction):
            unassigned: Literal | None = None
            count = 0
            for lit in clause.literals:
                state = self._lit_state(lit)
                if state == 1:
                    return True
                if state == -1:
                    unassigned = lit
                    count += 1
                    if count > 1:
                        return True  # still two ways to satisfy
            if count == 0:
                return False
            return self._apply_lit(unassigned, queue)
        # exactly-one group
        p = self.assign[self.findex[clause.parent]]
        if p == 0:
            return True
        member_idx = [self.findex[m] for m in clause.members]
        true_count = sum(1 for mi in member_idx if self.assign[mi] == 1)
        if true_count > 1:
            return False
        if p == -1:
            return True  # member=>parent clauses settle the parent first
        open_idx = [mi for mi in member_idx if self.assign[mi] == -1]
        if true_count == 1:
            for mi in open_idx:
                if not self._set_feature(mi, 0, queue):
                    return False
            return True
        if not open_idx:
            return False
        if len(open_idx) == 1:
            return self._set_feature(open_idx[0], 1, queue)
        return True

    def _drain(self, queue: list) -> bool:
        while queue:
            kind, idx = queue.pop()
            watch = self.by_feature[idx] if kind == "f" else self.by_attr[idx]
            for ci in watch:
                if not self._eval_clause(ci, queue):
                    return False
        return True

    def _decide(self, fi: int, value: int) -> bool:
        queue: list = []
        if not self._set_feature(fi, value, queue):
            return False
        return self._drain(queue)

    def _solution_key(self) -> tuple:
        vis = tuple(self.assign[i] == 1 for i in range(self.n) if self.visible[i])
        bindings = tuple(
            (ai, value)
            for ai, value in enumerate(self.attr_value)
            if value is not None
        )
        return (vis, bindings)

    def _next_unassigned(self, start: int) -> int:
        for i in range(start, self.n):
            if self.assign[i] == -1:
                return i
        return self.n

    # -- search entry points -----------------------------------------------------

    def solution_keys(self, on_solution) -> None:
        """Walk all satisfying assignments, calling `on_solution(key)` per leaf."""
        if not self.seed_ok:
            return

        def walk(cursor: int) -> None:
            self.nodes += 1
            if self.node_budget is not None and self.nodes > self.node_budget:
                raise SearchBudgetExceeded(self.node_budget)
            fi = self._next_unassigned(cursor)
            if fi == self.n:
                on_solution(self._solution_key())
                return
            for value in (0, 1):
                mark = len(self.trail)
                if self._decide(fi, value):
                    walk(fi + 1)
                self._undo_to(mark)

        walk(0)

    def satisfiable(self, extra: Iterable[tuple[str, bool]] = ()) -> bool:
        """Decide satisfiability under extra feature assignments (probe mode)."""
        if not self.seed_ok:
            return False
        mark = len(self.trail)
        try:
            queue: list = []
            for name, value in extra:
                if not self._set_feature(self.findex[name], 1 if value else 0, queue):
                    return False
            if not self._drain(queue):
                return False

            def walk(cursor: int) -> bool:
                self.nodes += 1
                if self.node_budget is not None and self.nodes > self.node_budget:
                    raise SearchBudgetExceeded(self.node_budget)
                fi = self._next_unassigned(cursor)
                if fi == self.n:
                    return True
                for value in (0, 1):
                    inner = len(self.trail)
                    if self._decide(fi, value) and walk(fi + 1):
                        return True
                    self._undo_to(inner)
                return False

            return walk(0)
        finally:
            self._undo_to(mark)


def _configurations_from_keys(model: FeatureModel, keys: Iterable[tuple]) -> list[Configuration]:
    features = model.features()
    visible_names = [f.name for f in features if not (f.is_abstract or f.is_hidden)]
    attrs = list(model.attributes())
    out = []
    for vis, bindings in sorted(set(keys)):
        names = tuple(name for name, on in zip(visible_names, vis) if on)
        bound = tuple(
            AttributeBinding(attrs[ai], attrs[ai].value(value))
            for ai, value in bindings
        )
        out.append(Configuration(selected=names, bindings=bound))
    return out


def enumerate_configurations(problem: PrunedProblem, limit: int | None = None) -> list[Configuration]:
    """All valid configurations, deduplicated, sorted by selection bit-vector.

    The sort is ascending lexicographic over the canonical pre-order
    bit-vector of visible (concrete, non-hidden) features. An unsatisfiable
    problem yields an empty list. With `limit`, the sorted list is truncated.
    """
    keys: set[tuple] = set()
    _Search(problem).solution_keys(keys.add)
    configs = _configurations_from_keys(problem.model, keys)
    if limit is not None:
        return configs[:limit]
    return configs


def count_configurations(problem: PrunedProblem) -> int:
    """Number of valid configurations, without materializing them."""
    keys: set[tuple] = set()
    _Search(problem).solution_keys(keys.add)
    return len(keys)


def probe_satisfiable(problem: PrunedProblem, extra: Iterable[tuple[str, bool]] = (),
                      node_budget: int | None = None) -> bool:
    """One-shot satisfiability probe under extra feature assignments."""
    search = _Search(problem)
    search.node_budget = node_budget
    return search.satisfiable(extra)


# -- direct semantic evaluation (verifier / oracle route) ----------------------
#
# Everything below re-derives the rules straight from the model structure and
# evaluates them on bitmask assignments. It shares no code with the clause
# compilation or the propagation above.


class _RuleTable:
    def __init__(self, model: FeatureModel, requirement: Requirement | None):
        features = model.features()
        self.model = model
        self.requirement = requirement
        self.n = len(features)
        self.names = [f.name for f in features]
        self.index = {f.name: i for i, f in enumerate(features)}
        bit = {f.name: 1 << i for i, f in enumerate(features)}
        self.bit = bit
        self.root_name = model.root.name
        self.root_bit = bit[self.root_name]

        self.visible_order = [f.name for f in features if not (f.is_abstract or f.is_hidden)]
        self.visible_mask = 0
        for name in self.visible_order:
            self.visible_mask |= bit[name]
        self.invisible = [f.name for f in features if f.is_abstract or f.is_hidden]

        self.parent_rules: list[tuple[int, int, str, str]] = []
        self.mandatory_rules: list[tuple[int, int, str, str]] = []
        self.or_rules: list[tuple[int, int, str, tuple[str, ...]]] = []
        self.alt_rules: list[tuple[int, int, str, tuple[str, ...]]] = []
        for f in features:
            for child in f.children:
                self.parent_rules.append((bit[child.name], bit[f.name], child.name, f.name))
                if child.is_mandatory:
                    self.mandatory_rules.append((bit[f.name], bit[child.name], f.name, child.name))
            for group in f.groups:
                members = tuple(m.name for m in group.members)
                members_mask = 0
                for m in members:
                    members_mask |= bit[m]
                entry = (bit[f.name], members_mask, f.name, members)
                if group.kind is GroupKind.OR:
                    self.or_rules.append(entry)
                else:
                    self.alt_rules.append(entry)

        self.attr_order = [a.path for a in model.attributes()]
        self.attr_pos = {path: i for i, path in enumerate(self.attr_order)}

        self.req_feature: list[tuple[int, int, str, str]] = []
        self.exc_feature: list[tuple[int, int, str, str]] = []
        self.req_binding: list[tuple[int, str, str, str]] = []
        self.exc_binding: list[tuple[int, str, str, str]] = []
        self.req_bare: list[tuple[int, str, str]] = []
        for c in model.constraints:
            s = c.subject.name
            obj = c.object
            if isinstance(obj, Feature):
                entry = (bit[s], bit[obj.name], s, obj.name)
                if c.polarity is ConstraintPolarity.REQUIRE:
                    self.req_feature.append(entry)
                else:
                    self.exc_feature.append(entry)
            elif isinstance(obj, AttributeBinding):
                record = (bit[s], obj.attribute.path, obj.value.literal, s)
                if c.polarity is ConstraintPolarity.REQUIRE:
                    self.req_binding.append(record)
                    # requiring a binding also selects the attribute's owner
                    owner = obj.attribute.owner
                    self.req_feature.append((bit[s], bit[owner], s, owner))
                else:
                    self.exc_binding.append(record)
            else:
                if c.polarity is ConstraintPolarity.REQUIRE:
                    self.req_bare.append((bit[s], obj.path, s))
                # an exclude on a bare attribute is rejected by validation

        # requirement-imposed forcings, re-derived independently of pruning
        self.req_bound: dict[str, str] = {}
        self.must_true: list[tuple[int, str, str, str]] = []   # bit, rule, entity, message
        self.must_false: list[tuple[int, str, str, str]] = []
        self.bare_unbound: list[tuple[int, str, str]] = []
        if requirement is not None:
            for spec in requirement.attribute_specs:
                attr = spec.attribute
                self.req_bound[attr.path] = spec.value.literal
                self.must_true.append((
                    bit[attr.owner], "ATTR_SPEC", attr.owner,
                    f"requirement sets {attr.path} = {spec.value.literal} "
                    f"but {attr.owner!r} is not selected"))
            requested = {qr.property.name for qr in requirement.quality_reqs}
            for qr in requirement.quality_reqs:
                for f in qr.property.implemented_by:
                    self.must_true.append((
                        bit[f.name], "QUALITY_IMPLEMENTER", f.name,
                        f"{f.name!r} implements required quality {qr.property.name!r} "
                        f"but is not selected"))
                for t in qr.thresholds:
                    impl = t.metric.implementer.name
                    self.must_true.append((
                        bit[impl], "THRESHOLD_METRIC", impl,
                        f"{impl!r} implements thresholded metric {t.metric.name!r} "
                        f"but is not selected"))
            thresholded = {
                (qr.property.name, t.metric.name)
                for qr in requirement.quality_reqs
                for t in qr.thresholds
            }
            for q in model.qualities:
                if q.name not in requested:
                    for f in q.implemented_by:
                        self.must_false.append((
                            bit[f.name], "UNREQUESTED_QUALITY", f.name,
                            f"{f.name!r} implements quality {q.name!r} which the "
                            f"requirement does not ask for"))
                for m in q.metrics:
                    if (q.name, m.name) not in thresholded:
                        impl = m.implementer.name
                        self.must_false.append((
                            bit[impl], "UNREQUESTED_METRIC", impl,
                            f"{impl!r} implements metric {m.name!r} which has no "
                            f"threshold in the requirement"))
            for sb, path, s in self.req_bare:
                if path not in self.req_bound:
                    self.bare_unbound.append((sb, path, s))

        self.must_true_mask = 0
        for b, _, _, _ in self.must_true:
            self.must_true_mask |= b
        self.must_false_mask = 0
        for b, _, _, _ in self.must_false:
            self.must_false_mask |= b
        self.bare_unbound_mask = 0
        for b, _, _ in self.bare_unbound:
            self.bare_unbound_mask |= b

    # -- fast scalar check ----------------------------------------------------

    def check_mask(self, mask: int) -> bool:
        if not mask & self.root_bit:
            return False
        for cb, pb, _, _ in self.parent_rules:
            if mask & cb and not mask & pb:
                return False
        for pb, cb, _, _ in self.mandatory_rules:
            if mask & pb and not mask & cb:
                return False
        for pb, mm, _, _ in self.or_rules:
            if mask & pb and not mask & mm:
                return False
        for pb, mm, _, _ in self.alt_rules:
            if mask & pb and (mask & mm).bit_count() != 1:
                return False
        for sb, ob, _, _ in self.req_feature:
            if mask & sb and not mask & ob:
                return False
        for sb, ob, _, _ in self.exc_feature:
            if mask & sb and mask & ob:
                return False
        if mask & self.must_true_mask != self.must_true_mask:
            return False
        if mask & self.must_false_mask:
            return False
        if mask & self.bare_unbound_mask:
            return False
        return self._bindings_for(mask) is not None

    def _bindings_for(self, mask: int) -> dict[str, str] | None:
        effective = dict(self.req_bound)
        for sb, path, value, _ in self.req_binding:
            if mask & sb:
                current = effective.get(path)
                if current is None:
                    effective[path] = value
                elif current != value:
                    return None
        for sb, path, value, _ in self.exc_binding:
            if mask & sb and effective.get(path) == value:
                return None
        return effective

    # -- full violation collection -----------------------------------------------

    def violations(self, mask: int) -> list[Violation]:
        out: list[Violation] = []
        if not mask & self.root_bit:
            out.append(Violation("ROOT", (self.root_name,),
                                 f"root feature {self.root_name!r} is not selected"))
        for cb, pb, child, parent in self.parent_rules:
            if mask & cb and not mask & pb:
                out.append(Violation("PARENT", (child, parent),
                                     f"{child!r} is selected without its parent {parent!r}"))
        for pb, cb, parent, child in self.mandatory_rules:
            if mask & pb and not mask & cb:
                out.append(Violation("MANDATORY", (parent, child),
                                     f"mandatory {child!r} is missing under selected {parent!r}"))
        for pb, mm, parent, members in self.or_rules:
            if mask & pb and not mask & mm:
                out.append(Violation("OR_GROUP", (parent,) + members,
                                     f"or group under {parent!r} has no selected member"))
        for pb, mm, parent, members in self.alt_rules:
            if mask & pb:
                count = (mask & mm).bit_count()
                if count != 1:
                    out.append(Violation(
                        "ALT_GROUP", (parent,) + members,
                        f"alt group under {parent!r} needs exactly one selected member, "
                        f"found {count}"))
        for sb, ob, s, o in self.req_feature:
            if mask & sb and not mask & ob:
                out.append(Violation("REQUIRE", (s, o),
                                     f"{s!r} requires {o!r} which is not selected"))
        for sb, ob, s, o in self.exc_feature:
            if mask & sb and mask & ob:
                out.append(Violation("EXCLUDE", (s, o),
                                     f"{s!r} excludes {o!r} but both are selected"))
        for b, rule, entity, message in self.must_true:
            if not mask & b:
                out.append(Violation(rule, (entity,), message))
        for b, rule, entity, message in self.must_false:
            if mask & b:
                out.append(Violation(rule, (entity,), message))
        for sb, path, s in self.bare_unbound:
            if mask & sb:
                out.append(Violation(
                    "CONSTRAINT_CONFLICT", (s, path),
                    f"{s!r} requires {path} to be specified but the requirement "
                    f"does not bind it"))

        effective = dict(self.req_bound)
        source: dict[str, str] = {path: "the requirement" for path in effective}
        for sb, path, value, s in self.req_binding:
            if mask & sb:
                current = effective.get(path)
                if current is None:
                    effective[path] = value
                    source[path] = repr(s)
                elif current != value:
                    out.append(Violation(
                        "CONSTRAINT_CONFLICT", (s, path),
                        f"{s!r} requires {path} = {value} but {path} is bound to "
                        f"{current} by {source[path]}"))
        for sb, path, value, s in self.exc_binding:
            if mask & sb and effective.get(path) == value:
                out.append(Violation(
                    "CONSTRAINT_CONFLICT", (s, path),
                    f"{s!r} excludes {path} = {value} but that binding is in effect "
                    f"(set by {source[path]})"))
        return out

    # -- projections ---------------------------------------------------------------

    def projection_key(self, mask: int) -> tuple:
        vis = tuple(bool(mask & self.bit[name]) for name in self.visible_order)
        effective = self._bindings_for(mask)
        assert effective is not None
        bindings = tuple(sorted((self.attr_pos[path], value) for path, value in effective.items()))
        return (vis, bindings)

    def closure_mask(self, mask: int) -> int:
        """Deterministic candidate assignment: the selection plus the invisible
        features it structurally implies (ancestors, then mandatory closure)."""
        result = mask
        invisible_bits = ~self.visible_mask
        for name in self.names:
            if result & self.bit[name]:
                for anc in self.model.ancestors_of(name):
                    if self.bit[anc.name] & invisible_bits:
                        result |= self.bit[anc.name]
        if self.root_bit & invisible_bits:
            result |= self.root_bit
        changed = True
        while changed:
            changed = False
            for pb, cb, _, child in self.mandatory_rules:
                if result & pb and not result & cb and self.bit[child] & invisible_bits:
                    result |= cb
                    changed = True
            for cb, pb, child, parent in self.parent_rules:
                if result & cb and not result & pb and self.bit[parent] & invisible_bits:
                    result |= pb
                    changed = True
        return result


def verify_configuration(model: FeatureModel, req: Requirement | None,
                         config: Configuration) -> list[Violation]:
    """Independent check of a configuration against the model and requirement.

    Re-evaluates every tree rule, cross-tree constraint and requirement
    forcing rule directly on the selection set. Abstract and hidden features
    never appear in configurations, so the checker searches for a consistent
    assignment of them behind the scenes; if none exists the violations of
    the closest structural candidate are reported.
    """
    violations: list[Violation] = []
    seen: set[str] = set()
    positions: list[int] = []
    table = _RuleTable(model, req)
    for name in config.selected:
        feature = model.feature(name)  # raises NotFound on dangling references
        if feature.is_abstract:
            violations.append(Violation("ABSTRACT_IN_CONFIGURATION", (name,),
                                        f"abstract feature {name!r} cannot appear in a configuration"))
        if feature.is_hidden:
            violations.append(Violation("HIDDEN_IN_CONFIGURATION", (name,),
                                        f"hidden feature {name!r} cannot appear in a configuration"))
        if name in seen:
            violations.append(Violation("DUPLICATE_SELECTION", (name,),
                                        f"feature {name!r} is listed twice"))
        seen.add(name)
        positions.append(table.index[name])
    if positions != sorted(positions):
        violations.append(Violation("CANONICAL_ORDER", tuple(config.selected),
                                    "selection is not in canonical pre-order"))
    if violations:
        return violations

    mask = 0
    for name in config.selected:
        mask |= table.bit[name]

    closure = table.closure_mask(mask)
    if table.check_mask(closure):
        return []
    invisible_bits = [table.bit[name] for name in table.invisible]
    if len(invisible_bits) > 20:
        raise SearchBudgetExceeded(1 << 20)
    for combo in range(1 << len(invisible_bits)):
        candidate = mask
        rest = combo
        for b in invisible_bits:
            if rest & 1:
                candidate |= b
            rest >>= 1
        if table.check_mask(candidate):
            return []
    return table.violations(closure)


def brute_force_enumerate(problem: PrunedProblem) -> list[Configuration]:
    """Exhaustive oracle: test every selection vector, keep the valid ones.

    Same output contract as :func:`enumerate_configurations` (deduplicated
    projections, canonical bit-vector order). Limited to 24 features.
    """
    model = problem.model
    if model is None:
        raise ValueError("problem carries no model")
    table = _RuleTable(model, problem.requirement)
    if table.n > 24:
        raise TooLarge(table.n)
    keys: set[tuple] = set()
    for mask in _scan_valid_masks(table):
        keys.add(table.projection_key(mask))
    return _configurations_from_keys(model, keys)


_VECTOR_THRESHOLD = 14


def _scan_valid_masks(table: _RuleTable):
    if table.n >= _VECTOR_THRESHOLD:
        try:
            import numpy
        except ImportError:
            numpy = None
        if numpy is not None:
            yield from _vector_scan(table, numpy)
            return
    for mask in range(1 << table.n):
        if table.check_mask(mask):
            yield mask


def _vector_scan(table: _RuleTable, np):
    """Vectorized evaluation of the same rules, chunked over all vectors."""
    total = 1 << table.n
    chunk = 1 << 20
    for start in range(0, total, chunk):
        m = np.arange(start, min(start + chunk, total), dtype=np.uint32)
        ok = (m & table.root_bit) != 0
        for cb, pb, _, _ in table.parent_rules:
            ok &= ~(((m & cb) != 0) & ((m & pb) == 0))
        for pb, cb, _, _ in table.mandatory_rules:
            ok &= ~(((m & pb) != 0) & ((m & cb) == 0))
        for pb, mm, _, _ in table.or_rules:
            ok &= ~(((m & pb) != 0) & ((m & mm) == 0))
        for pb, mm, _, _ in table.alt_rules:
            ok &= ~(((m & pb) != 0) & (np.bitwise_count(m & mm) != 1))
        for sb, ob, _, _ in table.req_feature:
            ok &= ~(((m & sb) != 0) & ((m & ob) == 0))
        for sb, ob, _, _ in table.exc_feature:
            ok &= ~(((m & sb) != 0) & ((m & ob) != 0))
        if table.must_true_mask:
            ok &= (m & table.must_true_mask) == table.must_true_mask
        if table.must_false_mask:
            ok &= (m & table.must_false_mask) == 0
        if table.bare_unbound_mask:
            ok &= (m & table.bare_unbound_mask) == 0

        # binding consistency: at most one demanded value per attribute, and
        # compatibility with the requirement's fixed values
        demands: dict[str, dict[str, int]] = {}
        for sb, path, value, _ in table.req_binding:
            demands.setdefault(path, {}).setdefault(value, 0)
            demands[path][value] |= sb
        demand_flags: dict[tuple[str, str], "object"] = {}
        for path, by_value in demands.items():
            fixed = table.req_bound.get(path)
            count = None
            for value, sbits in by_value.items():
                flag = (m & np.uint32(sbits)) != 0
                demand_flags[(path, value)] = flag
                if fixed is not None:
                    if value != fixed:
                        ok &= ~flag
                else:
                    count = flag.astype(np.int8) if count is None else count + flag
            if fixed is None and count is not None:
                ok &= count <= 1
        for sb, path, value, _ in table.exc_binding:
            s_sel = (m & sb) != 0
            in_effect = demand_flags.get((path, value))
            if table.req_bound.get(path) == value:
                ok &= ~s_sel
            elif in_effect is not None:
                ok &= ~(s_sel & in_effect)
        yield from (int(v) for v in m[ok])
