"""Acceptance suite: one test per release criterion, one PASS/FAIL line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines on a green run; on failures pytest shows them in the captured output.
"""

import contextlib
import io
import json
import random
import time

import qfm
from qfm import (
    Configuration,
    Reason,
    RequirementUnsatisfiable,
    apply_requirement,
    base_problem,
    brute_force_enumerate,
    count_configurations,
    enumerate_configurations,
    parse_model,
    serialize_model,
    verify_configuration,
)
from qfm.cli import run

from conftest import GOLDEN, SAMPLES
from helpers import random_model, visible_names

CLASSIFICATION = str(SAMPLES / "classification.qfm")

# Selection patterns of the eight valid pipeline configurations for the
# classification example: every row carries the dataset, both thresholded
# correctness metrics and both thresholded fairness metrics; rows vary the
# classifier and the remaining fairness method.
EXPECTED_ROWS = frozenset(
    frozenset({"Dataset", classifier, "Zero One Loss", "Accuracy", method, "DI", "SP"})
    for classifier in ("KNN", "Logistic Regression", "Neural Networks", "Decision Trees")
    for method in ("Blackbox", "EG")
)

RANDOM_CASES = 320  # half without requirement, half with


def report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {name}: {status}{suffix}")


def run_cli(*argv: str) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = run(list(argv))
    return code, out.getvalue(), err.getvalue()


def load_classification() -> qfm.FeatureModel:
    model = parse_model((SAMPLES / "classification.qfm").read_text(encoding="utf-8"),
                        CLASSIFICATION)
    assert isinstance(model, qfm.FeatureModel)
    return model


def criterion_3_cases():
    for seed in range(RANDOM_CASES // 2):
        yield random_model(seed), None
    for seed in range(RANDOM_CASES // 2):
        model = random_model(10_000 + seed, with_requirement=True)
        yield model, model.requirement


def test_criterion_1_selection_matrix_reproduction():
    start = time.perf_counter()
    code, out, err = run_cli("configs", CLASSIFICATION, "--format", "csv")
    elapsed = time.perf_counter() - start
    assert code == 0, err
    lines = out.splitlines()
    header = lines[0].split(",")
    rows = [
        frozenset(name for name, cell in zip(header, line.split(",")) if cell == "x")
        for line in lines[1:]
    ]
    ok = len(rows) == 8 and set(rows) == EXPECTED_ROWS and elapsed < 1.0
    report("1 selection-matrix reproduction", ok,
           f"{len(rows)} rows in {elapsed:.3f}s")
    assert len(rows) == 8
    assert set(rows) == EXPECTED_ROWS
    assert elapsed < 1.0


def test_criterion_2_pruning_provenance():
    model = load_classification()
    problem = apply_requirement(model, model.requirement)
    reasons = {
        lit.var.feature: reason
        for lit, reason in problem.provenance.items()
        if isinstance(lit.var, qfm.configurator.FeatureVar)
    }
    expected = {
        "Reweighing": Reason.CONSTRAINT_CONFLICT,
        "DIR": Reason.CONSTRAINT_CONFLICT,
        "EO": Reason.UNREQUESTED_METRIC,
        "Precision": Reason.UNREQUESTED_METRIC,
        "Recall": Reason.UNREQUESTED_METRIC,
    }
    mismatches = {
        name: reasons.get(name)
        for name, want in expected.items()
        if reasons.get(name) is not want
    }
    forced_false = {
        lit.var.feature
        for lit in problem.base.forced_false
        if isinstance(lit.var, qfm.configurator.FeatureVar)
    }
    ok = not mismatches and set(expected) <= forced_false
    report("2 pruning provenance", ok, "exact reason codes")
    assert not mismatches, mismatches
    assert set(expected) <= forced_false


def test_criterion_3_oracle_equivalence():
    start = time.perf_counter()
    mismatches = 0
    compared = 0
    unsat_cases = 0
    for model, requirement in criterion_3_cases():
        if requirement is None:
            problem = base_problem(model)
        else:
            try:
                problem = apply_requirement(model, requirement)
            except RequirementUnsatisfiable:
                # contradictory requirements cannot be enumerated at all;
                # their emptiness is cross-checked in the configurator suite
                unsat_cases += 1
                continue
        compared += 1
        if enumerate_configurations(problem) != brute_force_enumerate(problem):
            mismatches += 1
    elapsed = time.perf_counter() - start
    ok = compared >= 200 and mismatches == 0 and elapsed < 60.0
    report("3 oracle equivalence", ok,
           f"{compared} models compared ({unsat_cases} unsatisfiable skipped), "
           f"{mismatches} mismatches, {elapsed:.1f}s")
    assert compared >= 200
    assert mismatches == 0
    assert elapsed < 60.0


def test_criterion_4_verifier_soundness():
    rng = random.Random(41)
    checked = 0
    mutant_checked = 0
    mutant_missed = 0
    clean_failures = 0

    # classification example: every emitted configuration verifies clean and
    # every possible single flip is caught
    model = load_classification()
    problem = apply_requirement(model, model.requirement)
    configs = enumerate_configurations(problem)
    order = visible_names(model)
    for config in configs:
        checked += 1
        if verify_configuration(model, model.requirement, config) != []:
            clean_failures += 1
        for name in order:
            chosen = set(config.selected) ^ {name}
            mutant = Configuration(tuple(n for n in order if n in chosen), config.bindings)
            mutant_checked += 1
            if not verify_configuration(model, model.requirement, mutant):
                mutant_missed += 1

    # random suite: one random invalid flip per emitted configuration; a flip
    # that lands on another valid configuration is no mutant at all, so flips
    # are drawn from those leaving the valid set (models where the whole
    # one-flip neighborhood stays valid contribute no mutant for that row)
    for model, requirement in criterion_3_cases():
        if requirement is None:
            problem = base_problem(model)
        else:
            try:
                problem = apply_requirement(model, requirement)
            except RequirementUnsatisfiable:
                continue
        configs = enumerate_configurations(problem)
        valid_selections = {c.selected for c in configs}
        order = visible_names(model)
        for config in configs:
            checked += 1
            if verify_configuration(model, requirement, config) != []:
                clean_failures += 1
            flips = []
            for name in order:
                chosen = set(config.selected) ^ {name}
                mutated = tuple(n for n in order if n in chosen)
                if mutated not in valid_selections:
                    flips.append(mutated)
            if not flips:
                continue
            mutated = rng.choice(flips)
            mutant_checked += 1
            if not verify_configuration(model, requirement,
                                        Configuration(selected=mutated)):
                mutant_missed += 1

    ok = clean_failures == 0 and mutant_missed == 0 and checked > 0
    report("4 verifier soundness", ok,
           f"{checked} configurations clean, {mutant_checked} mutants flagged, "
           f"{mutant_missed} mutants missed")
    assert clean_failures == 0
    assert mutant_missed == 0
    assert mutant_checked > 0


def test_criterion_5_seven_feature_demo_golden():
    path = SAMPLES / "skeleton.qfm"
    model = parse_model(path.read_text(encoding="utf-8"), str(path))
    assert isinstance(model, qfm.FeatureModel)
    problem = apply_requirement(model, model.requirement)
    produced = [
        {
            "features": list(c.selected),
            "bindings": [{"attribute": b.attribute.path, "value": b.value.literal}
                         for b in c.bindings],
        }
        for c in enumerate_configurations(problem)
    ]
    golden = json.loads((GOLDEN / "skeleton_configs.json").read_text(encoding="utf-8"))
    oracle = [
        {
            "features": list(c.selected),
            "bindings": [{"attribute": b.attribute.path, "value": b.value.literal}
                         for b in c.bindings],
        }
        for c in brute_force_enumerate(problem)
    ]
    ok = produced == golden == oracle
    report("5 seven-feature demo golden", ok,
           f"{len(produced)} configurations")
    assert oracle == golden, "oracle drifted from the frozen golden file"
    assert produced == golden


def test_criterion_6_round_trip_corpus(tmp_path):
    paths = sorted(SAMPLES.glob("*.qfm"))
    failures = []
    for path in paths:
        text = path.read_text(encoding="utf-8")
        model = parse_model(text, str(path))
        if not isinstance(model, qfm.FeatureModel):
            failures.append((path.name, "parse"))
            continue
        reparsed = parse_model(serialize_model(model), f"{path.name}:roundtrip")
        if reparsed != model:
            failures.append((path.name, "round-trip"))
        # byte idempotence through the real command
        copy = tmp_path / path.name
        copy.write_text(text, encoding="utf-8")
        assert run_cli("fmt", str(copy), "--write")[0] == 0
        once = copy.read_bytes()
        assert run_cli("fmt", str(copy), "--write")[0] == 0
        if copy.read_bytes() != once:
            failures.append((path.name, "fmt idempotence"))
    ok = len(paths) >= 10 and not failures
    report("6 round-trip corpus", ok, f"{len(paths)} files")
    assert len(paths) >= 10
    assert not failures, failures


def test_criterion_7_unsatisfiable_requirement():
    first = run_cli("configs", str(SAMPLES / "unsatisfiable.qfm"))
    second = run_cli("configs", str(SAMPLES / "unsatisfiable.qfm"))
    code, out, err = first
    ok = (
        code == 2
        and "forced selected because:" in err
        and "forced deselected because:" in err
        and first == second
    )
    report("7 unsatisfiable handling", ok, f"exit code {code}, deterministic message")
    assert code == 2
    assert "forced selected because:" in err
    assert "forced deselected because:" in err
    assert first == second


def test_criterion_8_desk_scale_performance():
    path = SAMPLES / "wide_synthetic.qfm"
    model = parse_model(path.read_text(encoding="utf-8"), str(path))
    assert isinstance(model, qfm.FeatureModel)
    assert len(model.features()) == 30

    start = time.perf_counter()
    configs = enumerate_configurations(base_problem(model))
    enum_elapsed = time.perf_counter() - start

    start = time.perf_counter()
    total = count_configurations(base_problem(model))
    count_elapsed = time.perf_counter() - start

    ok = len(configs) == 10_240 and total == 10_240 and enum_elapsed < 2.0
    report("8 desk-scale performance", ok,
           f"enumerate {enum_elapsed:.2f}s, count {count_elapsed:.2f}s")
    assert len(configs) == 10_240
    assert total == 10_240
    assert enum_elapsed < 2.0
    assert count_elapsed < 2.0
