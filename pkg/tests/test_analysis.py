"""Validation rules, anomaly detection and influence/step reporting."""

import pytest

import qfm
from qfm import (
    EdgeOrigin,
    QualityKind,
    SearchBudgetExceeded,
    detect_anomalies,
    influence_report,
    parse_model,
    step_impact,
    validate,
)

from helpers import random_model


def parse(text: str) -> qfm.FeatureModel:
    result = parse_model(text, "inline.qfm")
    assert isinstance(result, qfm.FeatureModel), qfm.format_diagnostics(result)
    return result


class TestValidate:
    def test_classification_is_clean(self, classification):
        assert validate(classification) == []

    def test_sample_corpus_has_no_errors(self, sample_paths):
        for path in sample_paths:
            model = parse_model(path.read_text(encoding="utf-8"), str(path))
            diags = validate(model)
            assert not qfm.diagnostics.has_errors(diags), (path, diags)

    def test_abstract_leaf_warns(self):
        model = parse("model m { feature Root { abstract feature Classifier } }")
        diags = validate(model)
        assert [d.code for d in diags] == ["W010"]
        assert "Classifier" in diags[0].message

    def test_abstract_chain_without_concrete_warns_on_every_level(self):
        model = parse(
            "model m { feature Root { abstract feature A { abstract feature B } } }")
        assert sorted(d.code for d in validate(model)) == ["W010", "W010"]

    def test_threshold_metric_of_wrong_property(self):
        model = parse(
            "model m {\n"
            "  feature Root {\n"
            "    feature MetricA\n"
            "    feature MetricB\n"
            "  }\n"
            "  quality fairness Fairness quantitative {\n"
            "    metric DI implemented_by MetricA\n"
            "  }\n"
            "  quality prediction_correctness Correctness quantitative {\n"
            "    metric Accuracy implemented_by MetricB\n"
            "  }\n"
            "  requirement classification {\n"
            "    require Correctness {\n"
            "      threshold DI >= 0.8\n"
            "    }\n"
            "  }\n"
            "}\n")
        diags = validate(model)
        assert [d.code for d in diags] == ["E021"]
        assert "'DI'" in diags[0].message

    def test_exclude_between_ancestors_warns(self):
        model = parse(
            "model m { feature Root { feature A { feature B } }\n  B excludes A\n}")
        assert [d.code for d in validate(model)] == ["W012"]

    def test_exclude_bare_attribute_is_error(self):
        model = parse(
            "model m { feature Root { feature A { attribute X in { a, b } } feature C }\n"
            "  C excludes A.X\n}")
        assert [d.code for d in validate(model)] == ["E022"]

    def test_require_bare_attribute_without_requirement_warns(self):
        model = parse(
            "model m { feature Root { feature A { attribute X in { a, b } } feature C }\n"
            "  C requires A.X\n}")
        assert [d.code for d in validate(model)] == ["W013"]

    def test_duplicate_kind_variant_pair(self):
        model = parse(
            "model m {\n"
            "  feature Root\n"
            "  quality fairness F1 quantitative {}\n"
            "  quality fairness F2 quantitative {}\n"
            "}\n")
        diags = validate(model)
        assert [d.code for d in diags] == ["E023"]

    def test_same_kind_different_variant_is_fine(self):
        model = parse(
            "model m {\n  feature Root\n"
            '  quality fairness F1 quantitative variant "PREPROCESSING" {}\n'
            '  quality fairness F2 quantitative variant "POSTPROCESSING" {}\n}')
        assert validate(model) == []

    def test_idempotent(self, classification):
        assert validate(classification) == validate(classification)


class TestDetectAnomalies:
    def test_contradictory_requires_makes_feature_dead(self):
        model = parse(
            "model m {\n"
            "  feature Root {\n"
            "    feature F\n"
            "    feature G\n"
            "  }\n"
            "  F requires G\n"
            "  F excludes G\n"
            "}\n")
        report = detect_anomalies(model)
        assert report.dead == ("F",)
        assert report.void is False

    def test_mandatory_chain_reports_all_empty(self):
        model = parse("model m { mandatory feature Root { mandatory feature A } }")
        report = detect_anomalies(model)
        assert report == qfm.AnomalyReport((), (), False)

    def test_classification_has_no_anomalies(self, classification):
        report = detect_anomalies(classification)
        assert report.dead == ()
        assert report.void is False

    def test_false_optional_through_require_chain(self):
        model = parse(
            "model m {\n"
            "  mandatory feature Root {\n"
            "    mandatory feature Core\n"
            "    feature Logger\n"
            "  }\n"
            "  Core requires Logger\n"
            "}\n")
        report = detect_anomalies(model)
        assert report.false_optional == ("Logger",)

    def test_void_model(self):
        model = parse(
            "model m {\n"
            "  feature Root {\n"
            "    mandatory feature A\n"
            "    mandatory feature B\n"
            "  }\n"
            "  A excludes B\n"
            "}\n")
        report = detect_anomalies(model)
        assert report == qfm.AnomalyReport((), (), True)

    def test_requirement_is_ignored(self, classification):
        # with the requirement applied Reweighing would be dead; the analysis
        # runs on the bare model where it is selectable
        report = detect_anomalies(classification)
        assert "Reweighing" not in report.dead

    @pytest.mark.parametrize("seed", range(40))
    def test_probe_path_agrees_with_oracle(self, seed):
        model = random_model(seed)
        by_oracle = detect_anomalies(model)
        by_probes = detect_anomalies(model, oracle_limit=0)
        assert by_oracle == by_probes

    def test_search_budget_exceeded(self):
        model = random_model(7, max_features=12)
        with pytest.raises(SearchBudgetExceeded) as exc:
            detect_anomalies(model, oracle_limit=0, node_budget=1)
        assert exc.value.limit == 1

    def test_reports_are_disjoint(self):
        for seed in range(30):
            report = detect_anomalies(random_model(seed))
            assert not (set(report.dead) & set(report.false_optional))
            if report.void:
                assert report.dead == () and report.false_optional == ()


class TestInfluenceReport:
    def test_classification_mutual_influence_warning(self, classification):
        report = influence_report(classification, classification.requirement)
        warnings = "\n".join(report.warnings)
        assert "requiring Fairness may degrade Prediction Correctness" in warnings
        assert "requiring Prediction Correctness may degrade Fairness" in warnings

    def test_no_declared_edges_no_builtin(self):
        model = parse(
            "model m {\n  feature Root\n  quality privacy P qualitative {}\n}")
        report = influence_report(model, include_builtin=False)
        assert report.edges == ()

    def test_builtin_privacy_edge(self):
        model = parse(
            "model m {\n  feature Root\n  quality privacy P qualitative {}\n}")
        report = influence_report(model, include_builtin=True)
        assert qfm.InfluenceEdge("P", "Interpretability", EdgeOrigin.BUILTIN) in report.edges

    def test_model_edges_equal_declared_set(self, sample_paths):
        for path in sample_paths:
            model = parse_model(path.read_text(encoding="utf-8"), str(path))
            report = influence_report(model, include_builtin=False)
            declared = {
                (influencer, q.name)
                for q in model.qualities
                for influencer in q.influenced_by
            }
            assert {(e.source, e.target) for e in report.edges} == declared
            assert all(e.origin is EdgeOrigin.MODEL for e in report.edges)

    def test_model_origin_wins_over_builtin(self, classification):
        report = influence_report(classification, include_builtin=True)
        by_pair = {(e.source, e.target): e.origin for e in report.edges}
        assert by_pair[("Fairness", "Prediction Correctness")] is EdgeOrigin.MODEL
        assert by_pair[("Fairness", "Computational Complexity")] is EdgeOrigin.BUILTIN

    def test_edges_deduplicated(self, classification):
        report = influence_report(classification, include_builtin=True)
        pairs = [(e.source, e.target) for e in report.edges]
        assert len(pairs) == len(set(pairs))

    def test_no_warnings_without_requirement(self, classification):
        assert influence_report(classification).warnings == ()


class TestStepImpact:
    def test_complexity_includes_training(self):
        assert "Model Training-Testing" in step_impact(QualityKind.COMPUTATIONAL_COMPLEXITY)

    def test_privacy_includes_deploy_monitoring(self):
        steps = step_impact(QualityKind.PRIVACY)
        assert "Model Deploy and Monitoring" in steps
        assert "Model Evaluation" in steps

    def test_every_kind_nonempty(self):
        for kind in QualityKind:
            assert step_impact(kind)

    def test_expected_table(self):
        assert step_impact(QualityKind.COMPUTATIONAL_COMPLEXITY) == [
            "Feature Engineering", "Model Training-Testing"]
        assert step_impact(QualityKind.PREDICTION_CORRECTNESS) == [
            "Feature Engineering", "Model Training-Testing",
            "Model Evaluation", "Model Deploy and Monitoring"]
        assert step_impact(QualityKind.FAIRNESS) == [
            "Data Pre-Processing", "Model Training-Testing",
            "Model Evaluation", "Model Deploy and Monitoring"]
        assert step_impact(QualityKind.PRIVACY) == [
            "Data Pre-Processing", "Model Evaluation", "Model Deploy and Monitoring"]
        assert step_impact(QualityKind.INTERPRETABILITY) == [
            "Model Evaluation", "Model Deploy and Monitoring"]

    def test_constant_across_calls(self):
        for kind in QualityKind:
            assert step_impact(kind) == step_impact(kind)
