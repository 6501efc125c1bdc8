import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from conftest import matching_pennies, prisoners_dilemma
from trimetric.estimators import (CohortNormalizer, MetricExtractor, SecurityScorer,
                                  check_metrics_array)
from trimetric.exceptions import DimensionMismatch, EmptyCohort, InvalidWeights
from trimetric.model import random_model
from trimetric.scoring import (MetricsRecord, Weights, normalize_cohort,
                               risk_score_oriented, scatter_export)

X = np.array([[2.0, 0.1, 0.0], [4.0, 0.1, 1.0], [6.0, 0.1, 0.5]])


def test_normalizer_matches_functional_api():
    recs = [MetricsRecord(str(k), *row) for k, row in enumerate(X)]
    expected = np.array([r.values for r in normalize_cohort(recs)])
    np.testing.assert_array_equal(CohortNormalizer().fit_transform(X), expected)


def test_normalizer_params_and_clone():
    est = CohortNormalizer(degenerate_value=0.25)
    assert est.get_params() == {"degenerate_value": 0.25}
    assert clone(est).get_params() == est.get_params()
    assert CohortNormalizer(0.25).fit_transform(X)[:, 1].tolist() == [0.25] * 3


def test_not_fitted():
    with pytest.raises(NotFittedError):
        CohortNormalizer().transform(X)
    with pytest.raises(NotFittedError):
        SecurityScorer().score_samples(X)


def test_validation_helper():
    with pytest.raises(EmptyCohort):
        check_metrics_array([])
    with pytest.raises(DimensionMismatch):
        check_metrics_array(np.ones((2, 4)))
    with pytest.raises(ValueError):
        check_metrics_array([[1.0, np.nan, 0.0]])


def test_scorer_matches_record_functions():
    w = (0.2, 0.5, 0.3)
    recs = [MetricsRecord(str(k), *row) for k, row in enumerate(X)]
    norm = normalize_cohort(recs)
    scorer = SecurityScorer(weights=w).fit(X)
    expected = [risk_score_oriented(n, Weights(*w)) for n in norm]
    np.testing.assert_allclose(scorer.score_samples(X), expected, atol=1e-15)
    by_id = {row.system_id: row.distance for row in scatter_export(norm)}
    np.testing.assert_allclose(scorer.distance_to_origin(X),
                               [by_id[str(k)] for k in range(3)], atol=1e-15)
    np.testing.assert_allclose(scorer.literal_scores(X), X @ np.array(w))


def test_scorer_rejects_bad_weights():
    with pytest.raises(InvalidWeights):
        SecurityScorer(weights=(1, 1, 1)).fit(X)


def test_pipeline_end_to_end():
    rng = np.random.default_rng(0)
    systems = [(random_model(rng, 2, [3, 1]), prisoners_dilemma()),
               (random_model(rng, 3, [4, 2]), matching_pennies()),
               (random_model(rng, 2, [2], "identity"), prisoners_dilemma(), b"\0" * 64)]
    pipe = make_pipeline(MetricExtractor(samples=4, steps=10), SecurityScorer())
    risk = pipe.fit(systems).score_samples(systems)
    assert risk.shape == (3,)
    assert np.all((risk >= 0) & (risk <= 1))
    metrics = MetricExtractor(samples=4, steps=10).fit_transform(systems)
    assert metrics.shape == (3, 3)
    assert np.all(metrics[:, 0] > 0)
    again = clone(pipe).fit(systems).score_samples(systems)
    np.testing.assert_array_equal(risk, again)


def test_extractor_param_validation():
    with pytest.raises(ValueError):
        MetricExtractor(mode="bogus").fit()
    assert MetricExtractor().set_params(samples=3).samples == 3
