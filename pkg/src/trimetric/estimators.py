"""scikit-learn compatible wrappers around the metric and scoring functions.

Rows of every metrics matrix are systems; the three columns are
``(sci, leais, ner)`` in that order. The estimators compose with
``sklearn.pipeline.Pipeline``::

    pipe = make_pipeline(MetricExtractor(samples=16), SecurityScorer())
    risk = pipe.fit(systems).score_samples(systems)
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import DimensionMismatch, EmptyCohort
from .report import LeaisParams, NerParams, evaluate_system
from .scoring import DEGENERATE_VALUE, Weights, minmax_columns


def check_metrics_array(X):
    """Validate a (n_systems, 3) metrics matrix and return it as float64."""
    if hasattr(X, "__len__") and len(X) == 0:
        raise EmptyCohort("metrics matrix has no rows")
    X = check_array(X, dtype=np.float64)
    if X.shape[1] != 3:
        raise DimensionMismatch(f"expected 3 metric columns, got {X.shape[1]}")
    return X


class CohortNormalizer(TransformerMixin, BaseEstimator):
    """Per-metric min-max scaling fitted on a cohort.

    Unlike ``MinMaxScaler``, a metric that is constant over the cohort maps
    to ``degenerate_value`` rather than 0.
    """

    def __init__(self, degenerate_value=DEGENERATE_VALUE):
        self.degenerate_value = degenerate_value

    def fit(self, X, y=None):
        X = check_metrics_array(X)
        self.data_min_ = X.min(axis=0)
        self.data_max_ = X.max(axis=0)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, ("data_min_", "data_max_"))
        X = check_metrics_array(X)
        return minmax_columns(X, self.data_min_, self.data_max_, self.degenerate_value)


class SecurityScorer(TransformerMixin, BaseEstimator):
    """Composite scoring of a cohort.

    ``transform`` gives the 3-D scatter coordinates ``(sci, leais, 1 - ner)``
    after normalization; ``score_samples`` the oriented risk (lower is more
    secure); ``literal_scores`` the raw weighted sum. Systems outside the
    fitted cohort's range extrapolate beyond [0, 1].
    """

    def __init__(self, weights=(1 / 3, 1 / 3, 1 / 3), degenerate_value=DEGENERATE_VALUE):
        self.weights = weights
        self.degenerate_value = degenerate_value

    def fit(self, X, y=None):
        self.weights_ = np.array(Weights.from_any(self.weights).as_tuple())
        self.normalizer_ = CohortNormalizer(self.degenerate_value).fit(X)
        self.n_features_in_ = 3
        return self

    def transform(self, X):
        check_is_fitted(self, "normalizer_")
        Z = self.normalizer_.transform(X)
        Z[:, 2] = 1.0 - Z[:, 2]
        return Z

    def score_samples(self, X):
        return self.transform(X) @ self.weights_

    def literal_scores(self, X):
        check_is_fitted(self, "weights_")
        return check_metrics_array(X) @ self.weights_

    def distance_to_origin(self, X):
        return np.linalg.norm(self.transform(X), axis=1)


class MetricExtractor(TransformerMixin, BaseEstimator):
    """Turn systems into rows of ``(sci, leais, ner)``.

    Each system is a ``(model, game)`` pair, optionally with a third item of
    raw bytes appended to the model artifact before compression. Stateless:
    ``fit`` only validates parameters.
    """

    def __init__(self, samples=32, seed=0, mode="analytic", fd_step=1e-5,
                 dynamics="br", steps=100, damping=1.0, epsilon=None, grid=100):
        self.samples = samples
        self.seed = seed
        self.mode = mode
        self.fd_step = fd_step
        self.dynamics = dynamics
        self.steps = steps
        self.damping = damping
        self.epsilon = epsilon
        self.grid = grid

    def _params(self):
        return (LeaisParams(self.samples, self.seed, self.mode, self.fd_step),
                NerParams(self.dynamics, self.steps, self.damping, self.epsilon, self.grid))

    def fit(self, X=None, y=None):
        self._params()
        return self

    def transform(self, X):
        leais_params, ner_params = self._params()
        rows = []
        for k, system in enumerate(X):
            model, game, *rest = system
            attached = rest[0] if rest else b""
            record, _, _ = evaluate_system(model, game, leais_params, ner_params,
                                           attached, system_id=str(k))
            rows.append(record.values)
        return np.array(rows, dtype=np.float64).reshape(-1, 3)

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.input_tags.two_d_array = False
        return tags
