"""Complexity, stability and strategic-robustness metrics for small AI systems."""

__version__ = "0.1.0"

from .codec import CompressedBlob, compress, compressed_size_bits, decompress  # noqa: E402
from .game import (MixedProfile, NerResult, NormalFormGame, best_response_dynamics,  # noqa: E402
                   fictitious_play, ner_epsilon, ner_literal, support_enumeration_2p)
from .leais import IteratedMap, LeaisResult, leais_feedforward, leais_iterated  # noqa: E402
from .model import (InputSpec, Layer, MlpModel, ModelArtifact, deserialize,  # noqa: E402
                    forward, jacobian_analytic, jacobian_fd, serialize_canonical)
from .sci import SciResult, sci_estimate  # noqa: E402
from .scoring import (MetricsRecord, Weights, normalize_cohort,  # noqa: E402
                      risk_score_oriented, scatter_export, security_score_literal)

__all__ = [
    "CompressedBlob", "compress", "compressed_size_bits", "decompress",
    "MixedProfile", "NerResult", "NormalFormGame", "best_response_dynamics",
    "fictitious_play", "ner_epsilon", "ner_literal", "support_enumeration_2p",
    "IteratedMap", "LeaisResult", "leais_feedforward", "leais_iterated",
    "InputSpec", "Layer", "MlpModel", "ModelArtifact", "deserialize", "forward",
    "jacobian_analytic", "jacobian_fd", "serialize_canonical",
    "SciResult", "sci_estimate",
    "MetricsRecord", "Weights", "normalize_cohort", "risk_score_oriented",
    "scatter_export", "security_score_literal",
]
