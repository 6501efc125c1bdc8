"""System Complexity Index: compressed artifact bits per bit of input."""

from dataclasses import dataclass

from .codec import compressed_size_bits
from .exceptions import DegenerateInputSpace, EmptyArtifact
from .model import ModelArtifact


@dataclass(frozen=True)
class SciResult:
    raw_bits: int
    log2_n: float
    sci: float

    def to_dict(self):
        return {"raw_bits": self.raw_bits, "log2_n": self.log2_n, "sci": self.sci}


def sci_estimate(artifact, spec):
    """Compressed size of ``artifact`` divided by ``log2(n) = dims * bits_per_dim``.

    ``raw_bits`` includes the 64-bit framing header, so it upper-bounds a
    self-delimiting description length.
    """
    raw = artifact.bytes if isinstance(artifact, ModelArtifact) else bytes(artifact)
    if not raw:
        raise EmptyArtifact("artifact has no bytes")
    log2_n = spec.dims * spec.bits_per_dim
    if log2_n <= 0:
        raise DegenerateInputSpace("input space has a single point")
    raw_bits = compressed_size_bits(raw)
    return SciResult(raw_bits=raw_bits, log2_n=float(log2_n), sci=raw_bits / log2_n)
