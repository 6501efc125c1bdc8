"""Lyapunov-style sensitivity exponents for models and 1-D iterated maps."""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainEscape, NonFiniteResult
from .model import forward, jacobian_analytic, jacobian_fd, sample_inputs

NORM_FLOOR = 1e-300
LOG_FLOOR = math.log(NORM_FLOOR)


@dataclass(frozen=True)
class PointExponents:
    x: tuple
    exponents: tuple
    point_max: float


@dataclass(frozen=True)
class LeaisResult:
    per_point: tuple
    max_over_points: float
    mean_over_points: float
    t: int
    sample_count: int
    seed: int
    mode: str = "analytic"

    def to_dict(self):
        return {"max": self.max_over_points, "mean": self.mean_over_points,
                "t": self.t, "samples": self.sample_count, "seed": self.seed,
                "mode": self.mode}


def column_exponents(jac, t=1):
    """(1/t) * ln of each Jacobian column's L2 norm, norms floored at 1e-300."""
    with np.errstate(over="ignore"):
        norms = np.maximum(np.linalg.norm(jac, axis=0), NORM_FLOOR)
    return np.log(norms) / t


def leais_feedforward(model, sample_count=32, seed=0, mode="analytic", fd_step=1e-5):
    """Worst per-dimension exponent at each sampled point, aggregated.

    A single forward pass has no time axis, so ``t = 1``. The headline value
    is ``max_over_points``; ``mean_over_points`` is reported alongside.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    if mode not in ("analytic", "fd"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "fd" and not fd_step > 0:
        raise ValueError("fd_step must be positive")
    t = 1
    points = []
    for x in sample_inputs(model.input_spec, sample_count, seed):
        if not np.all(np.isfinite(forward(model, x))):
            raise NonFiniteResult(f"non-finite output at {x.tolist()}", point=x.tolist())
        if mode == "fd":
            jac = jacobian_fd(model, x, fd_step)
        else:
            jac = jacobian_analytic(model, x)
        exps = column_exponents(jac, t)
        if not np.all(np.isfinite(exps)):
            raise NonFiniteResult(f"Jacobian overflow at {x.tolist()}", point=x.tolist())
        points.append(PointExponents(tuple(x.tolist()), tuple(exps.tolist()),
                                     float(exps.max())))
    maxima = [p.point_max for p in points]
    return LeaisResult(per_point=tuple(points), max_over_points=max(maxima),
                       mean_over_points=math.fsum(maxima) / len(maxima), t=t,
                       sample_count=sample_count, seed=seed, mode=mode)


@dataclass(frozen=True)
class IteratedMap:
    """One of ``logistic(r)``, ``tent(mu)`` or ``linear(a)``."""

    family: str
    parameter: float

    def __post_init__(self):
        p = self.parameter
        if self.family == "logistic":
            ok = 0.0 <= p <= 4.0
        elif self.family == "tent":
            ok = 0.0 < p <= 2.0
        elif self.family == "linear":
            ok = math.isfinite(p) and p != 0.0
        else:
            raise ValueError(f"unknown map family {self.family!r}")
        if not ok:
            raise ValueError(f"parameter {p} outside the valid range for {self.family}")

    def __call__(self, x):
        p = self.parameter
        if self.family == "logistic":
            return p * x * (1.0 - x)
        if self.family == "tent":
            return p * min(x, 1.0 - x)
        return p * x

    def derivative(self, x):
        p = self.parameter
        if self.family == "logistic":
            return p * (1.0 - 2.0 * x)
        if self.family == "tent":
            return p if x < 0.5 else -p
        return p

    def in_domain(self, x):
        if self.family == "linear":
            return math.isfinite(x)
        return 0.0 <= x <= 1.0


def leais_iterated(fmap, x0, t, transient=0):
    """Trajectory-averaged exponent (1/t) * sum_k ln|f'(x_k)|, k = 1..t.

    ``transient`` iterations are discarded first. Raises ``DomainEscape`` if
    the orbit leaves the map's invariant domain.
    """
    if t < 1 or transient < 0:
        raise ValueError("need t >= 1 and transient >= 0")
    if not fmap.in_domain(x0):
        raise DomainEscape(f"x0={x0} outside the domain of {fmap.family}")
    x = float(x0)
    for k in range(transient):
        x = fmap(x)
        if not fmap.in_domain(x):
            raise DomainEscape(f"orbit left the domain at transient step {k + 1}")
    logs = []
    for k in range(t):
        x = fmap(x)
        if not fmap.in_domain(x):
            raise DomainEscape(f"orbit left the domain at step {k + 1}")
        logs.append(math.log(max(abs(fmap.derivative(x)), NORM_FLOOR)))
    return math.fsum(logs) / t
