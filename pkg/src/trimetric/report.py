"""Batch evaluation of a cohort of systems into one deterministic report."""

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .exceptions import ConfigError, TrimetricError, UnsupportedGame
from .game import (MixedProfile, best_response_dynamics,
                   fictitious_play, load_game, ner_epsilon, ner_literal,
                   support_enumeration_2p)
from .leais import leais_feedforward
from .model import load_model, serialize_canonical
from .sci import sci_estimate
from .scoring import (MetricsRecord, Weights, normalize_cohort, risk_score_oriented,
                      scatter_export, security_score_literal)

THREADS_ENV = "TRIMETRIC_THREADS"


@dataclass(frozen=True)
class SystemSpec:
    system_id: str
    model: str
    game: str
    attach_data: str = None


@dataclass(frozen=True)
class LeaisParams:
    samples: int = 32
    seed: int = 0
    mode: str = "analytic"
    fd_step: float = 1e-5

    def __post_init__(self):
        if self.samples < 1:
            raise ConfigError("leais.samples must be >= 1")
        if self.mode not in ("analytic", "fd"):
            raise ConfigError(f"leais.mode must be 'analytic' or 'fd', got {self.mode!r}")
        if not self.fd_step > 0:
            raise ConfigError("leais.fd_step must be positive")


@dataclass(frozen=True)
class NerParams:
    dynamics: str = "br"
    steps: int = 100
    damping: float = 1.0
    epsilon: float = None
    grid: int = 100
    init_actions: tuple = None
    # which NER value enters the cohort record: "auto" prefers epsilon when computed
    headline: str = "auto"

    def __post_init__(self):
        if self.dynamics not in ("br", "fp"):
            raise ConfigError(f"ner.dynamics must be 'br' or 'fp', got {self.dynamics!r}")
        if self.steps < 1:
            raise ConfigError("ner.steps must be >= 1")
        if not 0.0 < self.damping <= 1.0:
            raise ConfigError("ner.damping must lie in (0, 1]")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ConfigError("ner.epsilon must be positive")
        if self.grid < 2:
            raise ConfigError("ner.grid must be >= 2")
        if self.headline not in ("auto", "literal", "epsilon"):
            raise ConfigError(f"ner.headline must be auto, literal or epsilon, got {self.headline!r}")


@dataclass(frozen=True)
class RunConfig:
    systems: tuple
    leais: LeaisParams = field(default_factory=LeaisParams)
    ner: NerParams = field(default_factory=NerParams)
    weights: Weights = field(default_factory=Weights)
    output: str = None
    base_dir: Path = Path(".")
    source: dict = field(default=None, compare=False, repr=False)

    @classmethod
    def from_dict(cls, doc, base_dir="."):
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        try:
            systems = tuple(
                SystemSpec(str(s["id"]), str(s["model"]), str(s["game"]),
                           s.get("attach_data"))
                for s in doc["systems"])
            leais = LeaisParams(**doc.get("leais", {}))
            ner_doc = dict(doc.get("ner", {}))
            if ner_doc.get("init_actions") is not None:
                ner_doc["init_actions"] = tuple(int(a) for a in ner_doc["init_actions"])
            ner = NerParams(**ner_doc)
            weights = Weights.from_any(doc.get("weights", Weights()))
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc!r}") from exc
        if not systems:
            raise ConfigError("config lists no systems")
        ids = [s.system_id for s in systems]
        if len(set(ids)) != len(ids):
            raise ConfigError("system ids must be unique")
        return cls(systems, leais, ner, weights, doc.get("output"), Path(base_dir), doc)

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(doc, base_dir=path.parent)

    def echo(self):
        """Config as it enters the report: paths exactly as written."""
        return {
            "systems": [{"id": s.system_id, "model": s.model, "game": s.game,
                         "attach_data": s.attach_data} for s in self.systems],
            "leais": {"samples": self.leais.samples, "seed": self.leais.seed,
                      "mode": self.leais.mode, "fd_step": self.leais.fd_step},
            "ner": {"dynamics": self.ner.dynamics, "steps": self.ner.steps,
                    "damping": self.ner.damping, "epsilon": self.ner.epsilon,
                    "grid": self.ner.grid,
                    "init_actions": (list(self.ner.init_actions)
                                     if self.ner.init_actions is not None else None),
                    "headline": self.ner.headline},
            "weights": list(self.weights.as_tuple()),
        }


def compute_ner(game, params):
    """Literal estimator over the configured dynamics, plus the epsilon variant.

    The epsilon variant needs an equilibrium from support enumeration, so it
    is only attempted for two-player games; the minimum over all equilibria
    found is reported.
    """
    init = params.init_actions or (0,) * game.num_players
    if params.dynamics == "br":
        start = MixedProfile.pure(game.action_counts, init)
        trajectory = best_response_dynamics(game, start, params.steps, params.damping)
    else:
        trajectory = fictitious_play(game, init, params.steps)
    result = ner_literal(game, trajectory)
    equilibria = []
    if params.epsilon is not None and game.num_players == 2:
        try:
            equilibria = support_enumeration_2p(game)
        except UnsupportedGame:
            equilibria = []
        if equilibria:
            value = min(ner_epsilon(game, eq, params.epsilon, params.grid)
                        for eq in equilibria)
            result = result.with_epsilon(value, params.epsilon)
    return result, equilibria


def evaluate_system(model, game, leais_params=None, ner_params=None, attached=b"",
                    system_id=""):
    """All three metrics for one system; returns (record, details, timings)."""
    leais_params = leais_params or LeaisParams()
    ner_params = ner_params or NerParams()
    timings = {}
    t0 = time.perf_counter()
    artifact = serialize_canonical(model, system_id)
    if attached:
        artifact = artifact.with_attached_data(attached)
    sci = sci_estimate(artifact, model.input_spec)
    t1 = time.perf_counter()
    leais = leais_feedforward(model, leais_params.samples, leais_params.seed,
                              leais_params.mode, leais_params.fd_step)
    t2 = time.perf_counter()
    ner, equilibria = compute_ner(game, ner_params)
    t3 = time.perf_counter()
    timings.update(sci=t1 - t0, leais=t2 - t1, ner=t3 - t2)
    if ner_params.headline == "epsilon" and ner.ner_epsilon is None:
        raise ValueError("epsilon NER requested but no equilibrium was found")
    if ner.ner_epsilon is not None and ner_params.headline != "literal":
        ner_value, ner_kind = ner.ner_epsilon, "epsilon"
    else:
        ner_value, ner_kind = ner.ner_literal, "literal"
    record = MetricsRecord(system_id, sci.sci, leais.max_over_points, ner_value, ner_kind)
    ner_doc = ner.to_dict()
    ner_doc.update(dynamics=ner_params.dynamics, steps=ner_params.steps,
                   equilibria=[eq.tolist() for eq in equilibria])
    details = {"sci": sci.to_dict(), "leais": leais.to_dict(), "ner": ner_doc}
    return record, details, timings


def _resolve(base_dir, path):
    p = Path(path)
    return p if p.is_absolute() else base_dir / p


def _evaluate_spec(spec, config):
    for label, path in (("model", spec.model), ("game", spec.game),
                        ("attached data", spec.attach_data)):
        if path is not None and not _resolve(config.base_dir, path).is_file():
            raise FileNotFoundError(f"{label} file not found: {path}")
    model = load_model(_resolve(config.base_dir, spec.model))
    game = load_game(_resolve(config.base_dir, spec.game))
    attached = b""
    if spec.attach_data is not None:
        attached = _resolve(config.base_dir, spec.attach_data).read_bytes()
    return evaluate_system(model, game, config.leais, config.ner, attached,
                           spec.system_id)


def worker_count(n_tasks):
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    if n < 0:
        raise ConfigError(f"{THREADS_ENV} must be >= 0")
    if n == 0:
        n = os.cpu_count() or 1
    return max(1, min(n, n_tasks))


@dataclass
class ReportDocument:
    doc: dict
    timings: dict = field(default_factory=dict)

    @property
    def exit_code(self):
        return 1 if self.doc["errors"] else 0

    def to_json(self, include_timings=False):
        doc = dict(self.doc)
        if include_timings:
            doc["timings"] = self.timings
        return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _safe_evaluate(spec, config):
    try:
        return spec, _evaluate_spec(spec, config), None
    except (TrimetricError, ValueError, OSError, ArithmeticError) as exc:
        # OSErrors raised by open() embed resolved paths; keep only the reason
        message = exc.strerror if isinstance(exc, OSError) and exc.strerror else str(exc)
        return spec, None, {"system_id": spec.system_id, "error": type(exc).__name__,
                            "message": message}


def run_report(config):
    """Evaluate every system, score the cohort and assemble the report.

    Systems that fail are listed under ``errors``; the rest are still
    scored. Output order is by system id regardless of worker scheduling.
    """
    start = time.perf_counter()
    specs = sorted(config.systems, key=lambda s: s.system_id)
    with ThreadPoolExecutor(max_workers=worker_count(len(specs))) as pool:
        outcomes = list(pool.map(lambda s: _safe_evaluate(s, config), specs))
    t_eval = time.perf_counter()

    errors = [err for _, _, err in outcomes if err is not None]
    done = [(spec, out) for spec, out, err in outcomes if err is None]
    records = [out[0] for _, out in done]
    systems, scatter = [], []
    if records:
        normalized = normalize_cohort(records)
        for (spec, (record, details, _)), norm in zip(done, normalized):
            systems.append({
                "system_id": spec.system_id,
                **details,
                "record": record.to_dict(),
                "normalized": norm.to_dict(),
                "security_score_literal": security_score_literal(record, config.weights),
                "risk_score_oriented": risk_score_oriented(norm, config.weights),
            })
        scatter = [row.to_dict() for row in scatter_export(normalized)]
    t_score = time.perf_counter()

    doc = {
        "tool": "trimetric",
        "tool_version": __version__,
        "config": config.echo(),
        "systems": systems,
        "scatter": scatter,
        "errors": errors,
    }
    timings = {
        "per_system": {spec.system_id: out[2] for spec, out in done},
        "evaluate": t_eval - start,
        "score": t_score - t_eval,
    }
    return ReportDocument(doc, timings)
