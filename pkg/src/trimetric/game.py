"""Normal-form games: equilibria, learning dynamics and robustness distances."""

import itertools
import json
import math
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .exceptions import (DimensionMismatch, EmptyBrSet, IndexOutOfRange,
                         NotAnEquilibrium, UnsupportedGame)

BR_TOL = 1e-9
EQ_TOL = 1e-9
DEDUP_TOL = 1e-7
EQUILIBRIUM_CHECK_TOL = 1e-6
MAX_SUPPORT_ACTIONS = 8
MAX_GRID_POINTS = 2_000_000
# Largest Euclidean distance between two points of any probability simplex.
NO_DEVIATION_SENTINEL = math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class NormalFormGame:
    """Payoff tensor of shape ``(*action_counts, num_players)``."""

    payoffs: np.ndarray

    def __post_init__(self):
        p = np.array(self.payoffs, dtype=np.float64)
        if p.ndim < 3 or p.shape[-1] != p.ndim - 1:
            raise DimensionMismatch(
                "payoffs must have shape (*action_counts, num_players) with >= 2 players")
        if any(n < 2 for n in p.shape[:-1]):
            raise ValueError("every player needs at least two actions")
        if not np.all(np.isfinite(p)):
            raise ValueError("payoffs must be finite")
        p.setflags(write=False)
        object.__setattr__(self, "payoffs", p)

    @property
    def num_players(self):
        return self.payoffs.shape[-1]

    @property
    def action_counts(self):
        return self.payoffs.shape[:-1]

    @classmethod
    def from_flat(cls, action_counts, payoffs):
        """Pure profiles row-major (player 1 slowest), payoffs by player."""
        counts = [int(n) for n in action_counts]
        flat = np.asarray(payoffs, dtype=np.float64).reshape(-1)
        expected = math.prod(counts) * len(counts)
        if flat.size != expected:
            raise DimensionMismatch(f"expected {expected} payoff entries, got {flat.size}")
        return cls(flat.reshape(*counts, len(counts)))

    @classmethod
    def bimatrix(cls, row_payoffs, col_payoffs):
        return cls(np.stack([np.asarray(row_payoffs, float),
                             np.asarray(col_payoffs, float)], axis=-1))

    def to_dict(self):
        return {"action_counts": list(self.action_counts),
                "payoffs": self.payoffs.reshape(-1).tolist()}


def load_game(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        return NormalFormGame.from_flat(doc["action_counts"], doc["payoffs"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: invalid game file ({exc})") from exc


@dataclass(frozen=True, eq=False)
class MixedProfile:
    """One probability vector per player, renormalized on construction."""

    strategies: tuple

    def __post_init__(self):
        vecs = []
        for k, s in enumerate(self.strategies):
            v = np.array(s, dtype=np.float64).reshape(-1)
            if not np.all(np.isfinite(v)) or np.any(v < 0):
                raise ValueError(f"strategy {k} has negative or non-finite entries")
            total = v.sum()
            if total <= 0:
                raise ValueError(f"strategy {k} has zero mass")
            v = v / total
            v.setflags(write=False)
            vecs.append(v)
        object.__setattr__(self, "strategies", tuple(vecs))

    @classmethod
    def _trusted(cls, strategies):
        # internal fast path for vectors already known to be distributions
        obj = object.__new__(cls)
        for v in strategies:
            v.setflags(write=False)
        object.__setattr__(obj, "strategies", tuple(strategies))
        return obj

    @classmethod
    def pure(cls, action_counts, actions):
        vecs = []
        for n, a in zip(action_counts, actions):
            v = np.zeros(n)
            v[a] = 1.0
            vecs.append(v)
        return cls(tuple(vecs))

    @classmethod
    def uniform(cls, action_counts):
        return cls(tuple(np.full(n, 1.0 / n) for n in action_counts))

    def distance(self, other):
        """L-infinity distance over all players' probabilities."""
        return max(float(np.max(np.abs(a - b)))
                   for a, b in zip(self.strategies, other.strategies))

    def tolist(self):
        return [s.tolist() for s in self.strategies]

    def __eq__(self, other):
        if not isinstance(other, MixedProfile):
            return NotImplemented
        return (len(self.strategies) == len(other.strategies)
                and all(a.shape == b.shape and a.tobytes() == b.tobytes()
                        for a, b in zip(self.strategies, other.strategies)))

    def __repr__(self):
        return f"MixedProfile({self.tolist()})"


def _check(game, profile, i=None):
    if len(profile.strategies) != game.num_players or any(
            s.shape != (n,) for s, n in zip(profile.strategies, game.action_counts)):
        raise DimensionMismatch("profile does not match the game's action counts")
    if i is not None and not 0 <= i < game.num_players:
        raise IndexOutOfRange(f"player {i} out of range for {game.num_players} players")


def _contract_except(tensor, strategies, keep):
    # contract highest axes first so lower axis numbers stay valid
    for j in reversed(range(len(strategies))):
        if j != keep:
            tensor = np.tensordot(tensor, strategies[j], axes=([j], [0]))
    return tensor


def expected_payoff(game, profile, i):
    _check(game, profile, i)
    return float(_contract_except(game.payoffs[..., i], profile.strategies, keep=None))


def pure_payoff_vector(game, profile, i):
    """Payoff to each pure action of player ``i`` against the others' mix."""
    _check(game, profile, i)
    return _contract_except(game.payoffs[..., i], profile.strategies, keep=i)


def best_response_set(game, profile, i, tol=BR_TOL):
    """Sorted tuple of pure actions within ``tol`` of the best payoff."""
    u = pure_payoff_vector(game, profile, i)
    return tuple(np.flatnonzero(u >= u.max() - tol).tolist())


def project_simplex(v):
    """Euclidean projection of ``v`` onto the probability simplex (sort and threshold)."""
    v = np.asarray(v, dtype=np.float64)
    u = np.sort(v)[::-1]
    cssv = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u - cssv / ind > 0)[-1]
    theta = cssv[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def br_distance(profile, i, br_set):
    """Distance from player ``i``'s strategy to the face spanned by ``br_set``."""
    br = sorted(br_set)
    if not br:
        raise EmptyBrSet("best-response set is empty")
    s = profile.strategies[i]
    off = np.ones(s.size, dtype=bool)
    off[br] = False
    if not np.any(s[off] > 0):
        return 0.0
    target = np.zeros_like(s)
    target[br] = project_simplex(s[br])
    return float(np.linalg.norm(s - target))


# ----- equilibria -----

def _indifference(payoff_block):
    """Mix over columns making every row equally good; None if infeasible."""
    k_rows, k_cols = payoff_block.shape
    m = np.zeros((k_rows + 1, k_cols + 1))
    m[:k_rows, :k_cols] = payoff_block
    m[:k_rows, k_cols] = -1.0
    m[k_rows, :k_cols] = 1.0
    rhs = np.zeros(k_rows + 1)
    rhs[k_rows] = 1.0
    if k_rows == k_cols:
        try:
            sol = np.linalg.solve(m, rhs)
        except np.linalg.LinAlgError:
            sol = np.linalg.lstsq(m, rhs, rcond=None)[0]
    else:
        sol = np.linalg.lstsq(m, rhs, rcond=None)[0]
    scale = max(1.0, float(np.max(np.abs(payoff_block))))
    if np.max(np.abs(m @ sol - rhs)) > EQ_TOL * scale:
        return None
    mix = sol[:k_cols]
    if np.any(mix < -EQ_TOL):
        return None
    return np.maximum(mix, 0.0)


def _support_pairs(n1, n2):
    sizes = [(k, k) for k in range(1, min(n1, n2) + 1)]
    sizes += sorted(((k1, k2) for k1 in range(1, n1 + 1) for k2 in range(1, n2 + 1)
                     if k1 != k2), key=lambda p: (p[0] + p[1], p[0]))
    for k1, k2 in sizes:
        for rows in itertools.combinations(range(n1), k1):
            for cols in itertools.combinations(range(n2), k2):
                yield list(rows), list(cols)


def support_enumeration_2p(game):
    """All equilibria of a two-player game found by support enumeration."""
    if game.num_players != 2:
        raise UnsupportedGame("support enumeration needs exactly two players")
    n1, n2 = game.action_counts
    if max(n1, n2) > MAX_SUPPORT_ACTIONS:
        raise UnsupportedGame(f"more than {MAX_SUPPORT_ACTIONS} actions for a player")
    a, b = game.payoffs[..., 0], game.payoffs[..., 1]
    found = []
    for rows, cols in _support_pairs(n1, n2):
        y_sub = _indifference(a[np.ix_(rows, cols)])
        if y_sub is None or y_sub.sum() <= 0:
            continue
        x_sub = _indifference(b[np.ix_(rows, cols)].T)
        if x_sub is None or x_sub.sum() <= 0:
            continue
        x, y = np.zeros(n1), np.zeros(n2)
        x[rows], y[cols] = x_sub, y_sub
        x, y = x / x.sum(), y / y.sum()
        row_vals, col_vals = a @ y, x @ b
        if row_vals.max() > x @ row_vals + EQ_TOL or col_vals.max() > col_vals @ y + EQ_TOL:
            continue
        candidate = MixedProfile((x, y))
        if all(candidate.distance(prev) > DEDUP_TOL for prev in found):
            found.append(candidate)
    return found


def equilibrium_gap(game, profile):
    """Largest gain any player gets from a pure deviation."""
    return max(float(pure_payoff_vector(game, profile, i).max())
               - expected_payoff(game, profile, i) for i in range(game.num_players))


# ----- dynamics -----

def _lowest_best_response(game, strategies, i):
    u = _contract_except(game.payoffs[..., i], strategies, keep=i)
    return int(np.flatnonzero(u >= u.max() - BR_TOL)[0])


def best_response_dynamics(game, init, T, damping=1.0):
    """Simultaneous damped best-response updates; returns T+1 profiles."""
    _check(game, init)
    if T < 1:
        raise ValueError("T must be >= 1")
    if not 0.0 < damping <= 1.0:
        raise ValueError("damping must lie in (0, 1]")
    trajectory = [init]
    current = init
    for _ in range(T):
        nxt = []
        for i, s in enumerate(current.strategies):
            v = np.zeros_like(s)
            v[_lowest_best_response(game, current.strategies, i)] = 1.0
            nxt.append((1.0 - damping) * s + damping * v)
        current = MixedProfile(tuple(nxt))
        trajectory.append(current)
    return trajectory


def fictitious_play(game, init_actions, T):
    """Empirical play frequencies after each of T rounds."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if len(init_actions) != game.num_players:
        raise DimensionMismatch("need one initial action per player")
    counts = [np.zeros(n) for n in game.action_counts]
    for i, a in enumerate(init_actions):
        if not 0 <= a < game.action_counts[i]:
            raise IndexOutOfRange(f"initial action {a} out of range for player {i}")
        counts[i][a] += 1.0
    trajectory = [MixedProfile(tuple(c.copy() for c in counts))]
    for step in range(1, T):
        freqs = trajectory[-1].strategies
        moves = [_lowest_best_response(game, freqs, i) for i in range(game.num_players)]
        for i, a in enumerate(moves):
            counts[i][a] += 1.0
        trajectory.append(MixedProfile._trusted([c / (step + 1) for c in counts]))
    return trajectory


# ----- robustness -----

@dataclass(frozen=True)
class NerResult:
    ner_literal: float
    argmin_player: int
    argmin_step: int
    trajectory_len: int
    ner_epsilon: float = None
    epsilon: float = None
    distances: np.ndarray = field(default=None, repr=False, compare=False)

    def with_epsilon(self, value, epsilon):
        return NerResult(self.ner_literal, self.argmin_player, self.argmin_step,
                         self.trajectory_len, value, epsilon, self.distances)

    def to_dict(self):
        return {"ner_literal": self.ner_literal, "argmin_player": self.argmin_player,
                "argmin_step": self.argmin_step, "trajectory_len": self.trajectory_len,
                "ner_epsilon": self.ner_epsilon, "epsilon": self.epsilon}


def ner_literal(game, trajectory):
    """min over steps and players of the distance to the best-response face.

    Ties go to the earliest step, then the lowest player index.
    """
    if not trajectory:
        raise ValueError("trajectory is empty")
    dist = np.empty((len(trajectory), game.num_players))
    for t, profile in enumerate(trajectory):
        for i in range(game.num_players):
            dist[t, i] = br_distance(profile, i, best_response_set(game, profile, i))
    step, player = np.unravel_index(int(np.argmin(dist)), dist.shape)
    return NerResult(ner_literal=float(dist[step, player]), argmin_player=int(player),
                     argmin_step=int(step), trajectory_len=len(trajectory),
                     distances=dist)


def simplex_grid(n, grid):
    """All points of the n-simplex whose coordinates are multiples of 1/grid."""
    count = comb(grid + n - 1, n - 1)
    if count > MAX_GRID_POINTS:
        raise ValueError(f"simplex grid would have {count} points")
    bars = np.array(list(itertools.combinations(range(grid + n - 1), n - 1)),
                    dtype=np.int64).reshape(count, n - 1)
    edges = np.hstack([np.full((count, 1), -1), bars, np.full((count, 1), grid + n - 1)])
    return (np.diff(edges, axis=1) - 1) / grid


def ner_epsilon(game, equilibrium, epsilon, grid=100):
    """Smallest move of one player that gains more than ``epsilon``.

    Each player's simplex is searched on a grid of step ``1/grid``. Returns
    the sqrt(2) sentinel when no grid deviation is profitable for anyone.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if grid < 2:
        raise ValueError("grid must be >= 2")
    _check(game, equilibrium)
    gap = equilibrium_gap(game, equilibrium)
    if gap > EQUILIBRIUM_CHECK_TOL:
        raise NotAnEquilibrium(f"a pure deviation gains {gap:.3g}")
    best = math.inf
    for i in range(game.num_players):
        u = pure_payoff_vector(game, equilibrium, i)
        base = expected_payoff(game, equilibrium, i)
        points = simplex_grid(game.action_counts[i], grid)
        profitable = points[points @ u > base + epsilon]
        if len(profitable):
            d = np.linalg.norm(profitable - equilibrium.strategies[i], axis=1).min()
            best = min(best, float(d))
    return NO_DEVIATION_SENTINEL if math.isinf(best) else best
