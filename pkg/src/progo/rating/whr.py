"""Whole-history rating: time-varying Bradley-Terry strengths.

Each player gets one rating node per day on which they played.  A Wiener
drift prior links a player's consecutive nodes (variance grows linearly with
elapsed time) and a Gaussian prior anchors the first node.  Game outcomes
enter through the Bradley-Terry likelihood in natural (log) units, so a
rating difference d wins with probability 1 / (1 + exp(-d)).

The joint posterior is maximized by cycling Newton steps over one player's
full trajectory at a time.  With the likelihood diagonal in that player's
nodes and the drift prior coupling only neighbours, the per-player Hessian
is tridiagonal: the Newton step is a Thomas solve, and the reported
uncertainties come from the diagonal of the inverse via the Takahashi
recursion.
"""

from __future__ import annotations

import datetime
import math
from dataclasses import dataclass

import numpy as np

from .history import GameOutcome, RatingHistory, RatingPoint

DAYS_PER_YEAR = 365.25


@dataclass(frozen=True)
class WhrParams:
    prior_variance_per_year: float = 0.20  # natural-units^2 of drift
    prior_center: float = 0.0
    prior_sd_initial: float = 2.0
    max_newton_iters: int = 50
    convergence_tol: float = 1e-4
    elo_scale: float = 400.0 / math.log(10.0)  # display conversion only

    def __post_init__(self):
        if min(self.prior_variance_per_year, self.prior_sd_initial,
               self.max_newton_iters, self.convergence_tol, self.elo_scale) <= 0:
            raise ValueError("WHR parameters must be positive")

    def as_dict(self) -> dict:
        return {
            "prior_variance_per_year": self.prior_variance_per_year,
            "prior_center": self.prior_center,
            "prior_sd_initial": self.prior_sd_initial,
            "max_newton_iters": self.max_newton_iters,
            "convergence_tol": self.convergence_tol,
            "elo_scale": self.elo_scale,
        }


def _sigmoid(x: float) -> float:
    if x >= 0:
        z = math.exp(-x)
        return 1.0 / (1.0 + z)
    z = math.exp(x)
    return z / (1.0 + z)


class _PlayerDays:
    """One player's rating nodes and the games attached to each node."""

    __slots__ = ("player_id", "days", "ratings", "games", "uncertainty")

    def __init__(self, player_id: str, days: list[int]):
        self.player_id = player_id
        self.days = days  # ordinal day numbers, ascending
        self.ratings = np.zeros(len(days))
        # games[i]: list of (opponent_id, opponent_day_index, score_for_me)
        self.games: list[list[tuple[str, int, float]]] = [[] for _ in days]
        self.uncertainty = np.zeros(len(days))


@dataclass
class WhrFit:
    history: RatingHistory
    converged: bool
    iterations: int
    max_residual: float


def fit_whr(games: list[GameOutcome], params: WhrParams = WhrParams()) -> WhrFit:
    """Maximum a posteriori fit of every player's rating trajectory.

    Deterministic: sweeps visit players in ascending id order until the
    largest Newton step falls below the convergence tolerance.  If the
    iteration limit is hit first, the result is flagged as non-converged and
    carries the residual.
    """
    if any(g.date is None for g in games):
        raise ValueError("all games need dates")

    players = _index_players(games)
    order = sorted(players)

    iterations = 0
    residual = math.inf
    for iterations in range(1, params.max_newton_iters + 1):
        residual = 0.0
        for pid in order:
            step = _newton_step(players[pid], players, params)
            residual = max(residual, step)
        if residual < params.convergence_tol:
            break
    converged = residual < params.convergence_tol

    history = RatingHistory("whr", params.as_dict())
    for pid in order:
        p = players[pid]
        _fill_uncertainty(p, players, params)
        for i, day in enumerate(p.days):
            history.add(pid, RatingPoint(datetime.date.fromordinal(day),
                                         float(p.ratings[i]),
                                         float(p.uncertainty[i])))
    if not games:
        history.last_game_date = None
    return WhrFit(history, converged, iterations, residual)


def _index_players(games: list[GameOutcome]) -> dict[str, _PlayerDays]:
    day_sets: dict[str, set[int]] = {}
    for g in games:
        day = g.date.toordinal()
        day_sets.setdefault(g.black_id, set()).add(day)
        day_sets.setdefault(g.white_id, set()).add(day)
    players = {pid: _PlayerDays(pid, sorted(days)) for pid, days in day_sets.items()}
    day_index = {pid: {d: i for i, d in enumerate(p.days)}
                 for pid, p in players.items()}
    for g in games:
        day = g.date.toordinal()
        bi = day_index[g.black_id][day]
        wi = day_index[g.white_id][day]
        players[g.black_id].games[bi].append((g.white_id, wi, g.black_score))
        players[g.white_id].games[wi].append((g.black_id, bi, 1.0 - g.black_score))
    return players


def _drift_variances(p: _PlayerDays, params: WhrParams) -> np.ndarray:
    if len(p.days) < 2:
        return np.zeros(0)
    deltas = np.diff(np.asarray(p.days, dtype=float)) / DAYS_PER_YEAR
    return params.prior_variance_per_year * deltas


def _local_derivatives(p: _PlayerDays, players: dict[str, _PlayerDays],
                       params: WhrParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradient and tridiagonal negated Hessian of the log posterior in p's
    nodes, holding all other players fixed."""
    m = len(p.days)
    grad = np.zeros(m)
    diag = np.zeros(m)
    for i in range(m):
        r = p.ratings[i]
        for opp_id, opp_idx, score in p.games[i]:
            d = r - players[opp_id].ratings[opp_idx]
            prob = _sigmoid(d)
            grad[i] += score - prob
            diag[i] += prob * (1.0 - prob)

    # First-day anchor
    var0 = params.prior_sd_initial ** 2
    grad[0] -= (p.ratings[0] - params.prior_center) / var0
    diag[0] += 1.0 / var0

    # Wiener increments between consecutive active days
    dvar = _drift_variances(p, params)
    off = np.zeros(max(0, m - 1))
    for i in range(m - 1):
        diff = p.ratings[i + 1] - p.ratings[i]
        grad[i] += diff / dvar[i]
        grad[i + 1] -= diff / dvar[i]
        diag[i] += 1.0 / dvar[i]
        diag[i + 1] += 1.0 / dvar[i]
        off[i] = -1.0 / dvar[i]
    return grad, diag, off


def _thomas_solve(diag: np.ndarray, off: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve a symmetric positive-definite tridiagonal system."""
    m = len(diag)
    c = np.zeros(m)
    d = np.zeros(m)
    c[0] = diag[0]
    d[0] = rhs[0]
    for i in range(1, m):
        w = off[i - 1] / c[i - 1]
        c[i] = diag[i] - w * off[i - 1]
        d[i] = rhs[i] - w * d[i - 1]
    x = np.zeros(m)
    x[-1] = d[-1] / c[-1]
    for i in range(m - 2, -1, -1):
        x[i] = (d[i] - off[i] * x[i + 1]) / c[i]
    return x


def _newton_step(p: _PlayerDays, players: dict[str, _PlayerDays],
                 params: WhrParams) -> float:
    grad, diag, off = _local_derivatives(p, players, params)
    step = _thomas_solve(diag, off, grad)
    np.clip(step, -5.0, 5.0, out=step)  # tame early sweeps; inert near optimum
    p.ratings += step
    return float(np.max(np.abs(step))) if len(step) else 0.0


def _fill_uncertainty(p: _PlayerDays, players: dict[str, _PlayerDays],
                      params: WhrParams) -> None:
    """Posterior sd per node from the inverse-curvature diagonal.

    LDL' factorization of the tridiagonal precision, then the Takahashi
    backward recursion: Sigma[i,i] = 1/d[i] + l[i]^2 * Sigma[i+1,i+1].
    """
    _, diag, off = _local_derivatives(p, players, params)
    m = len(diag)
    d = np.zeros(m)
    l = np.zeros(max(0, m - 1))
    d[0] = diag[0]
    for i in range(1, m):
        l[i - 1] = off[i - 1] / d[i - 1]
        d[i] = diag[i] - l[i - 1] ** 2 * d[i - 1]
    var = np.zeros(m)
    var[-1] = 1.0 / d[-1]
    for i in range(m - 2, -1, -1):
        var[i] = 1.0 / d[i] + l[i] ** 2 * var[i + 1]
    p.uncertainty = np.sqrt(var)


def to_elo(rating_natural: float, params: WhrParams = WhrParams()) -> float:
    """Display conversion from natural units to the Elo scale."""
    return rating_natural * params.elo_scale
