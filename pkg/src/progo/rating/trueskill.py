"""Two-player TrueSkill: analytic truncated-Gaussian updates.

For a single 1v1 observation the moment-matched update is exact, so the
posterior mean and standard deviation agree with direct numerical
integration of N(skill; mu, sigma^2) * Phi((skill - mu_opp) / c).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

from .history import GameOutcome, RatingHistory, RatingPoint

_STD_NORMAL = NormalDist()


@dataclass(frozen=True)
class TrueSkillParams:
    mu0: float = 25.0
    sigma0: float = 25.0 / 3.0
    beta: float = 25.0 / 6.0     # sigma0 / 2
    tau: float = 25.0 / 300.0    # sigma0 / 100
    draw_prob: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.draw_prob < 1.0):
            raise ValueError("draw_prob must lie in [0, 1)")

    def draw_margin(self) -> float:
        if self.draw_prob == 0.0:
            return 0.0
        return _STD_NORMAL.inv_cdf((self.draw_prob + 1.0) / 2.0) * math.sqrt(2.0) * self.beta


def _pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def _v_win(t: float, eps: float) -> float:
    denom = _cdf(t - eps)
    if denom < 1e-300:
        return eps - t  # asymptote of pdf/cdf far in the tail
    return _pdf(t - eps) / denom


def _w_win(t: float, eps: float) -> float:
    v = _v_win(t, eps)
    return v * (v + t - eps)


def _v_draw(t: float, eps: float) -> float:
    denom = _cdf(eps - t) - _cdf(-eps - t)
    if denom < 1e-300:
        return -t
    return (_pdf(-eps - t) - _pdf(eps - t)) / denom


def _w_draw(t: float, eps: float) -> float:
    denom = _cdf(eps - t) - _cdf(-eps - t)
    if denom < 1e-300:
        return 1.0
    v = _v_draw(t, eps)
    return v * v + ((eps - t) * _pdf(eps - t) + (eps + t) * _pdf(-eps - t)) / denom


def trueskill_update_1v1(
    a: tuple[float, float],
    b: tuple[float, float],
    outcome_a: float,
    params: TrueSkillParams = TrueSkillParams(),
) -> tuple[tuple[float, float], tuple[float, float]]:
    """Update (mu, sigma) pairs for players a and b; outcome_a in {0, 0.5, 1}.

    Dynamics variance tau^2 is added to both players before the update, the
    winner's mean rises and the loser's falls, and both sigmas shrink.
    """
    mu_a, sigma_a = a
    mu_b, sigma_b = b
    if sigma_a <= 0 or sigma_b <= 0:
        raise ValueError("sigma must be positive")
    var_a = sigma_a ** 2 + params.tau ** 2
    var_b = sigma_b ** 2 + params.tau ** 2
    c = math.sqrt(var_a + var_b + 2.0 * params.beta ** 2)
    eps = params.draw_margin() / c

    if outcome_a == 0.5:
        t = (mu_a - mu_b) / c
        v, w = _v_draw(t, eps), _w_draw(t, eps)
        mu_a2 = mu_a + var_a / c * v
        mu_b2 = mu_b - var_b / c * v
    else:
        winner_first = outcome_a == 1.0
        mu_w, var_w = (mu_a, var_a) if winner_first else (mu_b, var_b)
        mu_l, var_l = (mu_b, var_b) if winner_first else (mu_a, var_a)
        t = (mu_w - mu_l) / c
        v, w = _v_win(t, eps), _w_win(t, eps)
        mu_w2 = mu_w + var_w / c * v
        mu_l2 = mu_l - var_l / c * v
        mu_a2, mu_b2 = (mu_w2, mu_l2) if winner_first else (mu_l2, mu_w2)

    sigma_a2 = math.sqrt(var_a * max(1e-12, 1.0 - var_a / (c * c) * w))
    sigma_b2 = math.sqrt(var_b * max(1e-12, 1.0 - var_b / (c * c) * w))
    return (mu_a2, sigma_a2), (mu_b2, sigma_b2)


def trueskill_win_probability(a: tuple[float, float], b: tuple[float, float],
                              beta: float = 25.0 / 6.0) -> float:
    denom = math.sqrt(2.0 * beta ** 2 + a[1] ** 2 + b[1] ** 2)
    return _cdf((a[0] - b[0]) / denom)


def fit_trueskill(games: list[GameOutcome],
                  params: TrueSkillParams = TrueSkillParams()) -> RatingHistory:
    history = RatingHistory("trueskill", {
        "mu0": params.mu0, "sigma0": params.sigma0, "beta": params.beta,
        "tau": params.tau, "draw_prob": params.draw_prob})
    current: dict[str, tuple[float, float]] = {}
    for game in sorted(games, key=lambda g: (g.date, g.black_id, g.white_id)):
        a = current.get(game.black_id, (params.mu0, params.sigma0))
        b = current.get(game.white_id, (params.mu0, params.sigma0))
        a, b = trueskill_update_1v1(a, b, game.black_score, params)
        current[game.black_id] = a
        current[game.white_id] = b
        history.add(game.black_id, RatingPoint(game.date, a[0], a[1]))
        history.add(game.white_id, RatingPoint(game.date, b[0], b[1]))
    return history
