"""Rating systems: Elo, two-player TrueSkill, and whole-history rating."""

from .elo import elo_expected, elo_update, fit_elo
from .history import GameOutcome, LeakageError, RatingHistory, RatingPoint
from .trueskill import TrueSkillParams, fit_trueskill, trueskill_update_1v1, trueskill_win_probability
from .whr import WhrParams, fit_whr

__all__ = [
    "elo_expected", "elo_update", "fit_elo",
    "GameOutcome", "LeakageError", "RatingHistory", "RatingPoint",
    "TrueSkillParams", "fit_trueskill", "trueskill_update_1v1",
    "trueskill_win_probability",
    "WhrParams", "fit_whr",
]
