"""Professional Go game analytics toolkit.

Ingests SGF game records, joins them to player and tournament metadata,
drives an analysis engine over every move, extracts meta / contextual /
in-game features, fits rating systems (Elo, TrueSkill, whole-history), and
trains and evaluates outcome-prediction models.
"""

__version__ = "0.1.0"
