"""Team semantics for modal and first-order dependence logics."""
from __future__ import annotations

from .formula import *  # noqa: F401,F403
from .kripke import (  # noqa: F401
    KripkeStructure, Team, image, successor_teams, minimal_diamond_teams,
)

__version__ = "0.1.0"
