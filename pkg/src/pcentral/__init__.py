"""Mod-p central series quotients of free groups and their automorphism extensions.

Modules, bottom-up: ``words`` (free groups), ``truncalg`` (truncated
noncommutative algebra), ``quotients`` (enumerated p-groups), ``endos``
(endomorphisms), ``extensions`` (exactness and centrality verifiers),
``matgroups`` (matrix groups and complement search), ``splitting``
(certificates), ``cli``.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .endos import Ctx, Endo
from .quotients import QuotientGroup, build_nz, build_ns2, build_tilde, series_group
from .truncalg import BudgetExceeded, TruncSeries
from .words import Word, parse_word

__all__ = [
    "BudgetExceeded",
    "Ctx",
    "Endo",
    "QuotientGroup",
    "TruncSeries",
    "Word",
    "build_nz",
    "build_ns2",
    "build_tilde",
    "parse_word",
    "series_group",
]
