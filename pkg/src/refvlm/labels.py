"""Label sets for the two recognition tasks.

Both enums have a fixed order that matches the output layout of the
classification heads: the integer value of a member is the index of the
corresponding logit.
"""

from __future__ import annotations

import enum


class FoulType(enum.IntEnum):
    """Eight contact/action categories, in fixed head-output order."""

    TACKLING = 0
    HOLDING = 1
    PUSHING = 2
    STANDING_TACKLING = 3
    ELBOWING = 4
    DIVE = 5
    CHALLENGE = 6
    HIGH_LEG = 7

    @property
    def display(self) -> str:
        """Canonical display string used in prompts, manifests, and reports."""
        return _FOUL_DISPLAY[self]

    @classmethod
    def from_display(cls, name: str) -> "FoulType":
        try:
            return _FOUL_BY_DISPLAY[name.strip()]
        except KeyError:
            raise ValueError(f"unknown foul type label: {name!r}") from None


class Severity(enum.IntEnum):
    """Four offence/severity outcomes, in fixed head-output order."""

    NO_OFFENCE = 0
    OFFENCE_NO_CARD = 1
    OFFENCE_YELLOW_CARD = 2
    OFFENCE_RED_CARD = 3

    @property
    def display(self) -> str:
        """Canonical display string used in prompts, manifests, and reports."""
        return _SEVERITY_DISPLAY[self]

    @classmethod
    def from_display(cls, name: str) -> "Severity":
        try:
            return _SEVERITY_BY_DISPLAY[name.strip()]
        except KeyError:
            raise ValueError(f"unknown severity label: {name!r}") from None


_FOUL_DISPLAY = {
    FoulType.TACKLING: "Tackling",
    FoulType.HOLDING: "Holding",
    FoulType.PUSHING: "Pushing",
    FoulType.STANDING_TACKLING: "Standing tackling",
    FoulType.ELBOWING: "Elbowing",
    FoulType.DIVE: "Dive",
    FoulType.CHALLENGE: "Challenge",
    FoulType.HIGH_LEG: "High leg",
}

_SEVERITY_DISPLAY = {
    Severity.NO_OFFENCE: "No offence",
    Severity.OFFENCE_NO_CARD: "Offence + No card",
    Severity.OFFENCE_YELLOW_CARD: "Offence + Yellow card",
    Severity.OFFENCE_RED_CARD: "Offence + Red card",
}

_FOUL_BY_DISPLAY = {v: k for k, v in _FOUL_DISPLAY.items()}
_SEVERITY_BY_DISPLAY = {v: k for k, v in _SEVERITY_DISPLAY.items()}

FOUL_TYPE_NAMES = tuple(t.display for t in FoulType)
SEVERITY_NAMES = tuple(s.display for s in Severity)

N_FOUL_TYPES = len(FoulType)
N_SEVERITIES = len(Severity)
