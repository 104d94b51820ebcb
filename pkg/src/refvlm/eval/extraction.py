"""Label extraction from generated free-text explanations.

The default extractor is a deterministic ordered rule table, first match
wins: red-card phrases, then yellow-card phrases, then "no card" (which only
fires when the text also contains foul evidence), then no-offence phrases.
Absent fields are returned rather than guessed. Foul-type extraction is
attempted with its own table but explanations frequently do not name the
type; callers should report coverage for it rather than accuracy.

An external extractor (a chat-model client, for instance) can be plugged in
behind the same contract. The wire protocol is one request (the raw text)
and one response line `label: <canonical severity name>` or `label: none`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

from ..labels import FoulType, Severity


class ExtractorProtocolError(ValueError):
    """External extractor replied outside the `label: <name>` schema."""


class ExtractorTransportError(RuntimeError):
    """External extractor client failed to produce a response."""


@dataclass
class ExtractionResult:
    raw_text: str
    severity: Optional[Severity]
    foul_type: Optional[FoulType]
    method: str  # "rule_based" | "external"
    matched_evidence: Optional[str]


def _compile(phrases: List[str]) -> re.Pattern:
    alts = "|".join(re.escape(p) for p in phrases)
    return re.compile(rf"\b(?:{alts})\b", re.IGNORECASE)


# ordered, first match wins
_SEVERITY_RULES: List[Tuple[re.Pattern, Severity, bool]] = [
    (_compile([
        "red card", "straight red", "sent off", "sending off", "serious foul play",
    ]), Severity.OFFENCE_RED_CARD, False),
    (_compile([
        "yellow card", "booking", "booked", "caution", "cautioned",
    ]), Severity.OFFENCE_YELLOW_CARD, False),
    (_compile([
        "no card", "without a card", "only a free kick", "free kick only",
    ]), Severity.OFFENCE_NO_CARD, True),  # requires foul evidence
    (_compile([
        "no foul", "not a foul", "no offence", "no offense", "fair challenge",
        "not an offence", "not an offense", "no infringement",
    ]), Severity.NO_OFFENCE, False),
]

_FOUL_EVIDENCE = _compile([
    "foul", "held", "holds", "holding", "hold", "pull", "pulls", "pulled", "pulling",
    "push", "pushes", "pushed", "pushing", "trip", "trips", "tripped", "tripping",
    "kick", "kicks", "kicked", "kicking", "elbow", "elbows", "elbowed", "elbowing",
    "tackle", "tackles", "tackled", "tackling", "charge", "charges", "charged",
    "contact", "touch", "touches", "touched", "steps on", "stepped on", "stamp",
    "offence", "offense", "careless", "reckless", "unsporting", "unsportsmanlike",
    "infringement", "illegal", "grabs", "grabbed", "grabbing", "jersey",
])

# ordered so that the more specific phrases win ("standing tackle" before "tackle",
# "high leg" before "challenge")
_FOUL_TYPE_RULES: List[Tuple[re.Pattern, FoulType]] = [
    (_compile(["standing tackle", "standing tackling"]), FoulType.STANDING_TACKLING),
    (_compile(["high leg", "high boot", "high foot"]), FoulType.HIGH_LEG),
    (_compile(["tackle", "tackling", "tackled", "slide tackle"]), FoulType.TACKLING),
    (_compile(["holding", "held", "holds", "hold"]), FoulType.HOLDING),
    (_compile(["push", "pushed", "pushing", "pushes"]), FoulType.PUSHING),
    (_compile(["elbow", "elbowed", "elbowing", "elbows"]), FoulType.ELBOWING),
    (_compile(["dive", "dives", "diving", "simulation"]), FoulType.DIVE),
    (_compile(["challenge", "challenges"]), FoulType.CHALLENGE),
]

ExternalClient = Callable[[str], str]

_LABEL_LINE = re.compile(r"^label:\s*(.+?)\s*$")


def parse_external_response(response: str) -> Optional[Severity]:
    match = _LABEL_LINE.match(response.strip())
    if match is None:
        raise ExtractorProtocolError(f"malformed extractor response: {response!r}")
    name = match.group(1)
    if name.lower() == "none":
        return None
    try:
        return Severity.from_display(name)
    except ValueError as exc:
        raise ExtractorProtocolError(str(exc)) from exc


def extract_labels(
    text: str, method: str = "rule_based", client: Optional[ExternalClient] = None
) -> ExtractionResult:
    """Extract severity (and foul type when explicit) from an explanation."""
    if not text or not text.strip():
        raise ValueError("cannot extract labels from empty text")
    if method == "rule_based":
        severity, evidence = _rule_severity(text)
        foul_type = _rule_foul_type(text)
        return ExtractionResult(
            raw_text=text, severity=severity, foul_type=foul_type,
            method="rule_based", matched_evidence=evidence,
        )
    if method == "external":
        if client is None:
            raise ValueError("external extraction requires a client")
        try:
            response = client(text)
        except ExtractorProtocolError:
            raise
        except Exception as exc:
            raise ExtractorTransportError(f"extractor client failed: {exc}") from exc
        severity = parse_external_response(response)
        return ExtractionResult(
            raw_text=text, severity=severity, foul_type=None,
            method="external", matched_evidence="" if severity is not None else None,
        )
    raise ValueError(f"unknown extraction method: {method!r}")


def _rule_severity(text: str) -> Tuple[Optional[Severity], Optional[str]]:
    for pattern, severity, needs_evidence in _SEVERITY_RULES:
        match = pattern.search(text)
        if match is None:
            continue
        if needs_evidence and _FOUL_EVIDENCE.search(text) is None:
            continue
        return severity, text[match.start() : match.end()]
    return None, None


def _rule_foul_type(text: str) -> Optional[FoulType]:
    for pattern, foul_type in _FOUL_TYPE_RULES:
        if pattern.search(text):
            return foul_type
    return None
