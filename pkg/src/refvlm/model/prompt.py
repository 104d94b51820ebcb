"""Prompt assembly for the language model.

The single-turn prompt layout is, left to right:

    "USER: {question} {foul label} {severity label} " [visual tokens] " Assistant:"

i.e. the question text, the two prediction labels rendered as their canonical
display strings separated by single spaces, the projected visual tokens, and
the assistant marker. During training the ground-truth labels are injected in
place of the classifier predictions and the answer tokens (plus one
end-of-answer token) are appended after the marker with the answer mask set.

When `foul`/`severity` are omitted the label block is skipped entirely, which
is the "no prediction text" ablation configuration.
"""

from __future__ import annotations

from typing import Optional

from ..labels import FoulType, Severity
from ..tokenizer import ByteTokenizer
from .types import PromptSequence, VisualTokens

USER_PREFIX = "USER: "
ASSISTANT_MARKER = " Assistant:"
FOLLOW_UP_PREFIX = " USER: "


class EmptyQuestionError(ValueError):
    pass


class EmptyVisualTokensError(ValueError):
    pass


def render_prompt_prefix(
    question: str, foul: Optional[FoulType], severity: Optional[Severity]
) -> str:
    """Text that precedes the visual tokens, label block included when given."""
    if (foul is None) != (severity is None):
        raise ValueError("foul and severity labels must be provided together or not at all")
    if foul is None:
        return f"{USER_PREFIX}{question} "
    return f"{USER_PREFIX}{question} {foul.display} {severity.display} "


def assemble_prompt(
    question: str,
    foul: Optional[FoulType],
    severity: Optional[Severity],
    visual: VisualTokens,
    answer: Optional[str] = None,
    tokenizer: Optional[ByteTokenizer] = None,
) -> PromptSequence:
    """Build the prompt sequence; appends answer tokens with the mask set when given."""
    if not question or not question.strip():
        raise EmptyQuestionError("question must be non-empty")
    if len(visual) == 0:
        raise EmptyVisualTokensError("visual tokens must contain at least one row (S+T >= 1)")
    tok = tokenizer or ByteTokenizer()
    prompt = PromptSequence()
    prompt.append_text(tok.encode(render_prompt_prefix(question, foul, severity)))
    prompt.append_visual(visual)
    prompt.append_text(tok.encode(ASSISTANT_MARKER))
    if answer is not None:
        append_answer(prompt, answer, tok)
    return prompt


def append_answer(prompt: PromptSequence, answer: str, tokenizer: Optional[ByteTokenizer] = None) -> None:
    """Append assistant-answer tokens plus the end-of-answer token, mask set."""
    tok = tokenizer or ByteTokenizer()
    prompt.append_text(tok.encode(answer) + [tok.eos_id], answer=True)


def append_follow_up(prompt: PromptSequence, message: str, tokenizer: Optional[ByteTokenizer] = None) -> None:
    """Append a later-turn user message and a fresh assistant marker.

    Visual tokens and the prediction label text appear only in the first
    turn; follow-ups are plain text appended after the prior history.
    """
    if not message or not message.strip():
        raise EmptyQuestionError("message must be non-empty")
    tok = tokenizer or ByteTokenizer()
    prompt.append_text(tok.encode(f"{FOLLOW_UP_PREFIX}{message}{ASSISTANT_MARKER}"))
