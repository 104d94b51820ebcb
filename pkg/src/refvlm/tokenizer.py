"""Byte-level tokenizer for the toy language model.

Token ids 0..255 are raw UTF-8 bytes, followed by two specials. Byte-level
coverage means any answer string round-trips losslessly, which the golden
prompt tests and the memorization tests rely on.
"""

from __future__ import annotations

from typing import List

BYTE_VOCAB = 256
EOS_ID = 256
PAD_ID = 257
VOCAB_SIZE = 258


class DecodeError(ValueError):
    """A token id outside the vocabulary was passed to decode."""


class ByteTokenizer:
    """Stateless byte tokenizer; kept as a class so model handles can carry it."""

    vocab_size = VOCAB_SIZE
    eos_id = EOS_ID
    pad_id = PAD_ID

    def encode(self, text: str) -> List[int]:
        return list(text.encode("utf-8"))

    def decode(self, ids) -> str:
        out = bytearray()
        for i in ids:
            i = int(i)
            if i < 0 or i >= VOCAB_SIZE:
                raise DecodeError(f"token id {i} outside vocabulary of size {VOCAB_SIZE}")
            if i == EOS_ID or i == PAD_ID:
                continue
            out.append(i)
        return out.decode("utf-8", errors="replace")
