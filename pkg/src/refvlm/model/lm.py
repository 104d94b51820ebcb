"""Toy autoregressive language model and the generation contract.

A small causal transformer over the byte vocabulary. Visual tokens enter the
sequence as raw embedding rows (the projection already maps them into the
embedding space), interleaved with text-token embeddings exactly in prompt
order. Greedy decoding is deterministic for fixed weights and prompt;
sampled decoding is deterministic per seed.
"""

from __future__ import annotations

from typing import List, Optional

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..tokenizer import ByteTokenizer, VOCAB_SIZE
from ..validation import is_tensor
from .blocks import TransformerBlock, init_linear, seeded_generator, sinusoidal_positions
from .types import PromptSequence


class ContextOverflowError(ValueError):
    """Prompt length plus requested new tokens exceeds the context window."""


class TinyCausalLM(nn.Module):
    def __init__(
        self,
        embed_dim: int = 64,
        n_layers: int = 4,
        n_heads: int = 4,
        ffn_dim: int = 256,
        context_window: int = 512,
        vocab_size: int = VOCAB_SIZE,
        seed: int = 0,
        dtype: torch.dtype = torch.float64,
    ):
        super().__init__()
        self.embed_dim = embed_dim
        self.n_layers = n_layers
        self.n_heads = n_heads
        self.ffn_dim = ffn_dim
        self.context_window = context_window
        self.vocab_size = vocab_size
        self.seed = seed
        self.dtype = dtype
        self.tokenizer = ByteTokenizer()

        gen = seeded_generator(seed)
        self.embedding = nn.Embedding(vocab_size, embed_dim, dtype=dtype)
        with torch.no_grad():
            self.embedding.weight.normal_(0.0, 0.02, generator=gen)
        self.blocks = nn.ModuleList(
            TransformerBlock(embed_dim, n_heads, ffn_dim, gen, dtype) for _ in range(n_layers)
        )
        self.norm = nn.LayerNorm(embed_dim, dtype=dtype)
        self.lm_head = init_linear(nn.Linear(embed_dim, vocab_size, dtype=dtype), gen)

    def embed_ids(self, ids) -> torch.Tensor:
        idx = torch.as_tensor(ids, dtype=torch.long)
        return self.embedding(idx)

    def embed_prompt(self, prompt: PromptSequence) -> torch.Tensor:
        """Flatten a prompt to an (N, E) embedding matrix in segment order."""
        rows: List[torch.Tensor] = []
        for seg in prompt.segments:
            if seg.kind == "text":
                if len(seg.payload) > 0:
                    rows.append(self.embed_ids(seg.payload))
            else:
                tokens = seg.payload.tokens
                t = tokens if is_tensor(tokens) else torch.as_tensor(tokens)
                rows.append(t.to(self.dtype))
        return torch.cat(rows, dim=0)

    def forward(self, embeds: torch.Tensor) -> torch.Tensor:
        """(B, N, E) or (N, E) embeddings -> logits of matching shape over the vocab."""
        squeeze = embeds.ndim == 2
        x = embeds.unsqueeze(0) if squeeze else embeds
        n = x.shape[1]
        if n > self.context_window:
            raise ContextOverflowError(
                f"sequence of {n} positions exceeds the context window of {self.context_window}"
            )
        x = x + sinusoidal_positions(n, self.embed_dim, self.dtype).unsqueeze(0)
        for block in self.blocks:
            x = block(x, causal=True)
        logits = self.lm_head(self.norm(x))
        return logits.squeeze(0) if squeeze else logits


def generate_answer(
    prompt: PromptSequence,
    lm: TinyCausalLM,
    max_new_tokens: int = 48,
    decoding: str = "greedy",
    seed: Optional[int] = None,
) -> str:
    """Decode the assistant's answer after the prompt.

    Returns the text of the tokens emitted after the assistant marker, up to
    the end-of-answer token or `max_new_tokens`, whichever comes first.
    """
    if decoding not in ("greedy", "sampled"):
        raise ValueError(f"decoding must be 'greedy' or 'sampled', got {decoding!r}")
    if decoding == "sampled" and seed is None:
        raise ValueError("sampled decoding requires a seed")
    prompt_len = len(prompt)
    if prompt_len + max_new_tokens > lm.context_window:
        raise ContextOverflowError(
            f"prompt of {prompt_len} positions plus {max_new_tokens} new tokens exceeds "
            f"the context window of {lm.context_window}"
        )
    if max_new_tokens == 0:
        return ""

    gen = seeded_generator(seed) if decoding == "sampled" else None
    with torch.no_grad():
        embeds = lm.embed_prompt(prompt)
        out_ids: List[int] = []
        for _ in range(max_new_tokens):
            logits = lm(embeds)[-1]
            if decoding == "greedy":
                # numpy argmax: first maximal index, deterministic
                next_id = int(np.argmax(logits.numpy()))
            else:
                probs = F.softmax(logits, dim=-1)
                next_id = int(torch.multinomial(probs, 1, generator=gen).item())
            if next_id == lm.tokenizer.eos_id:
                break
            out_ids.append(next_id)
            embeds = torch.cat((embeds, lm.embed_ids([next_id])), dim=0)
    return lm.tokenizer.decode(out_ids)
