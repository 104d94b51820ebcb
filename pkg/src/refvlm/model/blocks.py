"""Minimal transformer building blocks shared by the toy encoder and toy LM.

Plain pre-LN blocks with separately named q/k/v/out and fc1/fc2 linears so
that low-rank adapters can wrap individual projections. Everything is built
on an explicit torch.Generator, which makes initialization a pure function
of the seed.
"""

from __future__ import annotations

import math

import torch
import torch.nn as nn
import torch.nn.functional as F


def seeded_generator(seed: int) -> torch.Generator:
    gen = torch.Generator(device="cpu")
    gen.manual_seed(int(seed))
    return gen


def init_linear(linear: nn.Linear, gen: torch.Generator) -> nn.Linear:
    # matches nn.Linear's default kaiming-uniform init, but on our generator
    fan_in = linear.in_features
    bound = 1.0 / math.sqrt(fan_in) if fan_in > 0 else 0.0
    with torch.no_grad():
        linear.weight.uniform_(-bound, bound, generator=gen)
        if linear.bias is not None:
            linear.bias.uniform_(-bound, bound, generator=gen)
    return linear


def sinusoidal_positions(n: int, dim: int, dtype: torch.dtype) -> torch.Tensor:
    """Standard fixed sin/cos positional table of shape (n, dim)."""
    position = torch.arange(n, dtype=dtype).unsqueeze(1)
    half = dim // 2
    freq = torch.exp(torch.arange(half, dtype=dtype) * (-math.log(10000.0) / max(half, 1)))
    table = torch.zeros(n, dim, dtype=dtype)
    table[:, 0::2] = torch.sin(position * freq)
    table[:, 1::2] = torch.cos(position * freq)[:, : dim - half]
    return table


class SelfAttention(nn.Module):
    def __init__(self, dim: int, n_heads: int, gen: torch.Generator, dtype: torch.dtype):
        super().__init__()
        if dim % n_heads != 0:
            raise ValueError(f"dim {dim} not divisible by n_heads {n_heads}")
        self.n_heads = n_heads
        self.head_dim = dim // n_heads
        self.q_proj = init_linear(nn.Linear(dim, dim, dtype=dtype), gen)
        self.k_proj = init_linear(nn.Linear(dim, dim, dtype=dtype), gen)
        self.v_proj = init_linear(nn.Linear(dim, dim, dtype=dtype), gen)
        self.out_proj = init_linear(nn.Linear(dim, dim, dtype=dtype), gen)

    def forward(self, x: torch.Tensor, causal: bool = False) -> torch.Tensor:
        # x: (B, N, dim)
        b, n, d = x.shape
        q = self.q_proj(x).view(b, n, self.n_heads, self.head_dim).transpose(1, 2)
        k = self.k_proj(x).view(b, n, self.n_heads, self.head_dim).transpose(1, 2)
        v = self.v_proj(x).view(b, n, self.n_heads, self.head_dim).transpose(1, 2)
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        if causal:
            mask = torch.ones(n, n, dtype=torch.bool, device=x.device).triu(1)
            scores = scores.masked_fill(mask, float("-inf"))
        attn = F.softmax(scores, dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(b, n, d)
        return self.out_proj(out)


class FeedForward(nn.Module):
    def __init__(self, dim: int, hidden: int, gen: torch.Generator, dtype: torch.dtype):
        super().__init__()
        self.fc1 = init_linear(nn.Linear(dim, hidden, dtype=dtype), gen)
        self.fc2 = init_linear(nn.Linear(hidden, dim, dtype=dtype), gen)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.fc2(F.gelu(self.fc1(x)))


class TransformerBlock(nn.Module):
    def __init__(self, dim: int, n_heads: int, ffn_dim: int, gen: torch.Generator, dtype: torch.dtype):
        super().__init__()
        self.ln1 = nn.LayerNorm(dim, dtype=dtype)
        self.attn = SelfAttention(dim, n_heads, gen, dtype)
        self.ln2 = nn.LayerNorm(dim, dtype=dtype)
        self.mlp = FeedForward(dim, ffn_dim, gen, dtype)

    def forward(self, x: torch.Tensor, causal: bool = False) -> torch.Tensor:
        x = x + self.attn(self.ln1(x), causal=causal)
        x = x + self.mlp(self.ln2(x))
        return x
