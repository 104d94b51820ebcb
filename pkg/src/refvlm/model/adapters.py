"""Low-rank additive adapters for parameter-efficient LM fine-tuning.

An adapter wraps a frozen linear layer: y = base(x) + up(down(x)). The up
factor is zero-initialized, so a freshly attached adapter leaves the wrapped
model's outputs bit-for-bit unchanged. The trainable-layer budget follows a
layer-fraction rule: the last ceil(fraction * L) transformer blocks receive
adapters on their attention and feed-forward projections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterator, List, Tuple

import torch
import torch.nn as nn

from .blocks import seeded_generator
from .lm import TinyCausalLM

ADAPTER_TARGETS = ("attn.q_proj", "attn.k_proj", "attn.v_proj", "attn.out_proj", "mlp.fc1", "mlp.fc2")


class LowRankAdapter(nn.Module):
    def __init__(self, base: nn.Linear, rank: int, gen: torch.Generator):
        super().__init__()
        if rank < 1:
            raise ValueError(f"adapter rank must be >= 1, got {rank}")
        self.base = base
        self.rank = rank
        dtype = base.weight.dtype
        self.down = nn.Linear(base.in_features, rank, bias=False, dtype=dtype)
        self.up = nn.Linear(rank, base.out_features, bias=False, dtype=dtype)
        with torch.no_grad():
            self.down.weight.normal_(0.0, 1.0 / math.sqrt(base.in_features), generator=gen)
            self.up.weight.zero_()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.base(x) + self.up(self.down(x))


@dataclass
class AdapterSpec:
    """Which LM blocks receive adapters, and at what rank."""

    layer_indices: Tuple[int, ...]
    rank: int
    targets: Tuple[str, ...] = ADAPTER_TARGETS

    @property
    def layer_count(self) -> int:
        return len(self.layer_indices)


def select_trainable_parameters(lm: TinyCausalLM, fraction: float, rank: int) -> AdapterSpec:
    """Mark the last ceil(fraction * L) blocks for rank-`rank` adapters."""
    if not (0.0 < fraction <= 1.0):
        raise ValueError(f"trainable fraction must lie in (0, 1], got {fraction}")
    if rank < 1:
        raise ValueError(f"adapter rank must be >= 1, got {rank}")
    n_layers = lm.n_layers
    n_adapted = math.ceil(fraction * n_layers)
    indices = tuple(range(n_layers - n_adapted, n_layers))
    return AdapterSpec(layer_indices=indices, rank=rank)


def _resolve(block: nn.Module, dotted: str) -> Tuple[nn.Module, str]:
    parts = dotted.split(".")
    parent = block
    for name in parts[:-1]:
        parent = getattr(parent, name)
    return parent, parts[-1]


def attach_adapters(lm: TinyCausalLM, spec: AdapterSpec, seed: int = 0) -> List[LowRankAdapter]:
    """Wrap the selected blocks' linears in place; returns the new adapters."""
    gen = seeded_generator(seed)
    adapters: List[LowRankAdapter] = []
    for idx in spec.layer_indices:
        block = lm.blocks[idx]
        for dotted in spec.targets:
            parent, attr = _resolve(block, dotted)
            base = getattr(parent, attr)
            if isinstance(base, LowRankAdapter):
                raise ValueError(f"block {idx} {dotted} already has an adapter attached")
            adapter = LowRankAdapter(base, spec.rank, gen)
            setattr(parent, attr, adapter)
            adapters.append(adapter)
    return adapters


def named_base_parameters(module: nn.Module) -> Iterator[Tuple[str, nn.Parameter]]:
    """Parameters of the wrapped model under their pre-adapter names.

    Adapter wrappers insert a `.base` level and add `.down`/`.up` factors;
    this iterator strips the former and skips the latter, so base-weight
    digests are stable whether or not adapters are attached.
    """
    for name, param in module.named_parameters():
        parts = name.split(".")
        if "down" in parts or "up" in parts:
            continue
        yield ".".join(p for p in parts if p != "base"), param


def named_adapter_parameters(module: nn.Module) -> Iterator[Tuple[str, nn.Parameter]]:
    for name, param in module.named_parameters():
        parts = name.split(".")
        if "down" in parts or "up" in parts:
            yield name, param


def adapter_state_dict(module: nn.Module) -> Dict[str, torch.Tensor]:
    return {name: param.detach().clone() for name, param in named_adapter_parameters(module)}
