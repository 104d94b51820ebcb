"""Stage 2: frozen-encoder alignment with ground-truth label injection.

The encoder and classification heads are loaded from the stage-1 checkpoint
and byte-frozen (verified by digest, not just by requires_grad). Prompts are
assembled with the ground-truth labels in place of classifier predictions.
Only the visual projection and the low-rank LM adapters receive gradients;
the loss is next-token cross-entropy restricted to answer-mask positions.

The toy base LM starts from seeded random weights rather than a pretrained
artifact. An optional warmup phase (cfg.base_warmup_steps) trains the base
on a plain next-byte objective over the answer texts *before* the freeze
digests are taken, standing in for the language competence a pretrained
model would arrive with; conditioning is still learned exclusively by the
projection and adapters.
"""

from __future__ import annotations

import math
import os
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import torch

from ..labels import FoulType, Severity
from ..model.adapters import attach_adapters, named_adapter_parameters, select_trainable_parameters
from ..model.encoder import encode_video
from ..model.lm import TinyCausalLM
from ..model.pooling import build_spatiotemporal
from ..model.projection import project_features
from ..model.prompt import assemble_prompt
from ..model.types import PromptSequence, VideoClip
from .checkpoint import (
    CheckpointManifest,
    load_stage1_handles,
    build_lm,
    build_projection,
    module_digest,
    module_tensors,
    save_tensors,
)
from .config import Stage2Config, config_to_dict
from .stage1 import DivergenceError, MissingLabelError, StepRecord


class MaskEmptyError(ValueError):
    """A training sample has no answer tokens to compute a loss on."""


class FrozenViolationError(RuntimeError):
    """A parameter group that must stay frozen changed during training."""


@dataclass(frozen=True)
class Stage2Example:
    clip: VideoClip
    question: str
    answer: str
    gt_foul: FoulType
    gt_severity: Severity


@dataclass
class FreezeReport:
    """Digest evidence that the frozen groups stayed frozen, plus the budget."""

    digests_before: Dict[str, str]
    digests_after: Dict[str, str]
    trainable_count: int        # trainable parameters outside the adapters (the projection)
    total_count: int            # all non-adapter parameters across encoder, heads, LM, projection
    fraction: float             # trainable_count / total_count
    adapter_parameter_count: int
    adapter_layer_count: int
    configured_fraction: float

    def verify(self) -> None:
        for role, before in self.digests_before.items():
            after = self.digests_after.get(role)
            if after != before:
                raise FrozenViolationError(
                    f"{role} changed during stage-2 training: {before} -> {after}"
                )

    def summary_lines(self) -> List[str]:
        lines = [
            f"trainable_parameters={self.trainable_count}",
            f"total_parameters={self.total_count}",
            f"trainable_fraction={self.fraction:.6f}",
            f"configured_trainable_fraction={self.configured_fraction}",
            f"adapter_parameters={self.adapter_parameter_count}",
            f"adapter_layers={self.adapter_layer_count}",
        ]
        for role in sorted(self.digests_before):
            lines.append(f"frozen.{role}.before={self.digests_before[role]}")
            lines.append(f"frozen.{role}.after={self.digests_after[role]}")
        return lines


PromptHook = Callable[[PromptSequence, str], None]


def collate_prompts(
    lm: TinyCausalLM, prompts: Sequence[PromptSequence]
) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Right-pad a batch of prompts into (embeddings, targets, answer mask)."""
    pad = lm.tokenizer.pad_id
    embeds, targets, masks, lengths = [], [], [], []
    for prompt in prompts:
        if not any(prompt.answer_mask):
            raise MaskEmptyError("prompt has no answer tokens (empty answer mask)")
        e = lm.embed_prompt(prompt)
        embeds.append(e)
        targets.append(torch.as_tensor(prompt.target_ids(pad), dtype=torch.long))
        masks.append(torch.tensor(prompt.answer_mask, dtype=torch.bool))
        lengths.append(e.shape[0])
    max_n = max(lengths)
    batch = torch.zeros(len(prompts), max_n, lm.embed_dim, dtype=lm.dtype)
    tgt = torch.full((len(prompts), max_n), pad, dtype=torch.long)
    msk = torch.zeros(len(prompts), max_n, dtype=torch.bool)
    for i, (e, t, m) in enumerate(zip(embeds, targets, masks)):
        batch[i, : e.shape[0]] = e
        tgt[i, : t.shape[0]] = t
        msk[i, : m.shape[0]] = m
    return batch, tgt, msk


def masked_next_token_ce(
    logits: torch.Tensor, targets: torch.Tensor, answer_mask: torch.Tensor
) -> Tuple[torch.Tensor, int]:
    """Mean CE over answer positions only; targets outside the mask are ignored.

    logits at position j predict the token at position j+1, so the loss at an
    answer position p is computed from logits[p-1].
    """
    pred = logits[:, :-1, :].to(torch.float64)
    next_tgt = targets[:, 1:]
    next_msk = answer_mask[:, 1:]
    ce = torch.logsumexp(pred, dim=-1) - pred.gather(-1, next_tgt.unsqueeze(-1)).squeeze(-1)
    n_tokens = int(next_msk.sum())
    if n_tokens == 0:
        raise MaskEmptyError("batch has no answer tokens after the next-token shift")
    loss = (ce * next_msk).sum() / n_tokens
    return loss, n_tokens


def answer_token_loss(lm: TinyCausalLM, prompts: Sequence[PromptSequence]) -> Tuple[torch.Tensor, int]:
    """Mean next-token CE over all answer-mask positions of a batch of prompts."""
    batch, tgt, msk = collate_prompts(lm, prompts)
    logits = lm(batch)
    return masked_next_token_ce(logits, tgt, msk)


def _warmup_base_lm(lm: TinyCausalLM, answers: Sequence[str], cfg: Stage2Config) -> None:
    """Next-byte warmup of the base LM on answer texts only (no labels, no visuals)."""
    tok = lm.tokenizer
    sequences = sorted(set(answers))
    if not sequences:
        return
    rng = random.Random(cfg.seed + 101)
    optimizer = torch.optim.Adam(lm.parameters(), lr=cfg.base_warmup_lr)
    lm.train()
    for _step in range(cfg.base_warmup_steps):
        text = sequences[rng.randrange(len(sequences))]
        ids = tok.encode(text) + [tok.eos_id]
        embeds = lm.embed_ids(ids)
        logits = lm(embeds).to(torch.float64)
        tgt = torch.as_tensor(ids[1:], dtype=torch.long)
        ce = torch.logsumexp(logits[:-1], dim=-1) - logits[:-1].gather(-1, tgt.unsqueeze(-1)).squeeze(-1)
        loss = ce.mean()
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
    lm.eval()


def train_stage2(
    dataset: Sequence[Stage2Example],
    stage1_manifest: CheckpointManifest,
    cfg: Stage2Config,
    out_dir: Optional[Path] = None,
    prompt_hook: Optional[PromptHook] = None,
) -> Tuple[CheckpointManifest, FreezeReport, List[StepRecord]]:
    if not dataset:
        raise ValueError("stage-2 dataset is empty")
    for i, ex in enumerate(dataset):
        if ex.gt_foul is None or ex.gt_severity is None:
            raise MissingLabelError(
                f"triplet for clip {ex.clip.clip_id!r} (index {i}) is missing ground-truth labels"
            )
        if not ex.answer:
            raise MaskEmptyError(f"triplet for clip {ex.clip.clip_id!r} (index {i}) has an empty answer")

    arch = stage1_manifest.arch()
    encoder, heads = load_stage1_handles(stage1_manifest)
    lm = build_lm(arch, seed=cfg.seed)
    projection = build_projection(arch, seed=cfg.seed + 1)

    if cfg.base_warmup_steps > 0:
        _warmup_base_lm(lm, [ex.answer for ex in dataset], cfg)

    frozen_before = {
        "encoder": module_digest(encoder),
        "heads": module_digest(heads),
        "lm_base": module_digest(lm),
    }
    for p in encoder.parameters():
        p.requires_grad_(False)
    for p in heads.parameters():
        p.requires_grad_(False)
    for p in lm.parameters():
        p.requires_grad_(False)

    spec = select_trainable_parameters(lm, cfg.trainable_fraction, cfg.adapter_rank)
    adapters = attach_adapters(lm, spec, seed=cfg.seed + 2)
    trainable = list(projection.parameters())
    adapter_params = [p for _, p in named_adapter_parameters(lm)]
    optimizer = torch.optim.Adam(trainable + adapter_params, lr=cfg.learning_rate)

    # one frozen encoder pass per clip; the projection is applied per step
    feature_cache = {}
    with torch.no_grad():
        for ex in dataset:
            if ex.clip.clip_id not in feature_cache:
                out = encode_video(ex.clip, encoder)
                feature_cache[ex.clip.clip_id] = build_spatiotemporal(out.hidden_states)

    def build_training_prompt(ex: Stage2Example) -> PromptSequence:
        visual = project_features(feature_cache[ex.clip.clip_id], projection, clip_id=ex.clip.clip_id)
        # ground-truth labels are injected here; predictions are only used at inference
        return assemble_prompt(
            ex.question, ex.gt_foul, ex.gt_severity, visual,
            answer=ex.answer, tokenizer=lm.tokenizer,
        )

    order_rng = random.Random(cfg.seed)
    indices = list(range(len(dataset)))
    micro = cfg.micro_batch_size or cfg.batch_size
    history: List[StepRecord] = []
    step = 0
    lm.train()
    projection.train()
    for _epoch in range(cfg.epochs):
        order_rng.shuffle(indices)
        for start in range(0, len(indices), cfg.batch_size):
            batch_idx = indices[start : start + cfg.batch_size]
            prompts = []
            for i in batch_idx:
                prompt = build_training_prompt(dataset[i])
                if prompt_hook is not None:
                    prompt_hook(prompt, dataset[i].clip.clip_id)
                prompts.append(prompt)
            token_counts = [sum(p.answer_mask) for p in prompts]
            batch_tokens = sum(token_counts)
            optimizer.zero_grad()
            loss_value = 0.0
            pos = 0
            while pos < len(prompts):
                sub = prompts[pos : pos + micro]
                sub_loss, sub_tokens = answer_token_loss(lm, sub)
                # token-weighted so accumulation matches the full-batch token mean
                (sub_loss * (sub_tokens / batch_tokens)).backward()
                loss_value += float(sub_loss.detach()) * sub_tokens / batch_tokens
                pos += micro
            if not math.isfinite(loss_value):
                raise DivergenceError(f"stage-2 loss became non-finite at step {step}")
            optimizer.step()
            history.append(StepRecord(step=step, loss=loss_value, foul_loss=0.0, severity_loss=0.0))
            step += 1
    lm.eval()
    projection.eval()

    frozen_after = {
        "encoder": module_digest(encoder),
        "heads": module_digest(heads),
        "lm_base": module_digest(lm),
    }
    adapter_count = sum(p.numel() for p in adapter_params)
    trainable_count = sum(p.numel() for p in trainable)
    total_count = (
        sum(p.numel() for p in encoder.parameters())
        + sum(p.numel() for p in heads.parameters())
        + sum(p.numel() for _, p in module_tensors(lm).items())
        + trainable_count
    )
    report = FreezeReport(
        digests_before=frozen_before,
        digests_after=frozen_after,
        trainable_count=trainable_count,
        total_count=total_count,
        fraction=trainable_count / total_count,
        adapter_parameter_count=adapter_count,
        adapter_layer_count=spec.layer_count,
        configured_fraction=cfg.trainable_fraction,
    )
    report.verify()

    manifest = _save_stage2(
        encoder_ref=stage1_manifest, lm=lm, projection=projection,
        spec_layers=spec.layer_indices, spec_rank=spec.rank,
        cfg=cfg, out_dir=out_dir,
    )
    return manifest, report, history


def _save_stage2(
    encoder_ref: CheckpointManifest,
    lm: TinyCausalLM,
    projection,
    spec_layers,
    spec_rank: int,
    cfg: Stage2Config,
    out_dir: Optional[Path],
) -> CheckpointManifest:
    if out_dir is None:
        raise ValueError("out_dir is required to save a stage-2 checkpoint")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    # stage-1 blobs are referenced in place, not copied
    enc_rel = os.path.relpath(encoder_ref.blob_path("encoder"), out_dir)
    heads_rel = os.path.relpath(encoder_ref.blob_path("heads"), out_dir)

    proj_digest = save_tensors(out_dir / "projection.bin", module_tensors(projection))
    base_digest = save_tensors(out_dir / "lm_base.bin", module_tensors(lm))
    adapter_tensors = {name: p for name, p in named_adapter_parameters(lm)}
    adapter_digest = save_tensors(out_dir / "lm_adapter.bin", adapter_tensors)

    config = dict(encoder_ref.config)
    config.update({f"stage2.{k}": v for k, v in config_to_dict(cfg).items()})
    manifest = CheckpointManifest(
        stage=2,
        weights={
            "encoder": enc_rel,
            "heads": heads_rel,
            "projection": "projection.bin",
            "lm_base": "lm_base.bin",
            "lm_adapter": "lm_adapter.bin",
        },
        digests={
            "encoder": encoder_ref.digests["encoder"],
            "heads": encoder_ref.digests["heads"],
            "projection": proj_digest,
            "lm_base": base_digest,
            "lm_adapter": adapter_digest,
        },
        config=config,
        extra={
            "adapter.layers": ",".join(str(i) for i in spec_layers),
            "adapter.rank": str(spec_rank),
        },
    )
    manifest.save(out_dir)
    return manifest
