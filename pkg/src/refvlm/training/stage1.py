"""Stage 1: multi-task fine-tuning of the encoder and classification heads.

The objective is the unweighted sum of the two tasks' cross-entropies. Loss
arithmetic runs in float64 regardless of parameter dtype so that logged
values agree with independent oracles to tight tolerances.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import torch

from ..labels import FoulType, Severity
from ..model.encoder import encode_video
from ..model.pooling import pool_video_level
from ..model.types import VideoClip
from ..validation import NonFiniteError, is_tensor
from .checkpoint import CheckpointManifest, build_stage1_modules, module_tensors, save_tensors
from .config import ArchConfig, Stage1Config, config_to_dict


class MissingLabelError(ValueError):
    pass


class DivergenceError(RuntimeError):
    """Training loss became non-finite."""


@dataclass(frozen=True)
class LabeledClip:
    clip: VideoClip
    foul: FoulType
    severity: Severity


@dataclass
class StepRecord:
    step: int
    loss: float
    foul_loss: float
    severity_loss: float


StepHook = Callable[[int, torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor, float], None]
# args: step, foul_logits (B,8), severity_logits (B,4), foul_targets (B,), severity_targets (B,), loss


def _cross_entropy(logits: torch.Tensor, target: int) -> torch.Tensor:
    """CE of a single logit vector against an integer label, in float64."""
    logits64 = logits.to(torch.float64)
    return torch.logsumexp(logits64, dim=-1) - logits64[..., target]


def multitask_loss(foul_logits, severity_logits, gt_foul: FoulType, gt_severity: Severity) -> float:
    """Summed cross-entropy of both tasks for one sample, no scaling or weighting."""
    if not isinstance(gt_foul, FoulType) or not isinstance(gt_severity, Severity):
        raise MissingLabelError("ground-truth labels must be FoulType and Severity members")
    fl = foul_logits if is_tensor(foul_logits) else torch.as_tensor(foul_logits)
    sl = severity_logits if is_tensor(severity_logits) else torch.as_tensor(severity_logits)
    if not torch.isfinite(fl).all() or not torch.isfinite(sl).all():
        raise NonFiniteError("logits must be finite")
    return float(_cross_entropy(fl, int(gt_foul)) + _cross_entropy(sl, int(gt_severity)))


def _batch_losses(
    foul_logits: torch.Tensor,
    severity_logits: torch.Tensor,
    foul_targets: torch.Tensor,
    severity_targets: torch.Tensor,
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Mean per-task cross-entropies of a batch, computed in float64."""
    fl = foul_logits.to(torch.float64)
    sl = severity_logits.to(torch.float64)
    foul_ce = torch.logsumexp(fl, dim=-1) - fl.gather(-1, foul_targets.unsqueeze(-1)).squeeze(-1)
    sev_ce = torch.logsumexp(sl, dim=-1) - sl.gather(-1, severity_targets.unsqueeze(-1)).squeeze(-1)
    return foul_ce.mean(), sev_ce.mean()


def _forward_batch(encoder, heads, clips: Sequence[VideoClip]):
    feats = []
    for clip in clips:
        out = encode_video(clip, encoder)
        feats.append(pool_video_level(out.frame_features))
    f = torch.stack(feats)
    return heads(f)


def train_stage1(
    dataset: Sequence[LabeledClip],
    cfg: Stage1Config,
    arch: ArchConfig = ArchConfig(),
    out_dir: Optional[Path] = None,
    step_hook: Optional[StepHook] = None,
) -> Tuple[CheckpointManifest, List[StepRecord]]:
    """Fine-tune encoder and heads on summed cross-entropy; returns the manifest.

    Deterministic for a fixed seed and dataset order: initialization, batch
    shuffling, and optimizer state all derive from cfg.seed.
    """
    if not dataset:
        raise ValueError("stage-1 dataset is empty")
    for i, ex in enumerate(dataset):
        if ex.foul is None or ex.severity is None:
            raise MissingLabelError(f"clip {ex.clip.clip_id!r} (index {i}) is missing a ground-truth label")

    encoder, heads = build_stage1_modules(arch, seed=cfg.seed)
    encoder.train()
    heads.train()
    params = list(encoder.parameters()) + list(heads.parameters())
    optimizer = torch.optim.Adam(params, lr=cfg.learning_rate)

    order_rng = random.Random(cfg.seed)
    indices = list(range(len(dataset)))
    micro = cfg.micro_batch_size or cfg.batch_size
    history: List[StepRecord] = []
    step = 0

    for _epoch in range(cfg.epochs):
        order_rng.shuffle(indices)
        for start in range(0, len(indices), cfg.batch_size):
            batch_idx = indices[start : start + cfg.batch_size]
            optimizer.zero_grad()
            batch_n = len(batch_idx)
            foul_parts, sev_parts = [], []
            logit_parts = []
            for mstart in range(0, batch_n, micro):
                sub = batch_idx[mstart : mstart + micro]
                clips = [dataset[i].clip for i in sub]
                foul_t = torch.tensor([int(dataset[i].foul) for i in sub], dtype=torch.long)
                sev_t = torch.tensor([int(dataset[i].severity) for i in sub], dtype=torch.long)
                try:
                    foul_logits, sev_logits = _forward_batch(encoder, heads, clips)
                except NonFiniteError as exc:
                    raise DivergenceError(f"model went non-finite at step {step}: {exc}") from exc
                foul_ce, sev_ce = _batch_losses(foul_logits, sev_logits, foul_t, sev_t)
                # per-micro-batch losses are re-weighted so the accumulated
                # gradient equals the full-batch mean-loss gradient
                micro_loss = (foul_ce + sev_ce) * (len(sub) / batch_n)
                micro_loss.backward()
                foul_parts.append(float(foul_ce.detach()) * len(sub) / batch_n)
                sev_parts.append(float(sev_ce.detach()) * len(sub) / batch_n)
                if step_hook is not None:
                    logit_parts.append((foul_logits.detach(), sev_logits.detach(), foul_t, sev_t))
            foul_loss = sum(foul_parts)
            sev_loss = sum(sev_parts)
            loss = foul_loss + sev_loss
            if not math.isfinite(loss):
                raise DivergenceError(f"training loss became non-finite at step {step}")
            optimizer.step()
            history.append(StepRecord(step=step, loss=loss, foul_loss=foul_loss, severity_loss=sev_loss))
            if step_hook is not None:
                step_hook(
                    step,
                    torch.cat([p[0] for p in logit_parts]),
                    torch.cat([p[1] for p in logit_parts]),
                    torch.cat([p[2] for p in logit_parts]),
                    torch.cat([p[3] for p in logit_parts]),
                    loss,
                )
            step += 1

    encoder.eval()
    heads.eval()
    manifest = _save_stage1(encoder, heads, cfg, arch, out_dir)
    return manifest, history


def _save_stage1(encoder, heads, cfg, arch, out_dir: Optional[Path]) -> CheckpointManifest:
    config = {f"arch.{k}": v for k, v in arch.to_dict().items()}
    config.update({f"stage1.{k}": v for k, v in config_to_dict(cfg).items()})
    if out_dir is None:
        raise ValueError("out_dir is required to save a stage-1 checkpoint")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    enc_digest = save_tensors(out_dir / "encoder.bin", module_tensors(encoder))
    heads_digest = save_tensors(out_dir / "heads.bin", module_tensors(heads))
    manifest = CheckpointManifest(
        stage=1,
        weights={"encoder": "encoder.bin", "heads": "heads.bin"},
        digests={"encoder": enc_digest, "heads": heads_digest},
        config=config,
    )
    manifest.save(out_dir)
    return manifest


def predict_labels(encoder, heads, clips: Sequence[VideoClip]):
    """Argmax predictions for a batch of clips (evaluation path, no grads)."""
    from ..model.heads import classify

    results = []
    with torch.no_grad():
        for clip in clips:
            out = encode_video(clip, encoder)
            f = pool_video_level(out.frame_features)
            results.append(classify(f, heads))
    return results
