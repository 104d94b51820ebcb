"""Evaluation harnesses: classifier metrics, generative metrics, agreement."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

from ..labels import FOUL_TYPE_NAMES, SEVERITY_NAMES, FoulType, Severity
from ..model.pipeline import InferencePipeline, PromptHook
from ..model.types import ClassifierBundle, VideoClip
from .confusion import ConfusionMatrix, MetricsReport, accuracy, balanced_accuracy
from .extraction import ExternalClient, extract_labels

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalClip:
    clip: VideoClip
    gt_foul: FoulType
    gt_severity: Severity


class AlignmentError(ValueError):
    pass


def evaluate_classifier(
    classify_fn: Callable[[VideoClip], ClassifierBundle],
    clips: Sequence[EvalClip],
) -> Tuple[MetricsReport, MetricsReport]:
    """Run the classifier over labelled clips and fill both confusion matrices.

    Inference errors are recorded as failures, not raised; failed clips are
    excluded from both matrices and counted in n_extraction_failures.
    """
    foul_cm = ConfusionMatrix(FOUL_TYPE_NAMES, [[0] * 8 for _ in range(8)])
    sev_cm = ConfusionMatrix(SEVERITY_NAMES, [[0] * 4 for _ in range(4)])
    failures = 0
    for ec in clips:
        try:
            bundle = classify_fn(ec.clip)
        except Exception:
            logger.exception("classification failed for clip %s", ec.clip.clip_id)
            failures += 1
            continue
        foul_cm.add(int(ec.gt_foul), int(bundle.predicted_foul))
        sev_cm.add(int(ec.gt_severity), int(bundle.predicted_severity))
    n = foul_cm.total
    foul_report = MetricsReport(
        task="foul_type", accuracy=accuracy(foul_cm), balanced_accuracy=balanced_accuracy(foul_cm),
        confusion=foul_cm, n_evaluated=n, n_extraction_failures=failures,
    )
    sev_report = MetricsReport(
        task="severity", accuracy=accuracy(sev_cm), balanced_accuracy=balanced_accuracy(sev_cm),
        confusion=sev_cm, n_evaluated=n, n_extraction_failures=failures,
    )
    return foul_report, sev_report


@dataclass
class GenerativeRecord:
    clip_id: str
    answer: str
    extracted_severity: Optional[Severity]
    injected_severity: Optional[Severity]  # the prediction put into the prompt
    gt_severity: Severity
    error: Optional[str] = None


@dataclass
class GenerativeEvaluation:
    report: MetricsReport
    records: List[GenerativeRecord] = field(default_factory=list)
    foul_type_coverage: float = 0.0  # fraction of answers naming an extractable foul type


def evaluate_generative(
    pipeline: InferencePipeline,
    clips: Sequence[EvalClip],
    question: str = "What card would you give? Why?",
    max_new_tokens: int = 64,
    extraction_method: str = "rule_based",
    extraction_client: Optional[ExternalClient] = None,
    prompt_hook: Optional[PromptHook] = None,
) -> GenerativeEvaluation:
    """Generate an answer per clip, extract the severity, and score against GT.

    Extraction failures (no severity found) are excluded from the accuracy
    denominator and reported separately; both denominators live on the
    returned MetricsReport (n_evaluated and n_extraction_failures).
    """
    records: List[GenerativeRecord] = []
    gt_idx: List[int] = []
    pred_idx: List[int] = []
    failures = 0
    type_hits = 0
    for ec in clips:
        try:
            result = pipeline.infer(
                ec.clip, question, max_new_tokens=max_new_tokens, prompt_hook=prompt_hook
            )
        except Exception as exc:
            logger.exception("generation failed for clip %s", ec.clip.clip_id)
            failures += 1
            records.append(GenerativeRecord(
                clip_id=ec.clip.clip_id, answer="", extracted_severity=None,
                injected_severity=None, gt_severity=ec.gt_severity, error=str(exc),
            ))
            continue
        extracted = None
        if result.answer.strip():
            extraction = extract_labels(result.answer, method=extraction_method, client=extraction_client)
            extracted = extraction.severity
            if extraction.foul_type is not None:
                type_hits += 1
        records.append(GenerativeRecord(
            clip_id=ec.clip.clip_id, answer=result.answer, extracted_severity=extracted,
            injected_severity=result.predicted_severity, gt_severity=ec.gt_severity,
        ))
        if extracted is None:
            failures += 1
        else:
            gt_idx.append(int(ec.gt_severity))
            pred_idx.append(int(extracted))

    cm = ConfusionMatrix.from_pairs(SEVERITY_NAMES, gt_idx, pred_idx)
    if cm.total == 0:
        logger.warning("no answers yielded an extractable severity; accuracy denominator is 0")
        report = MetricsReport(
            task="severity", accuracy=0.0, balanced_accuracy=0.0, confusion=cm,
            n_evaluated=0, n_extraction_failures=failures,
        )
    else:
        report = MetricsReport(
            task="severity", accuracy=accuracy(cm), balanced_accuracy=balanced_accuracy(cm),
            confusion=cm, n_evaluated=cm.total, n_extraction_failures=failures,
        )
    coverage = type_hits / len(clips) if clips else 0.0
    return GenerativeEvaluation(report=report, records=records, foul_type_coverage=coverage)


@dataclass
class AgreementReport:
    """How often the generated text's severity echoes the injected prediction."""

    n_pairs: int                  # clips attempted
    n_extracted: int              # clips with an extractable severity
    n_agree: int
    rate: float                   # n_agree / n_extracted
    disagreements: List[Tuple[str, str, str]] = field(default_factory=list)
    # (clip_id, injected severity name, extracted severity name)


def agreement_rate(records: Sequence[GenerativeRecord]) -> AgreementReport:
    """Fraction of extractable clips where the extracted severity equals the injected one."""
    seen = set()
    n_extracted = 0
    n_agree = 0
    disagreements = []
    for rec in records:
        if rec.clip_id in seen:
            raise AlignmentError(f"duplicate clip id in agreement input: {rec.clip_id!r}")
        seen.add(rec.clip_id)
        if rec.extracted_severity is None:
            continue
        n_extracted += 1
        if rec.extracted_severity == rec.injected_severity:
            n_agree += 1
        else:
            disagreements.append(
                (rec.clip_id, rec.injected_severity.display, rec.extracted_severity.display)
            )
    rate = n_agree / n_extracted if n_extracted else 0.0
    return AgreementReport(
        n_pairs=len(records), n_extracted=n_extracted, n_agree=n_agree,
        rate=rate, disagreements=disagreements,
    )


def agreement_from_pairs(
    extracted: Sequence[Tuple[str, Optional[Severity]]],
    injected: Sequence[Tuple[str, Severity]],
) -> AgreementReport:
    """Agreement over two clip-id-aligned sequences; raises on misalignment."""
    if len(extracted) != len(injected):
        raise AlignmentError(f"length mismatch: {len(extracted)} extracted vs {len(injected)} injected")
    records = []
    for (cid_e, sev_e), (cid_i, sev_i) in zip(extracted, injected):
        if cid_e != cid_i:
            raise AlignmentError(f"clip id mismatch: {cid_e!r} vs {cid_i!r}")
        records.append(GenerativeRecord(
            clip_id=cid_e, answer="", extracted_severity=sev_e,
            injected_severity=sev_i, gt_severity=sev_i,
        ))
    return agreement_rate(records)
