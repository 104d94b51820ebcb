"""Human-readable report layouts and delimited exports.

Two fixed text layouts: the multi-task classification table (accuracy and
balanced accuracy per task, "/" for unavailable cells) and the rating-study
table (mean plus the five-bucket percentage distribution per source).
Classification metrics are rendered with 2 decimals; study means with 1
decimal; distributions as integer percentages.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from .confusion import MetricsReport
from .study import StudyReport


@dataclass(frozen=True)
class ClassificationRow:
    name: str
    pooling: str
    type_accuracy: Optional[float]
    type_balanced_accuracy: Optional[float]
    severity_accuracy: Optional[float]
    severity_balanced_accuracy: Optional[float]


def _metric(value: Optional[float]) -> str:
    return "/" if value is None else f"{value:.2f}"


def format_classification_table(rows: Sequence[ClassificationRow]) -> str:
    header1 = f"{'':34}{'Type of Foul':16}{'Offence Severity':16}"
    header2 = f"{'Feat. extr.':20}{'Pooling':14}{'Acc.':8}{'BA.':8}{'Acc.':8}{'BA.':8}"
    lines = [header1.rstrip(), header2.rstrip()]
    for row in rows:
        lines.append(
            f"{row.name:20}{row.pooling:14}"
            f"{_metric(row.type_accuracy):8}{_metric(row.type_balanced_accuracy):8}"
            f"{_metric(row.severity_accuracy):8}{_metric(row.severity_balanced_accuracy):8}".rstrip()
        )
    return "\n".join(lines) + "\n"


def classification_rows_from_reports(
    name: str, pooling: str, foul: Optional[MetricsReport], severity: Optional[MetricsReport]
) -> ClassificationRow:
    return ClassificationRow(
        name=name,
        pooling=pooling,
        type_accuracy=foul.accuracy if foul else None,
        type_balanced_accuracy=foul.balanced_accuracy if foul else None,
        severity_accuracy=severity.accuracy if severity else None,
        severity_balanced_accuracy=severity.balanced_accuracy if severity else None,
    )


@dataclass(frozen=True)
class StudyRow:
    label: str
    mean: float
    distribution_pct: Tuple[int, int, int, int, int]


def format_study_table(rows: Sequence[StudyRow], footer: Optional[str] = None) -> str:
    lines = [f"{'':12}{'Mean':8}{'1':6}{'2':6}{'3':6}{'4':6}{'5':6}".rstrip()]
    for row in rows:
        pct = "".join(f"{p}%".ljust(6) for p in row.distribution_pct)
        lines.append(f"{row.label:12}{row.mean:<8.1f}{pct}".rstrip())
    if footer:
        lines.append(footer)
    return "\n".join(lines) + "\n"


def study_rows_from_report(
    report: StudyReport, labels: Optional[dict] = None
) -> List[StudyRow]:
    labels = labels or {"human": "Referees", "model": "Model"}
    rows = []
    for src in ("human", "model"):
        summary = report.per_source.get(src)
        if summary is None:
            continue
        rows.append(StudyRow(label=labels[src], mean=summary.mean, distribution_pct=summary.distribution_pct))
    return rows


def write_classification_csv(rows: Sequence[ClassificationRow], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "pooling", "type_acc", "type_ba", "severity_acc", "severity_ba"])
        for row in rows:
            writer.writerow([
                row.name, row.pooling,
                _metric(row.type_accuracy), _metric(row.type_balanced_accuracy),
                _metric(row.severity_accuracy), _metric(row.severity_balanced_accuracy),
            ])
    return path


def write_study_csv(rows: Sequence[StudyRow], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "mean", "pct_1", "pct_2", "pct_3", "pct_4", "pct_5"])
        for row in rows:
            writer.writerow([row.label, f"{row.mean:.1f}", *row.distribution_pct])
    return path


def confusion_lines(report: MetricsReport) -> List[str]:
    """Plain-text confusion matrix block for run reports."""
    cm = report.confusion
    width = max(len(n) for n in cm.class_names) + 2
    lines = [f"task={report.task} accuracy={report.accuracy:.2f} balanced_accuracy={report.balanced_accuracy:.2f}"]
    lines.append(f"n_evaluated={report.n_evaluated} n_failures={report.n_extraction_failures}")
    header = " " * width + "".join(f"{i:>6}" for i in range(len(cm.class_names)))
    lines.append(header)
    for i, name in enumerate(cm.class_names):
        row = "".join(f"{int(c):>6}" for c in cm.counts[i])
        lines.append(f"{name:<{width}}{row}")
    return lines
