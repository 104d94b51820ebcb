from .confusion import ConfusionMatrix, EmptyMatrixError, MetricsReport, accuracy, balanced_accuracy
from .extraction import (
    ExtractionResult,
    ExtractorProtocolError,
    ExtractorTransportError,
    extract_labels,
    parse_external_response,
)
from .harness import (
    AgreementReport,
    AlignmentError,
    EvalClip,
    GenerativeEvaluation,
    GenerativeRecord,
    agreement_from_pairs,
    agreement_rate,
    evaluate_classifier,
    evaluate_generative,
)
from .study import (
    DuplicateRatingError,
    InsufficientItemsError,
    OrphanRecordError,
    RatingRecord,
    RatingStore,
    ScoreRangeError,
    SessionStore,
    SourceSummary,
    StudyItem,
    StudyReport,
    StudySession,
    create_study,
    make_rating,
    study_summary,
)
from .tables import (
    ClassificationRow,
    StudyRow,
    classification_rows_from_reports,
    confusion_lines,
    format_classification_table,
    format_study_table,
    study_rows_from_report,
    write_classification_csv,
    write_study_csv,
)

__all__ = [
    "ConfusionMatrix",
    "EmptyMatrixError",
    "MetricsReport",
    "accuracy",
    "balanced_accuracy",
    "ExtractionResult",
    "ExtractorProtocolError",
    "ExtractorTransportError",
    "extract_labels",
    "parse_external_response",
    "AgreementReport",
    "AlignmentError",
    "EvalClip",
    "GenerativeEvaluation",
    "GenerativeRecord",
    "agreement_from_pairs",
    "agreement_rate",
    "evaluate_classifier",
    "evaluate_generative",
    "DuplicateRatingError",
    "InsufficientItemsError",
    "OrphanRecordError",
    "RatingRecord",
    "RatingStore",
    "ScoreRangeError",
    "SessionStore",
    "SourceSummary",
    "StudyItem",
    "StudyReport",
    "StudySession",
    "create_study",
    "make_rating",
    "study_summary",
    "ClassificationRow",
    "StudyRow",
    "classification_rows_from_reports",
    "confusion_lines",
    "format_classification_table",
    "format_study_table",
    "study_rows_from_report",
    "write_classification_csv",
    "write_study_csv",
]
