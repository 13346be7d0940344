"""Classify CVE/NVD hardware vulnerability records into device categories.

The pipeline: parse NVD feeds into normalized records, keep the ones
naming a hardware product, attach analyst labels, vectorize the text
with TF-IDF, and train one-vs-rest linear SVMs to label later years.
"""

from .cpe import (
    CpeName,
    ConfigExpr,
    Leaf,
    Logical,
    Operator,
    Part,
    LogicalTest,
    collect_cpes,
    format_cpe_formatted,
    format_cpe_uri,
    parse_cpe_formatted,
    parse_cpe_uri,
)
from .corpus import (
    ClassLabel,
    LabeledDataset,
    LabeledExample,
    Taxonomy,
    build_dataset,
    count_by_year_and_class,
    filter_years,
    is_hardware,
    load_labels,
    select_hardware,
)
from .evaluate import build_report, class_metrics, confusion, render_report, weighted_f1
from .experiment import ExperimentSpec, run_experiment, run_sweep
from .features import SparseVector, TfIdfModel, fit, transform
from .nvd import (
    IngestStats,
    VulnerabilityRecord,
    parse_feed_json,
    parse_feed_xml,
    read_feed,
    read_store,
    record_year,
    write_store,
)
from .svm import (
    BinaryProblem,
    LinearModel,
    MulticlassModel,
    TrainParams,
    decision,
    load_model,
    predict,
    save_model,
    train_binary,
    train_ovr,
)

__version__ = "0.1.0"
