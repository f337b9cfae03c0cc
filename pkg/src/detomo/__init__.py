"""Detector tomography toolkit: POVM reconstruction, crosstalk, entanglement."""

from .operators import (
    COMPLETENESS_TOL,
    PSD_TOL,
    DegenerateElementError,
    DimensionMismatchError,
    HermitianOperator,
    LabelConflictError,
    NormalizedElement,
    NumericalFailureError,
    Povm,
    PovmValidation,
    basis_projector,
    born_probabilities,
    ideal_povm,
    normalize,
    partial_trace,
    permute_qubits,
    tensor,
    trace_distance,
    validate_povm,
)
from .tomography import (
    FrequencyTable,
    MleConfig,
    MleDiagnostics,
    PreparationSet,
    log_likelihood,
    mle_reconstruct,
    mub_preparations,
    preparations_from_labels,
)
from .crosstalk import (
    DC_RESOLUTION,
    CrosstalkReport,
    CrosstalkRow,
    FitConfig,
    Partition,
    ProductFit,
    analyze_povm,
    assignment_matrix,
    bipartitions,
    crosstalk_error,
    default_partitions,
    fit_product,
    full_split,
    local_error,
    mitigate_histogram,
    total_error,
)
from .entanglement import (
    PPT_TOL,
    PptReport,
    PptRow,
    PptVerdict,
    classify_bipartitions,
    classify_povm,
    nppt_test,
    partial_transpose,
)
from .simulator import NOISE_KINDS, NoiseSpec, make_noisy_povm, sample_counts
from .io import (
    CROSSTALK_CSV_COLUMNS,
    PPT_CSV_COLUMNS,
    SchemaError,
    config_hash,
    counts_to_tables,
    crosstalk_report_to_csv,
    crosstalk_report_to_dict,
    diagnostics_to_dict,
    file_sha256,
    load_counts,
    load_povm,
    operator_from_dict,
    operator_to_dict,
    povm_from_dict,
    povm_to_dict,
    ppt_report_to_csv,
    ppt_report_to_dict,
    save_counts,
    save_povm,
    validate_counts,
    write_crosstalk_csv,
    write_crosstalk_json,
    write_ppt_csv,
    write_ppt_json,
)

__version__ = "0.1.0"

__all__ = [
    "COMPLETENESS_TOL",
    "CROSSTALK_CSV_COLUMNS",
    "DC_RESOLUTION",
    "NOISE_KINDS",
    "PPT_CSV_COLUMNS",
    "PPT_TOL",
    "PSD_TOL",
    "CrosstalkReport",
    "CrosstalkRow",
    "DegenerateElementError",
    "DimensionMismatchError",
    "FitConfig",
    "FrequencyTable",
    "HermitianOperator",
    "LabelConflictError",
    "MleConfig",
    "MleDiagnostics",
    "NoiseSpec",
    "NormalizedElement",
    "NumericalFailureError",
    "Partition",
    "Povm",
    "PovmValidation",
    "PptReport",
    "PptRow",
    "PptVerdict",
    "PreparationSet",
    "ProductFit",
    "SchemaError",
    "analyze_povm",
    "assignment_matrix",
    "basis_projector",
    "bipartitions",
    "born_probabilities",
    "classify_bipartitions",
    "classify_povm",
    "config_hash",
    "counts_to_tables",
    "crosstalk_error",
    "crosstalk_report_to_csv",
    "crosstalk_report_to_dict",
    "default_partitions",
    "diagnostics_to_dict",
    "file_sha256",
    "fit_product",
    "full_split",
    "ideal_povm",
    "load_counts",
    "load_povm",
    "local_error",
    "log_likelihood",
    "make_noisy_povm",
    "mitigate_histogram",
    "mle_reconstruct",
    "mub_preparations",
    "normalize",
    "nppt_test",
    "operator_from_dict",
    "operator_to_dict",
    "partial_trace",
    "partial_transpose",
    "permute_qubits",
    "povm_from_dict",
    "povm_to_dict",
    "ppt_report_to_csv",
    "ppt_report_to_dict",
    "preparations_from_labels",
    "sample_counts",
    "save_counts",
    "save_povm",
    "tensor",
    "total_error",
    "trace_distance",
    "validate_counts",
    "validate_povm",
    "write_crosstalk_csv",
    "write_crosstalk_json",
    "write_ppt_csv",
    "write_ppt_json",
]
