"""Low-rank self-expression of subspace-valued data, with spectral
clustering on the learned coefficients.

Image sets and video clips are represented as points on the Grassmann
manifold (one orthonormal basis per group), related through log-map
tangent vectors, expressed through each other by a nuclear-norm-
regularized solver, and clustered spectrally.
"""

from .clustering import (
    Affinity,
    ClusterAssignment,
    accuracy,
    affinity_from_w,
    contingency,
    kmeans,
    spectral_cluster,
    spectral_embedding,
)
from .errors import (
    BaseMismatch,
    DataIOError,
    DegenerateAffinity,
    FormatError,
    GLRRError,
    LengthMismatch,
    LogUndefined,
    MissingLabels,
    NotOrthonormal,
    NumericalError,
    NumericalFailure,
    RankDeficient,
    ShapeError,
    StageFailure,
    ValidationError,
)
from .gram import GramTensor, build_gram, eta_b
from .manifold import (
    GrassmannPoint,
    TangentVector,
    distance,
    exp_map,
    from_samples,
    inner,
    log_map,
    norm,
    principal_angles,
    random_point,
    random_tangent,
    validate_stiefel,
)
from .pipeline import (
    ImageSetGroup,
    PipelineConfig,
    SyntheticSpec,
    load_dataset,
    mnist_subgroups,
    points_from_groups,
    run_pipeline,
    synth_grassmann,
    synth_groups,
    write_groups,
)
from .solver import (
    CoefficientMatrix,
    IterationRecord,
    SolverConfig,
    SolverState,
    gradient_f,
    objective,
    solve,
    step,
    svt,
    write_history_csv,
)

__version__ = "0.1.0"

__all__ = [
    "Affinity",
    "BaseMismatch",
    "ClusterAssignment",
    "CoefficientMatrix",
    "DataIOError",
    "DegenerateAffinity",
    "FormatError",
    "GLRRError",
    "GramTensor",
    "GrassmannPoint",
    "ImageSetGroup",
    "IterationRecord",
    "LengthMismatch",
    "LogUndefined",
    "MissingLabels",
    "NotOrthonormal",
    "NumericalError",
    "NumericalFailure",
    "PipelineConfig",
    "RankDeficient",
    "ShapeError",
    "SolverConfig",
    "SolverState",
    "StageFailure",
    "SyntheticSpec",
    "TangentVector",
    "ValidationError",
    "accuracy",
    "affinity_from_w",
    "build_gram",
    "contingency",
    "distance",
    "eta_b",
    "exp_map",
    "from_samples",
    "gradient_f",
    "inner",
    "kmeans",
    "load_dataset",
    "log_map",
    "mnist_subgroups",
    "norm",
    "objective",
    "points_from_groups",
    "principal_angles",
    "random_point",
    "random_tangent",
    "run_pipeline",
    "solve",
    "spectral_cluster",
    "spectral_embedding",
    "step",
    "svt",
    "synth_grassmann",
    "synth_groups",
    "validate_stiefel",
    "write_groups",
    "write_history_csv",
]
