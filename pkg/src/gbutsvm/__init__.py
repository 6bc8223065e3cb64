"""Granular-ball twin SVM toolkit.

Twin-hyperplane classifiers (plain, with universum data, and trained on
granular balls), the ball generator, a box-constrained QP solver, rank
statistics, and a benchmark harness with a matching command line.
"""

from .bench import (
    BenchConfig,
    FeasibilityReport,
    GridPoint,
    GridSpec,
    RunRecord,
    emit_report,
    grid_points,
    parse_config,
    preflight_balls,
    run_experiment,
)
from .datasets import (
    Dataset,
    FoldPlan,
    SplitSpec,
    accuracy,
    kfold,
    load_csv,
    load_features_csv,
    minmax_scale,
    split_three_way,
)
from .errors import (
    DataFormatError,
    FactorizationError,
    InfeasibleThresholdsError,
    ModelFormatError,
    SolverError,
)
from .estimators import GranularBallUniversumTSVM, TwinSVM, UniversumTwinSVM
from .granular import (
    BallGenConfig,
    BallSet,
    GranularBall,
    delete_unqualified,
    generate_balls,
    read_balls_csv,
    universum_balls_average,
    universum_balls_split,
    write_balls_csv,
)
from .kernels import kernel_ball_radius, rbf_kernel, rbf_kernel_matrix
from .model_io import load_model, save_model
from .models import (
    Hyperparams,
    TrainedModel,
    TrainInputs,
    assemble_dual_negative,
    assemble_dual_positive,
    classify,
    decision_values,
    train_gbutsvm,
    train_tsvm,
    train_utsvm,
    universum_hinge,
)
from .qp import (
    BoxQP,
    GramFactor,
    QPSolution,
    default_ridge,
    dump_box_qp,
    gram_factor,
    gram_solve,
    kkt_residual,
    robust_gram_factor,
    solve_box_qp,
)
from .stats import (
    AccuracyMatrix,
    chi2_sf,
    FriedmanResult,
    KruskalResult,
    StatReport,
    WilcoxonResult,
    WinTieLoss,
    compile_report,
    friedman,
    kruskal_wallis,
    load_reference_matrix,
    report_to_csv,
    report_to_markdown,
    wilcoxon_signed_rank,
    win_tie_loss,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracyMatrix",
    "BallGenConfig",
    "BallSet",
    "BenchConfig",
    "BoxQP",
    "DataFormatError",
    "Dataset",
    "FactorizationError",
    "FeasibilityReport",
    "FoldPlan",
    "FriedmanResult",
    "GramFactor",
    "GranularBall",
    "GranularBallUniversumTSVM",
    "GridPoint",
    "GridSpec",
    "Hyperparams",
    "InfeasibleThresholdsError",
    "KruskalResult",
    "ModelFormatError",
    "QPSolution",
    "RunRecord",
    "SolverError",
    "SplitSpec",
    "StatReport",
    "TrainInputs",
    "TrainedModel",
    "TwinSVM",
    "UniversumTwinSVM",
    "WilcoxonResult",
    "WinTieLoss",
    "accuracy",
    "assemble_dual_negative",
    "assemble_dual_positive",
    "classify",
    "chi2_sf",
    "compile_report",
    "decision_values",
    "default_ridge",
    "delete_unqualified",
    "dump_box_qp",
    "emit_report",
    "friedman",
    "generate_balls",
    "gram_factor",
    "gram_solve",
    "grid_points",
    "kernel_ball_radius",
    "kfold",
    "kkt_residual",
    "kruskal_wallis",
    "load_csv",
    "load_features_csv",
    "load_model",
    "load_reference_matrix",
    "minmax_scale",
    "parse_config",
    "preflight_balls",
    "rbf_kernel",
    "rbf_kernel_matrix",
    "read_balls_csv",
    "report_to_csv",
    "report_to_markdown",
    "robust_gram_factor",
    "run_experiment",
    "save_model",
    "solve_box_qp",
    "split_three_way",
    "train_gbutsvm",
    "train_tsvm",
    "train_utsvm",
    "universum_balls_average",
    "universum_balls_split",
    "universum_hinge",
    "wilcoxon_signed_rank",
    "win_tie_loss",
    "write_balls_csv",
]
