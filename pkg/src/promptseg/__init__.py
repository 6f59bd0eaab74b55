"""Point-promptable 3D lesion segmentation from minimal labelled data."""

from .evaluation import (
    AblationGrid,
    AblationReport,
    AblationRow,
    AblationSetup,
    EvalCase,
    StrategyResult,
    benchmark_strategies,
    dice,
    prompt_variance,
    roi_fraction_scorer,
    run_ablation,
)
from .network import (
    Network,
    NetworkSpec,
    forward,
    forward_batch,
    init_network,
    load_weights,
    save_weights,
)
from .phantom import Phantom, PhantomConfig, generate_phantom, generate_phantom_set
from .search import (
    RunResult,
    SearchConfig,
    SegmentDiagnostics,
    SpiralParams,
    VoteMap,
    compute_vote_map,
    default_spiral,
    joint_score,
    majority_vote,
    plan_trajectory,
    run_search,
    score_crops,
    segment,
    spiral_offset,
    threshold_score,
)
from .serialization import (
    load_mask,
    load_volume,
    rle_decode,
    rle_encode,
    save_mask,
    save_volume,
)
from .training import (
    CropDataset,
    GradCheckReport,
    TrainConfig,
    WeakDataset,
    bce_loss,
    derive_crop_labels,
    gradient_check,
    sample_training_crops,
    train_fsc,
    train_wsc,
)
from .volume import (
    Crop,
    CropSpec,
    Mask,
    Volume,
    crop_center_bounds,
    crop_origin,
    extract_crop,
)

__all__ = [name for name in dir() if not name.startswith("_")]
