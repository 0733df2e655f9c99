"""voxelprobe: 3D-awareness analysis tools for dense feature backbones.

The package measures how consistently a feature extractor represents the
same physical 3D point across camera views (a pair-weighted cosine score
over a shared voxel grid), aggregates leaderboard tables (group-normalized
overall scores, average ranks, correlation), implements the linear noising
path used to activate generative features, and provides a token-level gated
fusion whose hand-derived gradients are verified by finite differences.
Synthetic scenes with closed-form geometry serve as oracles throughout.
"""

__version__ = "0.1.0"

from .correspondence import (
    DatasetScore,
    Prototype,
    SceneScore,
    TokenCloud,
    VoxelTable,
    build_token_cloud,
    dataset_score,
    scene_score,
    scene_score_bruteforce,
    voxelize,
)
from .fusion import (
    FusionIO,
    FusionParams,
    LayerNormParams,
    finite_diff_check,
    gate_backward,
    gate_forward,
    layer_norm,
    mlp_project,
)
from .geometry import (
    Intrinsics,
    PosedFrame,
    PosedScene,
    pool_world_coords,
    project_world,
    sample_frames,
    unproject_depth,
)
from .io_formats import load_scene, read_tensor, write_scene_manifest, write_tensor
from .metrics import MetricTable, NosResult, avg_rank, nos, pearson
from .noising import LatentBatch, TimestepSchedule, noisy_latent, timestep_to_t
from .pos_enc import PosEncConfig, sinusoidal_3d
from .synth import RoomConfig, TokenSceneConfig, gen_rgbd_room, gen_token_scene
from .tensor_core import (
    DegenerateNormError,
    TokenGrid,
    adaptive_avg_pool2d,
    cosine,
    l2_normalize,
    pca_project,
    resample_temporal,
)

__all__ = [
    "DatasetScore",
    "DegenerateNormError",
    "FusionIO",
    "FusionParams",
    "Intrinsics",
    "LatentBatch",
    "LayerNormParams",
    "MetricTable",
    "NosResult",
    "PosEncConfig",
    "PosedFrame",
    "PosedScene",
    "Prototype",
    "RoomConfig",
    "SceneScore",
    "TimestepSchedule",
    "TokenCloud",
    "TokenGrid",
    "TokenSceneConfig",
    "VoxelTable",
    "adaptive_avg_pool2d",
    "avg_rank",
    "build_token_cloud",
    "cosine",
    "dataset_score",
    "finite_diff_check",
    "gate_backward",
    "gate_forward",
    "gen_rgbd_room",
    "gen_token_scene",
    "l2_normalize",
    "layer_norm",
    "load_scene",
    "mlp_project",
    "noisy_latent",
    "nos",
    "pca_project",
    "pearson",
    "pool_world_coords",
    "project_world",
    "read_tensor",
    "resample_temporal",
    "sample_frames",
    "scene_score",
    "scene_score_bruteforce",
    "sinusoidal_3d",
    "timestep_to_t",
    "unproject_depth",
    "voxelize",
    "write_scene_manifest",
    "write_tensor",
]
