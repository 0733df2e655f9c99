"""Walkthrough: the multi-view correspondence score on synthetic token scenes.

Builds a scene where every token's feature is a deterministic function of
its voxel, confirms the score saturates at 1, then corrupts the features
and watches the score fall. Both scoring paths (hash-grouped and the
sort-and-scan reference) are shown agreeing.
"""

import voxelprobe as vp

# A scene: 8 views, 300 tokens each, sampled from 500 shared surface points.
cfg = vp.TokenSceneConfig(n_views=8, tokens_per_view=300, feature_dim=16,
                          seed=0, n_points=500)
cloud = vp.gen_token_scene(cfg)
print(f"scene: {len(cloud)} tokens across {cfg.n_views} views")

table = vp.voxelize(cloud, voxel_size=0.1)
print(f"voxels occupied: {len(table.entries)}")

result = vp.scene_score(table)
print(f"clean score: {result.score:.9f} over {result.pair_count} cross-view pairs")
print(f"multi-view voxels: {result.multiview_voxel_count} of {result.voxel_count}")

# The independent reference path agrees to machine precision.
reference = vp.scene_score_bruteforce(cloud, 0.1)
print(f"reference path: {reference.score:.9f} "
      f"(|diff| = {abs(result.score - reference.score):.2e})")

# Corrupt the features with growing noise; consistency decays monotonically.
print("\nsigma   score")
for sigma in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
    noisy = vp.gen_token_scene(
        vp.TokenSceneConfig(n_views=8, tokens_per_view=300, feature_dim=16,
                            sigma=sigma, seed=0, n_points=500)
    )
    s = vp.scene_score(vp.voxelize(noisy, 0.1))
    print(f"{sigma:5.1f}   {s.score:.4f}")

# Dataset aggregation: one score per scene, NaN scenes excluded.
scores = []
for seed in range(5):
    scene_cfg = vp.TokenSceneConfig(n_views=6, tokens_per_view=200, sigma=0.3,
                                    seed=seed, n_points=400)
    scores.append(vp.scene_score(vp.voxelize(vp.gen_token_scene(scene_cfg), 0.1)))
single_view = vp.gen_token_scene(vp.TokenSceneConfig(n_views=1, tokens_per_view=64, seed=9))
scores.append(vp.scene_score(vp.voxelize(single_view, 0.1)))  # NaN, excluded

summary = vp.dataset_score(scores)
print(f"\ndataset: mean {summary.mean:.4f} +/- {summary.std:.4f} "
      f"({summary.valid_count} valid, {summary.nan_count} NaN)")
