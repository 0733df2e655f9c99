"""Walkthrough: leaderboard aggregation on a published backbone-swap study.

Normalizes nine benchmark metrics per encoder group (baseline included in
each group's extrema), averages them into one percentage, ranks a sparse
leaderboard with fractional ties, and correlates the consistency scores
against the overall scores.
"""

import numpy as np

from voxelprobe.metrics import MetricTable, avg_rank, nos, pearson

METRICS = ("Acc@0.25", "Acc@0.5", "F1@0.25", "F1@0.5", "C@0.5",
           "B-4@0.5", "C", "EM", "SQA-EM")

ROWS = {
    "Baseline":    (58.1, 51.7, 58.0, 52.7, 83.8, 41.3, 102.1, 30.1, 58.6),
    "V-JEPA v2":   (61.7, 54.9, 60.2, 54.7, 79.8, 41.5, 106.6, 30.7, 61.2),
    "DINOv3":      (61.1, 54.2, 59.6, 54.1, 80.6, 41.1, 105.9, 30.5, 61.9),
    "VGGT":        (62.3, 55.3, 60.1, 54.5, 82.8, 42.0, 105.8, 30.5, 61.4),
    "SVD":         (61.3, 54.8, 59.9, 54.6, 80.9, 41.9, 105.1, 30.1, 61.3),
    "SD2.1":       (62.1, 55.1, 60.3, 54.9, 83.0, 42.0, 106.8, 30.4, 60.6),
    "Vmem":        (62.5, 55.7, 60.2, 54.7, 82.0, 41.9, 106.0, 30.0, 61.4),
    "SEVA":        (62.3, 55.5, 60.1, 54.5, 82.5, 42.1, 107.6, 30.8, 60.9),
    "VAE":         (62.0, 55.1, 60.3, 54.8, 83.7, 42.3, 106.0, 30.5, 61.4),
    "Wan2.1-VACE": (62.2, 55.3, 60.3, 55.0, 82.8, 42.7, 107.8, 31.0, 61.8),
    "Wan2.1-T2V":  (63.2, 56.2, 60.8, 55.1, 83.2, 42.2, 106.3, 30.4, 61.3),
}
GROUPS = {
    "V-JEPA v2": "discriminative", "DINOv3": "discriminative", "VGGT": "discriminative",
    "SVD": "generative", "SD2.1": "generative", "Vmem": "generative",
    "SEVA": "generative", "VAE": "generative",
    "Wan2.1-VACE": "generative", "Wan2.1-T2V": "generative",
}

methods = tuple(ROWS)
table = MetricTable(
    methods, METRICS,
    np.array([ROWS[m] for m in methods]),
    np.zeros((len(methods), 9), dtype=bool),
    GROUPS, "Baseline",
)

result = nos(table)
print("normalized overall scores (baseline anchors each group):")
for group in ("discriminative", "generative"):
    print(f"  [{group}]  baseline {result.baseline_scores[group]:5.2f}")
    members = [m for m, g in GROUPS.items() if g == group]
    for m in sorted(members, key=lambda m: -result.scores[m]):
        print(f"    {m:<12} {result.scores[m]:6.2f}")

ranks = avg_rank(table)
best = min(ranks, key=ranks.get)
print(f"\naverage ranks over the nine metrics: best = {best} ({ranks[best]:.2f})")

# Consistency score vs overall score for the generative encoders: a clear
# positive relationship.
pairs = [
    (17.95, 52.06), (23.83, 70.57), (66.74, 63.75), (76.15, 75.28),
    (79.69, 77.29), (97.04, 89.32), (96.88, 82.41),
]
print(f"consistency vs overall score: pearson r = {pearson(pairs):.3f}")
