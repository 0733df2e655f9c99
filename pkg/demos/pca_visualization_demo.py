"""Walkthrough: PCA projection of token features to RGB images.

Token grids are flattened, projected onto their top three principal axes by
power iteration, normalized to [0, 1], and written as binary PPM images.
Tokens sharing a voxel share a color, so spatial structure in the features
shows up as coherent patches.
"""

import tempfile
from pathlib import Path

import numpy as np

import voxelprobe as vp
from voxelprobe.io_formats import write_ppm
from voxelprobe.synth import voxel_keyed_grid

# Voxel-keyed features over a rendered room make an ideal test pattern:
# the color map is exactly the voxel map.
scene = vp.gen_rgbd_room(vp.RoomConfig(n_views=4, image_hw=(48, 64)))
grid = voxel_keyed_grid(scene, grid_hw=(14, 14), feature_dim=24)

tokens = grid.values.reshape(-1, grid.channels).astype(np.float64)
coords, basis, ratios = vp.pca_project(tokens, 3)
print(f"explained variance ratios: {ratios[0]:.3f} {ratios[1]:.3f} {ratios[2]:.3f}")
print(f"basis rows orthonormal within {np.abs(basis @ basis.T - np.eye(3)).max():.1e}")

lo = coords.min(axis=0)
span = coords.max(axis=0) - lo
rgb = ((coords - lo) / span).reshape(grid.frames, grid.rows, grid.cols, 3)

with tempfile.TemporaryDirectory() as tmp:
    for i in range(grid.frames):
        path = Path(tmp) / f"frame_{i:03d}.ppm"
        write_ppm(path, rgb[i])
    print(f"wrote {grid.frames} PPM images of {grid.rows} x {grid.cols} tokens")

# Sanity: features keyed on the same voxel project to the same color.
first_two = tokens[:2]
if np.array_equal(first_two[0], first_two[1]):
    print("tokens sharing a voxel share a color exactly")
