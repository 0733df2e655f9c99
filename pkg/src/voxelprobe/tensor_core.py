"""Dense tensor containers and the pooling / normalization / PCA primitives.

Tensors are plain numpy arrays restricted to float32 or float64 with
row-major layout; :func:`validate_tensor` enforces the container contract
(non-empty shape, every extent >= 1). All reductions accumulate in float64
regardless of the storage dtype so that independent oracles can be compared
at tight tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Norms below this are considered degenerate and cannot be normalized.
NORM_EPS = 1e-12

FLOAT_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))


class DegenerateNormError(ValueError):
    """Raised when a vector is too close to zero to carry a direction."""


def validate_tensor(array: np.ndarray) -> np.ndarray:
    """Check the dense-tensor contract and return the array unchanged.

    Requires a float32/float64 array with at least one dimension and every
    extent >= 1 (so the element count is positive and equals the product of
    the extents).
    """
    arr = np.asarray(array)
    if arr.dtype not in FLOAT_DTYPES:
        raise ValueError(f"tensor dtype must be float32 or float64, got {arr.dtype}")
    if arr.ndim < 1:
        raise ValueError("tensor must have at least one dimension")
    if any(d < 1 for d in arr.shape):
        raise ValueError(f"tensor extents must all be >= 1, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class TokenGrid:
    """Per-frame token features on a regular grid, stored as [T, h, w, C].

    The default analysis grid is 14 x 14 (196 tokens per frame); nothing in
    this container enforces that, it is just the shape every pipeline stage
    agrees on.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = validate_tensor(self.values)
        if arr.ndim != 4:
            raise ValueError(f"token grid must be [T, h, w, C], got shape {arr.shape}")

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def rows(self) -> int:
        return self.values.shape[1]

    @property
    def cols(self) -> int:
        return self.values.shape[2]

    @property
    def channels(self) -> int:
        return self.values.shape[3]

    @property
    def tokens_per_frame(self) -> int:
        return self.rows * self.cols

    def flat_tokens(self) -> np.ndarray:
        """All tokens as a (T*h*w, C) matrix, frame-major row-major order."""
        return self.values.reshape(-1, self.values.shape[3])


def pool_windows(in_size: int, out_size: int) -> list[tuple[int, int]]:
    """Half-open [start, stop) window bounds for adaptive average pooling.

    Window i covers input indices [floor(i*in/out), ceil((i+1)*in/out)).
    Computed with exact integer arithmetic so both scoring paths and their
    oracles agree bit for bit.
    """
    if out_size < 1:
        raise ValueError(f"output size must be >= 1, got {out_size}")
    if in_size < out_size:
        raise ValueError(f"cannot pool {in_size} up to {out_size}")
    bounds = []
    for i in range(out_size):
        start = (i * in_size) // out_size
        stop = -((-(i + 1) * in_size) // out_size)  # ceil division
        bounds.append((start, stop))
    return bounds


def adaptive_avg_pool2d(grid: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Adaptively average-pool an H x W (x C) grid to out_h x out_w (x C).

    Output cell (i, j) is the unweighted mean of input rows
    [floor(i*H/out_h), ceil((i+1)*H/out_h)) and columns analogously, per
    channel. Means accumulate in float64; the output keeps the input dtype.
    """
    arr = np.asarray(grid)
    squeeze = arr.ndim == 2
    if squeeze:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ValueError(f"expected H x W or H x W x C input, got shape {arr.shape}")
    h, w, _ = arr.shape
    if h < 1 or w < 1:
        raise ValueError(f"empty input grid {arr.shape}")
    row_b = pool_windows(h, out_h)
    col_b = pool_windows(w, out_w)
    out = np.empty((out_h, out_w, arr.shape[2]), dtype=np.float64)
    for i, (r0, r1) in enumerate(row_b):
        for j, (c0, c1) in enumerate(col_b):
            out[i, j] = arr[r0:r1, c0:c1].mean(axis=(0, 1), dtype=np.float64)
    out = out.astype(arr.dtype, copy=False)
    return out[:, :, 0] if squeeze else out


def anchored_indices(in_count: int, out_count: int) -> np.ndarray:
    """Endpoint-anchored nearest indices mapping out_count slots onto in_count.

    Slot i maps to round(i*(in-1)/(out-1)) with round-half-up; a single
    output slot takes index 0.
    """
    if in_count < 1 or out_count < 1:
        raise ValueError("counts must be >= 1")
    if out_count == 1:
        return np.zeros(1, dtype=np.int64)
    pos = np.arange(out_count, dtype=np.float64) * (in_count - 1) / (out_count - 1)
    return np.floor(pos + 0.5).astype(np.int64)


def resample_temporal(grid: TokenGrid, out_frames: int) -> TokenGrid:
    """Resample a token grid along time with nearest-index selection."""
    idx = anchored_indices(grid.frames, out_frames)
    return TokenGrid(grid.values[idx])


def l2_normalize(vector: np.ndarray) -> np.ndarray:
    """Scale a vector to unit L2 norm.

    Raises :class:`DegenerateNormError` when the norm is below
    :data:`NORM_EPS`; callers decide whether to drop or substitute.
    """
    vec = np.asarray(vector)
    norm = float(np.linalg.norm(vec.astype(np.float64, copy=False)))
    if norm < NORM_EPS:
        raise DegenerateNormError(f"norm {norm!r} below {NORM_EPS}")
    return vec / norm


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity of two vectors, clipped to the closed [-1, 1]."""
    a = np.asarray(u, dtype=np.float64).ravel()
    b = np.asarray(v, dtype=np.float64).ravel()
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na < NORM_EPS or nb < NORM_EPS:
        raise DegenerateNormError("cosine undefined for near-zero vectors")
    return float(np.clip(float(a @ b) / (na * nb), -1.0, 1.0))


def _complete_basis(basis: np.ndarray, row: int) -> np.ndarray:
    """Fill basis row with a unit vector orthogonal to all earlier rows."""
    d = basis.shape[1]
    for axis in range(d):
        cand = np.zeros(d)
        cand[axis] = 1.0
        cand -= basis[:row].T @ (basis[:row] @ cand)
        norm = np.linalg.norm(cand)
        if norm > 1e-6:
            return cand / norm
    raise ValueError("cannot complete orthonormal basis")


def pca_project(
    tokens: np.ndarray, k: int, tol: float = 1e-9, max_iter: int = 1000
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Principal components by power iteration with deflation.

    Args:
        tokens: N x D matrix, N >= 2.
        k: number of components, 1 <= k <= min(N, D).
        tol: per-component convergence tolerance on the iterate.
        max_iter: iteration cap per component.

    Returns:
        (coords, basis, ratios): N x k projected coordinates, k x D basis
        with orthonormal rows, and explained-variance ratios in
        non-increasing order. Components beyond the data rank are flagged
        with a zero ratio and an arbitrary orthonormal completion row.
    """
    x = np.asarray(tokens, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("tokens must be an N x D matrix with N >= 2")
    n, d = x.shape
    if not 1 <= k <= min(n, d):
        raise ValueError(f"k={k} out of range for {n} x {d} input")

    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (n - 1)
    total_var = float(np.trace(cov))

    basis = np.zeros((k, d))
    variances = np.zeros(k)
    residual = cov.copy()
    rng = np.random.default_rng(0)
    floor = max(total_var, 1.0) * 1e-14
    for comp in range(k):
        if float(np.trace(residual)) <= floor:
            basis[comp] = _complete_basis(basis, comp)
            continue
        vec = rng.standard_normal(d)
        vec -= basis[:comp].T @ (basis[:comp] @ vec)
        vec /= np.linalg.norm(vec)
        for _ in range(max_iter):
            nxt = residual @ vec
            nxt -= basis[:comp].T @ (basis[:comp] @ nxt)
            norm = np.linalg.norm(nxt)
            if norm <= floor:
                break
            nxt /= norm
            if min(np.linalg.norm(nxt - vec), np.linalg.norm(nxt + vec)) < tol:
                vec = nxt
                break
            vec = nxt
        lam = float(vec @ residual @ vec)
        if lam <= floor:
            basis[comp] = _complete_basis(basis, comp)
            continue
        basis[comp] = vec
        variances[comp] = lam
        residual = residual - lam * np.outer(vec, vec)

    ratios = variances / total_var if total_var > 0 else np.zeros(k)
    coords = centered @ basis.T
    return coords, basis, ratios
