"""Token-level adaptive gated fusion with hand-derived, verified gradients.

Two projected token streams of equal width D are combined per token i:

    g_i = sigmoid(w . concat(LN(x_gen_i), LN(x_sem_i)) + b)
    y_i = (1 - g_i) * x_gen_i + g_i * x_sem_i

The gate reads layer-normalized copies (shift-invariant shape information)
while the convex combination blends the raw streams. The combination is
evaluated anchored at the nearer endpoint, ``a + g*(b - a)`` or its mirror,
so equal inputs are a bit-exact fixed point and outputs stay inside the
per-coordinate hull of the inputs.

:func:`gate_backward` is the reverse-mode gradient of sum(upstream * y)
through the combination, the sigmoid, the concatenation, and both layer
norms (including their mean/variance terms); :func:`finite_diff_check`
verifies it against central differences, which is the module's acceptance
gate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf

DEFAULT_LN_EPS = 1e-5


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def gelu(x: np.ndarray) -> np.ndarray:
    """Exact (erf-based) GELU."""
    x = np.asarray(x, dtype=np.float64)
    return 0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))


@dataclass(frozen=True)
class AffineLayer:
    """One affine map y = x @ weight.T + bias with weight (out, in)."""

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weight, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or b.shape != (w.shape[0],):
            raise ValueError(f"inconsistent affine dims {w.shape} / {b.shape}")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)


@dataclass(frozen=True)
class LayerNormParams:
    """Per-feature gain and bias of one layer norm."""

    gain: np.ndarray
    bias: np.ndarray

    def __post_init__(self) -> None:
        gain = np.asarray(self.gain, dtype=np.float64)
        bias = np.asarray(self.bias, dtype=np.float64)
        if gain.ndim != 1 or gain.shape != bias.shape:
            raise ValueError("gain and bias must be equal-length vectors")
        object.__setattr__(self, "gain", gain)
        object.__setattr__(self, "bias", bias)

    @classmethod
    def identity(cls, dim: int) -> "LayerNormParams":
        return cls(np.ones(dim), np.zeros(dim))


@dataclass(frozen=True)
class FusionParams:
    """Projector stacks, layer-norm affines, and the scalar token gate."""

    ln_gen: LayerNormParams
    ln_sem: LayerNormParams
    gate_w: np.ndarray  # (2 * D,)
    gate_b: float
    ln_eps: float = DEFAULT_LN_EPS
    proj_gen: tuple[AffineLayer, ...] = ()
    proj_sem: tuple[AffineLayer, ...] = ()

    def __post_init__(self) -> None:
        d = self.ln_gen.gain.shape[0]
        if self.ln_sem.gain.shape[0] != d:
            raise ValueError("both layer norms must share the fused width")
        w = np.asarray(self.gate_w, dtype=np.float64)
        if w.shape != (2 * d,):
            raise ValueError(f"gate_w must have length {2 * d}, got {w.shape}")
        if not self.ln_eps > 0:
            raise ValueError("ln_eps must be positive")
        object.__setattr__(self, "gate_w", w)
        object.__setattr__(self, "gate_b", float(self.gate_b))
        object.__setattr__(self, "proj_gen", tuple(self.proj_gen))
        object.__setattr__(self, "proj_sem", tuple(self.proj_sem))

    @property
    def dim(self) -> int:
        return self.ln_gen.gain.shape[0]


@dataclass(frozen=True)
class FusionIO:
    """Forward record: both input streams, per-token gates, fused output."""

    f_gen: np.ndarray  # (T, N, D)
    f_sem: np.ndarray  # (T, N, D)
    gates: np.ndarray  # (T, N), strictly inside (0, 1)
    fused: np.ndarray  # (T, N, D), inside the per-coordinate input hull


@dataclass(frozen=True)
class FusionGrads:
    """Reverse-mode gradients for everything the gate path touches."""

    d_f_gen: np.ndarray
    d_f_sem: np.ndarray
    d_ln_gen: LayerNormParams
    d_ln_sem: LayerNormParams
    d_gate_w: np.ndarray
    d_gate_b: float


def make_affine_stack(
    d_in: int,
    d_out: int,
    depth: int = 2,
    hidden: int | None = None,
    seed: int = 0,
) -> tuple[AffineLayer, ...]:
    """Small-uniform initialized projector stack (for demo fitting only)."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    hidden = d_out if hidden is None else hidden
    widths = [d_in] + [hidden] * (depth - 1) + [d_out]
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        layers.append(
            AffineLayer(
                rng.uniform(-bound, bound, size=(fan_out, fan_in)),
                rng.uniform(-bound, bound, size=fan_out),
            )
        )
    return tuple(layers)


def mlp_project(tokens: np.ndarray, stack: tuple[AffineLayer, ...]) -> np.ndarray:
    """Apply (affine -> GELU) repeatedly with a final affine-only layer."""
    if not stack:
        raise ValueError("projector stack must have at least one layer")
    h = np.asarray(tokens, dtype=np.float64)
    if h.shape[-1] != stack[0].weight.shape[1]:
        raise ValueError(
            f"input width {h.shape[-1]} does not match projector "
            f"input {stack[0].weight.shape[1]}"
        )
    for layer in stack[:-1]:
        h = gelu(h @ layer.weight.T + layer.bias)
    last = stack[-1]
    return h @ last.weight.T + last.bias


def layer_norm(
    x: np.ndarray, gain: np.ndarray, bias: np.ndarray, eps: float = DEFAULT_LN_EPS
) -> np.ndarray:
    """Normalize the last axis to zero mean / unit variance (divisor D)."""
    x = np.asarray(x, dtype=np.float64)
    mu = x.mean(axis=-1, keepdims=True)
    var = np.mean((x - mu) ** 2, axis=-1, keepdims=True)
    return (x - mu) / np.sqrt(var + eps) * gain + bias


def _ln_internals(x: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    mu = x.mean(axis=-1, keepdims=True)
    var = np.mean((x - mu) ** 2, axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    return (x - mu) * inv, inv


def gate_forward(
    f_gen: np.ndarray, f_sem: np.ndarray, params: FusionParams
) -> FusionIO:
    """Compute per-token gates and the convex fusion of the two streams."""
    a_in = np.asarray(f_gen, dtype=np.float64)
    b_in = np.asarray(f_sem, dtype=np.float64)
    if a_in.shape != b_in.shape:
        raise ValueError(f"stream shapes differ: {a_in.shape} vs {b_in.shape}")
    d = params.dim
    if a_in.shape[-1] != d:
        raise ValueError(f"stream width {a_in.shape[-1]} does not match params ({d})")

    xh_g, _ = _ln_internals(a_in, params.ln_eps)
    xh_s, _ = _ln_internals(b_in, params.ln_eps)
    ln_g = xh_g * params.ln_gen.gain + params.ln_gen.bias
    ln_s = xh_s * params.ln_sem.gain + params.ln_sem.bias

    z = (
        np.einsum("...d,d->...", ln_g, params.gate_w[:d])
        + np.einsum("...d,d->...", ln_s, params.gate_w[d:])
        + params.gate_b
    )
    g = sigmoid(z)

    delta = b_in - a_in
    ge = g[..., None]
    # Anchor at the nearer endpoint: equal inputs fuse to themselves exactly
    # and the output cannot leave the per-coordinate hull.
    fused = np.where(ge <= 0.5, a_in + ge * delta, b_in - (1.0 - ge) * delta)
    return FusionIO(a_in, b_in, g, fused)


def gate_backward(
    io: FusionIO, upstream: np.ndarray, params: FusionParams
) -> FusionGrads:
    """Gradients of sum(upstream * fused) with respect to inputs and gate params."""
    up = np.asarray(upstream, dtype=np.float64)
    if up.shape != io.fused.shape:
        raise ValueError("upstream must match the fused output shape")
    d = params.dim
    g = io.gates

    d_f_gen = (1.0 - g)[..., None] * up
    d_f_sem = g[..., None] * up

    dg = np.einsum("...d,...d->...", up, io.f_sem - io.f_gen)
    dz = dg * g * (1.0 - g)
    d_gate_b = float(dz.sum())

    xh_g, inv_g = _ln_internals(io.f_gen, params.ln_eps)
    xh_s, inv_s = _ln_internals(io.f_sem, params.ln_eps)
    ln_g = xh_g * params.ln_gen.gain + params.ln_gen.bias
    ln_s = xh_s * params.ln_sem.gain + params.ln_sem.bias
    d_gate_w = np.concatenate(
        [
            (dz[..., None] * ln_g).reshape(-1, d).sum(axis=0),
            (dz[..., None] * ln_s).reshape(-1, d).sum(axis=0),
        ]
    )

    def ln_branch(dout, xhat, inv, ln_params):
        d_gain = (dout * xhat).reshape(-1, d).sum(axis=0)
        d_bias = dout.reshape(-1, d).sum(axis=0)
        dxhat = dout * ln_params.gain
        mean_dxhat = dxhat.mean(axis=-1, keepdims=True)
        mean_proj = np.mean(dxhat * xhat, axis=-1, keepdims=True)
        dx = inv * (dxhat - mean_dxhat - xhat * mean_proj)
        return dx, LayerNormParams(d_gain, d_bias)

    da = dz[..., None] * params.gate_w[:d]
    db = dz[..., None] * params.gate_w[d:]
    dx_g, d_ln_gen = ln_branch(da, xh_g, inv_g, params.ln_gen)
    dx_s, d_ln_sem = ln_branch(db, xh_s, inv_s, params.ln_sem)

    return FusionGrads(
        d_f_gen + dx_g, d_f_sem + dx_s, d_ln_gen, d_ln_sem, d_gate_w, d_gate_b
    )


def _loss(f_gen, f_sem, params, upstream) -> float:
    return float(np.sum(upstream * gate_forward(f_gen, f_sem, params).fused))


def finite_diff_check(
    params: FusionParams,
    f_gen: np.ndarray,
    f_sem: np.ndarray,
    upstream: np.ndarray,
    h: float = 1e-5,
) -> float:
    """Max relative error of the analytic gradients vs central differences.

    The relative error per scalar coordinate is
    ``|analytic - numeric| / max(1, |analytic|, |numeric|)``; the maximum is
    taken over every coordinate of both input streams, both layer-norm
    affines, the gate weight vector, and the gate bias.
    """
    f_gen = np.asarray(f_gen, dtype=np.float64)
    f_sem = np.asarray(f_sem, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    io = gate_forward(f_gen, f_sem, params)
    grads = gate_backward(io, upstream, params)

    def rebuild(fg, fs, g_gain, g_bias, s_gain, s_bias, w, b):
        p = FusionParams(
            LayerNormParams(g_gain, g_bias),
            LayerNormParams(s_gain, s_bias),
            w,
            float(b),
            params.ln_eps,
        )
        return _loss(fg, fs, p, upstream)

    packs = [
        (f_gen.copy(), grads.d_f_gen),
        (f_sem.copy(), grads.d_f_sem),
        (params.ln_gen.gain.copy(), grads.d_ln_gen.gain),
        (params.ln_gen.bias.copy(), grads.d_ln_gen.bias),
        (params.ln_sem.gain.copy(), grads.d_ln_sem.gain),
        (params.ln_sem.bias.copy(), grads.d_ln_sem.bias),
        (params.gate_w.copy(), grads.d_gate_w),
        (np.array([params.gate_b]), np.array([grads.d_gate_b])),
    ]

    def loss_at(values):
        return rebuild(
            values[0], values[1], values[2], values[3], values[4], values[5],
            values[6], float(values[7][0]),
        )

    worst = 0.0
    values = [p[0] for p in packs]
    for slot, (array, analytic) in enumerate(packs):
        flat = array.reshape(-1)
        ana = np.asarray(analytic).reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + h
            up_val = loss_at(values)
            flat[idx] = orig - h
            dn_val = loss_at(values)
            flat[idx] = orig
            numeric = (up_val - dn_val) / (2.0 * h)
            if not (np.isfinite(numeric) and np.isfinite(ana[idx])):
                raise FloatingPointError(
                    f"non-finite gradient at pack {slot}, index {idx}"
                )
            err = abs(ana[idx] - numeric) / max(1.0, abs(ana[idx]), abs(numeric))
            worst = max(worst, err)
    return worst


def random_fusion_case(
    seed: int,
    t_max: int = 4,
    n_max: int = 8,
    d_max: int = 16,
) -> tuple[FusionParams, np.ndarray, np.ndarray, np.ndarray]:
    """A randomized (params, f_gen, f_sem, upstream) well inside sigmoid range."""
    rng = np.random.default_rng(seed)
    t = int(rng.integers(1, t_max + 1))
    n = int(rng.integers(1, n_max + 1))
    d = int(rng.integers(2, d_max + 1))
    params = FusionParams(
        LayerNormParams(rng.uniform(0.5, 1.5, d), rng.uniform(-0.5, 0.5, d)),
        LayerNormParams(rng.uniform(0.5, 1.5, d), rng.uniform(-0.5, 0.5, d)),
        rng.uniform(-0.5, 0.5, 2 * d) / np.sqrt(2 * d),
        float(rng.uniform(-0.5, 0.5)),
    )
    f_gen = rng.standard_normal((t, n, d))
    f_sem = rng.standard_normal((t, n, d))
    upstream = rng.standard_normal((t, n, d))
    return params, f_gen, f_sem, upstream


def gradient_suite(trials: int = 20, h: float = 1e-5, seed: int = 0) -> float:
    """Max finite-difference error over a batch of randomized configurations."""
    worst = 0.0
    for i in range(trials):
        params, f_gen, f_sem, upstream = random_fusion_case(seed + i)
        worst = max(worst, finite_diff_check(params, f_gen, f_sem, upstream, h))
    return worst
