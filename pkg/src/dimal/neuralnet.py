"""Small from-scratch networks trained in a Siamese configuration.

Parameters of a network live in one flat float64 vector; per-layer weight,
bias and PReLU slope arrays are reshaped views into it. This keeps ADAM,
finite differences and serialization trivial.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from types import SimpleNamespace
from typing import Iterator, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "Dense",
    "Conv2d",
    "NetworkSpec",
    "NetworkParams",
    "PairRecord",
    "PairDataset",
    "TrainConfig",
    "AdamState",
    "TrainResult",
    "TrainingDivergedError",
    "mlp_spec",
    "cnn_spec",
    "init_params",
    "forward",
    "predict",
    "pair_loss_and_grad",
    "dataset_loss_and_grad",
    "adam_step",
    "train_siamese",
    "finite_difference_check",
    "save_params",
    "load_params",
]

NORM_EPS = 1e-9
DIVERGENCE_LIMIT = 1e12
PRELU_INIT = 0.25


@dataclass(frozen=True)
class Dense:
    in_features: int
    out_features: int


@dataclass(frozen=True)
class Conv2d:
    """Valid (unpadded) 2-D convolution with square kernels."""

    in_channels: int
    out_channels: int
    kernel_size: int
    stride: int = 1


def _layer_from_dict(blob: dict):
    kind = blob["type"]
    args = {k: v for k, v in blob.items() if k != "type"}
    if kind == "dense":
        return Dense(**args)
    if kind == "conv2d":
        return Conv2d(**args)
    raise ValueError(f"unknown layer type {kind!r}")


def _layer_to_dict(layer) -> dict:
    kind = "dense" if isinstance(layer, Dense) else "conv2d"
    return {"type": kind, **asdict(layer)}


@dataclass(frozen=True)
class NetworkSpec:
    """Ordered layers, each followed by PReLU except the last (linear) one.

    ``input_shape`` is ``(M,)`` for an MLP or ``(C, H, W)`` when the first
    layer is a convolution. A dense layer after a convolution sees the
    flattened ``C*H*W`` feature map.
    """

    layers: tuple
    input_shape: tuple

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "input_shape", tuple(int(s) for s in self.input_shape))
        if not self.layers:
            raise ValueError("network needs at least one layer")
        self.shapes()  # validates compatibility

    def shapes(self) -> list[tuple]:
        """Output shape after every layer."""
        shape = self.input_shape
        out = []
        for idx, layer in enumerate(self.layers):
            if isinstance(layer, Dense):
                size = int(np.prod(shape))
                if size != layer.in_features:
                    raise ValueError(
                        f"layer {idx}: Dense expects {layer.in_features} inputs, gets {size}"
                    )
                shape = (layer.out_features,)
            elif isinstance(layer, Conv2d):
                if len(shape) != 3 or shape[0] != layer.in_channels:
                    raise ValueError(
                        f"layer {idx}: Conv2d expects ({layer.in_channels}, H, W), gets {shape}"
                    )
                _, h, w = shape
                k, s = layer.kernel_size, layer.stride
                if h < k or w < k or s < 1:
                    raise ValueError(f"layer {idx}: kernel {k} does not fit input {h}x{w}")
                shape = (layer.out_channels, (h - k) // s + 1, (w - k) // s + 1)
            else:
                raise TypeError(f"unsupported layer {layer!r}")
            out.append(shape)
        if len(out[-1]) != 1 or out[-1][0] < 1:
            raise ValueError("final layer must be dense with output_dim >= 1")
        return out

    @property
    def output_dim(self) -> int:
        return self.shapes()[-1][0]

    @property
    def input_size(self) -> int:
        return int(np.prod(self.input_shape))

    def param_layout(self) -> list[tuple[int, str, tuple]]:
        layout = []
        last = len(self.layers) - 1
        for idx, layer in enumerate(self.layers):
            if isinstance(layer, Dense):
                layout.append((idx, "W", (layer.in_features, layer.out_features)))
                layout.append((idx, "b", (layer.out_features,)))
            else:
                k = layer.kernel_size
                layout.append((idx, "W", (layer.out_channels, layer.in_channels, k, k)))
                layout.append((idx, "b", (layer.out_channels,)))
            if idx != last:
                layout.append((idx, "a", ()))
        return layout

    @property
    def n_params(self) -> int:
        return sum(int(np.prod(shape)) for _, _, shape in self.param_layout())

    def to_dict(self) -> dict:
        return {
            "input_shape": list(self.input_shape),
            "layers": [_layer_to_dict(layer) for layer in self.layers],
        }

    @classmethod
    def from_dict(cls, blob: dict) -> NetworkSpec:
        return cls(tuple(_layer_from_dict(b) for b in blob["layers"]), tuple(blob["input_shape"]))


def mlp_spec(input_dim: int, hidden: Sequence[int] = (70, 70), output_dim: int = 2) -> NetworkSpec:
    sizes = [input_dim, *hidden, output_dim]
    layers = tuple(Dense(a, b) for a, b in zip(sizes[:-1], sizes[1:]))
    return NetworkSpec(layers, (input_dim,))


def cnn_spec(
    image_shape=(50, 50),
    channels=(15, 2),
    kernels=(12, 9),
    stride: int = 3,
    output_dim: int = 2,
) -> NetworkSpec:
    """Convolution stack followed by one dense layer onto ``R^output_dim``.

    Defaults give the two-convolution horizon network: 15 kernels of size 12,
    then 2 kernels of size 9, stride 3, valid padding.
    """
    h, w = image_shape
    layers, c = [], 1
    for out_c, k in zip(channels, kernels):
        layers.append(Conv2d(c, out_c, k, stride))
        c, h, w = out_c, (h - k) // stride + 1, (w - k) // stride + 1
    layers.append(Dense(c * h * w, output_dim))
    return NetworkSpec(tuple(layers), (1, *image_shape))


class NetworkParams:
    """Flat parameter vector plus named per-layer views."""

    def __init__(self, spec: NetworkSpec, flat=None):
        self.spec = spec
        n = spec.n_params
        if flat is None:
            flat = np.zeros(n)
        flat = np.array(flat, dtype=float, copy=True).reshape(-1)
        if flat.size != n:
            raise ValueError(f"expected {n} parameters, got {flat.size}")
        self.flat = flat
        self.layers: list[dict[str, np.ndarray]] = [{} for _ in spec.layers]
        offset = 0
        for idx, name, shape in spec.param_layout():
            size = int(np.prod(shape))
            self.layers[idx][name] = self.flat[offset : offset + size].reshape(shape)
            offset += size

    def copy(self) -> NetworkParams:
        return NetworkParams(self.spec, self.flat)

    def zeros_like(self) -> NetworkParams:
        return NetworkParams(self.spec)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.flat)))


def init_params(spec: NetworkSpec, rng=None) -> NetworkParams:
    """Glorot-uniform weights, zero biases, PReLU slopes at 0.25."""
    rng = np.random.default_rng(rng)
    params = NetworkParams(spec)
    for layer, p in zip(spec.layers, params.layers):
        if isinstance(layer, Dense):
            fan_in, fan_out = layer.in_features, layer.out_features
        else:
            area = layer.kernel_size**2
            fan_in, fan_out = layer.in_channels * area, layer.out_channels * area
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        p["W"][...] = rng.uniform(-bound, bound, size=p["W"].shape)
        if "a" in p:
            p["a"][...] = PRELU_INIT
    return params


# ---------------------------------------------------------------------------
# Forward / backward
# ---------------------------------------------------------------------------


def _conv_cols(x: np.ndarray, k: int, s: int) -> tuple[np.ndarray, int, int]:
    win = sliding_window_view(x, (k, k), axis=(2, 3))[:, :, ::s, ::s]
    b, c, ho, wo = win.shape[:4]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(b * ho * wo, c * k * k)
    return cols, ho, wo


def _forward_cached(params: NetworkParams, X: np.ndarray):
    spec = params.spec
    h = X.reshape((X.shape[0], *spec.input_shape))
    cache = []
    last = len(spec.layers) - 1
    for idx, (layer, p) in enumerate(zip(spec.layers, params.layers)):
        if isinstance(layer, Dense):
            inp = h.reshape(h.shape[0], -1)
            z = inp @ p["W"] + p["b"]
            cache.append(("dense", h.shape, inp))
        else:
            k, s = layer.kernel_size, layer.stride
            cols, ho, wo = _conv_cols(h, k, s)
            wmat = p["W"].reshape(layer.out_channels, -1)
            z = (cols @ wmat.T + p["b"]).reshape(h.shape[0], ho, wo, -1).transpose(0, 3, 1, 2)
            cache.append(("conv", h.shape, cols))
        if idx != last:
            a = p["a"][()]
            cache[-1] = (*cache[-1], z)
            h = np.where(z > 0, z, a * z)
        else:
            h = z
    return h, cache


def _backward(params: NetworkParams, cache, dY: np.ndarray) -> np.ndarray:
    spec = params.spec
    grad = NetworkParams(spec)
    last = len(spec.layers) - 1
    dh = dY
    for idx in range(last, -1, -1):
        layer, p, g = spec.layers[idx], params.layers[idx], grad.layers[idx]
        entry = cache[idx]
        if idx != last:
            z = entry[3]
            neg = z <= 0
            g["a"][...] = np.sum(dh * np.where(neg, z, 0.0))
            dz = np.where(neg, p["a"][()] * dh, dh)
        else:
            dz = dh
        kind, in_shape, saved = entry[0], entry[1], entry[2]
        if kind == "dense":
            g["W"][...] = saved.T @ dz
            g["b"][...] = dz.sum(axis=0)
            dh = (dz @ p["W"].T).reshape(in_shape) if idx else None
        else:
            k, s = layer.kernel_size, layer.stride
            b, c, hgt, wid = in_shape
            ho, wo = dz.shape[2], dz.shape[3]
            dmat = dz.transpose(0, 2, 3, 1).reshape(-1, layer.out_channels)
            wmat = p["W"].reshape(layer.out_channels, -1)
            g["W"][...] = (dmat.T @ saved).reshape(p["W"].shape)
            g["b"][...] = dmat.sum(axis=0)
            if idx:
                dcols = (dmat @ wmat).reshape(b, ho, wo, c, k, k)
                dx = np.zeros(in_shape)
                for u in range(k):
                    for v in range(k):
                        dx[:, :, u : u + s * (ho - 1) + 1 : s, v : v + s * (wo - 1) + 1 : s] += (
                            dcols[:, :, :, :, u, v].transpose(0, 3, 1, 2)
                        )
                dh = dx
    return grad.flat


def _as_batch(params: NetworkParams, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    size = params.spec.input_size
    if X.ndim == 1 or X.shape == params.spec.input_shape:
        X = X.reshape(1, -1)
    X = X.reshape(X.shape[0], -1)
    if X.shape[1] != size:
        raise ValueError(f"input has {X.shape[1]} features, network expects {size}")
    return X


def forward(params: NetworkParams, x) -> np.ndarray:
    """Map one input to ``R^m``."""
    X = _as_batch(params, x)
    if X.shape[0] != 1:
        raise ValueError("forward takes a single input; use predict for batches")
    return _forward_cached(params, X)[0][0]


def predict(params: NetworkParams, X, batch_size: int = 512) -> np.ndarray:
    """Forward pass of every row of ``X``; returns ``(n, m)``."""
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        return np.zeros((0, params.spec.output_dim))
    X = _as_batch(params, X)
    out = [_forward_cached(params, X[i : i + batch_size])[0] for i in range(0, len(X), batch_size)]
    return np.vstack(out)


# ---------------------------------------------------------------------------
# Pair losses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairRecord:
    x1: np.ndarray
    x2: np.ndarray
    d: float
    lam: int | None = None


@dataclass(frozen=True, eq=False)
class PairDataset:
    """Pairs indexing into a shared array of distinct inputs.

    Landmark training sets reuse each landmark in many pairs, so the inputs
    are stored once and every pair refers to rows ``i`` and ``j``.
    """

    inputs: np.ndarray
    i: np.ndarray
    j: np.ndarray
    d: np.ndarray
    lam: np.ndarray | None = None

    def __post_init__(self):
        X = np.asarray(self.inputs, dtype=float)
        X = X.reshape(X.shape[0], -1) if X.ndim != 2 else X
        i = np.asarray(self.i, dtype=np.int64).reshape(-1)
        j = np.asarray(self.j, dtype=np.int64).reshape(-1)
        d = np.asarray(self.d, dtype=float).reshape(-1)
        if not (i.shape == j.shape == d.shape):
            raise ValueError("pair arrays must have equal length")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValueError("target distances must be finite and non-negative")
        if i.size and (min(i.min(), j.min()) < 0 or max(i.max(), j.max()) >= X.shape[0]):
            raise IndexError("pair index out of range")
        lam = self.lam
        if lam is not None:
            lam = np.asarray(lam, dtype=float).reshape(-1)
            if lam.shape != d.shape or not np.all((lam == 0) | (lam == 1)):
                raise ValueError("lambda labels must be 0/1, one per pair")
        for name, val in (("inputs", X), ("i", i), ("j", j), ("d", d), ("lam", lam)):
            object.__setattr__(self, name, val)

    @classmethod
    def from_distance_matrix(cls, inputs, D, lam=None) -> PairDataset:
        """Every unordered pair of rows of ``inputs`` with targets from ``D``."""
        D = np.asarray(D, dtype=float)
        i, j = np.triu_indices(D.shape[0], k=1)
        labels = None if lam is None else np.asarray(lam)[i, j]
        return cls(inputs, i, j, D[i, j], labels)

    @classmethod
    def from_records(cls, records: Sequence[PairRecord]) -> PairDataset:
        xs, n = [], len(records)
        for r in records:
            xs.extend([np.asarray(r.x1, float).reshape(-1), np.asarray(r.x2, float).reshape(-1)])
        lam = None
        if n and records[0].lam is not None:
            lam = [r.lam for r in records]
        return cls(
            np.vstack(xs) if xs else np.zeros((0, 0)),
            np.arange(0, 2 * n, 2),
            np.arange(1, 2 * n, 2),
            [r.d for r in records],
            lam,
        )

    def __len__(self) -> int:
        return int(self.i.size)

    def records(self) -> Iterator[PairRecord]:
        for p in range(len(self)):
            lam = None if self.lam is None else int(self.lam[p])
            yield PairRecord(self.inputs[self.i[p]], self.inputs[self.j[p]], float(self.d[p]), lam)


def _pair_terms(r, d, lam, kind: str, mu: float):
    """Per-pair loss values and their derivative with respect to ``r``."""
    if kind == "stress":
        diff = r - d
        return diff * diff, 2.0 * diff
    if kind == "hinge":
        if lam is None:
            raise ValueError("hinge loss needs neighbor labels")
        gap = mu - r
        active = gap > 0
        loss = lam * r + (1.0 - lam) * np.where(active, gap, 0.0)
        dr = lam - (1.0 - lam) * active
        return loss, dr
    raise ValueError(f"unknown loss {kind!r}")


def _output_loss_and_grad(Y, i, j, d, lam, kind, mu):
    diff = Y[i] - Y[j]
    r = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    loss, dr = _pair_terms(r, d, lam, kind, mu)
    safe = r >= NORM_EPS
    coef = np.where(safe, dr / np.where(safe, r, 1.0), 0.0)
    g = coef[:, None] * diff
    dY = np.zeros_like(Y)
    np.add.at(dY, i, g)
    np.add.at(dY, j, -g)
    return float(np.sum(loss)), dY


def dataset_loss_and_grad(params: NetworkParams, pairs: PairDataset, kind: str = "stress", mu: float = 1.0):
    """Full-batch loss and gradient summed over every pair.

    Each distinct input is pushed through the network once; the Siamese arms
    share parameters, so this equals the sum of per-pair gradients.
    """
    Y, cache = _forward_cached(params, _as_batch(params, pairs.inputs))
    loss, dY = _output_loss_and_grad(Y, pairs.i, pairs.j, pairs.d, pairs.lam, kind, mu)
    return loss, _backward(params, cache, dY)


def pair_loss_and_grad(params: NetworkParams, pair: PairRecord, kind: str = "stress", mu: float = 1.0):
    """Loss and flat parameter gradient for one pair through both arms."""
    X = np.vstack([_as_batch(params, pair.x1), _as_batch(params, pair.x2)])
    lam = None if pair.lam is None else np.array([float(pair.lam)])
    Y, cache = _forward_cached(params, X)
    loss, dY = _output_loss_and_grad(Y, np.array([0]), np.array([1]), np.array([pair.d]), lam, kind, mu)
    return loss, _backward(params, cache, dY)


# ---------------------------------------------------------------------------
# Optimization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 1000
    learning_rate: float = 0.01
    beta1: float = 0.95
    beta2: float = 0.99
    restarts: int = 5
    loss: str = "stress"
    margin: float = 1.0
    seed: int = 0
    epsilon: float = 1e-8

    def __post_init__(self):
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.loss not in ("stress", "hinge"):
            raise ValueError(f"loss must be 'stress' or 'hinge', got {self.loss!r}")


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> AdamState:
        return cls(np.zeros(n), np.zeros(n))


def adam_step(params: NetworkParams, grads, state: AdamState, t: int, cfg: TrainConfig):
    """One bias-corrected ADAM update; returns ``(new_params, new_state)``."""
    if t < 1:
        raise ValueError("ADAM step index starts at 1")
    g = np.asarray(grads, dtype=float)
    m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g
    v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * g * g
    m_hat = m / (1.0 - cfg.beta1**t)
    v_hat = v / (1.0 - cfg.beta2**t)
    flat = params.flat - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
    return NetworkParams(params.spec, flat), AdamState(m, v)


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class TrainResult:
    params: NetworkParams
    histories: list[np.ndarray]
    failed: list[int] = field(default_factory=list)
    best_restart: int = 0

    @property
    def final_loss(self) -> float:
        return float(self.histories[self.best_restart][-1])


def _run_restart(spec, pairs, cfg, rng):
    params = init_params(spec, rng)
    state = AdamState.zeros(spec.n_params)
    history = np.empty(cfg.iterations + 1)
    for t in range(1, cfg.iterations + 1):
        loss, grad = dataset_loss_and_grad(params, pairs, cfg.loss, cfg.margin)
        history[t - 1] = loss
        if not np.isfinite(loss) or loss > DIVERGENCE_LIMIT:
            return None, history[:t]
        params, state = adam_step(params, grad, state, t, cfg)
    loss, _ = dataset_loss_and_grad(params, pairs, cfg.loss, cfg.margin)
    history[-1] = loss
    if not np.isfinite(loss) or loss > DIVERGENCE_LIMIT or not params.is_finite():
        return None, history
    return params, history


def train_siamese(spec: NetworkSpec, pairs: PairDataset, cfg: TrainConfig = TrainConfig()) -> TrainResult:
    """Full-batch ADAM over ``cfg.restarts`` seeded initializations.

    Each history holds the loss before every update plus the final loss.
    Diverged restarts are excluded; the best remaining one is returned.
    """
    if len(pairs) == 0:
        raise ValueError("training set has no pairs")
    histories, failed = [], []
    best, best_loss, best_idx = None, np.inf, -1
    for restart in range(cfg.restarts):
        rng = np.random.default_rng([cfg.seed, restart])
        params, history = _run_restart(spec, pairs, cfg, rng)
        histories.append(history)
        if params is None:
            failed.append(restart)
            continue
        if history[-1] < best_loss:
            best, best_loss, best_idx = params, history[-1], restart
    if best is None:
        raise TrainingDivergedError(f"all {cfg.restarts} restarts diverged")
    return TrainResult(best, histories, failed, best_idx)


def _extended_pair_loss(spec: NetworkSpec, flat: np.ndarray, pair: PairRecord, kind: str, mu: float):
    """Pair loss evaluated in extended precision.

    Parameters with an exactly zero gradient (e.g. the output bias, which
    shifts both arms equally) still pick up one-ulp rounding noise in a
    float64 central difference; the wider mantissa pushes that noise far
    below the comparison floor.
    """
    layers = [{} for _ in spec.layers]
    offset = 0
    for idx, name, shape in spec.param_layout():
        size = int(np.prod(shape))
        layers[idx][name] = flat[offset : offset + size].reshape(shape)
        offset += size
    view = SimpleNamespace(spec=spec, layers=layers)
    X = np.vstack(
        [np.asarray(pair.x1, dtype=np.longdouble).reshape(-1), np.asarray(pair.x2, dtype=np.longdouble).reshape(-1)]
    )
    Y, _ = _forward_cached(view, X)
    diff = Y[0] - Y[1]
    r = np.sqrt(np.sum(diff * diff))
    lam = None if pair.lam is None else np.longdouble(pair.lam)
    loss, _ = _pair_terms(r, np.longdouble(pair.d), lam, kind, np.longdouble(mu))
    return loss


def finite_difference_check(
    spec: NetworkSpec,
    pair: PairRecord,
    loss_kind: str = "stress",
    h: float = 1e-5,
    params: NetworkParams | None = None,
    mu: float = 1.0,
    max_coords: int = 400,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    The denominator is ``max(|analytic|, |numeric|, 1e-8)``. Networks with
    more than ``max_coords`` parameters are checked on a seeded random subset.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    rng = np.random.default_rng(seed)
    if params is None:
        params = init_params(spec, rng)
    _, grad = pair_loss_and_grad(params, pair, loss_kind, mu)
    n = spec.n_params
    coords = np.arange(n) if n <= max_coords else np.sort(rng.choice(n, size=max_coords, replace=False))
    base = params.flat.astype(np.longdouble)
    worst = 0.0
    for c in coords:
        up, down = base.copy(), base.copy()
        up[c] += h
        down[c] -= h
        numeric = float(
            (_extended_pair_loss(spec, up, pair, loss_kind, mu) - _extended_pair_loss(spec, down, pair, loss_kind, mu))
            / (2 * np.longdouble(h))
        )
        denom = max(abs(grad[c]), abs(numeric), 1e-8)
        worst = max(worst, abs(grad[c] - numeric) / denom)
    return worst


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def params_to_dict(params: NetworkParams) -> dict:
    tensors = []
    for idx, name, shape in params.spec.param_layout():
        arr = params.layers[idx][name]
        tensors.append({"layer": idx, "name": name, "shape": list(shape), "values": arr.reshape(-1).tolist()})
    return {"spec": params.spec.to_dict(), "params": tensors}


def params_from_dict(blob: dict) -> NetworkParams:
    spec = NetworkSpec.from_dict(blob["spec"])
    params = NetworkParams(spec)
    layout = spec.param_layout()
    if len(blob["params"]) != len(layout):
        raise ValueError("parameter list does not match the network spec")
    for (idx, name, shape), tensor in zip(layout, blob["params"]):
        if tensor["layer"] != idx or tensor["name"] != name:
            raise ValueError(f"unexpected tensor {tensor['name']} for layer {tensor['layer']}")
        params.layers[idx][name][...] = np.asarray(tensor["values"], dtype=float).reshape(shape)
    return params


def save_params(params: NetworkParams, path) -> None:
    # json writes floats with repr(), the shortest round-tripping decimal.
    Path(path).write_text(json.dumps(params_to_dict(params)))


def load_params(path) -> NetworkParams:
    return params_from_dict(json.loads(Path(path).read_text()))
