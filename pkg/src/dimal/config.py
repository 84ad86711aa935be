"""Declarative run configuration: one JSON document per experiment."""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

__all__ = [
    "ConfigError",
    "DatasetConfig",
    "GraphConfig",
    "SamplingConfig",
    "ModelConfig",
    "TrainingConfig",
    "EvaluationConfig",
    "RunConfig",
    "DATASETS",
    "EXPERIMENTS",
    "parse_config",
    "load_config",
]

DATASETS = ("s_curve", "helical_ribbon", "swiss_roll", "horizon", "fishbowl", "images")
EXPERIMENTS = ("dimal", "compare", "generalization", "order_of_accuracy")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is a dotted path, ``line`` 1-based or None."""

    def __init__(self, message: str, field: str = "", line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field '{field}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


def _hidden(width: int = 70, depth: int = 2, out: int = 2) -> list[dict]:
    return [{"type": "dense", "out": width} for _ in range(depth)] + [{"type": "dense", "out": out}]


@dataclass
class DatasetConfig:
    name: str = "s_curve"
    n: int = 2000
    # null: derived from the master seed in the sampling block.
    seed: int | None = None
    path: str | None = None
    grayscale: bool = True
    omega1: float = 2.0
    omega2: float = 4.0
    width: int = 50
    height: int = 50
    alpha_range: list = field(default_factory=lambda: [[0.0, 1.0], [0.0, 1.0]])
    rim_fraction: float = 1.0
    # Generalization: the training cloud is drawn from train_alpha_range
    # (horizon) or cut at train_height_fraction of the bowl height (fishbowl).
    test_n: int = 2000
    train_alpha_range: list = field(default_factory=lambda: [[0.0, 0.75], [0.0, 0.75]])
    train_height_fraction: float = 0.6


@dataclass
class GraphConfig:
    # null: 10 for point clouds, 8 for images.
    k: int | None = None
    conformal: bool = False


@dataclass
class SamplingConfig:
    K: int = 200
    initial: int | None = None
    seed: int = 0


@dataclass
class ModelConfig:
    """Layer list; input sizes are inferred from the dataset.

    Entries are ``{"type": "dense", "out": n}`` or
    ``{"type": "conv2d", "out_channels": c, "kernel_size": k, "stride": s}``.
    Every layer but the last is followed by a PReLU.
    """

    layers: list = field(default_factory=_hidden)


@dataclass
class TrainingConfig:
    iterations: int = 1000
    learning_rate: float = 0.01
    beta1: float = 0.95
    beta2: float = 0.99
    restarts: int = 5
    loss: str = "stress"
    margin: float = 1.0
    epsilon: float = 1e-8


@dataclass
class EvaluationConfig:
    experiment: str = "dimal"
    stress_mode: str = "sampled"
    stress_pairs: int = 200_000
    methods: list = field(
        default_factory=lambda: ["dimal", "classical_full", "smacof_landmarks", "landmark_isomap"]
    )
    K_values: list = field(default_factory=lambda: [50, 100, 150, 200, 300])
    architectures: dict = field(
        default_factory=lambda: {"mlp_1": _hidden(depth=1), "mlp_2": _hidden(depth=2)}
    )
    out_of_sample: str = "attach"


@dataclass
class RunConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    graph: GraphConfig = field(default_factory=GraphConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    output_dir: str = "dimal_output"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @property
    def seed(self) -> int:
        return self.sampling.seed

    @property
    def dataset_seed(self) -> int:
        return self.sampling.seed if self.dataset.seed is None else self.dataset.seed


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _key_line(text: str | None, key: str) -> int | None:
    if not text:
        return None
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _check_type(value, annotation: str, path: str, text):
    opt = "None" in annotation
    if value is None:
        if opt:
            return None
        raise ConfigError("must not be null", path, _key_line(text, path.split(".")[-1]))
    base = annotation.replace(" | None", "")
    ok = {
        "int": isinstance(value, int) and not isinstance(value, bool),
        "float": isinstance(value, (int, float)) and not isinstance(value, bool),
        "bool": isinstance(value, bool),
        "str": isinstance(value, str),
        "list": isinstance(value, list),
        "dict": isinstance(value, dict),
    }[base]
    if not ok:
        raise ConfigError(
            f"expected {base}, got {type(value).__name__}", path, _key_line(text, path.split(".")[-1])
        )
    return float(value) if base == "float" else value


def _build(cls, blob, path: str, text):
    if not isinstance(blob, dict):
        raise ConfigError("expected an object", path, _key_line(text, path.split(".")[-1]) if path else None)
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key in blob:
        if key not in fields:
            full = f"{path}.{key}" if path else key
            raise ConfigError("unknown key", full, _key_line(text, key))
    kwargs = {}
    for name, f in fields.items():
        if name not in blob:
            continue
        full = f"{path}.{name}" if path else name
        # Annotations are strings under postponed evaluation.
        if f.type in _BLOCKS:
            kwargs[name] = _build(_BLOCKS[f.type], blob[name], full, text)
        else:
            kwargs[name] = _check_type(blob[name], f.type, full, text)
    return cls(**kwargs)


_BLOCKS = {
    c.__name__: c
    for c in (DatasetConfig, GraphConfig, SamplingConfig, ModelConfig, TrainingConfig, EvaluationConfig)
}


def _validate_layers(layers, path, text):
    if not layers:
        raise ConfigError("layer list is empty", path, _key_line(text, path.split(".")[-1]))
    for n, layer in enumerate(layers):
        where = f"{path}[{n}]"
        if not isinstance(layer, dict) or layer.get("type") not in ("dense", "conv2d"):
            raise ConfigError("layer needs type 'dense' or 'conv2d'", where, _key_line(text, "type"))
        allowed = {"dense": {"type", "out"}, "conv2d": {"type", "out_channels", "kernel_size", "stride"}}
        required = {"dense": {"out"}, "conv2d": {"out_channels", "kernel_size"}}
        kind = layer["type"]
        extra = set(layer) - allowed[kind]
        if extra:
            raise ConfigError(f"unknown key {sorted(extra)[0]!r}", where, _key_line(text, sorted(extra)[0]))
        missing = required[kind] - set(layer)
        if missing:
            raise ConfigError(f"missing key {sorted(missing)[0]!r}", where)
        for key in allowed[kind] - {"type"}:
            if key in layer and not (isinstance(layer[key], int) and layer[key] >= 1):
                raise ConfigError(f"{key} must be a positive integer", where, _key_line(text, key))


def _validate(cfg: RunConfig, text) -> None:
    def fail(msg, path):
        raise ConfigError(msg, path, _key_line(text, path.split(".")[-1]))

    d = cfg.dataset
    if d.name not in DATASETS:
        fail(f"must be one of {list(DATASETS)}, got {d.name!r}", "dataset.name")
    if d.name == "images" and not d.path:
        fail("image datasets need a directory path", "dataset.path")
    if d.n < 1:
        fail("must be >= 1", "dataset.n")
    if d.test_n < 1:
        fail("must be >= 1", "dataset.test_n")
    if not 0 < d.rim_fraction <= 1:
        fail("must lie in (0, 1]", "dataset.rim_fraction")
    if not 0 < d.train_height_fraction <= 1:
        fail("must lie in (0, 1]", "dataset.train_height_fraction")
    for key in ("alpha_range", "train_alpha_range"):
        rng = getattr(d, key)
        if not (
            len(rng) == 2
            and all(isinstance(r, list) and len(r) == 2 and all(isinstance(v, (int, float)) for v in r) for r in rng)
        ):
            fail("expected [[lo1, hi1], [lo2, hi2]]", f"dataset.{key}")
    if cfg.graph.k is not None and cfg.graph.k < 1:
        fail("must be >= 1", "graph.k")
    if cfg.sampling.K < 1:
        fail("must be >= 1", "sampling.K")
    t = cfg.training
    if t.loss not in ("stress", "hinge"):
        fail("must be 'stress' or 'hinge'", "training.loss")
    if t.iterations < 0:
        fail("must be >= 0", "training.iterations")
    if t.restarts < 1:
        fail("must be >= 1", "training.restarts")
    if t.learning_rate <= 0:
        fail("must be positive", "training.learning_rate")
    for key in ("beta1", "beta2"):
        if not 0 < getattr(t, key) < 1:
            fail("must lie in (0, 1)", f"training.{key}")
    e = cfg.evaluation
    if e.experiment not in EXPERIMENTS:
        fail(f"must be one of {list(EXPERIMENTS)}, got {e.experiment!r}", "evaluation.experiment")
    if e.stress_mode not in ("sampled", "all_pairs"):
        fail("must be 'sampled' or 'all_pairs'", "evaluation.stress_mode")
    if e.stress_pairs < 1:
        fail("must be >= 1", "evaluation.stress_pairs")
    if e.out_of_sample not in ("attach", "union"):
        fail("must be 'attach' or 'union'", "evaluation.out_of_sample")
    from dimal.analysis import METHODS

    for m in e.methods:
        if m not in METHODS:
            fail(f"unknown method {m!r}", "evaluation.methods")
    if not e.methods:
        fail("at least one method is required", "evaluation.methods")
    if not e.K_values or any(not isinstance(K, int) or K < 1 for K in e.K_values):
        fail("expected a non-empty list of positive integers", "evaluation.K_values")
    if e.experiment == "order_of_accuracy" and len(e.K_values) < 3:
        fail("the order of accuracy fit needs at least 3 values", "evaluation.K_values")
    _validate_layers(cfg.model.layers, "model.layers", text)
    for name, layers in e.architectures.items():
        if not isinstance(layers, list):
            fail("expected a layer list", f"evaluation.architectures.{name}")
        _validate_layers(layers, f"evaluation.architectures.{name}", text)


def parse_config(source, text: str | None = None) -> RunConfig:
    """Build a :class:`RunConfig` from a JSON string or an already-decoded dict.

    Missing keys take their defaults; unknown keys and ill-typed values raise
    :class:`ConfigError` naming the field and, for text input, its line.
    """
    if isinstance(source, str):
        text = source
        try:
            blob = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", line=exc.lineno) from exc
    else:
        blob = source
    cfg = _build(RunConfig, blob, "", text)
    _validate(cfg, text)
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text())
