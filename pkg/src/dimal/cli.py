"""Command line driver: ``dimal run``, ``dimal embed`` and ``dimal config dump-defaults``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from dimal._io import read_matrix_csv, write_column_csv
from dimal.analysis import (
    ExperimentReport,
    accuracy_sweep,
    compare_methods,
    run_dimal,
    run_generalization,
    split_by_height,
)
from dimal.config import ConfigError, RunConfig, load_config
from dimal.geometry import (
    DEFAULT_K_IMAGES,
    DEFAULT_K_POINTS,
    HorizonParams,
    PointCloud,
    gen_fishbowl,
    gen_helical_ribbon,
    gen_horizon_dataset,
    gen_s_curve,
    gen_swiss_roll,
    image_directory_shape,
    load_image_directory,
)
from dimal.mds import Embedding
from dimal.neuralnet import Conv2d, Dense, NetworkSpec, TrainConfig, load_params, predict, save_params

__all__ = ["main", "build_network_spec", "make_dataset", "cmd_run", "cmd_embed"]

_POINT_GENERATORS = {"s_curve": gen_s_curve, "helical_ribbon": gen_helical_ribbon, "swiss_roll": gen_swiss_roll}


def build_network_spec(layers: list[dict], input_shape: tuple[int, ...]) -> NetworkSpec:
    """Turn a config layer list into a :class:`NetworkSpec`, inferring input sizes."""
    built = []
    shape = tuple(input_shape)
    for layer in layers:
        if layer["type"] == "conv2d":
            if len(shape) != 3:
                raise ValueError("conv2d layers need image input and must precede dense layers")
            conv = Conv2d(shape[0], layer["out_channels"], layer["kernel_size"], layer.get("stride", 1))
            c, h, w = shape
            if conv.kernel_size > min(h, w):
                raise ValueError(f"kernel {conv.kernel_size} does not fit a {h}x{w} feature map")
            built.append(conv)
            k, st = conv.kernel_size, conv.stride
            shape = (conv.out_channels, (h - k) // st + 1, (w - k) // st + 1)
        else:
            built.append(Dense(int(np.prod(shape)), layer["out"]))
            shape = (layer["out"],)
    return NetworkSpec(tuple(built), input_shape)


def _image_input_shape(cfg: RunConfig) -> tuple[int, ...] | None:
    d = cfg.dataset
    if d.name == "horizon":
        return (1, d.height, d.width)
    if d.name == "images":
        shape = image_directory_shape(d.path, d.grayscale)
        if len(shape) != 2:
            raise ValueError("convolutional models need grayscale images")
        return (1, *shape)
    return None


def _input_shape(cfg: RunConfig, layers: list[dict], n_features: int) -> tuple[int, ...]:
    if layers[0]["type"] == "conv2d":
        shape = _image_input_shape(cfg)
        if shape is None:
            raise ValueError(f"dataset {cfg.dataset.name!r} is not an image dataset")
        return shape
    return (n_features,)


def _horizon(cfg: RunConfig) -> HorizonParams:
    d = cfg.dataset
    return HorizonParams(d.omega1, d.omega2, d.width, d.height)


def make_dataset(cfg: RunConfig) -> PointCloud:
    d, seed = cfg.dataset, cfg.dataset_seed
    if d.name in _POINT_GENERATORS:
        return _POINT_GENERATORS[d.name](d.n, seed=seed)
    if d.name == "horizon":
        return gen_horizon_dataset(d.n, _horizon(cfg), tuple(map(tuple, d.alpha_range)), seed=seed)
    if d.name == "fishbowl":
        return gen_fishbowl(d.n, d.rim_fraction, seed=seed)
    return load_image_directory(d.path, d.grayscale)


def make_split(cfg: RunConfig) -> tuple[PointCloud, PointCloud]:
    """Train and test clouds for the generalization experiment.

    Horizon images restrict the amplitudes of the training set; every other
    generator trains on the lower part (by height) of one sample and tests
    on an independent full sample.
    """
    d, seed = cfg.dataset, cfg.dataset_seed
    if d.name == "images":
        raise ValueError("the generalization experiment needs a generated dataset")
    if d.name == "horizon":
        hp = _horizon(cfg)
        train = gen_horizon_dataset(d.n, hp, tuple(map(tuple, d.train_alpha_range)), seed=seed)
        test = gen_horizon_dataset(d.test_n, hp, tuple(map(tuple, d.alpha_range)), seed=seed + 1)
        return train, test
    if d.name == "fishbowl":
        full = gen_fishbowl(d.n, d.rim_fraction, seed=seed)
        test = gen_fishbowl(d.test_n, d.rim_fraction, seed=seed + 1)
    else:
        full = _POINT_GENERATORS[d.name](d.n, seed=seed)
        test = _POINT_GENERATORS[d.name](d.test_n, seed=seed + 1)
    return split_by_height(full, d.train_height_fraction), test


def _train_config(cfg: RunConfig) -> TrainConfig:
    t = cfg.training
    return TrainConfig(
        iterations=t.iterations, learning_rate=t.learning_rate, beta1=t.beta1, beta2=t.beta2,
        restarts=t.restarts, loss=t.loss, margin=t.margin, seed=cfg.seed, epsilon=t.epsilon,
    )


def _k(cfg: RunConfig) -> int:
    if cfg.graph.k is not None:
        return cfg.graph.k
    return DEFAULT_K_IMAGES if cfg.dataset.name in ("horizon", "images") else DEFAULT_K_POINTS


def _thread_count(flag: int | None) -> int:
    if flag is not None:
        return max(1, flag)
    env = os.environ.get("DIMAL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"DIMAL_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def _execute(cfg: RunConfig, n_jobs: int, out: Path) -> ExperimentReport:
    e = cfg.evaluation
    train = _train_config(cfg)
    k = _k(cfg)
    common = dict(stress_mode=e.stress_mode, stress_pairs=e.stress_pairs, n_jobs=n_jobs)
    artifacts = {}

    def write_embedding(name, coords):
        Embedding(coords).to_csv(out / name)
        artifacts[name.removesuffix(".csv")] = name

    def write_model(name, params):
        save_params(params, out / name)
        artifacts[name.removesuffix(".json")] = name

    if e.experiment == "generalization":
        train_cloud, test_cloud = make_split(cfg)
        spec = build_network_spec(cfg.model.layers, _input_shape(cfg, cfg.model.layers, train_cloud.dim))
        report = run_generalization(
            train_cloud, test_cloud, cfg.sampling.K, spec, train, k_nn=k, conformal=cfg.graph.conformal,
            initial=cfg.sampling.initial, out_of_sample=e.out_of_sample, **common,
        )
        write_embedding("embedding.csv", report.embeddings["dimal"])
        write_embedding("embedding_landmark_isomap.csv", report.embeddings["landmark_isomap"])
        write_model("model.json", report.models["dimal"])
        write_column_csv(out / "loss_history.csv", report.extra["loss_history"])
        artifacts["loss_history"] = "loss_history.csv"
    else:
        cloud = make_dataset(cfg)
        if e.experiment == "dimal":
            spec = build_network_spec(cfg.model.layers, _input_shape(cfg, cfg.model.layers, cloud.dim))
            params, emb, report = run_dimal(
                cloud, k, cfg.sampling.K, spec, train, initial=cfg.sampling.initial,
                conformal=cfg.graph.conformal, **common,
            )
            write_embedding("embedding.csv", emb.coords)
            write_model("model.json", params)
            write_column_csv(out / "loss_history.csv", report.extra["loss_history"])
            artifacts["loss_history"] = "loss_history.csv"
        elif e.experiment == "compare":
            spec = None
            if "dimal" in e.methods:
                spec = build_network_spec(cfg.model.layers, _input_shape(cfg, cfg.model.layers, cloud.dim))
            report = compare_methods(
                cloud, e.K_values, e.methods, train, spec, k_nn=k, conformal=cfg.graph.conformal,
                initial=cfg.sampling.initial, m=_output_dim(cfg), **common,
            )
            K_max = max(e.K_values)
            for n, method in enumerate(e.methods):
                coords = report.embeddings[f"{method}@{K_max}"]
                write_embedding("embedding.csv" if n == 0 else f"embedding_{method}.csv", coords)
            if "dimal" in e.methods:
                write_model("model.json", report.models[f"dimal@{K_max}"])
        else:
            specs = {
                name: build_network_spec(layers, _input_shape(cfg, layers, cloud.dim))
                for name, layers in e.architectures.items()
            }
            report = accuracy_sweep(
                cloud, e.K_values, specs, train, k_nn=k, initial=cfg.sampling.initial, **common
            )
            names = list(specs)
            for n, name in enumerate(names):
                last = n == len(names) - 1
                write_embedding("embedding.csv" if last else f"embedding_{name}.csv", report.embeddings[name])
                write_model("model.json" if last else f"model_{name}.json", report.models[name])
    report.write_stress_csv(out / "stress.csv")
    artifacts["stress"] = "stress.csv"
    artifacts["report"] = "report.json"
    report.config = cfg.to_dict()
    report.artifacts = artifacts
    return report


def _output_dim(cfg: RunConfig) -> int:
    return cfg.model.layers[-1].get("out", 2)


def cmd_run(config_path, seed: int | None = None, threads: int | None = None, output_dir=None) -> int:
    try:
        cfg = load_config(config_path)
        if seed is not None:
            cfg.sampling.seed = seed
        if output_dir is not None:
            cfg.output_dir = str(output_dir)
        n_jobs = _thread_count(threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        report = _execute(cfg, n_jobs, out)
        report.save(out / "report.json")
    except Exception as exc:  # runtime failures surface as exit 1
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for key, value in report.stress.items():
        print(f"{key}: relative stress {value:.6g}")
    print(f"wrote {out}")
    return 0


# ---------------------------------------------------------------------------
# embed
# ---------------------------------------------------------------------------


def cmd_embed(model_path, input_path, output_csv) -> int:
    try:
        params = load_params(model_path)
    except Exception as exc:
        print(f"error: cannot load model {model_path}: {exc}", file=sys.stderr)
        return 1
    spec = params.spec
    try:
        input_path = Path(input_path)
        if input_path.is_dir():
            grayscale = len(spec.input_shape) != 3 or spec.input_shape[0] == 1
            X = load_image_directory(input_path, grayscale).points
        else:
            X = read_matrix_csv(input_path)
    except Exception as exc:
        print(f"error: cannot read input {input_path}: {exc}", file=sys.stderr)
        return 1
    if X.shape[0] == 0:
        Embedding(np.zeros((0, spec.output_dim))).to_csv(output_csv)
        return 0
    if X.shape[1] != spec.input_size:
        print(
            f"error: shape mismatch: model expects {spec.input_size} features per input, "
            f"input has {X.shape[1]}",
            file=sys.stderr,
        )
        return 1
    Embedding(predict(params, X)).to_csv(output_csv)
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dimal", description="Landmark-based isometric embeddings.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the experiment described by a JSON config")
    run.add_argument("config")
    run.add_argument("--seed", type=int, help="override the master seed (sampling.seed)")
    run.add_argument("--threads", type=int, help="worker cap (default: DIMAL_THREADS or all cores)")
    run.add_argument("--output-dir", help="override output_dir")

    embed = sub.add_parser("embed", help="embed new inputs with a trained model")
    embed.add_argument("model")
    embed.add_argument("input", help="CSV with one input per row, or a directory of PNG images")
    embed.add_argument("output")

    config = sub.add_parser("config", help="configuration helpers")
    config_sub = config.add_subparsers(dest="config_command", required=True)
    config_sub.add_parser("dump-defaults", help="print the default config with every key")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, args.seed, args.threads, args.output_dir)
    if args.command == "embed":
        return cmd_embed(args.model, args.input, args.output)
    sys.stdout.write(RunConfig().to_json())
    return 0


if __name__ == "__main__":
    sys.exit(main())
