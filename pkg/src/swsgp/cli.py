"""
Command-line front end.

Verbs::

    swsgp train     --config run.json        checkpoint, metrics log, config snapshot
    swsgp evaluate  --checkpoint ckpt.npz    test metrics (optionally SVGP-M-H / joint)
    swsgp benchmark --config grid.json       t1 / t2 timing table (CSV)
    swsgp plotdata  --checkpoint ... --kind {posterior1d,priorcheck,metrics}
    swsgp compare   --config grid.json       train a grid of runs, aggregate a table

Run configs are single JSON documents; unknown keys are rejected. Relative
output paths resolve against ``$SWSGP_OUTPUT_ROOT`` (default: the working
directory). Failures exit nonzero with a JSON error object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import itertools
import json
import logging
import math
import os
import statistics
import sys
import time
from pathlib import Path

import numpy as np

from . import data, kernels, models, trainer
from .errors import ConfigError, DataError, NumericError, ShapeError, SWSGPError
from .local_gp import LocalExpert, fit_experts, kmeans_centers, predict_inductive, predict_transductive

log = logging.getLogger("swsgp")

OUTPUT_ROOT_ENV = "SWSGP_OUTPUT_ROOT"
LOCAL_MODELS = ("local_inductive", "local_transductive")
ALL_MODELS = trainer.MODELS + LOCAL_MODELS
LOCAL_FORMAT = "swsgp-local/1"

TRAIN_FIELDS = {f.name: f for f in dataclasses.fields(trainer.TrainConfig)}
RUN_FIELDS = {
    "dataset": None,
    "dataset_options": {},
    "fold": None,
    "max_rows": None,
    "output_dir": "run",
    "expert_size": None,
    "n_experts": None,
    "n_neighbors": None,
    "local_iters": 300,
    "local_lr": 0.01,
    "joint": False,
    "test_batch_size": None,
}


# -- configuration --------------------------------------------------------------


def run_config_violations(cfg: dict) -> list[str]:
    """Every problem with a run config, not just the first."""
    problems = []
    unknown = sorted(set(cfg) - set(TRAIN_FIELDS) - set(RUN_FIELDS))
    problems += [f"unknown key {k!r}" for k in unknown]
    if not cfg.get("dataset"):
        problems.append("dataset is required")
    model = cfg.get("model", "swsgp")
    if model not in ALL_MODELS:
        problems.append(f"model must be one of {list(ALL_MODELS)}, got {model!r}")
    if model in ("swsgp", "swsgp_u") and "H" not in cfg:
        problems.append(f"H is required for model {model}")
    if model in LOCAL_MODELS:
        size = cfg.get("expert_size")
        if not isinstance(size, int) or size < 1:
            problems.append(f"expert_size (positive integer) is required for model {model}")
    fold = cfg.get("fold")
    if fold is not None:
        if not isinstance(fold, dict) or set(fold) != {"n_folds", "index"}:
            problems.append("fold must be null or {\"n_folds\": k, \"index\": i}")
        elif not (isinstance(fold["n_folds"], int) and fold["n_folds"] >= 2
                  and isinstance(fold["index"], int) and 0 <= fold["index"] < fold["n_folds"]):
            problems.append(f"invalid fold {fold}")
    if model not in LOCAL_MODELS:
        train_part = {k: v for k, v in cfg.items() if k in TRAIN_FIELDS}
        if model not in trainer.MODELS:
            train_part.pop("model", None)
        try:
            problems += trainer.TrainConfig(**train_part).violations()
        except TypeError as exc:
            problems.append(str(exc))
    return problems


def resolve_config(cfg: dict) -> dict:
    """Validate and fill defaults; raises :class:`ConfigError` listing all violations."""
    problems = run_config_violations(cfg)
    if problems:
        err = ConfigError("invalid run config: " + "; ".join(problems))
        err.violations = problems
        raise err
    full = {**RUN_FIELDS, **{k: f.default for k, f in TRAIN_FIELDS.items()}}
    full.update(cfg)
    return full


def train_config(cfg: dict) -> trainer.TrainConfig:
    fields = {k: cfg[k] for k in TRAIN_FIELDS if k in cfg}
    if fields.get("model") in LOCAL_MODELS:
        fields["model"] = "svgp"
    return trainer.TrainConfig(**fields)


def read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None


def output_path(path) -> Path:
    p = Path(path)
    if not p.is_absolute():
        p = Path(os.environ.get(OUTPUT_ROOT_ENV, ".")) / p
    return p


# -- data -----------------------------------------------------------------------


def load_splits(cfg: dict) -> tuple[data.Dataset, data.Dataset | None]:
    """Raw (un-normalized) train and test sets for a resolved config."""
    ds = data.load_named(cfg["dataset"], cfg["dataset_options"])
    if cfg["max_rows"]:
        ds = data.subsample(ds, cfg["max_rows"], seed=cfg["seed"])
    fold = cfg["fold"]
    if fold is None:
        return ds, None
    seed = int(trainer.substream(cfg["seed"], "folds").integers(2**31))
    return data.split_folds(ds, fold["n_folds"], fold["index"], seed)


def prepare(cfg: dict) -> tuple[data.Dataset, data.Dataset | None]:
    raw_train, raw_test = load_splits(cfg)
    train = data.normalize(raw_train)
    test = None if raw_test is None else data.normalize(raw_test, reference=train)
    return train, test


def _reference(stats: dict, D: int) -> data.Dataset:
    """An empty dataset that only carries stored normalization statistics."""
    return data.Dataset(
        np.empty((0, D)), np.empty(0), stats["task"], stats.get("name", ""),
        np.asarray(stats["feature_means"]), np.asarray(stats["feature_stds"]),
        stats["target_mean"], stats["target_std"],
    )


def _split(cfg: dict, split: str, stats: dict, D: int) -> data.Dataset:
    raw_train, raw_test = load_splits(cfg)
    raw = {"train": raw_train, "test": raw_test}.get(split)
    if split == "all":
        raw = data.load_named(cfg["dataset"], cfg["dataset_options"])
    if raw is None:
        raise ConfigError(f"split {split!r} is not available for this run (no fold configured)")
    if raw.D != D:
        raise ShapeError(f"checkpoint expects D={D}, dataset {cfg['dataset']!r} has D={raw.D}")
    return data.normalize(raw, reference=_reference(stats, D))


# -- local baselines ------------------------------------------------------------


def _fit_local(cfg: dict, train: data.Dataset):
    size = min(cfg["expert_size"], train.N)
    K = cfg["n_experts"] or max(1, math.ceil(train.N / size))
    seed = int(trainer.substream(cfg["seed"], "init").integers(2**31))
    centers = kmeans_centers(train.X, min(K, train.N), seed=seed)
    return fit_experts(train.X, train.y, centers, size, cfg["kernel"], cfg["local_iters"], cfg["local_lr"])


def _predict_local(cfg: dict, experts, train: data.Dataset, X):
    if cfg["model"] == "local_inductive":
        return predict_inductive(X, experts)
    return predict_transductive(X, train.X, train.y, experts, cfg["n_neighbors"] or cfg["expert_size"])


def _save_local(path, experts, cfg, train: data.Dataset):
    meta = {
        "format": LOCAL_FORMAT,
        "config": cfg,
        "kernels": [kernels.kernel_to_json(e.kernel) for e in experts],
        "noise": [e.noise for e in experts],
        "stats": _stats(train),
    }
    arrays = {
        "centers": np.stack([e.center for e in experts]),
        "members": np.stack([e.member_rows for e in experts]),
        "stats/feature_means": train.feature_means,
        "stats/feature_stds": train.feature_stds,
        "meta": np.array(json.dumps(meta, sort_keys=True)),
    }
    trainer.write_npz(path, arrays)


def _stats(ds: data.Dataset) -> dict:
    return {"task": ds.task, "name": ds.name, "target_mean": ds.target_mean, "target_std": ds.target_std}


def load_any_checkpoint(path) -> dict:
    """SWSGP/SVGP or local-expert checkpoint as a dict with a ``kind`` key."""
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(str(z["meta"]))
        if meta.get("format") != LOCAL_FORMAT:
            out = trainer.load_checkpoint(path)
            out["kind"] = "sparse"
            return out
        centers, members = np.asarray(z["centers"]), np.asarray(z["members"])
        stats = {**meta["stats"], "feature_means": np.asarray(z["stats/feature_means"]),
                 "feature_stds": np.asarray(z["stats/feature_stds"])}
    return {"kind": "local", "config": meta["config"], "meta": meta, "centers": centers,
            "members": members, "stats": stats}


def _rebuild_experts(ckpt: dict, train: data.Dataset) -> list[LocalExpert]:
    meta = ckpt["meta"]
    return [
        LocalExpert.build(c, train.X[rows], train.y[rows], kernels.kernel_from_json(k), noise, rows)
        for c, rows, k, noise in zip(ckpt["centers"], ckpt["members"], meta["kernels"], meta["noise"])
    ]


# -- commands -------------------------------------------------------------------


def _final_record(trainlog: trainer.TrainLog) -> dict:
    return trainlog.records[-1] if trainlog.records else {}


def run_training(cfg: dict, out_dir: Path) -> dict:
    """Train one resolved config into ``out_dir``; returns the final metrics record."""
    out_dir.mkdir(parents=True, exist_ok=True)
    train, test = prepare(cfg)
    started = time.time()
    if cfg["model"] in LOCAL_MODELS:
        t0 = time.perf_counter()
        experts = _fit_local(cfg, train)
        seconds = time.perf_counter() - t0
        trainlog = trainer.TrainLog()
        metric = mnll = None
        if test is not None and test.N:
            res = trainer.metrics([_predict_local(cfg, experts, train, test.X)], test, [np.arange(test.N)])
            metric, mnll = res["rmse_or_err"], res["mnll"]
        trainlog.add(0, seconds, None, metric, mnll)
        _save_local(out_dir / "checkpoint.npz", experts, cfg, train)
    else:
        tc = train_config(cfg).validate()
        state, trainlog = trainer.train(train, tc, test)
        trainer.save_checkpoint(out_dir / "checkpoint.npz", state, cfg, train, trainlog.index)
    trainlog.write_jsonl(out_dir / "metrics.jsonl")
    with open(out_dir / "config.json", "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
    # timestamps live only in this sidecar so the other outputs are reproducible
    with open(out_dir / "run_info.json", "w") as fh:
        json.dump({"started": started, "finished": time.time()}, fh)
    return _final_record(trainlog)


def cmd_train(args) -> int:
    cfg = resolve_config(read_json(args.config))
    if args.output_dir:
        cfg["output_dir"] = args.output_dir
    out_dir = output_path(cfg["output_dir"])
    record = run_training(cfg, out_dir)
    print(json.dumps({"output_dir": str(out_dir), **record}))
    return 0


def evaluate_checkpoint(path, dataset: str | None = None, split: str = "test", H: int | None = None,
                        joint: bool = False, test_batch_size: int | None = None) -> dict:
    ckpt = load_any_checkpoint(path)
    cfg = dict(ckpt["config"])
    if dataset:
        cfg["dataset"] = dataset
    stats = ckpt["stats"]
    if ckpt["kind"] == "local":
        D = ckpt["centers"].shape[1]
        train = _split(ckpt["config"], "train", stats, D)
        target = _split(cfg, split, stats, D)
        pred = _predict_local(cfg, _rebuild_experts(ckpt, train), train, target.X)
        res = trainer.metrics([pred], target, [np.arange(target.N)])
    else:
        state = ckpt["state"]
        target = _split(cfg, split, stats, state.D)
        model = cfg.get("model", "swsgp")
        if H is None and model != "svgp":
            H = cfg["H"]
        if H is not None and not 1 <= H <= state.M:
            raise ConfigError(f"H must be in [1, M={state.M}], got {H}")
        size = test_batch_size or cfg.get("test_batch_size") or cfg.get("batch_size", 64)
        res = trainer.evaluate(state, target, model, H, joint, size, cfg.get("seed", 0))
    return {"checkpoint": str(path), "dataset": cfg["dataset"], "split": split, "H": H,
            "joint": joint, **res}


def cmd_evaluate(args) -> int:
    res = evaluate_checkpoint(args.checkpoint, args.dataset, args.split, args.H, args.joint,
                              args.test_batch_size)
    print(json.dumps(res))
    if args.output:
        out = output_path(args.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(res) + "\n")
    return 0


BENCH_COLUMNS = ["model", "M", "H", "t1_median_ms", "t1_iqr_ms", "t2_median_ms", "t2_iqr_ms"]


def force_single_thread() -> None:
    """Serial execution for timing: one XLA CPU thread and one BLAS thread."""
    flags = os.environ.get("XLA_FLAGS", "")
    extra = "--xla_cpu_multi_thread_eigen=false intra_op_parallelism_threads=1"
    if "xla_cpu_multi_thread_eigen" not in flags:
        os.environ["XLA_FLAGS"] = f"{flags} {extra}".strip()
    from threadpoolctl import threadpool_limits

    threadpool_limits(1)


def _iqr(xs) -> float:
    if len(xs) < 2:
        return 0.0
    q = statistics.quantiles(xs, n=4, method="inclusive")
    return q[2] - q[0]


def run_benchmark(grid: dict) -> list[dict]:
    """Timing rows for every (model entry, M) pair of a benchmark grid.

    ``grid`` keys: ``dataset``, ``dataset_options``, ``max_rows``, ``M`` (list),
    ``models`` (list of ``{"model": ..., "H": ...}``), ``base`` (TrainConfig
    overrides), ``warmup``, ``reps``, ``n_test``.
    """
    allowed = {"dataset", "dataset_options", "max_rows", "M", "models", "base", "warmup", "reps",
               "n_test", "output", "seed"}
    unknown = sorted(set(grid) - allowed)
    if unknown:
        raise ConfigError(f"unknown benchmark keys {unknown}")
    Ms, entries = list(grid.get("M", [])), list(grid.get("models", []))
    if not Ms or not entries:
        return []
    ds = data.load_named(grid["dataset"], grid.get("dataset_options", {}))
    if grid.get("max_rows"):
        ds = data.subsample(ds, grid["max_rows"], grid.get("seed", 0))
    ds = data.normalize(ds)
    n_test = grid.get("n_test", 256)
    test_X = ds.X[:n_test]
    rows = []
    for entry, M in itertools.product(entries, Ms):
        base = {**grid.get("base", {}), **entry, "M": M}
        if base.get("model") == "svgp":
            base.setdefault("H", M)
        base["H"] = min(base.get("H", M), M)
        cfg = trainer.TrainConfig(**base).validate()
        s = trainer.timing_samples(ds, cfg, grid.get("warmup", 3), grid.get("reps", 10), test_X)
        rows.append({
            "model": cfg.model, "M": M, "H": cfg.H if cfg.model != "svgp" else M,
            "t1_median_ms": statistics.median(s["t1"]), "t1_iqr_ms": _iqr(s["t1"]),
            "t2_median_ms": statistics.median(s["t2"]), "t2_iqr_ms": _iqr(s["t2"]),
        })
    return rows


def write_csv(path, columns, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        for r in rows:
            w.writerow({c: r.get(c) for c in columns})


def cmd_benchmark(args) -> int:
    force_single_thread()
    grid = read_json(args.config)
    rows = run_benchmark(grid)
    out = output_path(args.output or grid.get("output", "benchmark.csv"))
    write_csv(out, BENCH_COLUMNS, rows)
    print(json.dumps({"output": str(out), "rows": len(rows)}))
    return 0


def posterior1d(ckpt: dict, n_grid: int = 200, lo: float | None = None, hi: float | None = None):
    """Rows ``(x, mean, lower95, upper95)`` in original units and the inducing inputs."""
    state, stats = ckpt["state"], ckpt["stats"]
    if state.D != 1:
        raise ConfigError(f"posterior1d needs 1-D inputs, checkpoint has D={state.D}")
    fm, fs = float(stats["feature_means"][0]), float(stats["feature_stds"][0])
    cfg = ckpt["config"]
    if lo is None or hi is None:
        raw_train, _ = load_splits(resolve_config(cfg))
        lo = float(raw_train.X.min()) if lo is None else lo
        hi = float(raw_train.X.max()) if hi is None else hi
    x = np.linspace(lo, hi, n_grid)
    Xn = ((x - fm) / fs)[:, None]
    model = cfg.get("model", "swsgp")
    pred = trainer.predict(state, Xn, model, None if model == "svgp" else cfg.get("H"))
    ts, tm = stats["target_std"], stats["target_mean"]
    mean = pred.mean * ts + tm
    noise = float(state.likelihood.noise_variance) if state.likelihood.kind == models.GAUSSIAN else 0.0
    half = 1.96 * np.sqrt(pred.variance + noise) * ts
    rows = [{"x": a, "mean": b, "lower95": b - h, "upper95": b + h} for a, b, h in zip(x, mean, half)]
    z = np.asarray(state.Z)[:, 0] * fs + fm
    return rows, [{"z": v} for v in np.sort(z)]


def priorcheck(ckpt: dict, n_masks: int = 5, n_points: int = 3, n_samples: int = 10_000, seed: int = 0):
    """Empirical prior variance of ``f`` under random masks vs. the kernel diagonal."""
    state = ckpt["state"]
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n_points, state.D))
    H = min(int(ckpt["config"].get("H") or state.M), state.M)
    kxx = kernels.kernel_diag(X, kernels.to_numpy(state.kernel), xp=np)
    rows = []
    for k in range(n_masks):
        mask = np.sort(rng.choice(state.M, H, replace=False))
        f = models.sample_prior_f(X, state, mask, n_samples, rng)
        emp = f.var(axis=0, ddof=1)
        for i in range(n_points):
            rows.append({
                "mask": k, "point": i, "empirical_var": emp[i], "analytic_var": kxx[i],
                "mc_se": kxx[i] * math.sqrt(2.0 / (n_samples - 1)),
            })
    return rows


METRIC_COLUMNS = ["iter", "seconds", "nelbo", "rmse_or_err", "mnll"]


def cmd_plotdata(args) -> int:
    out = output_path(args.output)
    if args.kind == "metrics":
        src = Path(args.metrics or Path(args.checkpoint).with_name("metrics.jsonl"))
        write_csv(out, METRIC_COLUMNS, trainer.TrainLog.read_jsonl(src).records)
        print(json.dumps({"output": str(out)}))
        return 0
    ckpt = load_any_checkpoint(args.checkpoint)
    if ckpt["kind"] != "sparse":
        raise ConfigError(f"plotdata {args.kind} needs a sparse GP checkpoint")
    if args.kind == "posterior1d":
        rows, zs = posterior1d(ckpt, args.grid, args.lower, args.upper)
        write_csv(out, ["x", "mean", "lower95", "upper95"], rows)
        write_csv(out.with_name(out.stem + "_inducing.csv"), ["z"], zs)
    else:
        rows = priorcheck(ckpt, args.masks, args.points, args.samples, args.seed)
        write_csv(out, ["mask", "point", "empirical_var", "analytic_var", "mc_se"], rows)
    print(json.dumps({"output": str(out)}))
    return 0


COMPARE_COLUMNS = ["model", "M", "H", "n_runs", "rmse_or_err_mean", "rmse_or_err_std",
                   "mnll_mean", "mnll_std", "seconds_mean"]


def _expand(plan: dict) -> list[dict]:
    base, grid = plan.get("base", {}), plan.get("grid", {})
    unknown = sorted(set(plan) - {"base", "grid", "output", "output_dir"})
    if unknown:
        raise ConfigError(f"unknown compare keys {unknown}")
    keys = sorted(grid)
    runs = []
    for values in itertools.product(*(grid[k] for k in keys)):
        cfg = dict(base)
        for k, v in zip(keys, values):
            if k == "fold_index":
                cfg["fold"] = {**cfg.get("fold", {}), "index": v}
            else:
                cfg[k] = v
        if cfg.get("model") == "svgp":
            cfg.pop("H", None)
        if cfg not in runs:
            runs.append(cfg)
    problems = []
    for i, cfg in enumerate(runs):
        problems += [f"run {i}: {p}" for p in run_config_violations(cfg)]
    if problems:
        err = ConfigError("invalid compare grid: " + "; ".join(problems))
        err.violations = problems
        raise err
    return [resolve_config(c) for c in runs]


def run_compare(plan: dict, out_root: Path) -> list[dict]:
    groups: dict[tuple, list[dict]] = {}
    for i, cfg in enumerate(_expand(plan)):
        rec = run_training(cfg, out_root / f"run{i:03d}")
        H = cfg["H"] if cfg["model"] in ("swsgp", "swsgp_u") else None
        M = cfg["M"] if cfg["model"] in trainer.MODELS else None
        groups.setdefault((cfg["model"], M, H), []).append(rec)
    rows = []
    for (model, M, H), recs in groups.items():
        def col(name):
            return [r[name] for r in recs if r.get(name) is not None]
        err, mnll = col("rmse_or_err"), col("mnll")
        rows.append({
            "model": model, "M": M, "H": H, "n_runs": len(recs),
            "rmse_or_err_mean": statistics.fmean(err) if err else None,
            "rmse_or_err_std": statistics.pstdev(err) if err else None,
            "mnll_mean": statistics.fmean(mnll) if mnll else None,
            "mnll_std": statistics.pstdev(mnll) if mnll else None,
            "seconds_mean": statistics.fmean(col("seconds")),
        })
    return rows


def cmd_compare(args) -> int:
    plan = read_json(args.config)
    out_root = output_path(args.output_dir or plan.get("output_dir", "compare"))
    rows = run_compare(plan, out_root)
    out = out_root / "results.csv"
    write_csv(out, COMPARE_COLUMNS, rows)
    print(json.dumps({"output": str(out), "rows": len(rows)}))
    return 0


# -- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swsgp", description="Sparse-within-sparse Gaussian processes")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one run config")
    p.add_argument("--config", required=True, help="run config (JSON)")
    p.add_argument("--output-dir", help="override the config's output_dir")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", help="dataset name (default: the checkpoint's)")
    p.add_argument("--split", choices=["test", "train", "all"], default="test")
    p.add_argument("--H", type=int, help="neighbors per test point (SVGP-M-H when used on an SVGP checkpoint)")
    p.add_argument("--joint", action="store_true", help="joint prediction over test batches")
    p.add_argument("--test-batch-size", type=int)
    p.add_argument("--output", help="also write the metrics record here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark", help="time training steps and predictions")
    p.add_argument("--config", required=True, help="benchmark grid (JSON)")
    p.add_argument("--output", help="CSV path")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("plotdata", help="emit CSV traces for plotting")
    p.add_argument("--kind", choices=["posterior1d", "priorcheck", "metrics"], required=True)
    p.add_argument("--checkpoint")
    p.add_argument("--metrics", help="metrics.jsonl (kind=metrics)")
    p.add_argument("--output", required=True, help="CSV path")
    p.add_argument("--grid", type=int, default=200, help="grid size (posterior1d)")
    p.add_argument("--lower", type=float)
    p.add_argument("--upper", type=float)
    p.add_argument("--masks", type=int, default=5, help="random masks (priorcheck)")
    p.add_argument("--points", type=int, default=3, help="input points (priorcheck)")
    p.add_argument("--samples", type=int, default=10_000, help="prior samples per mask (priorcheck)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_plotdata)

    p = sub.add_parser("compare", help="train a grid of runs and aggregate a results table")
    p.add_argument("--config", required=True, help="{\"base\": run config, \"grid\": {key: [values]}}")
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_compare)
    return parser


EXIT_CODES = ((ConfigError, 2), (ShapeError, 2), (DataError, 3), (NumericError, 4), (OSError, 5))


def error_payload(exc: BaseException) -> dict:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    for attr in ("violations", "row", "column", "blocks"):
        if getattr(exc, attr, None) is not None:
            payload[attr] = getattr(exc, attr)
    return payload


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    if args.command == "plotdata" and args.kind != "metrics" and not args.checkpoint:
        parser.error("--checkpoint is required for this kind")
    try:
        return args.func(args)
    except (SWSGPError, ValueError, OSError) as exc:
        print(json.dumps(error_payload(exc)), file=sys.stderr)
        for cls, code in EXIT_CODES:
            if isinstance(exc, cls):
                return code
        return 1


if __name__ == "__main__":
    sys.exit(main())
