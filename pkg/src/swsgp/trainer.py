"""
Mini-batch training of SVGP / SWSGP / SWSGP-U, evaluation, checkpoints and
step timing.

One training iteration samples a batch, finds each point's active inducing
block (from the precomputed index when Z is fixed), evaluates the scaled
objective and its gradient in a single jitted call, and applies Adam. A step
whose loss or gradient is non-finite is retried with tenfold larger jitter
(up to five times) and otherwise rejected; more than ten consecutive
rejections abort training.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import statistics
import time
import zipfile
import zlib
from pathlib import Path
from typing import Any, Callable

import jax
import jax.numpy as jnp
import numpy as np
from scipy.stats import multivariate_normal

from . import kernels, linalg, models, neighbors, optim
from .data import CLASSIFICATION, REGRESSION, Dataset
from .errors import ConfigError, NumericError, StalenessError
from .local_gp import kmeans_centers
from .models import LikelihoodParams, PredictiveGaussian, SparseGPState
from .neighbors import FixedZIndex

log = logging.getLogger(__name__)

MODELS = ("svgp", "swsgp", "swsgp_u")
CHECKPOINT_FORMAT = "swsgp-checkpoint/1"
METRICS_SCHEMA = 1
MAX_CONSECUTIVE_REJECTIONS = 10
KMEANS_SUBSAMPLE = 10_000


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    model: str = "swsgp"
    M: int = 64
    H: int = 8
    batch_size: int = 64
    learning_rate: float = 0.001
    max_iters: int = 20_000
    diagonal_S: bool = False
    fixed_Z: bool = False
    train_noise: bool = True
    train_kernel: bool = True
    seed: int = 0
    eval_every: int = 1000
    gh_order: int = 20
    jitter0: float = 1e-6
    kernel: str = "matern52"

    def violations(self) -> list[str]:
        out = []
        if self.model not in MODELS:
            out.append(f"model must be one of {MODELS}, got {self.model!r}")
        if self.M < 1:
            out.append("M must be >= 1")
        if self.model != "svgp" and not 1 <= self.H <= self.M:
            out.append(f"H must satisfy 1 <= H <= M, got H={self.H}, M={self.M}")
        if self.batch_size < 1:
            out.append("batch_size must be >= 1")
        if not self.learning_rate > 0:
            out.append("learning_rate must be positive")
        if self.max_iters < 0:
            out.append("max_iters must be >= 0")
        if self.eval_every < 1:
            out.append("eval_every must be >= 1")
        if not 1 <= self.gh_order <= 100:
            out.append("gh_order must be in [1, 100]")
        if self.jitter0 < 0:
            out.append("jitter0 must be >= 0")
        if self.kernel not in ("matern52", "matern32", "linear", "matern32+linear"):
            out.append(f"unknown kernel {self.kernel!r}")
        return out

    def validate(self) -> "TrainConfig":
        problems = self.violations()
        if problems:
            raise ConfigError("; ".join(problems))
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclasses.dataclass
class TrainLog:
    """Evaluation records plus the per-iteration mini-batch NELBO trace."""

    records: list[dict] = dataclasses.field(default_factory=list)
    nelbo_trace: list[float] = dataclasses.field(default_factory=list)
    rejected_steps: int = 0
    index: FixedZIndex | None = dataclasses.field(default=None, repr=False)

    def add(self, iteration, seconds, nelbo, metric, mnll):
        self.records.append({
            "schema": METRICS_SCHEMA,
            "iter": int(iteration),
            "seconds": float(seconds),
            "nelbo": None if nelbo is None else float(nelbo),
            "rmse_or_err": None if metric is None else float(metric),
            "mnll": None if mnll is None else float(mnll),
        })

    def write_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec) + "\n")

    @classmethod
    def read_jsonl(cls, path) -> "TrainLog":
        with open(path) as fh:
            return cls([json.loads(line) for line in fh if line.strip()])


def substream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for a named purpose (``init``, ``batching``, ...)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(name.encode())]))


def likelihood_for(task: str, noise_variance: float = 0.1) -> LikelihoodParams:
    if task == CLASSIFICATION:
        return LikelihoodParams.probit()
    return LikelihoodParams.gaussian(noise_variance)


def init_state(dataset: Dataset, config: TrainConfig) -> SparseGPState:
    """Initial parameters: Z from the data, ``m = 0``, ``L = 0.1 I`` (or ``s = 0.1``).

    Z is a random subset of training inputs, or k-means centers of at most 10k
    of them when Z stays fixed. The kernel starts at unit variance with
    lengthscales equal to the per-dimension input spread; the Gaussian noise
    variance starts at a tenth of the target variance.
    """
    config.validate()
    X = dataset.X
    if config.M > dataset.N:
        raise ConfigError(f"M={config.M} exceeds the number of training points N={dataset.N}")
    rng = substream(config.seed, "init")
    if config.fixed_Z:
        sub = X
        if dataset.N > KMEANS_SUBSAMPLE:
            sub = X[np.sort(rng.choice(dataset.N, KMEANS_SUBSAMPLE, replace=False))]
        Z = kmeans_centers(sub, config.M, seed=int(rng.integers(2**31)))
    else:
        Z = X[rng.choice(dataset.N, config.M, replace=False)].copy()
    stds = X.std(axis=0)
    stds = np.where(stds > 0, stds, 1.0)
    kernel = kernels.make_kernel(config.kernel, dataset.D, stds)
    cov = np.full(config.M, 0.1) if config.diagonal_S else 0.1 * np.eye(config.M)
    y_var = float(dataset.y.var()) if dataset.task == REGRESSION else 1.0
    lik = likelihood_for(dataset.task, 0.1 * y_var if y_var > 0 else 0.1)
    return SparseGPState(
        Z, np.zeros(config.M), cov, kernel, lik, dataset.N, not config.fixed_Z
    ).validate()


def adam_step(state, gradients, moments, t, lr):
    """Adam step on unconstrained blocks (see :func:`optim.adam_step`)."""
    return optim.adam_step(state, gradients, moments, t, lr)


class BatchSampler:
    """Uniform batches without replacement within an epoch; reshuffled per epoch."""

    def __init__(self, n: int, batch_size: int, rng: np.random.Generator):
        self.n = n
        self.size = min(batch_size, n)
        self.rng = rng
        self._order = rng.permutation(n)
        self._pos = 0

    def __call__(self) -> np.ndarray:
        parts, need = [], self.size
        while need:
            if self._pos == self.n:
                self._order = self.rng.permutation(self.n)
                self._pos = 0
            take = self._order[self._pos : self._pos + need]
            self._pos += take.size
            need -= take.size
            parts.append(take)
        return np.concatenate(parts) if len(parts) > 1 else parts[0]


def trainable_blocks(state: SparseGPState, config: TrainConfig) -> list[str]:
    names = list(state.unconstrained())
    if config.fixed_Z:
        names.remove("Z")
    if not config.train_noise and "likelihood.noise_variance" in names:
        names.remove("likelihood.noise_variance")
    if not config.train_kernel:
        names = [n for n in names if not n.startswith("kernel.")]
    return names


def _objective_fn(template: SparseGPState, model: str, gh_order: int):
    def objective(params, frozen, Xb, yb, masks, jitter):
        state = template.from_unconstrained({**frozen, **params})
        if model == "svgp":
            return models._svgp_objective(Xb, yb, state, jitter, gh_order)
        if model == "swsgp":
            return models._swsgp_objective(Xb, yb, masks, state, jitter, gh_order)
        return models._union_objective(Xb, yb, masks, state, jitter, gh_order)

    return objective


def make_step(template: SparseGPState, model: str, gh_order: int) -> Callable:
    """Jitted ``(params, frozen, moments, t, lr, Xb, yb, masks, jitter) -> (loss, ok, params, moments)``."""
    objective = _objective_fn(template, model, gh_order)

    @jax.jit
    def step(params, frozen, moments, t, lr, Xb, yb, masks, jitter):
        loss, grads = jax.value_and_grad(objective)(params, frozen, Xb, yb, masks, jitter)
        leaves = [jnp.all(jnp.isfinite(g)) for g in jax.tree_util.tree_leaves(grads)]
        ok = jnp.isfinite(loss) & jnp.all(jnp.stack(leaves))
        new_params, new_moments = optim.adam_update(params, grads, moments, t, lr)
        return loss, ok, new_params, new_moments

    return step


class _Run:
    """Mutable training context shared by :func:`train` and the timing code."""

    def __init__(self, dataset: Dataset, config: TrainConfig, state: SparseGPState | None = None):
        self.dataset = dataset
        self.config = config.validate()
        self.template = state if state is not None else init_state(dataset, config)
        flat = self.template.unconstrained()
        names = trainable_blocks(self.template, config)
        self.params = {k: flat[k] for k in names}
        self.frozen = {k: v for k, v in flat.items() if k not in names}
        self.moments = optim.init_moments(self.params)
        self.t = 0
        self.step_fn = make_step(self.template, config.model, config.gh_order)
        self.sampler = BatchSampler(dataset.N, config.batch_size, substream(config.seed, "batching"))
        self.index: FixedZIndex | None = None
        if config.model == "swsgp" and config.fixed_Z:
            self.index = neighbors.build_fixed_index(
                dataset.X, np.asarray(self.template.Z), config.H, kernels.to_numpy(self.template.kernel)
            )
        self._constrained = jax.jit(lambda p, f: self.template.from_unconstrained({**f, **p}))

    def state(self) -> SparseGPState:
        return self._constrained(self.params, self.frozen)

    def masks(self, rows: np.ndarray):
        cfg = self.config
        if cfg.model == "svgp":
            return None
        if self.index is not None:
            return jnp.asarray(self.index.batch(rows))
        st = self.state()
        Z = np.asarray(st.Z)
        kern = kernels.to_numpy(st.kernel)
        Xb = self.dataset.X[rows]
        if cfg.model == "swsgp":
            return jnp.asarray(neighbors.nearest_indices(Xb, Z, cfg.H, kern))
        return jnp.asarray(neighbors.batch_active_set(Xb, Z, cfg.H, kern))

    def step(self) -> float | None:
        """One iteration; returns the batch NELBO or ``None`` if the step was rejected."""
        rows = self.sampler()
        masks = self.masks(rows)
        Xb, yb = self.dataset.X[rows], self.dataset.y[rows]
        t = self.t + 1
        jitter = self.config.jitter0
        for attempt in range(linalg.MAX_JITTER_RETRIES + 1):
            loss, ok, params, moments = self.step_fn(
                self.params, self.frozen, self.moments, t, self.config.learning_rate, Xb, yb, masks, jitter
            )
            if bool(ok):
                self.params, self.moments, self.t = params, moments, t
                return float(loss)
            jitter = (jitter or linalg.DEFAULT_RELATIVE_JITTER) * linalg.JITTER_GROWTH
        return None


def _assert_valid(state: SparseGPState) -> None:
    st = state.to_numpy()
    arrays = [st.Z, st.m, st.cov_factor]
    if not all(np.all(np.isfinite(a)) for a in arrays):
        raise NumericError("parameters became non-finite", ["Z", "m", "cov_factor"])
    diag = st.cov_factor if st.diagonal else np.diag(st.cov_factor)
    assert np.all(diag > 0)
    leaves = jax.tree_util.tree_leaves(st.kernel) + jax.tree_util.tree_leaves(st.likelihood)
    assert all(np.all(np.asarray(v) > 0) for v in leaves)


def train(dataset: Dataset, config: TrainConfig, test: Dataset | None = None,
          state: SparseGPState | None = None) -> tuple[SparseGPState, TrainLog]:
    """Run ``config.max_iters`` iterations; evaluate on ``test`` every ``eval_every``.

    Evaluation time is excluded from the logged wall-clock seconds.
    """
    run = _Run(dataset, config, state)
    trainlog = TrainLog(index=run.index)
    elapsed = 0.0
    window: list[float] = []
    rejected_run = 0

    def evaluate_now(it):
        st = run.state()
        _assert_valid(st)
        metric = mnll = None
        if test is not None and test.N:
            H = None if config.model == "svgp" else config.H
            res = evaluate(st, test, config.model, H)
            metric, mnll = res["rmse_or_err"], res["mnll"]
        trainlog.add(it, elapsed, np.mean(window) if window else None, metric, mnll)

    evaluate_now(0)
    for it in range(1, config.max_iters + 1):
        t0 = time.perf_counter()
        loss = run.step()
        elapsed += time.perf_counter() - t0
        if loss is None:
            trainlog.rejected_steps += 1
            rejected_run += 1
            log.warning("iteration %d: non-finite objective, step rejected", it)
            if rejected_run > MAX_CONSECUTIVE_REJECTIONS:
                raise NumericError(
                    f"training aborted after {rejected_run} consecutive rejected steps at iteration {it}"
                )
            continue
        rejected_run = 0
        trainlog.nelbo_trace.append(loss)
        window.append(loss)
        if it % config.eval_every == 0 or it == config.max_iters:
            evaluate_now(it)
            window = []
    if run.t == 0:
        return run.template.to_numpy(), trainlog
    return run.state().to_numpy(), trainlog


# -- evaluation -----------------------------------------------------------------


def predict(state: SparseGPState, X, model: str, H: int | None = None, joint: bool = False) -> PredictiveGaussian:
    """Latent predictions for a trained state.

    SVGP uses all inducing points unless ``H`` is given (SVGP-M-H). SWSGP
    variants use the ``H`` nearest inducing inputs per point, or their union
    when ``joint``.
    """
    if model == "svgp" and (H is None or H >= state.M) and not joint:
        return models.svgp_qf(X, state)
    if model == "svgp" and joint and (H is None or H >= state.M):
        return models.svgp_qf(X, state, full_cov=True)
    return models.swsgp_predict(X, state, H or state.M, joint=joint)


def _noise(pred: PredictiveGaussian, state: SparseGPState | None):
    if pred.noise is not None:
        return pred.noise
    return float(state.likelihood.noise_variance)


def metrics(preds: list[PredictiveGaussian], test: Dataset, rows: list[np.ndarray],
            state: SparseGPState | None = None) -> dict:
    """RMSE (or error rate) and MNLL over groups of predictions, in original units.

    Groups carrying a joint covariance contribute their joint log density.
    """
    n = sum(r.size for r in rows)
    total_lp = 0.0
    if test.task == CLASSIFICATION:
        wrong = 0.0
        for pred, r in zip(preds, rows):
            y = test.y[r]
            wrong += models.err_rate(pred.mean, pred.variance, y) * r.size
            total_lp += float(np.sum(models.predictive_log_density(pred.mean, pred.variance, y, LikelihoodParams.probit())))
        return {"rmse_or_err": wrong / n, "mnll": -total_lp / n, "n": n}
    sq = 0.0
    scale = test.target_std
    for pred, r in zip(preds, rows):
        y = test.inverse_targets(test.y[r])
        mean = test.inverse_targets(pred.mean)
        noise = _noise(pred, state)
        sq += float(np.sum((mean - y) ** 2))
        if pred.covariance is not None and r.size > 1:
            cov = (pred.covariance + np.diag(np.broadcast_to(noise, r.shape))) * scale**2
            total_lp += float(multivariate_normal(mean, cov, allow_singular=False).logpdf(y))
        else:
            var = (pred.variance + noise) * scale**2
            total_lp += float(np.sum(-0.5 * np.log(2 * np.pi * var) - (y - mean) ** 2 / (2 * var)))
    return {"rmse_or_err": float(np.sqrt(sq / n)), "mnll": -total_lp / n, "n": n}


def evaluate(state: SparseGPState, test: Dataset, model: str, H: int | None = None,
             joint: bool = False, test_batch_size: int | None = None, seed: int = 0) -> dict:
    """Test metrics; joint mode predicts random groups of ``test_batch_size`` points together."""
    if not joint:
        rows = [np.arange(test.N)]
        return metrics([predict(state, test.X, model, H)], test, rows, state)
    size = test_batch_size or test.N
    order = substream(seed, "eval").permutation(test.N)
    rows = [order[i : i + size] for i in range(0, test.N, size)]
    preds = [predict(state, test.X[r], model, H, joint=True) for r in rows]
    return metrics(preds, test, rows, state)


# -- checkpoints ----------------------------------------------------------------


def write_npz(path, arrays: dict) -> None:
    """``np.savez`` equivalent with fixed entry timestamps, so equal inputs give equal bytes."""
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name, value in arrays.items():
            info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
            with zf.open(info, "w", force_zip64=True) as fh:
                np.lib.format.write_array(fh, np.asanyarray(value), allow_pickle=False)


def save_checkpoint(path, state: SparseGPState, config: TrainConfig | dict, dataset: Dataset | None = None,
                    index: FixedZIndex | None = None, extra: dict | None = None) -> None:
    """Write parameters (unconstrained), config and normalization stats to ``.npz``."""
    cfg = config.to_dict() if isinstance(config, TrainConfig) else dict(config)
    arrays = {f"param/{k}": np.asarray(v) for k, v in state.unconstrained().items()}
    stats = None
    if dataset is not None:
        stats = {
            "task": dataset.task,
            "name": dataset.name,
            "target_mean": dataset.target_mean,
            "target_std": dataset.target_std,
        }
        if dataset.feature_means is not None:
            arrays["stats/feature_means"] = dataset.feature_means
            arrays["stats/feature_stds"] = dataset.feature_stds
    if index is not None:
        arrays["index/neighbors"] = np.asarray(index.neighbors)
    meta = {
        "format": CHECKPOINT_FORMAT,
        "config": cfg,
        "kernel": kernels.kernel_to_json(kernels.to_numpy(state.kernel)),
        "likelihood": state.likelihood.kind,
        "n_train": state.n_train,
        "z_trainable": state.z_trainable,
        "diagonal": state.diagonal,
        "M": state.M,
        "D": state.D,
        "stats": stats,
        "index": None if index is None else {"H": index.H, "checksum": index.checksum},
        "extra": extra or {},
    }
    arrays["meta"] = np.array(json.dumps(meta, sort_keys=True))
    write_npz(path, arrays)


def load_checkpoint(path) -> dict:
    """Inverse of :func:`save_checkpoint`: ``{"state", "config", "meta", "index", "stats"}``."""
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(str(z["meta"]))
        if meta.get("format") != CHECKPOINT_FORMAT:
            raise ConfigError(f"unsupported checkpoint format {meta.get('format')!r}")
        params = {k[len("param/"):]: np.asarray(z[k]) for k in z.files if k.startswith("param/")}
        feature = {k[len("stats/"):]: np.asarray(z[k]) for k in z.files if k.startswith("stats/")}
        neighbors_arr = np.asarray(z["index/neighbors"]) if "index/neighbors" in z.files else None
    M, D = meta["M"], meta["D"]
    lik = LikelihoodParams(meta["likelihood"], 1.0 if meta["likelihood"] == models.GAUSSIAN else None)
    cov = np.ones(M) if meta["diagonal"] else np.eye(M)
    template = SparseGPState(
        np.zeros((M, D)), np.zeros(M), cov, kernels.kernel_from_json(meta["kernel"]),
        lik, meta["n_train"], meta["z_trainable"],
    )
    state = template.from_unconstrained({k: jnp.asarray(v) for k, v in params.items()}).to_numpy()
    index = None
    if neighbors_arr is not None:
        index = FixedZIndex(neighbors_arr, meta["index"]["H"], meta["index"]["checksum"])
        index.check(state.Z)
    stats = meta["stats"]
    if stats is not None:
        stats = {**stats, **feature}
    return {"state": state, "config": meta["config"], "meta": meta, "index": index, "stats": stats}


# -- timing ---------------------------------------------------------------------


class CachedSVGPPredictor:
    """SVGP prediction with ``K_Z⁻¹`` pieces computed once after training.

    Per test point the cost is ``O(M²)``: ``mean = k a`` and
    ``var = k(x,x) + k B kᵀ`` with ``a = K_Z⁻¹ m`` and
    ``B = K_Z⁻¹ (S - K_Z) K_Z⁻¹``.
    """

    def __init__(self, state: SparseGPState, jitter: float = models.DEFAULT_JITTER):
        st = state.to_numpy()
        K = kernels.kernel_matrix(st.Z, st.Z, st.kernel, xp=np)
        L, _ = linalg.cholesky_with_jitter(K + jitter * np.mean(np.diag(K)) * np.eye(st.M))
        Kinv = np.linalg.solve(L.T, np.linalg.solve(L, np.eye(st.M)))
        S = np.asarray(st.S)
        self.state = st
        self.a = jnp.asarray(Kinv @ st.m)
        self.B = jnp.asarray(Kinv @ (S - K) @ Kinv)
        self._fn = jax.jit(self._predict)

    def _predict(self, X, Z, kernel, a, B):
        Kxz = kernels.kernel_matrix(X, Z, kernel)
        var = kernels.kernel_diag(X, kernel) + jnp.sum((Kxz @ B) * Kxz, axis=1)
        return Kxz @ a, var

    def __call__(self, X):
        return self._fn(jnp.asarray(X), jnp.asarray(self.state.Z), self.state.kernel, self.a, self.B)


class CachedSWSGPPredictor:
    """SWSGP prediction with ``S = L Lᵀ`` formed once after training.

    Per test point the cost is the neighbor search plus ``O(H³)`` for the
    local block, with no dependence on ``M`` beyond the search.
    """

    def __init__(self, state: SparseGPState, H: int, jitter: float = models.DEFAULT_JITTER):
        st = state.to_numpy()
        self.H = min(H, st.M)
        self.kernel_np = kernels.to_numpy(st.kernel)
        self.Z_np = np.asarray(st.Z)
        cf = np.asarray(st.cov_factor)
        cov = cf if st.diagonal else cf @ cf.T
        self.args = jax.device_put((jnp.asarray(st.Z), jnp.asarray(st.m), jnp.asarray(cov), st.kernel))
        self.jitter = jitter
        self._fn = jax.jit(self._predict)

    @staticmethod
    def _predict(X, idx, Z, m, cov, kernel, jitter):
        def one(x, i):
            Zh = Z[i]
            Lk = linalg.jittered_cholesky(kernels.kernel_matrix(Zh, Zh, kernel), jitter)
            kxz = kernels.kernel_matrix(x[None, :], Zh, kernel)
            Sf = cov[i] if cov.ndim == 1 else jnp.linalg.cholesky(cov[i][:, i])
            mean, var = models._marginal(kernels.kernel_diag(x[None, :], kernel), kxz, Lk, m[i], Sf)
            return mean[0], var[0]

        return jax.vmap(one)(X, idx)

    def __call__(self, X):
        X = np.atleast_2d(np.asarray(X, float))
        idx = neighbors.nearest_indices(X, self.Z_np, self.H, self.kernel_np)
        return self._fn(X, idx, *self.args, self.jitter)


def timing_samples(dataset: Dataset, config: TrainConfig, warmup: int = 5, reps: int = 20,
                   test_X: np.ndarray | None = None) -> dict[str, list[float]]:
    """Per-iteration training times and per-test-point prediction times, in ms.

    Training steps include batch sampling and neighbor lookup. SWSGP test
    timings include the neighbor search; SVGP test timings use
    :class:`CachedSVGPPredictor`.
    """
    run = _Run(dataset, config)
    for _ in range(warmup):
        run.step()
    jax.block_until_ready(run.params)
    t1 = []
    for _ in range(reps):
        t0 = time.perf_counter()
        run.step()
        jax.block_until_ready(run.params)
        t1.append(1e3 * (time.perf_counter() - t0))

    state = run.state().to_numpy()
    X = dataset.X[:256] if test_X is None else np.asarray(test_X)
    if config.model == "svgp":
        predictor = CachedSVGPPredictor(state)
        fn = lambda: jax.block_until_ready(predictor(X))
    else:
        predictor = CachedSWSGPPredictor(state, config.H)
        fn = lambda: jax.block_until_ready(predictor(X))
    for _ in range(max(warmup, 1)):
        fn()
    t2 = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        t2.append(1e3 * (time.perf_counter() - t0) / len(X))
    return {"t1": t1, "t2": t2}


def benchmark_step_time(dataset: Dataset, config: TrainConfig, warmup: int = 5, reps: int = 20,
                        test_X: np.ndarray | None = None) -> tuple[float, float]:
    """Median ms per training iteration and median ms per test point."""
    s = timing_samples(dataset, config, warmup, reps, test_X)
    return statistics.median(s["t1"]), statistics.median(s["t2"])
