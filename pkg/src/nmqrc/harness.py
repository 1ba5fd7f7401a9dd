"""Experiment orchestration: config files, seed sweeps, aggregation, outputs.

A run is fully determined by an ExperimentConfig. Config files are flat JSON
key-value documents with an explicit ``schema_version``; unknown keys and
keys that do not apply to the selected task are rejected outright, so a
typo in a regime parameter cannot silently skew a comparison.

Seed policy: the Hamiltonian realization for seed k uses k directly, while
the benchmark input stream for seed k is drawn from a derived stream
(SeedSequence([k, 1])) that is shared across regimes, so regime comparisons
at a given seed see identical inputs. This is echoed in run_meta.json.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields as dc_fields
from pathlib import Path

import numpy as np

from .errors import ConfigError, DivergenceError, NumericalError
from .esp import EspRecord, WindowStats, backflow_count, dual_trajectory, records_to_csv, window_stats
from .hamiltonian import ReservoirParams, build_hamiltonian, export_couplings
from .linalg import pseudoinverse
from .readout import squared_correlation
from .reservoir import ReservoirConfig, run_trajectory
from .tasks import NARMA_DEFAULT_ORDERS, NARMA_INPUT_MAX, SplitSpec, gen_uniform_inputs, narma_series, scale_inputs, stm_targets

CONFIG_SCHEMA_VERSION = 1
TASKS = ("stm", "narma", "esp")

# (alpha, beta) presets; esp reuses the stm table.
STM_REGIME_PRESETS = {"markov": (10.0, 0.01), "non_markov": (0.01, 10.0), "intermediate": (1.0, 1.0)}
NARMA_REGIME_PRESETS = {"markov": (5.0, 0.1), "non_markov": (0.1, 5.0), "intermediate": (1.0, 1.0)}

_INPUT_STREAM_TAG = 1


@dataclass(frozen=True)
class RegimeSpec:
    """A labeled (alpha, beta) point; ``n_env`` overrides the register split
    (used by the env-free baseline regime ``fn``)."""

    label: str
    alpha: float
    beta: float
    n_env: int | None = None

    def __post_init__(self):
        if not self.label:
            raise ConfigError("regime label must be non-empty")
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise ConfigError(f"regime {self.label!r}: {name} must be finite and >= 0, got {value}")


def parse_regime(text: str, task: str) -> RegimeSpec:
    """Parse a preset name ('markov', 'non_markov', 'intermediate', 'fn')
    or a custom 'label:alpha:beta' triple."""
    presets = NARMA_REGIME_PRESETS if task == "narma" else STM_REGIME_PRESETS
    if text == "fn":
        return RegimeSpec(label="fn", alpha=0.0, beta=0.0, n_env=0)
    if text in presets:
        alpha, beta = presets[text]
        return RegimeSpec(label=text, alpha=alpha, beta=beta)
    parts = text.split(":")
    if len(parts) == 3:
        label, alpha_s, beta_s = parts
        try:
            return RegimeSpec(label=label, alpha=float(alpha_s), beta=float(beta_s))
        except ValueError as exc:
            raise ConfigError(f"regimes: cannot parse {text!r}: {exc}") from exc
    raise ConfigError(
        f"regimes: {text!r} is neither a preset ({', '.join(sorted(presets))}, fn) "
        "nor a label:alpha:beta triple"
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one run, including output layout."""

    task: str
    n_sys: int = 4
    n_env: int = 3
    j0: float = 1.0
    h_sys: float = 0.5
    h_env: float | None = None  # None: use alpha * j0 per regime
    tau: float = 0.5
    v: int = 50
    observables: str = "z_only"
    multiplex: str = "per_node"
    split: SplitSpec = field(default_factory=lambda: SplitSpec(1000, 3000, 1000))
    seeds: tuple[int, ...] = tuple(range(10))
    regimes: tuple[RegimeSpec, ...] = ()
    tau_d_max: int = 20
    orders: tuple[int, ...] = NARMA_DEFAULT_ORDERS
    esp_steps: int = 2500
    window: tuple[int, int] = (1500, 2500)
    output_dir: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.task!r}")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        for s in self.seeds:
            if not isinstance(s, int) or isinstance(s, bool) or s < 0:
                raise ConfigError(f"seeds must be non-negative integers, got {s!r}")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        if not self.regimes:
            raise ConfigError("regimes must be non-empty")
        labels = [r.label for r in self.regimes]
        if len(set(labels)) != len(labels):
            raise ConfigError("regime labels must be distinct")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.h_env is not None and not np.isfinite(self.h_env):
            raise ConfigError("h_env must be finite when given")
        # Probe the module-level constructors so any invalid field fails here,
        # before a run starts, with the module's own message.
        try:
            ReservoirConfig(tau=self.tau, v=self.v, observables=self.observables, multiplex=self.multiplex)
            for regime in self.regimes:
                make_params(self, regime, seed=0)
        except (ConfigError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.task == "stm":
            if self.tau_d_max < 0:
                raise ConfigError(f"tau_d_max must be >= 0, got {self.tau_d_max}")
            if self.tau_d_max >= self.split.washout:
                raise ConfigError(
                    f"tau_d_max ({self.tau_d_max}) must be smaller than the washout "
                    f"({self.split.washout}) so every scored step has a defined target"
                )
        if self.task == "narma":
            if not self.orders:
                raise ConfigError("orders must be non-empty")
            for n in self.orders:
                if not isinstance(n, int) or isinstance(n, bool) or n < 1:
                    raise ConfigError(f"orders must be integers >= 1, got {n!r}")
            if max(self.orders) > self.split.washout:
                raise ConfigError(
                    f"max order ({max(self.orders)}) exceeds the washout ({self.split.washout}); "
                    "zero-initialized targets would leak into training"
                )
        if self.task == "esp":
            if self.esp_steps < 1:
                raise ConfigError(f"esp_steps must be >= 1, got {self.esp_steps}")
            start, stop = self.window
            if not (0 <= start < stop <= self.esp_steps + 1):
                raise ConfigError(
                    f"window [{start}, {stop}) must satisfy 0 <= start < stop <= esp_steps + 1"
                )


def make_params(cfg: ExperimentConfig, regime: RegimeSpec, seed: int) -> ReservoirParams:
    """Resolve a regime against the config; h_env defaults to alpha * j0."""
    n_env = cfg.n_env if regime.n_env is None else regime.n_env
    h_env = cfg.h_env if cfg.h_env is not None else regime.alpha * cfg.j0
    return ReservoirParams(
        n_sys=cfg.n_sys,
        n_env=n_env,
        alpha=regime.alpha,
        beta=regime.beta,
        h_sys=cfg.h_sys,
        h_env=h_env,
        seed=seed,
        j0=cfg.j0,
    )


def reservoir_config(cfg: ExperimentConfig) -> ReservoirConfig:
    return ReservoirConfig(tau=cfg.tau, v=cfg.v, observables=cfg.observables, multiplex=cfg.multiplex)


def input_stream(seed: int, length: int, lo: float, hi: float) -> np.ndarray:
    """Benchmark input stream for a seed; shared across regimes by design."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), _INPUT_STREAM_TAG]))
    return gen_uniform_inputs(length, lo, hi, rng)


# ---------------------------------------------------------------------------
# defaults and config files

_PAPER_DEFAULTS = {
    "stm": dict(n_sys=4, n_env=3, h_sys=0.5, tau=0.5, v=50, observables="z_only",
                split=SplitSpec(1000, 3000, 1000), seeds=tuple(range(10)),
                regime_names=("markov", "non_markov", "intermediate"), tau_d_max=20),
    "narma": dict(n_sys=5, n_env=2, h_sys=1.0, tau=0.5, v=20, observables="z_and_zz",
                  split=SplitSpec(1000, 3000, 1000), seeds=tuple(range(10)),
                  regime_names=("fn", "markov", "non_markov", "intermediate"),
                  orders=NARMA_DEFAULT_ORDERS),
    "esp": dict(n_sys=4, n_env=3, h_sys=0.5, tau=0.5, v=50, observables="z_only",
                seeds=(0, 1, 2), regime_names=("markov", "non_markov", "intermediate"),
                esp_steps=2500, window=(1500, 2500)),
}

_QUICK_OVERRIDES = {
    "stm": dict(v=10, split=SplitSpec(200, 600, 200), seeds=(0, 1, 2), tau_d_max=20),
    "narma": dict(v=10, split=SplitSpec(200, 600, 200), seeds=(0, 1, 2)),
    "esp": dict(v=10, seeds=(0, 1, 2), esp_steps=600, window=(300, 600)),
}

_COMMON_KEYS = {
    "schema_version", "task", "n_sys", "n_env", "j0", "h_sys", "h_env", "tau", "v",
    "observables", "multiplex", "seeds", "regimes", "output_dir", "workers",
}
_TASK_KEYS = {
    "stm": {"washout", "train", "val", "tau_d_max"},
    "narma": {"washout", "train", "val", "orders"},
    "esp": {"esp_steps", "window_start", "window_end"},
}


def default_config(task: str, scale: str = "paper") -> ExperimentConfig:
    """Built-in per-task protocol parameters at paper or quick (CI) scale."""
    if task not in TASKS:
        raise ConfigError(f"task must be one of {TASKS}, got {task!r}")
    if scale not in ("paper", "quick"):
        raise ConfigError(f"scale must be 'paper' or 'quick', got {scale!r}")
    values = dict(_PAPER_DEFAULTS[task])
    if scale == "quick":
        values.update(_QUICK_OVERRIDES[task])
    regime_names = values.pop("regime_names")
    regimes = tuple(parse_regime(name, task) for name in regime_names)
    return ExperimentConfig(task=task, regimes=regimes, **values)


def _want_int(key, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    return value


def _want_num(key, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    return float(value)


def _want_str(key, value) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{key}: expected a string, got {value!r}")
    return value


def _want_int_list(key, value) -> tuple[int, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{key}: expected a non-empty list of integers, got {value!r}")
    return tuple(_want_int(key, x) for x in value)


def _want_str_list(key, value) -> tuple[str, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{key}: expected a non-empty list of strings, got {value!r}")
    return tuple(_want_str(key, x) for x in value)


def load_config(
    path=None,
    task: str | None = None,
    scale: str | None = None,
    seeds_override: int | None = None,
    output_override: str | None = None,
    workers_override: int | None = None,
) -> ExperimentConfig:
    """Resolve a config: task defaults, then the file, then explicit overrides."""
    data: dict = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        version = data.get("schema_version")
        if version != CONFIG_SCHEMA_VERSION:
            raise ConfigError(
                f"schema_version: expected {CONFIG_SCHEMA_VERSION}, got {version!r}"
            )
        file_task = data.get("task")
        if file_task is not None:
            _want_str("task", file_task)
            if task is not None and file_task != task:
                raise ConfigError(f"task: config file says {file_task!r} but {task!r} was requested")
            task = file_task
    if task is None:
        raise ConfigError("no task given (pass one or set 'task' in the config file)")
    if task not in TASKS:
        raise ConfigError(f"task must be one of {TASKS}, got {task!r}")

    allowed = _COMMON_KEYS | _TASK_KEYS[task]
    other_task_keys = {k for keys in _TASK_KEYS.values() for k in keys}
    for key in data:
        if key in allowed:
            continue
        if key in other_task_keys:
            raise ConfigError(f"{key}: not applicable to task {task!r}")
        raise ConfigError(f"{key}: unknown config key")

    base = default_config(task, "paper")
    kwargs = {f.name: getattr(base, f.name) for f in dc_fields(ExperimentConfig)}

    split = kwargs["split"]
    washout, train, val = split.washout, split.train, split.val
    window = kwargs["window"]
    win_start, win_stop = window

    for key, value in data.items():
        if key in ("schema_version", "task"):
            continue
        elif key in ("n_sys", "n_env", "v", "workers", "tau_d_max", "esp_steps"):
            kwargs[key] = _want_int(key, value)
        elif key in ("j0", "h_sys", "tau"):
            kwargs[key] = _want_num(key, value)
        elif key == "h_env":
            kwargs[key] = None if value is None else _want_num(key, value)
        elif key in ("observables", "multiplex"):
            kwargs[key] = _want_str(key, value)
        elif key == "output_dir":
            kwargs[key] = _want_str(key, value)
        elif key == "seeds":
            kwargs[key] = _want_int_list(key, value)
        elif key == "orders":
            kwargs[key] = _want_int_list(key, value)
        elif key == "regimes":
            kwargs[key] = tuple(parse_regime(t, task) for t in _want_str_list(key, value))
        elif key == "washout":
            washout = _want_int(key, value)
        elif key == "train":
            train = _want_int(key, value)
        elif key == "val":
            val = _want_int(key, value)
        elif key == "window_start":
            win_start = _want_int(key, value)
        elif key == "window_end":
            win_stop = _want_int(key, value)

    if scale is not None:
        if scale not in ("paper", "quick"):
            raise ConfigError(f"scale must be 'paper' or 'quick', got {scale!r}")
        if scale == "quick":
            for key, value in _QUICK_OVERRIDES[task].items():
                if key == "split":
                    washout, train, val = value.washout, value.train, value.val
                elif key == "window":
                    win_start, win_stop = value
                else:
                    kwargs[key] = value

    if seeds_override is not None:
        if seeds_override < 1:
            raise ConfigError(f"seed count override must be >= 1, got {seeds_override}")
        kwargs["seeds"] = tuple(range(seeds_override))
    if output_override is not None:
        kwargs["output_dir"] = output_override
    if workers_override is not None:
        kwargs["workers"] = workers_override

    try:
        kwargs["split"] = SplitSpec(washout, train, val)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    kwargs["window"] = (win_start, win_stop)
    kwargs["task"] = task
    return ExperimentConfig(**kwargs)


def _regime_text(r: RegimeSpec, task: str) -> str:
    """Inverse of parse_regime where possible, else a label:alpha:beta triple."""
    presets = NARMA_REGIME_PRESETS if task == "narma" else STM_REGIME_PRESETS
    if r.label == "fn" and r.n_env == 0:
        return "fn"
    if r.n_env is None and presets.get(r.label) == (r.alpha, r.beta):
        return r.label
    return f"{r.label}:{r.alpha}:{r.beta}"


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Flat, file-schema-shaped echo of a resolved config."""
    doc = {
        "schema_version": CONFIG_SCHEMA_VERSION,
        "task": cfg.task,
        "n_sys": cfg.n_sys,
        "n_env": cfg.n_env,
        "j0": cfg.j0,
        "h_sys": cfg.h_sys,
        "h_env": cfg.h_env,
        "tau": cfg.tau,
        "v": cfg.v,
        "observables": cfg.observables,
        "multiplex": cfg.multiplex,
        "seeds": list(cfg.seeds),
        "regimes": [_regime_text(r, cfg.task) for r in cfg.regimes],
        "output_dir": cfg.output_dir,
        "workers": cfg.workers,
    }
    if cfg.task in ("stm", "narma"):
        doc.update(washout=cfg.split.washout, train=cfg.split.train, val=cfg.split.val)
    if cfg.task == "stm":
        doc["tau_d_max"] = cfg.tau_d_max
    if cfg.task == "narma":
        doc["orders"] = list(cfg.orders)
    if cfg.task == "esp":
        doc.update(esp_steps=cfg.esp_steps, window_start=cfg.window[0], window_end=cfg.window[1])
    return doc


# ---------------------------------------------------------------------------
# sweep execution

@dataclass(frozen=True)
class SweepResult:
    """Per-seed scores at one sweep point, with mean and population std."""

    axis: float
    regime: str
    scores: tuple[float, ...]
    mean: float
    std: float

    @property
    def n_seeds(self) -> int:
        return len(self.scores)


@dataclass(frozen=True)
class EspRunResult:
    """One trajectory pair: full record stream plus window/backflow summary."""

    regime: str
    seed: int
    records: tuple[EspRecord, ...]
    stats: WindowStats
    backflow_sys: tuple[int, float]


def aggregate(scores) -> tuple[float, float]:
    """(arithmetic mean, population standard deviation)."""
    arr = np.asarray(list(scores), dtype=float)
    if arr.size == 0:
        raise ValueError("no scores to aggregate")
    if not np.all(np.isfinite(arr)):
        raise ValueError("scores contain non-finite entries")
    return float(arr.mean()), float(arr.std())


def _run_jobs(cfg: ExperimentConfig, fn, jobs: list) -> list:
    if cfg.workers == 1 or len(jobs) == 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(cfg.workers, len(jobs))) as pool:
        return list(pool.map(fn, jobs))


def _stm_job(job):
    cfg, regime, seed = job
    try:
        real = build_hamiltonian(make_params(cfg, regime, seed))
        inputs = input_stream(seed, cfg.split.total, 0.0, 1.0)
        feats, _ = run_trajectory(real, inputs, reservoir_config(cfg))
    except (NumericalError, ValueError) as exc:
        raise NumericalError(f"stm run failed (regime={regime.label}, seed={seed}): {exc}") from exc
    x = feats.values
    x_train, x_val = x[cfg.split.train_slice], x[cfg.split.val_slice]
    pinv_train = pseudoinverse(x_train)
    scores = {}
    for tau_d in range(cfg.tau_d_max + 1):
        try:
            y = stm_targets(inputs, tau_d)
            w = pinv_train @ y[cfg.split.train_slice]
            scores[tau_d] = squared_correlation(y[cfg.split.val_slice], x_val @ w)
        except (NumericalError, ValueError) as exc:
            raise NumericalError(
                f"stm scoring failed (regime={regime.label}, seed={seed}, tau_d={tau_d}): {exc}"
            ) from exc
    return regime.label, seed, scores, export_couplings(real)


def _narma_job(job):
    cfg, regime, seed = job
    try:
        real = build_hamiltonian(make_params(cfg, regime, seed))
        u = input_stream(seed, cfg.split.total, 0.0, NARMA_INPUT_MAX)
        feats, _ = run_trajectory(real, scale_inputs(u), reservoir_config(cfg))
    except (NumericalError, ValueError) as exc:
        raise NumericalError(f"narma run failed (regime={regime.label}, seed={seed}): {exc}") from exc
    x = feats.values
    x_train, x_val = x[cfg.split.train_slice], x[cfg.split.val_slice]
    pinv_train = pseudoinverse(x_train)
    scores = {}
    for order in cfg.orders:
        try:
            y = narma_series(u, order)
        except DivergenceError as exc:
            raise DivergenceError(
                f"narma series diverged (regime={regime.label}, seed={seed}, order={order}): {exc}"
            ) from exc
        w = pinv_train @ y[cfg.split.train_slice]
        scores[order] = squared_correlation(y[cfg.split.val_slice], x_val @ w)
    return regime.label, seed, scores, export_couplings(real)


def _esp_job(job):
    cfg, regime, seed = job
    try:
        real = build_hamiltonian(make_params(cfg, regime, seed))
        inputs = input_stream(seed, cfg.esp_steps, 0.0, 1.0)
        records = dual_trajectory(real, inputs, reservoir_config(cfg))
    except (NumericalError, ValueError) as exc:
        raise NumericalError(f"esp run failed (regime={regime.label}, seed={seed}): {exc}") from exc
    stats = window_stats(records, *cfg.window)
    backflow = backflow_count(records, use="sys")
    return regime.label, seed, tuple(records), stats, backflow, export_couplings(real)


def _sweep_results(cfg: ExperimentConfig, per_job: dict, axes) -> list[SweepResult]:
    out = []
    for regime in cfg.regimes:
        for axis in axes:
            scores = tuple(per_job[(regime.label, seed)][axis] for seed in cfg.seeds)
            mean, std = aggregate(scores)
            out.append(SweepResult(axis=axis, regime=regime.label, scores=scores, mean=mean, std=std))
    return out


def run_stm(cfg: ExperimentConfig) -> list[SweepResult]:
    """Delayed-reproduction sweep: one trajectory per (regime, seed), one fit
    per delay on the shared feature rows."""
    _require_task(cfg, "stm")
    jobs = [(cfg, regime, seed) for regime in cfg.regimes for seed in cfg.seeds]
    raw = _run_jobs(cfg, _stm_job, jobs)
    per_job = {(label, seed): scores for label, seed, scores, _ in raw}
    couplings = {(label, seed): doc for label, seed, _, doc in raw}
    results = _sweep_results(cfg, per_job, range(cfg.tau_d_max + 1))
    if cfg.output_dir is not None:
        _write_sweep_outputs(cfg, results, couplings,
                             header=["tau_d", "regime", "mean_cstm", "std_cstm", "n_seeds"],
                             row_of=lambda r: [r.axis, r.regime, repr(r.mean), repr(r.std), r.n_seeds])
    return results


def run_narma(cfg: ExperimentConfig) -> list[SweepResult]:
    """Autoregressive-series sweep over orders; the trajectory for a seed is
    shared by every order (targets change, features do not)."""
    _require_task(cfg, "narma")
    jobs = [(cfg, regime, seed) for regime in cfg.regimes for seed in cfg.seeds]
    raw = _run_jobs(cfg, _narma_job, jobs)
    per_job = {(label, seed): scores for label, seed, scores, _ in raw}
    couplings = {(label, seed): doc for label, seed, _, doc in raw}
    results = _sweep_results(cfg, per_job, list(cfg.orders))
    if cfg.output_dir is not None:
        _write_sweep_outputs(cfg, results, couplings,
                             header=["order", "tau", "regime", "mean_r2", "std_r2", "n_seeds"],
                             row_of=lambda r: [r.axis, repr(cfg.tau), r.regime, repr(r.mean), repr(r.std), r.n_seeds])
    return results


def run_esp(cfg: ExperimentConfig) -> list[EspRunResult]:
    """Dual-trajectory diagnostics per (regime, seed), with record streams."""
    _require_task(cfg, "esp")
    jobs = [(cfg, regime, seed) for regime in cfg.regimes for seed in cfg.seeds]
    raw = _run_jobs(cfg, _esp_job, jobs)
    results = [
        EspRunResult(regime=label, seed=seed, records=records, stats=stats, backflow_sys=backflow)
        for label, seed, records, stats, backflow, _ in raw
    ]
    if cfg.output_dir is not None:
        root = Path(cfg.output_dir) / cfg.task
        _write_meta(cfg, root)
        couplings = {(label, seed): doc for label, seed, _, _, _, doc in raw}
        for regime in cfg.regimes:
            regime_dir = root / regime.label
            regime_dir.mkdir(parents=True, exist_ok=True)
            _write_couplings(regime_dir, cfg, regime, couplings)
            with open(regime_dir / "summary.csv", "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["seed", "regime", "window_mean_sqnorm", "window_max_sqnorm", "backflow_count_sys"])
                for res in results:
                    if res.regime != regime.label:
                        continue
                    writer.writerow([res.seed, res.regime, repr(res.stats.mean_sqnorm),
                                     repr(res.stats.max_sqnorm), res.backflow_sys[0]])
            for res in results:
                if res.regime == regime.label:
                    records_to_csv(res.records, regime_dir / f"records_seed{res.seed}.csv")
    return results


def _require_task(cfg: ExperimentConfig, task: str) -> None:
    if cfg.task != task:
        raise ConfigError(f"config task is {cfg.task!r} but run_{task} was called")


def _write_meta(cfg: ExperimentConfig, root: Path) -> None:
    root.mkdir(parents=True, exist_ok=True)
    meta = {
        "config": config_to_dict(cfg),
        "input_stream_policy": (
            "inputs for seed k come from SeedSequence([k, 1]) and are shared "
            "across regimes; realizations use seed k directly"
        ),
    }
    with open(root / "run_meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)


def _write_couplings(regime_dir: Path, cfg: ExperimentConfig, regime: RegimeSpec, couplings: dict) -> None:
    for seed in cfg.seeds:
        with open(regime_dir / f"couplings_seed{seed}.json", "w", encoding="utf-8") as fh:
            json.dump(couplings[(regime.label, seed)], fh, indent=2)


def _write_sweep_outputs(cfg: ExperimentConfig, results: list[SweepResult], couplings: dict,
                         header: list[str], row_of) -> None:
    root = Path(cfg.output_dir) / cfg.task
    _write_meta(cfg, root)
    for regime in cfg.regimes:
        regime_dir = root / regime.label
        regime_dir.mkdir(parents=True, exist_ok=True)
        _write_couplings(regime_dir, cfg, regime, couplings)
        with open(regime_dir / "summary.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for r in results:
                if r.regime == regime.label:
                    writer.writerow(row_of(r))
