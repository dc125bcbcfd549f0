"""Noisy-data benchmark: synthetic object, magnitude data, noise and trials."""
from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.ndimage import gaussian_filter

from .algorithms import RelaxationSchedule, run
from .grid import (
    DimensionError,
    forward_transform,
    hermitian_flip,
    norm,
    write_pgm,
)
from .projections import (
    SmoothingConfig,
    centered_support,
    check_support,
    error_metric,
    project_magnitude_real,
    project_support_nonneg,
    to_db,
)

__all__ = [
    "AlgorithmConfig", "ExperimentSpec", "NoiseConfig", "SynthesizedData", "TrialRecord",
    "TrialsResult", "add_noise", "error_metric", "noise_field", "run_trials",
    "synthetic_object", "synthesize_data", "snapshot", "write_aggregate_csv", "plot_aggregate_svg",
]


def synthetic_object(size: int = 38, seed: int = 0, smoothness: float = 2.0) -> np.ndarray:
    """Deterministic nonnegative texture: a smoothed Gaussian random field in [0, 1]."""
    rng = np.random.default_rng(seed)
    field_ = gaussian_filter(rng.standard_normal((size, size)), smoothness, mode="wrap")
    field_ -= field_.min()
    return field_ / field_.max()


@dataclass(frozen=True)
class AlgorithmConfig:
    algorithm: str
    schedule: RelaxationSchedule

    @property
    def label(self) -> str:
        s = self.schedule
        if s.kind == "static":
            return f"{self.algorithm}_b{s.beta0:g}"
        return f"{self.algorithm}_smooth_b{s.beta0:g}"


@dataclass
class ExperimentSpec:
    object: Optional[np.ndarray] = None
    object_size: int = 38
    pad_dims: tuple = (128, 128)
    support_dims: tuple = (64, 64)
    snr_db: float = 34.0
    trials: int = 100
    iterations: int = 100
    configs: Sequence[AlgorithmConfig] = ()
    seed: int = 0
    smoothed: bool = True
    epsilon_scale: float = 1e-8
    init_norm: str = "data"

    def resolved_object(self) -> np.ndarray:
        if self.object is not None:
            obj = np.asarray(self.object, dtype=float)
        else:
            obj = synthetic_object(self.object_size, self.seed)
        if np.any(obj < 0):
            raise ValueError("object must be nonnegative")
        return obj


@dataclass
class SynthesizedData:
    object: np.ndarray
    magnitude: np.ndarray
    support: np.ndarray
    initial_guess: np.ndarray


def _embed_centered(obj: np.ndarray, dims) -> np.ndarray:
    if obj.ndim != len(dims) or any(o > d for o, d in zip(obj.shape, dims)):
        raise DimensionError(f"object {obj.shape} does not fit in {tuple(dims)}")
    out = np.zeros(tuple(dims))
    index = tuple(slice((d - o) // 2, (d - o) // 2 + o) for o, d in zip(obj.shape, dims))
    out[index] = obj
    return out


def symmetric_magnitude(u) -> np.ndarray:
    """``|F u|`` averaged with its index reflection so ``m(xi) = m(-xi)`` holds exactly."""
    m = np.abs(forward_transform(u))
    return 0.5 * (m + hermitian_flip(m))


def initial_guess(D, target_norm: float = 1.0) -> np.ndarray:
    """Characteristic function of the support scaled to ``target_norm``."""
    chi = D.astype(float)
    return chi * (target_norm / norm(chi))


def synthesize_data(spec: ExperimentSpec) -> SynthesizedData:
    """Padded object, noiseless magnitudes, support and the initial guess.

    The initial guess has norm ``||m||`` (``init_norm='data'``) or 1
    (``init_norm='unit'``).
    """
    padded = _embed_centered(spec.resolved_object(), spec.pad_dims)
    D = check_support(centered_support(spec.pad_dims, spec.support_dims), padded.shape)
    if np.any(padded[~D] != 0):
        raise ValueError("object extends beyond the support")
    m = symmetric_magnitude(padded)
    if spec.init_norm == "data":
        u0 = initial_guess(D, norm(m))
    elif spec.init_norm == "unit":
        u0 = initial_guess(D, 1.0)
    else:
        raise ValueError(f"init_norm must be 'data' or 'unit', got {spec.init_norm!r}")
    return SynthesizedData(padded, m, D, u0)


# ---------------------------------------------------------------------------
# noise

def _self_conjugate_count(shape) -> int:
    return int(np.prod([2 if d % 2 == 0 else 1 for d in shape]))


@dataclass(frozen=True)
class NoiseConfig:
    """Gaussian noise level (before symmetrization) and RNG seed."""

    sigma: float
    seed: object = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    @classmethod
    def from_snr(cls, m, snr_db: float, seed=0) -> "NoiseConfig":
        """Pick sigma so that ``E||eta||^2`` matches ``20 log10(||m|| / ||eta||) = snr_db``.

        Symmetrizing halves the variance except at self-conjugate frequencies.
        """
        m = np.asarray(m)
        n_self = _self_conjugate_count(m.shape)
        dof = n_self + 0.5 * (m.size - n_self)
        return cls(norm(m) * 10.0 ** (-snr_db / 20.0) / np.sqrt(dof), seed)


def noise_field(shape, cfg: NoiseConfig) -> np.ndarray:
    """Symmetric noise ``(eta(xi) + eta(-xi)) / 2`` with i.i.d. Gaussian ``eta``."""
    rng = np.random.default_rng(cfg.seed)
    eta = rng.normal(0.0, cfg.sigma, size=tuple(shape)) if cfg.sigma > 0 else np.zeros(shape)
    return 0.5 * (eta + hermitian_flip(eta))


def add_noise(m, cfg: NoiseConfig) -> np.ndarray:
    """Noisy magnitudes ``max(m + eta, 0)``."""
    m = np.asarray(m, dtype=float)
    if cfg.sigma == 0:
        return m.copy()
    return np.maximum(m + noise_field(m.shape, cfg), 0.0)


def realized_snr_db(m, eta) -> float:
    return 20.0 * np.log10(norm(m) / norm(eta))


# ---------------------------------------------------------------------------
# trials

@dataclass
class TrialRecord:
    trial_id: int
    label: str
    values: np.ndarray
    final: Optional[np.ndarray] = None

    @property
    def db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(self.values)


@dataclass
class TrialsResult:
    records: dict = field(default_factory=dict)  # label -> list[TrialRecord]

    def mean(self, label: str) -> np.ndarray:
        recs = sorted(self.records[label], key=lambda r: r.trial_id)
        return np.mean(np.stack([r.values for r in recs]), axis=0)

    def mean_db(self, label: str) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(self.mean(label))

    @property
    def labels(self) -> list[str]:
        return list(self.records)


def trial_noise(data: SynthesizedData, spec: ExperimentSpec, trial_id: int) -> np.ndarray:
    cfg = NoiseConfig.from_snr(data.magnitude, spec.snr_db, seed=[spec.seed, trial_id])
    return add_noise(data.magnitude, cfg)


def _one_trial(args):
    spec, data, trial_id, keep_final = args
    m = trial_noise(data, spec, trial_id)
    smoothing = SmoothingConfig.for_data(m, spec.epsilon_scale) if spec.smoothed else None
    out = []
    for cfg in spec.configs:
        res = run(cfg.algorithm, data.initial_guess, m, data.support, cfg.schedule,
                  spec.iterations, smoothing=smoothing, keep_iterates=False)
        out.append(TrialRecord(trial_id, cfg.label, res.metrics,
                               res.final if keep_final else None))
    return out


def run_trials(spec: ExperimentSpec, workers: int = 1, keep_final: bool = False,
               data: Optional[SynthesizedData] = None) -> TrialsResult:
    """Run every configuration on ``spec.trials`` noise realizations.

    Trial ``k`` draws its noise from the seed pair ``(spec.seed, k)`` and every
    trial starts from the same initial guess, so results do not depend on
    execution order or on ``workers``.
    """
    if spec.trials < 1 or spec.iterations < 1:
        raise ValueError("trials and iterations must be at least 1")
    if not spec.configs:
        raise ValueError("no algorithm configurations given")
    data = synthesize_data(spec) if data is None else data
    jobs = [(spec, data, k, keep_final) for k in range(spec.trials)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            batches = list(pool.map(_one_trial, jobs))
    else:
        batches = [_one_trial(j) for j in jobs]
    result = TrialsResult({cfg.label: [] for cfg in spec.configs})
    for batch in batches:
        for rec in batch:
            result.records[rec.label].append(rec)
    for recs in result.records.values():
        recs.sort(key=lambda r: r.trial_id)
    return result


# ---------------------------------------------------------------------------
# output

def _comment_block(header) -> str:
    if not header:
        return ""
    lines = header.splitlines() if isinstance(header, str) else list(header)
    return "".join(f"# {ln}\n" for ln in lines)


def aggregate_csv_text(result: TrialsResult, header=None) -> str:
    buf = io.StringIO()
    buf.write(_comment_block(header))
    writer = csv.writer(buf, lineterminator="\n")
    labels = result.labels
    cols = ["iteration"]
    for lab in labels:
        cols += [f"{lab}:mean_E", f"{lab}:mean_E_db"]
    writer.writerow(cols)
    means = {lab: result.mean(lab) for lab in labels}
    n_iter = len(next(iter(means.values())))
    for i in range(n_iter):
        row = [i + 1]
        for lab in labels:
            v = float(means[lab][i])
            row += [repr(v), repr(to_db(v))]
        writer.writerow(row)
    return buf.getvalue()


def write_aggregate_csv(path, result: TrialsResult, header=None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(aggregate_csv_text(result, header))


def trace_csv_text(run_id: str, states, header=None) -> str:
    buf = io.StringIO()
    buf.write(_comment_block(header))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["run_id", "iteration", "beta", "E_splus", "E_splus_db"])
    for s in states:
        writer.writerow([run_id, s.index, repr(float(s.beta_current)),
                         repr(float(s.metric)), repr(to_db(s.metric))])
    return buf.getvalue()


def plot_aggregate_svg(path, result: TrialsResult, title: str = "", header=None) -> None:
    """Mean error metric in dB against iteration, one line per configuration."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "raarlab"}):
        fig, ax = plt.subplots(figsize=(6, 4.5))
        for lab in result.labels:
            y = result.mean_db(lab)
            ax.plot(np.arange(1, len(y) + 1), y, label=lab)
        ax.set_xlabel("iteration")
        ax.set_ylabel("mean E_S+ (dB)")
        if title:
            ax.set_title(title)
        ax.legend(fontsize="small")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None,
                                                  "Description": header or None})
        plt.close(fig)


def snapshot(iterate, n: int, m, D, out_dir, prefix: str = "iterate", png: bool = False,
             header=None) -> list[str]:
    """Write the iterate and its ``P_S+ P_M`` shadow as 16-bit PGM images.

    Both are clipped to ``[0, max]``. Returns the written paths.
    """
    u = np.asarray(iterate, dtype=float)
    if u.ndim != 2:
        raise DimensionError("snapshots need a 2-D grid")
    shadow = project_support_nonneg(project_magnitude_real(u, m), D)
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for tag, img in (("", u), ("_shadow", shadow)):
        base = os.path.join(out_dir, f"{prefix}_it{n}{tag}")
        write_pgm(base + ".pgm", img, header=header)
        paths.append(base + ".pgm")
        if png:
            import matplotlib

            matplotlib.use("Agg")
            import matplotlib.pyplot as plt

            top = max(float(img.max()), 0.0)
            plt.imsave(base + ".png", np.clip(img, 0, top), cmap="gray", vmin=0,
                       vmax=top if top > 0 else 1.0)
            paths.append(base + ".png")
    return paths
