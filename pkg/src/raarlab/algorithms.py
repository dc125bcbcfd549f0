"""Iterative transform algorithms (HIO, HPR, RAAR, difference map) and a driver.

Every step takes the current real iterate ``u``, magnitude data ``m`` and a
support mask ``D`` and returns the next iterate. Steps accept an optional
``pm`` callable that replaces the exact magnitude projector, which is how the
driver swaps in the smoothed projector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .grid import check_finite, check_same_shape
from .projections import (
    Projector,
    SmoothingConfig,
    check_magnitude,
    check_support,
    error_metric,
    project_magnitude_real,
    project_support,
    project_support_nonneg,
    smoothed_magnitude_step_real,
)


def _magnitude_projector(m, pm: Optional[Projector]) -> Projector:
    if pm is not None:
        return pm
    return lambda u: project_magnitude_real(u, m)


def _check_beta(beta: float, upper_inclusive: bool = True) -> float:
    ok = 0 < beta <= 1 if upper_inclusive else 0 < beta < 1
    if not ok:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    return float(beta)


def hio_step(u, m, D, beta, pm=None) -> np.ndarray:
    """Fienup's hybrid input-output update with support and nonnegativity.

    Keeps ``P_M u`` where ``x`` is in ``D`` and ``P_M u >= 0``; elsewhere
    the iterate is pushed by ``-beta * P_M u``.
    """
    check_same_shape(u, m, D)
    p = _magnitude_projector(m, pm)(u)
    keep = D & (p >= 0)
    return np.where(keep, p, u - beta * p)


def hio_support_step(u, m, D, beta, pm=None) -> np.ndarray:
    """HIO with the support constraint only (branches on ``x in D`` alone)."""
    check_same_shape(u, m, D)
    p = _magnitude_projector(m, pm)(u)
    return np.where(D, p, u - beta * p)


def _relaxed_dr(u, m, D, beta, pm, support_projector) -> np.ndarray:
    # 1/2 (R_A (R_M + (beta - 1) P_M) + I + (1 - beta) P_M), A = S or S+
    check_same_shape(u, m, D)
    p = _magnitude_projector(m, pm)(u)
    rm = 2.0 * p - u
    w = rm + (beta - 1.0) * p
    rw = 2.0 * support_projector(w, D) - w
    return 0.5 * (rw + u + (1.0 - beta) * p)


def dr_relaxed_step(u, m, D, beta, pm=None) -> np.ndarray:
    """Relaxed Douglas-Rachford operator with the support-only constraint.

    Operator form of :func:`hio_support_step`.
    """
    return _relaxed_dr(u, m, D, beta, pm, project_support)


def hpr_step(u, m, D, beta, pm=None) -> np.ndarray:
    """Hybrid projection reflection, fixed-point operator form."""
    return _relaxed_dr(u, m, D, beta, pm, project_support_nonneg)


def hpr_pointwise_step(u, m, D, beta, pm=None) -> np.ndarray:
    """Hybrid projection reflection written as a pointwise case split."""
    check_same_shape(u, m, D)
    p = _magnitude_projector(m, pm)(u)
    rm = 2.0 * p - u
    keep = D & (rm >= (1.0 - beta) * p)
    return np.where(keep, p, u - beta * p)


def raar_step(u, m, D, beta, pm=None) -> np.ndarray:
    """Relaxed averaged alternating reflections, operator form.

    ``beta * 1/2 (R_S+ R_M + I) u + (1 - beta) P_M u``. ``beta = 1`` is plain
    averaged alternating reflections.
    """
    beta = _check_beta(beta)
    check_same_shape(u, m, D)
    p = _magnitude_projector(m, pm)(u)
    rm = 2.0 * p - u
    rsrm = 2.0 * project_support_nonneg(rm, D) - rm
    return beta * 0.5 * (rsrm + u) + (1.0 - beta) * p


def raar_pointwise_step(u, m, D, beta, pm=None) -> np.ndarray:
    """RAAR as a pointwise rule branching on the sign of ``R_M u``.

    Keeps ``P_M u`` where ``x`` is in ``D`` and ``R_M u >= 0``; otherwise
    returns ``beta * u + (1 - 2 beta) * P_M u``.
    """
    beta = _check_beta(beta)
    check_same_shape(u, m, D)
    p = _magnitude_projector(m, pm)(u)
    keep = D & (2.0 * p - u >= 0)
    return np.where(keep, p, beta * u + (1.0 - 2.0 * beta) * p)


@dataclass(frozen=True)
class DifferenceMapParams:
    beta: float
    gamma1: float
    gamma2: float
    convention: str = "standard"

    def __post_init__(self):
        if self.beta == 0:
            raise ValueError("difference map needs beta != 0")
        if self.convention not in ("standard", "printed"):
            raise ValueError(f"unknown convention {self.convention!r}")

    @classmethod
    def hio_equivalent(cls, beta: float, convention: str = "standard") -> "DifferenceMapParams":
        """``gamma1 = -1``, ``gamma2 = 1/beta``."""
        return cls(beta, -1.0, 1.0 / beta, convention)


def difference_map_step(u, m, D, params: DifferenceMapParams, support_kind: str = "S+",
                        pm=None) -> np.ndarray:
    """One difference-map update against the support set ``S`` or ``S+``.

    ``standard``: ``u + beta (P_A f_M(u) - P_M f_A(u))`` with
    ``f_M = (1 + g2) P_M - g2 I`` and ``f_A = (1 + g1) P_A - g1 I``.
    ``printed``: ``u + beta (P_A((1 - g2) P_M - g2 I) u + P_M((1 - g1) P_A - g1 I) u)``.
    """
    check_same_shape(u, m, D)
    if support_kind == "S+":
        pa = lambda v: project_support_nonneg(v, D)  # noqa: E731
    elif support_kind == "S":
        pa = lambda v: project_support(v, D)  # noqa: E731
    else:
        raise ValueError(f"support_kind must be 'S' or 'S+', got {support_kind!r}")
    pmf = _magnitude_projector(m, pm)
    b, g1, g2 = params.beta, params.gamma1, params.gamma2
    pmu, pau = pmf(u), pa(u)
    if params.convention == "standard":
        delta = pa((1 + g2) * pmu - g2 * u) - pmf((1 + g1) * pau - g1 * u)
    else:
        delta = pa((1 - g2) * pmu - g2 * u) + pmf((1 - g1) * pau - g1 * u)
    return u + b * delta


# ---------------------------------------------------------------------------
# relaxation schedules and the driver

@dataclass(frozen=True)
class RelaxationSchedule:
    """Per-iteration relaxation parameter.

    ``static`` holds ``beta0``; ``smooth-step`` rises from ``beta0`` to 1 as
    ``beta0 + (1 - beta0)(1 - exp(-(n / switch_center) ** switch_power))``.
    """

    kind: str = "static"
    beta0: float = 0.75
    switch_center: float = 7.0
    switch_power: float = 3.0

    def __post_init__(self):
        if self.kind not in ("static", "smooth-step"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        _check_beta(self.beta0)
        if self.switch_center <= 0 or self.switch_power <= 0:
            raise ValueError("switch_center and switch_power must be positive")

    @classmethod
    def static(cls, beta: float) -> "RelaxationSchedule":
        return cls("static", beta)

    @classmethod
    def smooth(cls, beta0: float, switch_center: float = 7.0,
               switch_power: float = 3.0) -> "RelaxationSchedule":
        return cls("smooth-step", beta0, switch_center, switch_power)


def beta_at(schedule: RelaxationSchedule, n: int) -> float:
    """Relaxation used to compute iterate ``n + 1`` from iterate ``n``."""
    if n < 0:
        raise ValueError("iteration index must be nonnegative")
    b0 = schedule.beta0
    if schedule.kind == "static":
        return b0
    ramp = 1.0 - math.exp(-((n / schedule.switch_center) ** schedule.switch_power))
    return b0 + (1.0 - b0) * ramp


def _aar(u, m, D, beta, pm=None):
    return raar_step(u, m, D, 1.0, pm=pm)


def _dm(u, m, D, beta, pm=None):
    return difference_map_step(u, m, D, DifferenceMapParams.hio_equivalent(beta), "S+", pm=pm)


STEPS: dict[str, Callable] = {
    "hio": hio_step,
    "hio-support": hio_support_step,
    "hpr": hpr_step,
    "raar": raar_step,
    "aar": _aar,
    "dm": _dm,
}


@dataclass
class IterationState:
    iterate: np.ndarray
    index: int
    beta_current: float
    metric: float = float("nan")


@dataclass
class RunResult:
    states: list[IterationState] = field(default_factory=list)
    final: Optional[np.ndarray] = None

    @property
    def metrics(self) -> np.ndarray:
        return np.array([s.metric for s in self.states])

    @property
    def betas(self) -> np.ndarray:
        return np.array([s.beta_current for s in self.states])


def run(algorithm: str, u0, m, D, schedule: RelaxationSchedule, iterations: int,
        monitor: Optional[Callable[[IterationState], None]] = None,
        smoothing: Optional[SmoothingConfig] = None,
        keep_iterates: bool = True) -> RunResult:
    """Iterate one algorithm from ``u0``.

    Parameters
    ----------
    algorithm : str
        One of ``STEPS``: ``hio``, ``hio-support``, ``hpr``, ``raar``, ``aar``,
        ``dm`` (difference map with ``gamma1 = -1``, ``gamma2 = 1/beta``).
    u0, m, D : ndarray
        Initial real iterate, magnitude data (Hermitian-symmetric), support.
    schedule : RelaxationSchedule
        Step ``n`` (producing iterate ``n + 1``) uses ``beta_at(schedule, n)``.
    iterations : int
        Number of steps, at least 1.
    monitor : callable, optional
        Called with each new :class:`IterationState`.
    smoothing : SmoothingConfig, optional
        If given, every magnitude projection inside the steps is replaced by
        the smoothed step. The monitored error metric always uses the exact
        projector.
    keep_iterates : bool
        Store every iterate in the returned states; otherwise only the final
        one is kept.
    """
    try:
        step = STEPS[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {sorted(STEPS)}") from None
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    u = np.asarray(u0, dtype=float)
    m = check_magnitude(m, u.shape, hermitian=True)
    D = check_support(D, u.shape)
    pm = None
    if smoothing is not None:
        pm = lambda v: smoothed_magnitude_step_real(v, m, smoothing)  # noqa: E731

    result = RunResult()
    for n in range(iterations):
        beta = beta_at(schedule, n)
        u = check_finite(step(u, m, D, beta, pm=pm), "iterate")
        state = IterationState(u if keep_iterates else None, n + 1, beta, error_metric(u, m, D))
        result.states.append(state)
        if monitor is not None:
            monitor(state)
    result.final = u
    return result
