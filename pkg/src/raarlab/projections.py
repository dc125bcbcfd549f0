"""Constraint-set projectors, reflectors and the smoothed magnitude projector.

Support masks are boolean arrays (``True`` inside the support ``D``); magnitude
data are nonnegative real arrays with the shape of the grid.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import (
    DimensionError,
    check_same_shape,
    forward_transform,
    inverse_transform,
    is_hermitian_symmetric,
    norm,
    symmetrize_hermitian,
    to_real,
)

Projector = Callable[[np.ndarray], np.ndarray]


def check_support(D, shape=None) -> np.ndarray:
    D = np.asarray(D)
    if D.dtype != bool:
        D = D.astype(bool)
    if not D.any():
        raise ValueError("support mask has no site inside")
    if shape is not None and D.shape != tuple(shape):
        raise DimensionError(f"support shape {D.shape} does not match grid {tuple(shape)}")
    return D


def check_magnitude(m, shape=None, hermitian: bool = False) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if np.any(m < 0) or not np.all(np.isfinite(m)):
        raise ValueError("magnitude data must be finite and nonnegative")
    if shape is not None and m.shape != tuple(shape):
        raise DimensionError(f"magnitude shape {m.shape} does not match grid {tuple(shape)}")
    if hermitian and not is_hermitian_symmetric(m, rtol=1e-12):
        raise ValueError("magnitude data must satisfy m(xi) = m(-xi) for real iterates")
    return m


def centered_support(dims, box) -> np.ndarray:
    """Boolean mask of a ``box``-sized block centred in a ``dims`` lattice."""
    D = np.zeros(tuple(dims), dtype=bool)
    index = []
    for n, b in zip(dims, box):
        if not 0 < b <= n:
            raise ValueError(f"support extent {b} does not fit in {n}")
        start = (n - b) // 2
        index.append(slice(start, start + b))
    D[tuple(index)] = True
    return D


def project_support(u, D) -> np.ndarray:
    """Keep ``u`` on ``D``, zero elsewhere."""
    check_same_shape(u, D)
    return np.where(D, u, 0.0)


def project_support_nonneg(u, D) -> np.ndarray:
    """Projection onto nonnegative functions supported on ``D``."""
    check_same_shape(u, D)
    return np.where(D, np.maximum(u, 0.0), 0.0)


def _spectrum(u) -> np.ndarray:
    s = forward_transform(u)
    if np.isrealobj(u):
        # exact in real arithmetic; keeps phases of rounding-level bins consistent
        s = symmetrize_hermitian(s)
    return s


def project_magnitude(u, m) -> np.ndarray:
    """Replace the Fourier modulus of ``u`` by ``m``, keeping the phase.

    Frequencies where the transform of ``u`` vanishes get modulus ``m`` with
    zero phase. The result is complex; see :func:`project_magnitude_real`.
    """
    check_same_shape(u, m)
    s = _spectrum(u)
    mod = np.abs(s)
    nonzero = mod != 0
    phase = np.divide(s, mod, out=np.ones_like(s), where=nonzero)
    return inverse_transform(m * phase)


def project_magnitude_real(u, m) -> np.ndarray:
    return to_real(project_magnitude(u, m))


def reflect(P: Projector, u) -> np.ndarray:
    """Reflector ``2 P(u) - u``."""
    return 2.0 * P(u) - u


@dataclass(frozen=True)
class SmoothingConfig:
    """Smoothing parameter of the regularized magnitude projector."""

    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")

    @classmethod
    def for_data(cls, m, scale: float = 1e-8) -> "SmoothingConfig":
        """Default ``epsilon = scale * max(m)``."""
        top = float(np.max(m))
        if top <= 0:
            raise ValueError("cannot scale epsilon to all-zero magnitude data")
        return cls(scale * top)


def smoothed_objective(u, m, cfg: SmoothingConfig) -> float:
    r"""Smoothed objective :math:`J_\epsilon(u)`.

    ``0.5 * (||u||**2 - ||F^{-1}(vhat - m)||**2)`` with
    ``vhat = |Fu|**2 / sqrt(|Fu|**2 + eps**2)``.
    """
    check_same_shape(u, m)
    r2 = np.abs(forward_transform(u)) ** 2
    vhat = r2 / np.sqrt(r2 + cfg.epsilon**2)
    return 0.5 * (norm(u) ** 2 - norm(inverse_transform(vhat - m)) ** 2)


def smoothed_magnitude_step(u, m, cfg: SmoothingConfig) -> np.ndarray:
    """Gradient of :func:`smoothed_objective`, a stable stand-in for ``P_M``.

    Computes ``u - F^{-1}((vhat - m) * (r2 + 2 eps^2) / (r2 + eps^2)^{3/2} * Fu)``
    with ``r2 = |Fu|^2``. Returns a complex grid like :func:`project_magnitude`.
    """
    check_same_shape(u, m)
    eps2 = cfg.epsilon**2
    s = _spectrum(u)
    r2 = np.abs(s) ** 2
    denom = r2 + eps2
    vhat = r2 / np.sqrt(denom)
    weight = (vhat - m) * (r2 + 2.0 * eps2) / denom**1.5
    return u - inverse_transform(weight * s)


def smoothed_magnitude_step_real(u, m, cfg: SmoothingConfig) -> np.ndarray:
    return to_real(smoothed_magnitude_step(u, m, cfg))


def gradient_mismatch(u, m, cfg: SmoothingConfig, directions, step: float = 1e-6) -> float:
    """Largest relative gap between finite differences of ``J`` and ``<grad, d>``.

    Central differences along each direction are compared with the inner
    product of :func:`smoothed_magnitude_step` with that direction.
    """
    u = np.asarray(u, dtype=float)
    grad = smoothed_magnitude_step_real(u, m, cfg)
    worst = 0.0
    for d in directions:
        fd = (smoothed_objective(u + step * d, m, cfg)
              - smoothed_objective(u - step * d, m, cfg)) / (2 * step)
        an = float(np.vdot(d.ravel(), grad.ravel()))
        worst = max(worst, abs(fd - an) / max(abs(an), abs(fd), 1e-300))
    return worst


def error_metric(u, m, D, pm: Projector | None = None) -> float:
    """Relative squared distance of ``P_M u`` from the support/nonnegativity set.

    ``||P_S+(P_M u) - P_M u||^2 / ||P_M u||^2``.
    """
    pmu = project_magnitude_real(u, m) if pm is None else pm(u)
    denom = norm(pmu) ** 2
    if denom == 0:
        raise ValueError("P_M u vanishes; magnitude data must not be identically zero")
    return norm(project_support_nonneg(pmu, D) - pmu) ** 2 / denom


def to_db(value: float) -> float:
    """Decibel value ``10 log10(value)``; ``-inf`` for zero."""
    return float(10.0 * np.log10(value)) if value > 0 else float("-inf")
