"""Closed convex sets with exact projectors and the convex RAAR operator.

Used to check numerically where the fixed points of
``V = beta * T + (1 - beta) * P_B`` with ``T = (R_A R_B + I) / 2`` sit,
for consistent and inconsistent pairs of sets.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

DEFAULT_FIXED_POINT_TOL = 1e-10
DEFAULT_CHECK_TOL = 1e-6
DEFAULT_CAP = 10**6


class ConvergenceError(RuntimeError):
    """An iteration hit its cap before reaching the requested tolerance."""


class ConvexSet:
    """Base class; subclasses provide an exact ``project``."""

    dimension: int

    def project(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(self.project(x) - x)) <= tol

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.dimension:
            raise ValueError(f"point of dimension {x.size} for a set in R^{self.dimension}")
        return x


@dataclass(frozen=True)
class HalfSpace(ConvexSet):
    """``{x : <normal, x> <= offset}`` with a unit normal."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        a = np.asarray(self.normal, dtype=float).reshape(-1)
        if not np.isclose(np.linalg.norm(a), 1.0, rtol=0, atol=1e-12):
            raise ValueError("half-space normal must have unit length")
        object.__setattr__(self, "normal", a)

    @property
    def dimension(self) -> int:
        return self.normal.size

    def project(self, x):
        x = self._check(x)
        excess = float(self.normal @ x) - self.offset
        return x - max(excess, 0.0) * self.normal


@dataclass(frozen=True)
class Box(ConvexSet):
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).reshape(-1)
        hi = np.asarray(self.hi, dtype=float).reshape(-1)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("box needs lo <= hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dimension(self) -> int:
        return self.lo.size

    def project(self, x):
        return np.clip(self._check(x), self.lo, self.hi)


@dataclass(frozen=True)
class Ball(ConvexSet):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(-1))

    @property
    def dimension(self) -> int:
        return self.center.size

    def project(self, x):
        x = self._check(x)
        d = x - self.center
        r = float(np.linalg.norm(d))
        if r <= self.radius:
            return x
        return self.center + d * (self.radius / r)


@dataclass(frozen=True)
class AffineSubspace(ConvexSet):
    """``point + span(basis)``; ``basis`` has orthonormal columns (may be empty)."""

    point: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.point, dtype=float).reshape(-1)
        Q = np.asarray(self.basis, dtype=float).reshape(p.size, -1)
        if not np.allclose(Q.T @ Q, np.eye(Q.shape[1]), atol=1e-12):
            raise ValueError("affine basis must be orthonormal")
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "basis", Q)

    @property
    def dimension(self) -> int:
        return self.point.size

    def project(self, x):
        x = self._check(x)
        Q = self.basis
        return self.point + Q @ (Q.T @ (x - self.point))


def project_convex(C: ConvexSet, x) -> np.ndarray:
    return C.project(x)


def _reflect(C: ConvexSet, x) -> np.ndarray:
    return 2.0 * C.project(x) - x


def aar_operator(A: ConvexSet, B: ConvexSet, u) -> np.ndarray:
    """``T u = (R_A R_B u + u) / 2``."""
    u = np.asarray(u, dtype=float)
    return 0.5 * (_reflect(A, _reflect(B, u)) + u)


def raar_convex_operator(A: ConvexSet, B: ConvexSet, beta: float, u) -> np.ndarray:
    """``V(A, B, beta) u = beta T u + (1 - beta) P_B u``; ``beta`` in (0, 1]."""
    if not 0 < beta <= 1:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    u = np.asarray(u, dtype=float)
    return beta * aar_operator(A, B, u) + (1.0 - beta) * B.project(u)


# ---------------------------------------------------------------------------
# gap vector

@dataclass
class ConvexDiagnostics:
    gap: np.ndarray
    nearest_in_B: np.ndarray
    nearest_in_A: np.ndarray
    consistent: bool
    method: str = "closed-form"

    @property
    def gap_norm(self) -> float:
        return float(np.linalg.norm(self.gap))


def _interval_gap(loA, hiA, loB, hiB):
    """Componentwise gap and a nearest point in B for two boxes."""
    g = np.where(loB > hiA, loB - hiA, np.where(hiB < loA, hiB - loA, 0.0))
    overlap_lo = np.maximum(loA, loB)
    overlap_hi = np.minimum(hiA, hiB)
    f = np.where(loB > hiA, loB, np.where(hiB < loA, hiB, 0.5 * (overlap_lo + overlap_hi)))
    return g, f


def _closed_form_gap(A: ConvexSet, B: ConvexSet):
    if isinstance(A, Box) and isinstance(B, Box):
        return _interval_gap(A.lo, A.hi, B.lo, B.hi)
    if isinstance(A, Ball) and isinstance(B, Ball):
        d = B.center - A.center
        dist = float(np.linalg.norm(d))
        if dist > A.radius + B.radius:
            e = d / dist
            return (dist - A.radius - B.radius) * e, B.center - B.radius * e
        if dist == 0:
            return np.zeros_like(d), A.center.copy()
        # midpoint of the chord of the centre line lying in both balls
        lo = max(dist - B.radius, -A.radius)
        hi = min(dist + B.radius, A.radius)
        return np.zeros_like(d), A.center + 0.5 * (lo + hi) * (d / dist)
    if isinstance(A, HalfSpace) and isinstance(B, HalfSpace):
        a, b = A.normal, B.normal
        if np.allclose(a, -b, atol=1e-14):
            # A: <a,x> <= alpha, B: <a,x> >= -beta_off
            lower = -B.offset
            if lower > A.offset:
                return (lower - A.offset) * a, lower * a
            return np.zeros_like(a), 0.5 * (lower + A.offset) * a
        return None
    if isinstance(A, AffineSubspace) and A.basis.shape[1] == 0 and isinstance(B, Box):
        f = B.project(A.point)
        return f - A.point, f
    if isinstance(A, Box) and isinstance(B, AffineSubspace) and B.basis.shape[1] == 0:
        return B.point - A.project(B.point), B.point.copy()
    return None


def gap_vector(A: ConvexSet, B: ConvexSet, tol: float = 1e-12, cap: int = DEFAULT_CAP,
               start=None, consistency_tol: float = 1e-9) -> ConvexDiagnostics:
    """Gap vector ``g = P_cl(B - A)(0)`` with representative nearest points.

    Closed forms cover box/box, ball/ball, antiparallel half-spaces and
    point/box. Other pairs use alternating projections
    ``b <- P_B P_A b`` until successive iterates move by at most ``tol``;
    exhausting ``cap`` raises :class:`ConvergenceError` (the infimum may not
    be attained).
    """
    if A.dimension != B.dimension:
        raise ValueError("sets live in different dimensions")
    closed = _closed_form_gap(A, B)
    if closed is not None:
        g, f = closed
        g = np.asarray(g, dtype=float)
        f = np.asarray(f, dtype=float)
        method = "closed-form"
    else:
        b = np.zeros(A.dimension) if start is None else np.asarray(start, dtype=float)
        b = B.project(b)
        for _ in range(cap):
            nxt = B.project(A.project(b))
            if np.linalg.norm(nxt - b) <= tol:
                b = nxt
                break
            b = nxt
        else:
            raise ConvergenceError(f"alternating projections did not settle within {cap} steps")
        f = b
        g = f - A.project(f)
        method = "alternating-projections"
    gnorm = float(np.linalg.norm(g))
    return ConvexDiagnostics(g, f, f - g, gnorm <= consistency_tol, method)


def in_nearest_set_B(A, B, g, point, tol) -> bool:
    """``point`` lies in ``F = B ∩ (A + g)``, the points of B nearest to A."""
    return B.contains(point, tol) and A.contains(point - g, tol)


def in_nearest_set_A(A, B, g, point, tol) -> bool:
    """``point`` lies in ``E = A ∩ (B - g)``."""
    return A.contains(point, tol) and B.contains(point + g, tol)


# ---------------------------------------------------------------------------
# fixed points and their characterization checks

def fixed_point_solve(A: ConvexSet, B: ConvexSet, beta: float, start,
                      tol: float = DEFAULT_FIXED_POINT_TOL, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Iterate ``V(A, B, beta)`` until ``||V u - u|| <= tol``."""
    if not 0 < beta < 1:
        raise ValueError(f"fixed points need 0 < beta < 1, got {beta}")
    u = np.asarray(start, dtype=float).reshape(-1)
    for _ in range(cap):
        v = raar_convex_operator(A, B, beta, u)
        if np.linalg.norm(v - u) <= tol:
            # nonexpansiveness: ||V v - v|| <= ||v - u||
            return v
        u = v
    raise ConvergenceError(f"RAAR fixed-point iteration exceeded {cap} steps (beta={beta})")


def fixed_point_residual(A, B, beta, u) -> float:
    return float(np.linalg.norm(raar_convex_operator(A, B, beta, u) - u))


@dataclass
class CheckReport:
    geometry: str
    betas: list
    residuals: dict = field(default_factory=dict)
    passed: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def record(self, name: str, residual: float, tol: float) -> None:
        prev = self.residuals.get(name, 0.0)
        self.residuals[name] = max(prev, float(residual))
        self.passed[name] = self.residuals[name] <= tol

    def to_dict(self) -> dict:
        return {
            "geometry": self.geometry,
            "betas": [float(b) for b in self.betas],
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "pass": dict(self.passed),
        }


def verify_fixed_point_set(A: ConvexSet, B: ConvexSet, beta: float, starts, geometry: str = "",
                     tol: float = DEFAULT_CHECK_TOL,
                     fp_tol: float = DEFAULT_FIXED_POINT_TOL) -> CheckReport:
    """Solve for fixed points of ``V(A, B, beta)`` and test where they sit.

    For each start the solved fixed point ``u`` is checked for
    ``u = P_B u - beta/(1-beta) g``, ``P_B u - P_A R_B u = g``, and
    ``P_B u`` in ``F`` with ``P_A P_B u`` in ``E``. ``fixed_point_set`` tests
    ``u + beta/(1-beta) g`` in ``F``.
    """
    diag = gap_vector(A, B)
    g = diag.gap
    k = beta / (1.0 - beta)
    report = CheckReport(geometry, [beta])
    for start in starts:
        u = fixed_point_solve(A, B, beta, start, tol=fp_tol)
        pb = B.project(u)
        report.record("fixed_point_residual", fixed_point_residual(A, B, beta, u), fp_tol)
        report.record("i_translate", np.linalg.norm(u - (pb - k * g)), tol)
        report.record("ii_gap", np.linalg.norm(pb - A.project(_reflect(B, u)) - g), tol)
        pab = A.project(pb)
        dist_F = max(np.linalg.norm(B.project(pb) - pb), np.linalg.norm(A.project(pb - g) - (pb - g)))
        dist_E = max(np.linalg.norm(A.project(pab) - pab), np.linalg.norm(B.project(pab + g) - (pab + g)))
        report.record("iii_nearest", max(dist_F, dist_E), tol)
        shifted = u + k * g
        report.record("fixed_point_set", max(np.linalg.norm(B.project(shifted) - shifted),
                                             np.linalg.norm(A.project(shifted - g) - (shifted - g))), tol)
    return report


def verify_step_relation(A: ConvexSet, B: ConvexSet, beta_n: float, beta_next: float, delta: float,
                  samples: int, start=None, rng=None, geometry: str = "",
                  tol: float = 1e-8) -> CheckReport:
    """Check the step taken by ``V(A, B, beta_next)`` from a ``beta_n`` fixed point.

    With ``u*`` a fixed point for ``beta_n`` and ``f = P_B u*``:
    ``V_next u* = f - beta_next/(1-beta_n) g`` (``step_relation``), and every
    ``u`` with ``||u - u*|| < delta`` maps within ``delta`` of that point
    (``perturbation``, residual reported as max distance / delta).
    """
    for b in (beta_n, beta_next):
        if not 0 < b < 1:
            raise ValueError(f"betas must lie in (0, 1), got {b}")
    rng = np.random.default_rng(0) if rng is None else rng
    start = np.zeros(A.dimension) if start is None else start
    g = gap_vector(A, B).gap
    u_star = fixed_point_solve(A, B, beta_n, start)
    f = B.project(u_star)
    target = f - beta_next / (1.0 - beta_n) * g
    report = CheckReport(geometry, [beta_n, beta_next])
    report.record("step_relation",
                  np.linalg.norm(raar_convex_operator(A, B, beta_next, u_star) - target), tol)
    report.record("displacement",
                  np.linalg.norm(u_star - raar_convex_operator(A, B, beta_next, u_star)
                                 - (beta_next - beta_n) / (1.0 - beta_n) * g), tol)
    worst = 0.0
    for _ in range(samples):
        d = rng.standard_normal(A.dimension)
        radius = delta * rng.uniform(0.0, 1.0)
        u = u_star + radius * d / np.linalg.norm(d)
        image = raar_convex_operator(A, B, beta_next, u)
        worst = max(worst, float(np.linalg.norm(image - target)) / delta)
    report.residuals["perturbation"] = worst
    report.passed["perturbation"] = worst < 1.0
    return report


def aar_increments(A: ConvexSet, B: ConvexSet, start, burn_in: int, count: int) -> np.ndarray:
    """Differences ``u_{k+1} - u_k`` of plain AAR after ``burn_in`` steps."""
    u = np.asarray(start, dtype=float).reshape(-1)
    for _ in range(burn_in):
        u = aar_operator(A, B, u)
    out = []
    for _ in range(count):
        v = aar_operator(A, B, u)
        out.append(v - u)
        u = v
    return np.array(out)


# ---------------------------------------------------------------------------
# built-in geometry suite

def geometry_suite() -> dict[str, tuple[ConvexSet, ConvexSet]]:
    """Named (A, B) pairs used by the convex checks and the CLI."""
    e1 = np.array([1.0, 0.0])
    return {
        "half-lines-1d": (HalfSpace([1.0], 0.0), HalfSpace([-1.0], -2.0)),
        "disjoint-balls-2d": (Ball([0.0, 0.0], 1.0), Ball([4.0, 0.0], 1.0)),
        "shifted-boxes-2d": (Box([0.0, 0.0], [1.0, 1.0]), Box([2.0, 0.5], [3.0, 2.5])),
        "overlapping-half-spaces-2d": (HalfSpace(e1, 1.0), HalfSpace(np.array([0.6, -0.8]), 0.5)),
        "ball-vs-half-space-3d": (Ball([0.0, 0.0, 0.0], 1.0), HalfSpace(np.array([0.0, 0.0, -1.0]), -3.0)),
        "line-vs-ball-2d": (AffineSubspace([0.0, 2.0], np.array([[1.0], [0.0]])), Ball([1.0, -1.0], 1.5)),
    }


def run_convex_suite(betas=(0.25, 0.5, 0.75, 0.9), starts: int = 5, seed: int = 0,
                     step_pairs=((0.5, 0.75), (0.25, 0.5), (0.75, 0.9)),
                     delta: float = 0.1, samples: int = 100) -> dict:
    """Run the fixed-point and step-relation checks over :func:`geometry_suite`."""
    rng = np.random.default_rng(seed)
    reports = []
    for name, (A, B) in geometry_suite().items():
        pts = [rng.uniform(-5, 5, A.dimension) for _ in range(starts)]
        for beta in betas:
            reports.append({"check": "fixed-points", **verify_fixed_point_set(A, B, beta, pts, geometry=name).to_dict()})
        for bn, bnext in step_pairs:
            rep = verify_step_relation(A, B, bn, bnext, delta, samples, start=pts[0],
                                rng=np.random.default_rng(rng.integers(2**32)), geometry=name)
            reports.append({"check": "step", **rep.to_dict()})
    return {"reports": reports, "all_pass": all(all(r["pass"].values()) for r in reports)}
