"""Lattice arrays, the unitary DFT pair and inner-product helpers.

Grids are plain ``numpy.ndarray`` objects in C (row-major) order. Real
iterates are ``float64`` arrays, spectra are ``complex128`` arrays of the
same shape.
"""
from __future__ import annotations

import os
from typing import Iterable

import numpy as np

#: Imaginary residue (relative to the grid norm) tolerated by :func:`to_real`.
REAL_RESIDUE_TOL = 1e-9


class DimensionError(ValueError):
    """Raised when grids, masks or data do not share a shape."""


def check_same_shape(*arrays: np.ndarray) -> tuple[int, ...]:
    shape = np.shape(arrays[0])
    for a in arrays[1:]:
        if np.shape(a) != shape:
            raise DimensionError(f"shape mismatch: {shape} vs {np.shape(a)}")
    return shape


def _check_grid(u) -> np.ndarray:
    u = np.asarray(u)
    if u.ndim == 0 or u.size == 0:
        raise DimensionError("grid must have at least one axis and one site")
    return u


def forward_transform(u) -> np.ndarray:
    """Unitary DFT over all axes (``1/sqrt(N)`` scaling)."""
    u = _check_grid(u)
    return np.fft.fftn(u, norm="ortho")


def inverse_transform(s) -> np.ndarray:
    """Inverse of :func:`forward_transform`; always returns a complex grid."""
    s = _check_grid(s)
    return np.fft.ifftn(s, norm="ortho")


def hermitian_flip(a: np.ndarray) -> np.ndarray:
    """Return ``a(-xi)`` with indices taken modulo the dims."""
    return np.roll(np.flip(a), 1, axis=tuple(range(a.ndim)))


def is_hermitian_symmetric(m, rtol: float = 0.0) -> bool:
    m = np.asarray(m)
    flipped = hermitian_flip(m)
    if rtol == 0.0:
        return bool(np.array_equal(m, np.conj(flipped)))
    scale = max(float(np.max(np.abs(m))), 1e-300)
    return bool(np.max(np.abs(m - np.conj(flipped))) <= rtol * scale)


def symmetrize_hermitian(s: np.ndarray) -> np.ndarray:
    """Project a spectrum onto the Hermitian-symmetric (real-signal) subspace."""
    return 0.5 * (s + np.conj(hermitian_flip(s)))


def norm(u) -> float:
    """Euclidean norm over all sites."""
    return float(np.linalg.norm(np.ravel(u)))


def inner_product(u, v):
    """``<u, v> = sum u * conj(v)``; real for real grids."""
    check_same_shape(u, v)
    val = np.vdot(np.ravel(v), np.ravel(u))
    if np.isrealobj(u) and np.isrealobj(v):
        return float(val.real)
    return complex(val)


def to_real(z) -> np.ndarray:
    """Drop a rounding-level imaginary part.

    Raises ``ValueError`` when ``||Im z|| > REAL_RESIDUE_TOL * ||z||``.
    """
    z = np.asarray(z)
    if not np.iscomplexobj(z):
        return z.astype(float, copy=False)
    residue = np.linalg.norm(z.imag.ravel())
    if residue > REAL_RESIDUE_TOL * np.linalg.norm(z.ravel()):
        raise ValueError(
            f"imaginary residue {residue:.3e} too large for a real grid "
            "(is the magnitude data Hermitian-symmetric?)"
        )
    return np.ascontiguousarray(z.real)


def check_finite(u, what: str = "grid") -> np.ndarray:
    if not np.all(np.isfinite(u)):
        raise FloatingPointError(f"{what} contains non-finite values")
    return u


# ---------------------------------------------------------------------------
# file I/O

def _header_lines(header: str | Iterable[str] | None) -> list[str]:
    if header is None:
        return []
    if isinstance(header, str):
        header = header.splitlines()
    return [f"# {line}".rstrip() for line in header]


def write_grid(path, u, header=None) -> None:
    """Write ``dims: d1 d2 ...`` then row-major values, one row per line."""
    u = np.asarray(u, dtype=float)
    lines = _header_lines(header)
    lines.append("dims: " + " ".join(str(d) for d in u.shape))
    rows = u.reshape(-1, u.shape[-1]) if u.ndim > 1 else u.reshape(1, -1)
    for row in rows:
        lines.append(" ".join(repr(float(x)) for x in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_grid(path) -> np.ndarray:
    """Read a grid written by :func:`write_grid` or a plain-text PGM (P2)."""
    with open(path) as fh:
        text = fh.read()
    stripped = [ln for ln in text.splitlines() if not ln.lstrip().startswith("#")]
    if stripped and stripped[0].strip() == "P2":
        return read_pgm(path)
    if not stripped or not stripped[0].startswith("dims:"):
        raise DimensionError(f"{os.fspath(path)}: missing 'dims:' header")
    dims = tuple(int(d) for d in stripped[0][5:].split())
    if not dims or any(d <= 0 for d in dims):
        raise DimensionError(f"invalid dims {dims}")
    values = np.array(" ".join(stripped[1:]).split(), dtype=float)
    if values.size != int(np.prod(dims)):
        raise DimensionError(
            f"{os.fspath(path)}: {values.size} values for dims {dims}"
        )
    return check_finite(values.reshape(dims), os.fspath(path))


def write_pgm(path, u, maxval: int = 65535, vmax: float | None = None, header=None) -> None:
    """Write a 2-D grid as ASCII PGM, clipped to ``[0, vmax]`` and quantized.

    ``vmax`` defaults to ``max(u)``; a grid that is already integral with
    ``max(u) == maxval`` is written without rescaling.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 2:
        raise DimensionError("PGM output needs a 2-D grid")
    if vmax is None:
        vmax = float(u.max())
    if vmax > 0:
        levels = np.rint(np.clip(u, 0.0, vmax) / vmax * maxval).astype(np.int64)
    else:
        levels = np.zeros(u.shape, dtype=np.int64)
    lines = ["P2", *_header_lines(header), f"{u.shape[1]} {u.shape[0]}", str(maxval)]
    lines.extend(" ".join(str(v) for v in row) for row in levels)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_pgm(path) -> np.ndarray:
    """Read an ASCII (P2) PGM; returns raw gray levels as floats."""
    with open(path) as fh:
        tokens = []
        for line in fh:
            line = line.split("#", 1)[0]
            tokens.extend(line.split())
    if not tokens or tokens[0] != "P2":
        raise ValueError(f"{os.fspath(path)}: not a P2 PGM file")
    width, height, _maxval = (int(t) for t in tokens[1:4])
    data = np.array(tokens[4:], dtype=float)
    if data.size != width * height:
        raise DimensionError(f"{os.fspath(path)}: expected {width * height} pixels")
    return data.reshape(height, width)
