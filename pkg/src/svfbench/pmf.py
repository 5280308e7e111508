"""Probability mass functions on a uniform grid.

A :class:`GridPMF` places mass ``probs[j]`` at the point ``(offset + j) * step``.
The offset is an integer and may be negative, so laws of ``B - x`` and of
centered service times are representable without special casing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

# np.convolve is faster below this many multiply-adds; FFT above.
_FFT_THRESHOLD = 200_000
# Kernels with at most this many atoms are applied as shifted adds.
_SPARSE_ATOMS = 8

NEGATIVE_CLIP = -1e-15


@dataclass(frozen=True, eq=False)
class GridPMF:
    step: float
    offset: int
    probs: np.ndarray

    def __post_init__(self):
        probs = np.ascontiguousarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probs must be a nonempty 1-D array")
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "offset", int(self.offset))
        object.__setattr__(self, "step", float(self.step))

    def __eq__(self, other):
        if not isinstance(other, GridPMF):
            return NotImplemented
        return (
            self.step == other.step
            and self.offset == other.offset
            and np.array_equal(self.probs, other.probs)
        )

    def __hash__(self):
        return hash((self.step, self.offset, self.probs.tobytes()))

    def __repr__(self):
        return f"GridPMF(step={self.step}, offset={self.offset}, size={self.probs.size})"

    @classmethod
    def point(cls, index: int, step: float) -> "GridPMF":
        return cls(step, index, np.array([1.0]))

    @classmethod
    def from_atoms(cls, values, probs, step: float, tol: float = 1e-9) -> "GridPMF":
        """Build a pmf from atoms that already lie on the grid ``k * step``."""
        values = np.asarray(values, dtype=float)
        probs = np.asarray(probs, dtype=float)
        idx = np.rint(values / step)
        if np.any(np.abs(values / step - idx) > tol):
            raise ValueError("atoms are not on the grid")
        idx = idx.astype(np.int64)
        lo = int(idx.min())
        out = np.zeros(int(idx.max()) - lo + 1)
        np.add.at(out, idx - lo, probs)
        return cls(step, lo, out)

    @property
    def values(self) -> np.ndarray:
        return (self.offset + np.arange(self.probs.size)) * self.step

    @property
    def total(self) -> float:
        return float(np.sum(self.probs))

    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    def var(self) -> float:
        mu = self.mean()
        return float(np.dot((self.values - mu) ** 2, self.probs))

    def cdf(self, x: float) -> float:
        k = np.floor(x / self.step + 1e-9) - self.offset
        if k < 0:
            return 0.0
        return float(np.sum(self.probs[: int(k) + 1]))

    def trimmed(self) -> "GridPMF":
        """Drop zero cells at both ends (at least one cell is kept)."""
        nz = np.flatnonzero(self.probs)
        if nz.size == 0:
            return GridPMF(self.step, 0, np.array([0.0]))
        return GridPMF(self.step, self.offset + int(nz[0]), self.probs[nz[0] : nz[-1] + 1])

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        """Palindrome check about the mean (the mean must sit on a half-grid point)."""
        t = self.trimmed()
        return bool(np.allclose(t.probs, t.probs[::-1], atol=tol, rtol=0))

    def negated(self) -> "GridPMF":
        return GridPMF(self.step, -(self.offset + self.probs.size - 1), self.probs[::-1])


def convolve_probs(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Full linear convolution of two nonnegative mass vectors."""
    if a.size < b.size:
        a, b = b, a
    nzb = np.flatnonzero(b)
    if nzb.size <= _SPARSE_ATOMS:
        out = np.zeros(a.size + b.size - 1)
        for j in nzb:
            out[j : j + a.size] += b[j] * a
        return out
    if a.size * b.size < _FFT_THRESHOLD:
        return np.convolve(a, b)
    out = signal.fftconvolve(a, b)
    return clip_negatives(out)


def clip_negatives(p: np.ndarray) -> np.ndarray:
    """Zero out round-off negatives, rescaling to keep the total; abort on real ones."""
    neg = p < 0
    if not neg.any():
        return p
    if p[neg].min() < NEGATIVE_CLIP * max(1.0, p.size):
        raise FloatingPointError(f"negative pmf mass {p[neg].min():.3e}")
    total = p.sum()
    p = np.where(neg, 0.0, p)
    s = p.sum()
    if s > 0:
        p *= total / s
    return p


def convolve(a: GridPMF, b: GridPMF) -> GridPMF:
    if a.step != b.step:
        raise ValueError("grid steps differ")
    return GridPMF(a.step, a.offset + b.offset, convolve_probs(a.probs, b.probs))
