"""Pixel-grid function spaces and the core operators.

Images are plain ``float64`` arrays of shape ``(rows, cols)``; one value per
pixel.  A dual field carries one normal-component value per interior pixel
edge of the lowest-order Raviart-Thomas space with zero normal trace on the
image boundary:

* ``v[i, j]`` lives on the vertical edge between pixels ``(i, j)`` and
  ``(i, j + 1)``; its normal points in the +column direction.
* ``h[i, j]`` lives on the horizontal edge between pixels ``(i, j)`` and
  ``(i + 1, j)``; its normal points in the +row direction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class GridShape(NamedTuple):
    rows: int
    cols: int

    @classmethod
    def of(cls, shape) -> "GridShape":
        rows, cols = (int(n) for n in shape)
        if rows < 1 or cols < 1:
            raise ValueError(f"grid needs at least one pixel per dimension, got {rows}x{cols}")
        return cls(rows, cols)

    @property
    def pixels(self) -> int:
        return self.rows * self.cols

    @property
    def edges(self) -> int:
        return self.rows * (self.cols - 1) + (self.rows - 1) * self.cols


@dataclass(frozen=True)
class DualField:
    """Edge dofs of a dual field, see the module docstring for the layout."""

    v: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        rows, cols = self.v.shape[0], self.h.shape[1]
        if self.v.shape != (rows, cols - 1) or self.h.shape != (rows - 1, cols):
            raise ValueError(
                f"inconsistent edge arrays: v {self.v.shape}, h {self.h.shape}"
            )

    @property
    def shape(self) -> GridShape:
        return GridShape(self.v.shape[0], self.h.shape[1])

    @classmethod
    def zeros(cls, shape) -> "DualField":
        rows, cols = GridShape.of(shape)
        return cls(np.zeros((rows, cols - 1)), np.zeros((rows - 1, cols)))

    @classmethod
    def from_dofs(cls, shape, dofs) -> "DualField":
        rows, cols = GridShape.of(shape)
        dofs = np.asarray(dofs, dtype=float)
        nv = rows * (cols - 1)
        if dofs.size != nv + (rows - 1) * cols:
            raise ValueError(f"expected {nv + (rows - 1) * cols} dofs, got {dofs.size}")
        return cls(dofs[:nv].reshape(rows, cols - 1).copy(), dofs[nv:].reshape(rows - 1, cols).copy())

    def dofs(self) -> np.ndarray:
        """All dofs as one vector: vertical edges first, both row-major."""
        return np.concatenate([self.v.ravel(), self.h.ravel()])

    def __add__(self, other: "DualField") -> "DualField":
        return DualField(self.v + other.v, self.h + other.h)

    def __sub__(self, other: "DualField") -> "DualField":
        return DualField(self.v - other.v, self.h - other.h)

    def __mul__(self, scalar: float) -> "DualField":
        return DualField(scalar * self.v, scalar * self.h)

    __rmul__ = __mul__


def divergence(p: DualField) -> np.ndarray:
    """Pixelwise divergence; edges outside the grid read as zero."""
    rows, cols = p.shape
    out = np.zeros((rows, cols))
    out[:, :-1] += p.v
    out[:, 1:] -= p.v
    out[:-1, :] += p.h
    out[1:, :] -= p.h
    return out


def divergence_adjoint(u: np.ndarray) -> DualField:
    """Adjoint of :func:`divergence`, i.e. minus the forward difference."""
    u = np.asarray(u, dtype=float)
    return DualField(u[:, :-1] - u[:, 1:], u[:-1, :] - u[1:, :])


def total_variation(u: np.ndarray) -> float:
    """Anisotropic discrete TV: sum of absolute jumps across interior edges."""
    u = np.asarray(u, dtype=float)
    return float(np.abs(np.diff(u, axis=1)).sum() + np.abs(np.diff(u, axis=0)).sum())


def project_unit_ball(p: DualField) -> DualField:
    # dof-wise p / max(1, |p|)
    return DualField(np.clip(p.v, -1.0, 1.0), np.clip(p.h, -1.0, 1.0))


def in_unit_ball(p: DualField, tol: float = 0.0) -> bool:
    return bool(np.all(np.abs(p.dofs()) <= 1.0 + tol))


def inner(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.vdot(np.asarray(a, dtype=float), np.asarray(b, dtype=float)))


def inner_dual(p: DualField, q: DualField) -> float:
    return float(np.vdot(p.v, q.v) + np.vdot(p.h, q.h))


def _flat(x) -> np.ndarray:
    if isinstance(x, DualField):
        return x.dofs()
    return np.asarray(x, dtype=float).ravel()


def norm2(x) -> float:
    """Euclidean norm of the dof vector of an image or a dual field."""
    return float(np.linalg.norm(_flat(x)))


def norm1(x) -> float:
    return float(np.abs(_flat(x)).sum())


def divergence_norm_estimate(shape, iters: int = 200, seed: int = 0) -> float:
    """Power-iteration estimate of ``||div||_2^2`` (bounded by 8)."""
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(tuple(GridShape.of(shape)))
    est = 0.0
    for _ in range(iters):
        w = divergence(divergence_adjoint(u))
        est = float(np.linalg.norm(w))
        if est == 0.0:
            return 0.0
        u = w / est
    return est
