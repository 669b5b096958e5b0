"""Nonoverlapping rectangular partitions and torn dual spaces.

Each subdomain stores its dual dofs in padded arrays ``V`` of shape
``(nr, nc + 1)`` and ``H`` of shape ``(nr + 1, nc)``.  Column ``k`` of ``V``
is the vertical edge on the left of local pixel column ``k``, so ``V[:, 0]``
and ``V[:, nc]`` are the left and right block boundaries (likewise the first
and last rows of ``H``).  Boundary slots lying on the image boundary carry no
dof and stay zero; slots on an interface hold that subdomain's copy of the
interface dof.  All values use the global edge orientation.

Subdomains are numbered row-major over the block grid, so the left and top
neighbours of a block always have the lower index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .grid import DualField, GridShape


class JumpViolation(ValueError):
    """A torn field was assembled although its interface copies disagree."""

    def __init__(self, message: str, edge: tuple, jump: float):
        super().__init__(message)
        self.edge = edge
        self.jump = jump


@dataclass(frozen=True)
class Subdomain:
    index: int
    r0: int
    r1: int
    c0: int
    c1: int
    top: bool
    bottom: bool
    left: bool
    right: bool

    @property
    def rows(self) -> int:
        return self.r1 - self.r0

    @property
    def cols(self) -> int:
        return self.c1 - self.c0

    @property
    def slices(self) -> tuple[slice, slice]:
        return slice(self.r0, self.r1), slice(self.c0, self.c1)

    @property
    def n_dofs(self) -> int:
        nr, nc = self.rows, self.cols
        return (
            nr * (nc - 1) + (nr - 1) * nc
            + nr * (int(self.left) + int(self.right))
            + nc * (int(self.top) + int(self.bottom))
        )

    def dof_masks(self) -> tuple[np.ndarray, np.ndarray]:
        """Boolean masks of the padded ``V``/``H`` slots that carry a dof."""
        vm = np.ones((self.rows, self.cols + 1), dtype=bool)
        hm = np.ones((self.rows + 1, self.cols), dtype=bool)
        vm[:, 0], vm[:, -1] = self.left, self.right
        hm[0, :], hm[-1, :] = self.top, self.bottom
        return vm, hm


def _bounds(n: int, parts: int, splits) -> tuple[int, ...]:
    if splits is None:
        if parts < 1 or parts > n:
            raise ValueError(f"cannot split {n} pixels into {parts} parts")
        return tuple(k * n // parts for k in range(parts + 1))
    cuts = [int(c) for c in splits]
    if cuts[:1] != [0]:
        cuts = [0] + cuts
    if cuts[-1] != n:
        cuts = cuts + [n]
    if len(cuts) != parts + 1 or any(b <= a for a, b in zip(cuts, cuts[1:])):
        raise ValueError(f"invalid cut positions {splits} for {parts} parts of {n} pixels")
    return tuple(cuts)


class Partition:
    """A grid of ``ny`` block-rows by ``nx`` block-columns over an image.

    ``row_splits``/``col_splits`` give explicit cut positions; by default the
    blocks are as even as integer division allows.
    """

    def __init__(self, shape, ny: int = 1, nx: int = 1, row_splits=None, col_splits=None):
        self.shape = GridShape.of(shape)
        self.ny, self.nx = int(ny), int(nx)
        self.row_bounds = _bounds(self.shape.rows, self.ny, row_splits)
        self.col_bounds = _bounds(self.shape.cols, self.nx, col_splits)

    @classmethod
    def parse(cls, text: str, shape) -> "Partition":
        """``"2x4"`` means 2 block-rows by 4 block-columns."""
        try:
            ny, nx = (int(t) for t in text.lower().split("x"))
        except ValueError:
            raise ValueError(f"partition must look like RxC, got {text!r}") from None
        return cls(shape, ny, nx)

    def __repr__(self):
        return f"Partition({self.shape.rows}x{self.shape.cols}, {self.ny}x{self.nx})"

    def __len__(self) -> int:
        return self.ny * self.nx

    def __iter__(self):
        return iter(self.subdomains)

    def __getitem__(self, s: int) -> Subdomain:
        if not 0 <= s < len(self):
            raise IndexError(f"subdomain {s} out of range for {len(self)} subdomains")
        return self.subdomains[s]

    @cached_property
    def subdomains(self) -> tuple[Subdomain, ...]:
        out = []
        for bi in range(self.ny):
            for bj in range(self.nx):
                out.append(Subdomain(
                    index=bi * self.nx + bj,
                    r0=self.row_bounds[bi], r1=self.row_bounds[bi + 1],
                    c0=self.col_bounds[bj], c1=self.col_bounds[bj + 1],
                    top=bi > 0, bottom=bi < self.ny - 1,
                    left=bj > 0, right=bj < self.nx - 1,
                ))
        return tuple(out)

    @property
    def vertical_cuts(self) -> tuple[int, ...]:
        return self.col_bounds[1:-1]

    @property
    def horizontal_cuts(self) -> tuple[int, ...]:
        return self.row_bounds[1:-1]

    @property
    def n_vertical(self) -> int:
        return self.shape.rows * len(self.vertical_cuts)

    @property
    def n_interface(self) -> int:
        """Number of interface dofs, i.e. the multiplier length."""
        return self.n_vertical + len(self.horizontal_cuts) * self.shape.cols

    def interface_edge(self, k: int) -> tuple[str, int, int]:
        """Global edge ``(kind, i, j)`` of multiplier entry ``k``."""
        nvc = len(self.vertical_cuts)
        if k < self.n_vertical:
            i, c = divmod(k, nvc)
            return ("v", i, self.vertical_cuts[c] - 1)
        r, j = divmod(k - self.n_vertical, self.shape.cols)
        return ("h", self.horizontal_cuts[r] - 1, j)

    def _split(self, lam):
        lam = np.asarray(lam, dtype=float)
        if lam.shape != (self.n_interface,):
            raise ValueError(f"multiplier must have length {self.n_interface}, got {lam.shape}")
        lv = lam[: self.n_vertical].reshape(self.shape.rows, len(self.vertical_cuts))
        lh = lam[self.n_vertical:].reshape(len(self.horizontal_cuts), self.shape.cols)
        return lv, lh

    def zero_multiplier(self) -> np.ndarray:
        return np.zeros(self.n_interface)

    def total_dofs(self) -> int:
        return sum(sub.n_dofs for sub in self.subdomains)


@dataclass
class TornDualField:
    """Subdomain-wise dual field with duplicated interface dofs."""

    partition: Partition
    v: list = field(default_factory=list)
    h: list = field(default_factory=list)

    @classmethod
    def zeros(cls, partition: Partition) -> "TornDualField":
        return cls(
            partition,
            [np.zeros((s.rows, s.cols + 1)) for s in partition],
            [np.zeros((s.rows + 1, s.cols)) for s in partition],
        )

    def copy(self) -> "TornDualField":
        return TornDualField(self.partition, [a.copy() for a in self.v], [a.copy() for a in self.h])

    def dofs(self) -> np.ndarray:
        """Active dofs concatenated subdomain by subdomain."""
        parts = []
        for sub, V, H in zip(self.partition, self.v, self.h):
            vm, hm = sub.dof_masks()
            parts += [V[vm], H[hm]]
        return np.concatenate(parts) if parts else np.zeros(0)

    @classmethod
    def from_dofs(cls, partition: Partition, dofs) -> "TornDualField":
        dofs = np.asarray(dofs, dtype=float)
        tp = cls.zeros(partition)
        pos = 0
        for sub, V, H in zip(partition, tp.v, tp.h):
            vm, hm = sub.dof_masks()
            for arr, m in ((V, vm), (H, hm)):
                n = int(m.sum())
                arr[m] = dofs[pos:pos + n]
                pos += n
        if pos != dofs.size:
            raise ValueError(f"expected {pos} dofs, got {dofs.size}")
        return tp

    def _combine(self, other, op):
        return TornDualField(
            self.partition,
            [op(a, b) for a, b in zip(self.v, other.v)],
            [op(a, b) for a, b in zip(self.h, other.h)],
        )

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, scalar: float):
        return TornDualField(self.partition, [scalar * a for a in self.v], [scalar * a for a in self.h])

    __rmul__ = __mul__

    def inner(self, other: "TornDualField") -> float:
        return float(sum(np.vdot(a, b) for a, b in zip(self.v, other.v))
                     + sum(np.vdot(a, b) for a, b in zip(self.h, other.h)))

    def norm2(self) -> float:
        return float(np.sqrt(self.inner(self)))

    def max_abs(self) -> float:
        return float(max((np.abs(a).max(initial=0.0) for a in self.v + self.h), default=0.0))


def restrict_image(u: np.ndarray, partition: Partition, s: int) -> np.ndarray:
    sub = partition[s]
    u = np.asarray(u, dtype=float)
    if u.shape != tuple(partition.shape):
        raise ValueError(f"image shape {u.shape} does not match partition {partition!r}")
    return u[sub.slices].copy()


def extend_image(u_s: np.ndarray, partition: Partition, s: int) -> np.ndarray:
    """Extension by zero of a subdomain image to the whole grid."""
    sub = partition[s]
    u_s = np.asarray(u_s, dtype=float)
    if u_s.shape != (sub.rows, sub.cols):
        raise ValueError(f"local image shape {u_s.shape} does not match subdomain {s} ({sub.rows}x{sub.cols})")
    out = np.zeros(tuple(partition.shape))
    out[sub.slices] = u_s
    return out


def assemble_image(blocks, partition: Partition) -> np.ndarray:
    out = np.empty(tuple(partition.shape))
    for sub, b in zip(partition, blocks):
        out[sub.slices] = b
    return out


def _window(c0: int, c1: int, n_edges: int) -> tuple[int, int, int]:
    # Global edge columns c0-1 .. c1-1 map to local slots 0 .. nc; clip to
    # edges that exist.  Returns (global lo, global hi, local offset).
    lo, hi = max(c0 - 1, 0), min(c1, n_edges)
    return lo, hi, lo - (c0 - 1)


def tear(p: DualField, partition: Partition) -> TornDualField:
    if p.shape != partition.shape:
        raise ValueError(f"dual field {p.shape} does not match partition {partition!r}")
    rows, cols = partition.shape
    tp = TornDualField.zeros(partition)
    for sub, V, H in zip(partition, tp.v, tp.h):
        lo, hi, off = _window(sub.c0, sub.c1, cols - 1)
        V[:, off:off + hi - lo] = p.v[sub.r0:sub.r1, lo:hi]
        lo, hi, off = _window(sub.r0, sub.r1, rows - 1)
        H[off:off + hi - lo, :] = p.h[lo:hi, sub.c0:sub.c1]
    return tp


def jump(tp: TornDualField) -> np.ndarray:
    """Interface jumps: lower-indexed copy minus higher-indexed copy."""
    part = tp.partition
    rows, cols = part.shape
    lv = np.zeros((rows, len(part.vertical_cuts)))
    lh = np.zeros((len(part.horizontal_cuts), cols))
    for sub, V, H in zip(part, tp.v, tp.h):
        bi, bj = divmod(sub.index, part.nx)
        if sub.right:
            lv[sub.r0:sub.r1, bj] += V[:, -1]
        if sub.left:
            lv[sub.r0:sub.r1, bj - 1] -= V[:, 0]
        if sub.bottom:
            lh[bi, sub.c0:sub.c1] += H[-1, :]
        if sub.top:
            lh[bi - 1, sub.c0:sub.c1] -= H[0, :]
    return np.concatenate([lv.ravel(), lh.ravel()])


def jump_adjoint(lam, partition: Partition) -> TornDualField:
    lv, lh = partition._split(lam)
    tp = TornDualField.zeros(partition)
    for sub, V, H in zip(partition, tp.v, tp.h):
        bi, bj = divmod(sub.index, partition.nx)
        if sub.right:
            V[:, -1] = lv[sub.r0:sub.r1, bj]
        if sub.left:
            V[:, 0] = -lv[sub.r0:sub.r1, bj - 1]
        if sub.bottom:
            H[-1, :] = lh[bi, sub.c0:sub.c1]
        if sub.top:
            H[0, :] = -lh[bi - 1, sub.c0:sub.c1]
    return tp


def block_divergence(V: np.ndarray, H: np.ndarray) -> np.ndarray:
    return V[:, 1:] - V[:, :-1] + H[1:, :] - H[:-1, :]


def block_divergence_adjoint(u_s: np.ndarray, sub: Subdomain) -> tuple[np.ndarray, np.ndarray]:
    nr, nc = u_s.shape
    V = np.zeros((nr, nc + 1))
    H = np.zeros((nr + 1, nc))
    V[:, 1:nc] = u_s[:, :-1] - u_s[:, 1:]
    H[1:nr, :] = u_s[:-1, :] - u_s[1:, :]
    if sub.left:
        V[:, 0] = -u_s[:, 0]
    if sub.right:
        V[:, nc] = u_s[:, -1]
    if sub.top:
        H[0, :] = -u_s[0, :]
    if sub.bottom:
        H[nr, :] = u_s[-1, :]
    return V, H


def local_divergence(tp: TornDualField, s: int) -> np.ndarray:
    return block_divergence(tp.v[s], tp.h[s])


def local_divergence_adjoint(u_s: np.ndarray, partition: Partition, s: int) -> tuple[np.ndarray, np.ndarray]:
    """Local ``div*`` on subdomain ``s``; returns the padded ``(V, H)`` pair.

    Interface slots get the one-sided value of the single adjacent pixel, so
    the operator is injective even on constants.
    """
    sub = partition[s]
    u_s = np.asarray(u_s, dtype=float)
    if u_s.shape != (sub.rows, sub.cols):
        raise ValueError(f"local image shape {u_s.shape} does not match subdomain {s}")
    return block_divergence_adjoint(u_s, sub)


def torn_divergence(tp: TornDualField) -> np.ndarray:
    return assemble_image([block_divergence(V, H) for V, H in zip(tp.v, tp.h)], tp.partition)


def assemble(tp: TornDualField, tol: float = 1e-8) -> DualField:
    """Glue a torn field back into a global one, averaging interface copies."""
    part = tp.partition
    j = jump(tp)
    if j.size:
        k = int(np.argmax(np.abs(j)))
        if abs(j[k]) > tol:
            edge = part.interface_edge(k)
            raise JumpViolation(
                f"interface copies disagree on {edge[0]}-edge ({edge[1]}, {edge[2]}): "
                f"jump {j[k]:.3e} exceeds tolerance {tol:.1e}",
                edge, float(j[k]),
            )
    rows, cols = part.shape
    v = np.zeros((rows, cols - 1))
    h = np.zeros((rows - 1, cols))
    vn = np.zeros_like(v)
    hn = np.zeros_like(h)
    for sub, V, H in zip(part, tp.v, tp.h):
        lo, hi, off = _window(sub.c0, sub.c1, cols - 1)
        v[sub.r0:sub.r1, lo:hi] += V[:, off:off + hi - lo]
        vn[sub.r0:sub.r1, lo:hi] += 1
        lo, hi, off = _window(sub.r0, sub.r1, rows - 1)
        h[lo:hi, sub.c0:sub.c1] += H[off:off + hi - lo, :]
        hn[lo:hi, sub.c0:sub.c1] += 1
    return DualField(v / np.maximum(vn, 1), h / np.maximum(hn, 1))
