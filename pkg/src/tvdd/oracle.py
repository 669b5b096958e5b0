"""Brute-force verifiers for the operators, proxes and solvers.

Everything here is deliberately naive: dense matrices built column by column
from basis vectors, golden-section search for scalar proxes, exhaustive grid
search for tiny saddle problems.  None of it shares code paths with the
closed forms it checks, apart from the operator being densified.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .decomposition import Partition, TornDualField, block_divergence, jump, jump_adjoint
from .fidelity import FidelityModel, Variant
from .grid import DualField, GridShape, divergence, divergence_adjoint

MAX_DENSE_SIDE = 32
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class OracleSizeError(ValueError):
    pass


@dataclass(frozen=True)
class DenseOperator:
    matrix: np.ndarray

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    def __matmul__(self, x):
        return self.matrix @ x

    @property
    def T(self) -> "DenseOperator":
        return DenseOperator(self.matrix.T.copy())


def _guard(shape):
    rows, cols = GridShape.of(shape)
    if rows > MAX_DENSE_SIDE or cols > MAX_DENSE_SIDE:
        raise OracleSizeError(f"dense oracle limited to {MAX_DENSE_SIDE}x{MAX_DENSE_SIDE}, got {rows}x{cols}")
    return rows, cols


def densify(apply, n_in: int) -> DenseOperator:
    """Matrix of a linear map given as a vector-to-vector callable."""
    cols = []
    e = np.zeros(n_in)
    for k in range(n_in):
        e[k] = 1.0
        cols.append(np.asarray(apply(e), dtype=float).ravel())
        e[k] = 0.0
    if not cols:
        return DenseOperator(np.zeros((np.asarray(apply(e)).size, 0)))
    return DenseOperator(np.column_stack(cols))


def densify_divergence(shape) -> DenseOperator:
    rows, cols = _guard(shape)
    return densify(lambda x: divergence(DualField.from_dofs((rows, cols), x)), GridShape(rows, cols).edges)


def densify_divergence_adjoint(shape) -> DenseOperator:
    rows, cols = _guard(shape)
    return densify(lambda x: divergence_adjoint(x.reshape(rows, cols)).dofs(), rows * cols)


def densify_jump(partition: Partition) -> DenseOperator:
    _guard(partition.shape)
    n = partition.total_dofs()
    return densify(lambda x: jump(TornDualField.from_dofs(partition, x)), n)


def densify_jump_adjoint(partition: Partition) -> DenseOperator:
    _guard(partition.shape)
    return densify(lambda x: jump_adjoint(x, partition).dofs(), partition.n_interface)


def densify_torn_divergence(partition: Partition) -> DenseOperator:
    """Dense block-diagonal local divergence, torn dofs to pixels."""
    _guard(partition.shape)

    def apply(x):
        tp = TornDualField.from_dofs(partition, x)
        out = np.zeros(tuple(partition.shape))
        for sub, V, H in zip(partition, tp.v, tp.h):
            out[sub.slices] = block_divergence(V, H)
        return out

    return densify(apply, partition.total_dofs())


def power_iteration(apply, n: int, iters: int = 100, seed: int = 0) -> float:
    """Largest eigenvalue of a symmetric positive semidefinite map."""
    if n == 0:
        return 0.0
    x = np.random.default_rng(seed).standard_normal(n)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(iters):
        y = apply(x)
        lam = float(np.vdot(x, y))
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
    return lam


# -- scalar prox search ---------------------------------------------------------

def pixel_fidelity(variant: Variant, v: float, f: float = 0.0, observed: bool = True, g: float = 0.0) -> float:
    """One pixel's share of ``F`` (without ``alpha``)."""
    variant = Variant(variant)
    if variant is Variant.RofL2 or (variant is Variant.InpaintL2 and observed):
        return 0.5 * (v - f) ** 2
    if variant is Variant.TvL1 or (variant is Variant.InpaintL1 and observed):
        return abs(v - f)
    if variant is Variant.Segmentation:
        return g * v if 0.0 <= v <= 1.0 else math.inf
    return 0.0


def golden_section(fn, lo: float, hi: float, width: float = 1e-8) -> float:
    a, b = lo, hi
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > width:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def prox_search(variant, u: float, sigma: float, f: float = 0.0, observed: bool = True,
                g: float = 0.0, width: float = 1e-8) -> float:
    """Minimize ``F_pixel(v) + (v - u)^2 / (2 sigma)`` by golden section."""
    variant = Variant(variant)

    def objective(v):
        return pixel_fidelity(variant, v, f, observed, g) + (v - u) ** 2 / (2.0 * sigma)

    if variant is Variant.Segmentation:
        lo, hi = 0.0, 1.0
    else:
        lo, hi = min(u, f) - 1.0, max(u, f) + 1.0
    return golden_section(objective, lo, hi, width)


# -- reference energies and tiny instances ---------------------------------------

def reference_energy(model: FidelityModel, iters: int = 100_000, backend=None) -> float:
    """Smallest energy seen over a long single-domain primal-dual run."""
    from .solvers import solve_full_primal_dual

    _, _, report = solve_full_primal_dual(model, max_iter=iters, tol=0.0, backend=backend)
    return float(min(report.energies.min(), report.energy_trace[0].energy))


def _primal_box(model: FidelityModel):
    if model.variant is Variant.Segmentation:
        return 0.0, 1.0
    lo, hi = float(model.f.min()), float(model.f.max())
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


def _zoom_search(objective, dim: int, lo: float, hi: float, points: int = 9, width: float = 1e-10):
    """Minimize a convex function on a cube by repeatedly refined grids."""
    center = np.full(dim, 0.5 * (lo + hi))
    half = np.full(dim, 0.5 * (hi - lo))
    best = center
    while half.max() > width:
        axes = [np.linspace(max(lo, c - r), min(hi, c + r), points) for c, r in zip(center, half)]
        cand = np.array(list(itertools.product(*axes)))
        vals = objective(cand)
        best = cand[int(np.argmin(vals))]
        spacing = np.array([a[1] - a[0] for a in axes])
        center, half = best, 2.0 * spacing
    return best


def subdifferential_interval(model: FidelityModel, u: np.ndarray, eps: float = 1e-6):
    """Pixelwise bounds ``[lo, hi]`` of ``alpha * dF(u)``."""
    a = model.alpha
    r = u - model.f
    obs = model.weight > 0
    v = model.variant
    if v in (Variant.RofL2, Variant.InpaintL2):
        val = np.where(obs, a * r, 0.0)
        return val, val.copy()
    if v in (Variant.TvL1, Variant.InpaintL1):
        at_kink = np.abs(r) <= eps
        lo = np.where(at_kink, -a, a * np.sign(r))
        hi = np.where(at_kink, a, a * np.sign(r))
        return np.where(obs, lo, 0.0), np.where(obs, hi, 0.0)
    base = a * model.g
    lo = np.where(u <= eps, -np.inf, base)
    hi = np.where(u >= 1.0 - eps, np.inf, base)
    return lo, hi


def pd_residual(model: FidelityModel, u, p: DualField, eps: float = 1e-6) -> float:
    """Violation of the primal-dual optimality inclusions for ``(u, p)``."""
    u = np.asarray(u, dtype=float)
    lo, hi = subdifferential_interval(model, u, eps)
    d = divergence(p)
    r1 = np.maximum(lo - d, 0.0) + np.maximum(d - hi, 0.0)
    grad = -divergence_adjoint(u).dofs()
    pd = p.dofs()
    # grad > 0 forces p = 1, grad < 0 forces p = -1, else |p| <= 1
    r2 = np.where(grad > eps, np.abs(pd - 1.0), np.where(grad < -eps, np.abs(pd + 1.0),
                                                         np.maximum(np.abs(pd) - 1.0, 0.0)))
    return float(max(r1.max(initial=0.0), r2.max(initial=0.0)))


def _batched_energy(model: FidelityModel, u: np.ndarray) -> np.ndarray:
    """``J`` for a stack of candidate images of shape ``(n, rows, cols)``."""
    tv = np.abs(np.diff(u, axis=1)).sum(axis=(1, 2)) + np.abs(np.diff(u, axis=2)).sum(axis=(1, 2))
    r = u - model.f
    w = model.weight
    v = model.variant
    if v in (Variant.RofL2, Variant.InpaintL2):
        fid = 0.5 * (w * r * r).sum(axis=(1, 2))
    elif v in (Variant.TvL1, Variant.InpaintL1):
        fid = (w * np.abs(r)).sum(axis=(1, 2))
    else:
        fid = (u * model.g).sum(axis=(1, 2))
        fid = np.where(((u < 0) | (u > 1)).any(axis=(1, 2)), np.inf, fid)
    return model.alpha * fid + tv


def tiny_saddle(model: FidelityModel, eps: float = 1e-6):
    """Exhaustive search for a primal-dual solution on a grid of at most 2x2.

    Returns ``(u, p)`` with ``p`` a :class:`DualField`.
    """
    rows, cols = model.shape
    if rows * cols > 4:
        raise OracleSizeError(f"tiny_saddle handles at most 4 pixels, got {rows}x{cols}")
    lo, hi = _primal_box(model)

    def primal(c):
        return _batched_energy(model, c.reshape(-1, rows, cols))

    u = _zoom_search(primal, rows * cols, lo, hi).reshape(rows, cols)

    grad = -divergence_adjoint(u).dofs()
    fixed = np.where(grad > eps, 1.0, np.where(grad < -eps, -1.0, np.nan))
    free = np.flatnonzero(np.isnan(fixed))
    dlo, dhi = subdifferential_interval(model, u, eps)

    D = densify_divergence((rows, cols)).matrix

    def residual(c):
        dofs = np.tile(fixed, (c.shape[0], 1))
        dofs[:, free] = c
        d = dofs @ D.T
        return np.sum(np.maximum(dlo.ravel() - d, 0.0) ** 2 + np.maximum(d - dhi.ravel(), 0.0) ** 2, axis=1)

    dofs = fixed.copy()
    if free.size:
        dofs[free] = _zoom_search(residual, free.size, -1.0, 1.0)
    return u, DualField.from_dofs((rows, cols), dofs)


# -- Lagrangian of the multiplier formulation (L2 fidelity only) ------------------

def rof_dual_energy(model: FidelityModel, p: DualField) -> float:
    """Dual objective ``(alpha F)^*(div p) + chi_C(p)`` for the L2 model."""
    if model.variant is not Variant.RofL2:
        raise NotImplementedError("closed-form conjugate only for the L2 denoising model")
    if np.abs(p.dofs()).max(initial=0.0) > 1.0 + 1e-12:
        return math.inf
    d = divergence(p)
    return float(np.vdot(d, d) / (2.0 * model.alpha) + np.vdot(d, model.f))


def rof_lagrangian(model: FidelityModel, tp: TornDualField, lam) -> float:
    """Value of the torn-space Lagrangian at ``(tp, lam)`` for the L2 model."""
    if model.variant is not Variant.RofL2:
        raise NotImplementedError("closed-form conjugate only for the L2 denoising model")
    if tp.max_abs() > 1.0 + 1e-12:
        return math.inf
    total = 0.0
    for sub, V, H in zip(tp.partition, tp.v, tp.h):
        d = block_divergence(V, H)
        total += float(np.vdot(d, d) / (2.0 * model.alpha) + np.vdot(d, model.f[sub.slices]))
    return total + float(np.vdot(jump(tp), lam))


def tv_max_form(u) -> float:
    """TV as ``max_{|p| <= 1} <div p, u>``, evaluated at the sign maximizer."""
    u = np.asarray(u, dtype=float)
    s = divergence_adjoint(u)
    p = DualField(np.sign(s.v), np.sign(s.h))
    return float(np.vdot(divergence(p), u))


def tv_finite_difference(u) -> float:
    u = np.asarray(u, dtype=float)
    return float(np.abs(np.diff(u, axis=0)).sum() + np.abs(np.diff(u, axis=1)).sum())


# -- verification suites --------------------------------------------------------

class SuiteResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def _random_shape(rng, hi=12):
    return int(rng.integers(1, hi + 1)), int(rng.integers(1, hi + 1))


def _random_partition(rng, hi=12):
    rows, cols = int(rng.integers(2, hi + 1)), int(rng.integers(2, hi + 1))
    return Partition((rows, cols), int(rng.integers(1, min(rows, 4) + 1)), int(rng.integers(1, min(cols, 4) + 1)))


def suite_divergence_adjoint(rng, cases=20) -> SuiteResult:
    worst = 0.0
    for _ in range(cases):
        shape = _random_shape(rng)
        D = densify_divergence(shape).matrix
        Ds = densify_divergence_adjoint(shape).matrix
        worst = max(worst, float(np.abs(D.T - Ds).max(initial=0.0)))
    return SuiteResult("divergence adjoint", worst <= 1e-12, f"max |D^T - D*| = {worst:.1e}")


def suite_jump(rng, cases=20) -> SuiteResult:
    worst_adj = worst_gram = 0.0
    for _ in range(cases):
        part = _random_partition(rng)
        B = densify_jump(part).matrix
        Bs = densify_jump_adjoint(part).matrix
        worst_adj = max(worst_adj, float(np.abs(B.T - Bs).max(initial=0.0)))
        worst_gram = max(worst_gram, float(np.abs(B @ B.T - 2.0 * np.eye(B.shape[0])).max(initial=0.0)))
    ok = worst_adj <= 1e-12 and worst_gram <= 1e-12
    return SuiteResult("jump operator", ok, f"adjoint err {worst_adj:.1e}, |BB* - 2I| {worst_gram:.1e}")


def suite_torn_divergence(rng, cases=20) -> SuiteResult:
    """Local divergences of a torn copy of ``p`` reassemble ``div p``."""
    from .decomposition import tear

    worst = 0.0
    for _ in range(cases):
        part = _random_partition(rng)
        p = DualField.from_dofs(part.shape, rng.standard_normal(GridShape(*part.shape).edges))
        tp = tear(p, part)
        Dt = densify_torn_divergence(part).matrix
        worst = max(worst, float(np.abs(Dt @ tp.dofs() - divergence(p).ravel()).max(initial=0.0)))
    return SuiteResult("torn divergence", worst <= 1e-12, f"max err {worst:.1e}")


def suite_tv(rng, cases=20) -> SuiteResult:
    worst = 0.0
    for _ in range(cases):
        u = rng.standard_normal(_random_shape(rng, 32))
        worst = max(worst, abs(tv_max_form(u) - tv_finite_difference(u)))
    return SuiteResult("TV max form", worst <= 1e-12, f"max err {worst:.1e}")


def suite_prox(rng, cases=200) -> SuiteResult:
    from .fidelity import prox_F

    worst = 0.0
    for variant in Variant:
        for _ in range(cases):
            f = rng.uniform(-1, 2)
            u = rng.uniform(-2, 3)
            sigma = float(10 ** rng.uniform(-2, 1))
            observed = bool(rng.random() < 0.7) if variant.needs_mask else True
            mask = np.array([[not observed]])
            model = FidelityModel.build(variant, np.array([[f]]), 1.0, mask=mask if variant.needs_mask else None)
            fm = float(model.f[0, 0])
            g = float(model.g[0, 0]) if model.g is not None else 0.0
            closed = float(prox_F(model, np.array([[u]]), sigma)[0, 0])
            searched = prox_search(variant, u, sigma, fm, observed, g)
            worst = max(worst, abs(closed - searched))
    return SuiteResult("prox vs golden section", worst <= 1e-6, f"max err {worst:.1e}")


def suite_tiny_saddle(rng, cases=10) -> SuiteResult:
    worst = 0.0
    for _ in range(cases):
        for variant in Variant:
            shape = (int(rng.integers(1, 3)), int(rng.integers(1, 3)))
            f = rng.uniform(0, 1, shape)
            mask = rng.random(shape) < 0.3 if variant.needs_mask else None
            model = FidelityModel.build(variant, f, float(rng.uniform(0.5, 3)), mask=mask)
            u, p = tiny_saddle(model)
            worst = max(worst, pd_residual(model, u, p))
    return SuiteResult("tiny saddle optimality", worst <= 1e-6, f"max residual {worst:.1e}")


def suite_dd_matches_full(rng, cases=2) -> SuiteResult:
    import warnings

    from .solvers import OuterParams, dd_solve

    worst = 0.0
    for _ in range(cases):
        f = np.kron(rng.uniform(0, 1, (4, 4)), np.ones((4, 4))) + 0.1 * rng.standard_normal((16, 16))
        model = FidelityModel.rof(f, 8.0)
        ref = reference_energy(model, 20_000)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            outer = OuterParams(reference_energy=ref, outer_tol=1e-6)
        res = dd_solve(model, Partition(model.shape, 2, 2), outer)
        worst = max(worst, abs(res.report.final_energy - ref) / abs(ref))
    return SuiteResult("DD energy vs single domain", worst < 1e-4, f"max rel gap {worst:.1e}")


SUITES = (
    suite_divergence_adjoint,
    suite_jump,
    suite_torn_divergence,
    suite_tv,
    suite_prox,
    suite_tiny_saddle,
    suite_dd_matches_full,
)


def run_suites(seed: int = 0, scale: float = 1.0):
    """Run every suite with case counts multiplied by ``scale``."""
    rng = np.random.default_rng(seed)
    out = []
    for suite in SUITES:
        cases = suite.__defaults__[-1]
        out.append(suite(rng, max(1, int(round(cases * scale)))))
    return out
