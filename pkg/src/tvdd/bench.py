"""Timing of the compiled and NumPy kernels on identical workloads."""

from __future__ import annotations

import time

import numpy as np

from ._backend import BACKENDS, get_backend
from .fidelity import FidelityModel, Variant


def _workload(n: int, seed: int):
    rng = np.random.default_rng(seed)
    f = np.kron(rng.uniform(0, 1, (4, 4)), np.ones((n // 4 + 1, n // 4 + 1)))[:n, :n]
    return f + 0.1 * rng.standard_normal((n, n))


def time_full(backend: str, n: int = 128, iters: int = 500, variant=Variant.RofL2, seed: int = 0) -> float:
    kern = get_backend(backend)
    f = _workload(n, seed)
    model = FidelityModel.build(variant, f, 10.0, mask=np.zeros_like(f, bool) if Variant(variant).needs_mask else None)
    w = np.ascontiguousarray(model.weight, dtype=float)
    g = np.ascontiguousarray(model.g if model.g is not None else np.zeros_like(f))
    u = model.f.copy()
    v, h = np.zeros((n, n - 1)), np.zeros((n - 1, n))
    t0 = time.perf_counter()
    kern.full_primal_dual(u, v, h, np.ascontiguousarray(model.f), w, g, int(model.variant), model.alpha,
                          10.0, 1.0 / 80.0, iters, 0.0, np.empty(0))
    return time.perf_counter() - t0


def time_local(backend: str, n: int = 64, iters: int = 500, seed: int = 0) -> float:
    """One interior subdomain solve with every interface active."""
    kern = get_backend(backend)
    f = _workload(n, seed)
    rng = np.random.default_rng(seed + 1)
    u = f.copy()
    V, H = np.zeros((n, n + 1)), np.zeros((n + 1, n))
    Vh = np.clip(rng.standard_normal((n, n + 1)), -1, 1)
    Hh = np.clip(rng.standard_normal((n + 1, n)), -1, 1)
    w, g = np.ones_like(f), np.zeros_like(f)
    t0 = time.perf_counter()
    kern.local_saddle(u, V, H, Vh, Hh, f, w, g, 0, 10.0, 50.0, 10.0, 1.0 / 80.0, 1.0 / 400.0,
                      0.0, iters, True, True, True, True)
    return time.perf_counter() - t0


def run(sizes=(32, 64, 128), iters: int = 300, repeat: int = 3):
    """Best-of-``repeat`` timings; returns rows ``(kernel, n, backend, seconds)``."""
    rows = []
    for n in sizes:
        for kernel, fn in (("full", time_full), ("local", time_local)):
            for name in BACKENDS:
                best = min(fn(name, n=n, iters=iters) for _ in range(repeat))
                rows.append((kernel, n, name, best))
    return rows


def format_table(rows) -> str:
    lines = [f"{'kernel':<7}{'n':>5}  {'backend':<8}{'seconds':>10}{'speedup':>9}"]
    base = {(k, n): s for k, n, b, s in rows if b == "python"}
    for kernel, n, name, sec in rows:
        ref = base.get((kernel, n))
        speed = f"{ref / sec:8.1f}x" if ref else ""
        lines.append(f"{kernel:<7}{n:>5}  {name:<8}{sec:>10.4f}{speed:>9}")
    return "\n".join(lines)
