import numpy as np
import pytest

from tvdd import _kernels_py
from tvdd._backend import BACKENDS, get_backend
from tvdd.fidelity import Variant

needs_compiled = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled extension not built")


def data(rng, shape):
    f = rng.uniform(0, 1, shape)
    w = (rng.random(shape) < 0.8).astype(float)
    g = rng.uniform(-0.3, 0.3, shape)
    return f, w, g


def test_unknown_backend():
    with pytest.raises(ValueError):
        get_backend("fortran")


def test_environment_override(monkeypatch):
    monkeypatch.setenv("TVDD_BACKEND", "python")
    assert get_backend() is _kernels_py


@needs_compiled
@pytest.mark.parametrize("variant", list(Variant))
def test_prox_and_energy_agree(variant, rng):
    c, p = BACKENDS["cython"], BACKENDS["python"]
    f, w, g = data(rng, (7, 9))
    x = rng.uniform(-1, 2, (7, 9))
    np.testing.assert_allclose(c.prox(int(variant), x, 0.3, f, w, g), p.prox(int(variant), x, 0.3, f, w, g),
                               rtol=0, atol=1e-15)
    u = rng.uniform(0, 1, (7, 9))
    assert c.energy(int(variant), 2.0, u, f, w, g) == pytest.approx(p.energy(int(variant), 2.0, u, f, w, g), rel=1e-13)


@needs_compiled
@pytest.mark.parametrize("variant", list(Variant))
@pytest.mark.parametrize("flags", [(False, True, False, True), (True, True, True, True), (True, False, False, False)])
def test_local_saddle_agrees(variant, flags, rng):
    f, w, g = data(rng, (6, 5))
    Vh = rng.uniform(-1, 1, (6, 6))
    Hh = rng.uniform(-1, 1, (7, 5))
    left, right, top, bottom = flags
    Vh[:, 0] *= left
    Vh[:, -1] *= right
    Hh[0] *= top
    Hh[-1] *= bottom
    out = {}
    for name in ("cython", "python"):
        u, V, H = f.copy(), np.zeros((6, 6)), np.zeros((7, 5))
        it, ok = BACKENDS[name].local_saddle(u, V, H, Vh, Hh, f, w, g, int(variant), 2.0, 50.0, 10.0,
                                             1 / 80, 1 / 400, 1e-8, 3000, left, right, top, bottom)
        out[name] = (u, V, H, it, ok)
    a, b = out["cython"], out["python"]
    assert a[3] == b[3] and a[4] == b[4]
    for x, y in zip(a[:3], b[:3]):
        np.testing.assert_allclose(x, y, rtol=0, atol=1e-10)


@needs_compiled
@pytest.mark.parametrize("variant", list(Variant))
def test_full_primal_dual_agrees(variant, rng):
    f, w, g = data(rng, (8, 6))
    out = {}
    for name in ("cython", "python"):
        u, v, h = f.copy(), np.zeros((8, 5)), np.zeros((7, 6))
        energies = np.empty(400)
        k = BACKENDS[name].full_primal_dual(u, v, h, f, w, g, int(variant), 3.0, 10.0, 1 / 80, 400, 0.0, energies)
        out[name] = (u, v, h, energies[:k])
    for x, y in zip(out["cython"], out["python"]):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-12)


def test_python_backend_without_energy_recording(rng):
    f, w, g = data(rng, (4, 4))
    u, v, h = f.copy(), np.zeros((4, 3)), np.zeros((3, 4))
    assert _kernels_py.full_primal_dual(u, v, h, f, w, g, 0, 1.0, 10.0, 1 / 80, 50, 0.0, np.empty(0)) == 50


@needs_compiled
def test_inactive_slots_are_cleared(rng):
    f, w, g = data(rng, (4, 4))
    V0, H0 = rng.uniform(-1, 1, (4, 5)), rng.uniform(-1, 1, (5, 4))
    Vh, Hh = rng.uniform(-1, 1, (4, 5)), rng.uniform(-1, 1, (5, 4))
    out = {}
    for name in ("cython", "python"):
        u, V, H = f.copy(), V0.copy(), H0.copy()
        BACKENDS[name].local_saddle(u, V, H, Vh, Hh, f, w, g, 0, 2.0, 50.0, 10.0, 1 / 80, 1 / 400,
                                    1e-8, 500, False, True, False, True)
        assert not V[:, 0].any() and not H[0].any()
        out[name] = (u, V, H)
    for x, y in zip(out["cython"], out["python"]):
        np.testing.assert_allclose(x, y, atol=1e-10)
