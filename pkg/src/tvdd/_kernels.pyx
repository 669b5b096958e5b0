# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops; same signatures as ``_kernels_py``.

The loops run without the GIL so that subdomain solves dispatched to a
thread pool execute concurrently.
"""

import numpy as np

from libc.math cimport sqrt, fabs, INFINITY

NAME = "cython"


cdef inline double _shrink(double r, double t) noexcept nogil:
    if r > t:
        return r - t
    if r < -t:
        return r + t
    return 0.0


cdef inline double _clip1(double x) noexcept nogil:
    if x > 1.0:
        return 1.0
    if x < -1.0:
        return -1.0
    return x


cdef inline double _prox(int variant, double x, double t, double f, double w, double g) noexcept nogil:
    cdef double r
    if variant == 0:
        return (x + t * f) / (1.0 + t)
    if variant == 1:
        return f + _shrink(x - f, t)
    if variant == 2:
        if w > 0.0:
            return (x + t * f) / (1.0 + t)
        return x
    if variant == 3:
        if w > 0.0:
            return f + _shrink(x - f, t)
        return x
    r = x - t * g
    if r < 0.0:
        return 0.0
    if r > 1.0:
        return 1.0
    return r


cdef double _energy(int variant, double alpha, double[:, ::1] u, double[:, ::1] f,
                    double[:, ::1] w, double[:, ::1] g) noexcept nogil:
    cdef Py_ssize_t nr = u.shape[0], nc = u.shape[1], i, j
    cdef double tv = 0.0, fid = 0.0, r, x
    for i in range(nr):
        for j in range(nc):
            x = u[i, j]
            if j + 1 < nc:
                tv += fabs(u[i, j + 1] - x)
            if i + 1 < nr:
                tv += fabs(u[i + 1, j] - x)
            r = x - f[i, j]
            if variant == 0:
                fid += 0.5 * r * r
            elif variant == 1:
                fid += fabs(r)
            elif variant == 2:
                fid += 0.5 * w[i, j] * r * r
            elif variant == 3:
                fid += w[i, j] * fabs(r)
            else:
                if x < 0.0 or x > 1.0:
                    return INFINITY
                fid += x * g[i, j]
    return alpha * fid + tv


def prox(int variant, x, double t, f, w, g):
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, ::1] fv = np.ascontiguousarray(f, dtype=np.float64)
    cdef double[:, ::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[:, ::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    out = np.empty((xv.shape[0], xv.shape[1]))
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j
    for i in range(xv.shape[0]):
        for j in range(xv.shape[1]):
            ov[i, j] = _prox(variant, xv[i, j], t, fv[i, j], wv[i, j], gv[i, j])
    return out


def energy(int variant, double alpha, double[:, ::1] u, double[:, ::1] f,
           double[:, ::1] w, double[:, ::1] g):
    return _energy(variant, alpha, u, f, w, g)


def local_saddle(double[:, ::1] u, double[:, ::1] V, double[:, ::1] H,
                 double[:, ::1] Vhat, double[:, ::1] Hhat,
                 double[:, ::1] f, double[:, ::1] w, double[:, ::1] g,
                 int variant, double alpha, double tau, double tau0, double sigma0,
                 double gamma, double tol, int max_iter,
                 bint left, bint right, bint top, bint bottom):
    cdef Py_ssize_t nr = u.shape[0], nc = u.shape[1], i, j
    for i in range(nr):
        if not left:
            V[i, 0] = 0.0
        if not right:
            V[i, nc] = 0.0
    for j in range(nc):
        if not top:
            H[0, j] = 0.0
        if not bottom:
            H[nr, j] = 0.0
    cdef double[:, ::1] Vb = np.array(V, copy=True)
    cdef double[:, ::1] Hb = np.array(H, copy=True)
    cdef double tk = tau0, sk = sigma0, c, theta, d, du, old, new, diff2, nrm2
    cdef int k, done = 0
    with nogil:
        k = 0
        while k < max_iter:
            k += 1
            for i in range(nr):
                for j in range(nc):
                    d = Vb[i, j + 1] - Vb[i, j] + Hb[i + 1, j] - Hb[i, j]
                    u[i, j] = _prox(variant, u[i, j] + sk * d, sk * alpha, f[i, j], w[i, j], g[i, j])

            c = 1.0 / (tau + tk)
            theta = 1.0 / sqrt(1.0 + 2.0 * gamma * tk)
            diff2 = 0.0
            nrm2 = 0.0
            for i in range(nr):
                for j in range(nc + 1):
                    if j == 0:
                        if not left:
                            V[i, 0] = 0.0
                            Vb[i, 0] = 0.0
                            continue
                        du = -u[i, 0]
                    elif j == nc:
                        if not right:
                            V[i, nc] = 0.0
                            Vb[i, nc] = 0.0
                            continue
                        du = u[i, nc - 1]
                    else:
                        du = u[i, j - 1] - u[i, j]
                    old = V[i, j]
                    new = _clip1((tau * (old - tk * du) + tk * Vhat[i, j]) * c)
                    diff2 += (new - old) * (new - old)
                    nrm2 += new * new
                    Vb[i, j] = new + theta * (new - old)
                    V[i, j] = new
            for i in range(nr + 1):
                if (i == 0 and not top) or (i == nr and not bottom):
                    for j in range(nc):
                        H[i, j] = 0.0
                        Hb[i, j] = 0.0
                    continue
                for j in range(nc):
                    if i == 0:
                        du = -u[0, j]
                    elif i == nr:
                        du = u[nr - 1, j]
                    else:
                        du = u[i - 1, j] - u[i, j]
                    old = H[i, j]
                    new = _clip1((tau * (old - tk * du) + tk * Hhat[i, j]) * c)
                    diff2 += (new - old) * (new - old)
                    nrm2 += new * new
                    Hb[i, j] = new + theta * (new - old)
                    H[i, j] = new
            tk = tk * theta
            sk = sk / theta
            if nrm2 > 0.0:
                if sqrt(diff2) < tol * sqrt(nrm2):
                    done = 1
                    break
            elif sqrt(diff2) < tol:
                done = 1
                break
    return k, bool(done)


def full_primal_dual(double[:, ::1] u, double[:, ::1] v, double[:, ::1] h,
                     double[:, ::1] f, double[:, ::1] w, double[:, ::1] g,
                     int variant, double alpha, double tau0, double sigma0,
                     int max_iter, double tol, double[::1] energies):
    cdef Py_ssize_t nr = u.shape[0], nc = u.shape[1], i, j
    cdef double[:, ::1] ub = np.array(u, copy=True)
    cdef bint record = energies.shape[0] > 0
    cdef double d, un, diff2, nrm2
    cdef int k
    with nogil:
        k = 0
        while k < max_iter:
            k += 1
            for i in range(nr):
                for j in range(nc - 1):
                    v[i, j] = _clip1(v[i, j] - tau0 * (ub[i, j] - ub[i, j + 1]))
            for i in range(nr - 1):
                for j in range(nc):
                    h[i, j] = _clip1(h[i, j] - tau0 * (ub[i, j] - ub[i + 1, j]))
            diff2 = 0.0
            nrm2 = 0.0
            for i in range(nr):
                for j in range(nc):
                    d = 0.0
                    if j + 1 < nc:
                        d += v[i, j]
                    if j > 0:
                        d -= v[i, j - 1]
                    if i + 1 < nr:
                        d += h[i, j]
                    if i > 0:
                        d -= h[i - 1, j]
                    un = _prox(variant, u[i, j] + sigma0 * d, sigma0 * alpha, f[i, j], w[i, j], g[i, j])
                    ub[i, j] = 2.0 * un - u[i, j]
                    diff2 += (un - u[i, j]) * (un - u[i, j])
                    nrm2 += un * un
                    u[i, j] = un
            if record:
                energies[k - 1] = _energy(variant, alpha, u, f, w, g)
            if tol > 0.0:
                if nrm2 > 0.0:
                    if sqrt(diff2) < tol * sqrt(nrm2):
                        break
                elif sqrt(diff2) < tol:
                    break
    return k
