"""NumPy implementation of the solver inner loops.

Mirrors ``_kernels.pyx`` call for call; used when the extension is missing or
``TVDD_BACKEND=python`` is set.  Arrays named ``u``, ``V``, ``H`` (and ``v``,
``h`` in the global kernel) are updated in place.
"""

import math

import numpy as np

NAME = "python"


def prox(variant, x, t, f, w, g):
    if variant == 0:
        return (x + t * f) / (1.0 + t)
    if variant == 1:
        r = x - f
        return f + np.sign(r) * np.maximum(np.abs(r) - t, 0.0)
    if variant == 2:
        return np.where(w > 0.0, (x + t * f) / (1.0 + t), x)
    if variant == 3:
        r = x - f
        return np.where(w > 0.0, f + np.sign(r) * np.maximum(np.abs(r) - t, 0.0), x)
    return np.clip(x - t * g, 0.0, 1.0)


def energy(variant, alpha, u, f, w, g):
    tv = np.abs(u[:, 1:] - u[:, :-1]).sum() + np.abs(u[1:, :] - u[:-1, :]).sum()
    r = u - f
    if variant == 0:
        fid = 0.5 * np.vdot(r, r)
    elif variant == 1:
        fid = np.abs(r).sum()
    elif variant == 2:
        fid = 0.5 * np.vdot(w * r, r)
    elif variant == 3:
        fid = np.vdot(w, np.abs(r))
    else:
        if u.min() < 0.0 or u.max() > 1.0:
            return math.inf
        fid = np.vdot(u, g)
    return float(alpha * fid + tv)


def local_saddle(u, V, H, Vhat, Hhat, f, w, g, variant, alpha, tau, tau0, sigma0,
                 gamma, tol, max_iter, left, right, top, bottom):
    """Accelerated primal-dual iteration for one subdomain problem.

    The dual block carries the strongly convex proximal term, so it gets the
    extrapolation and the step-size schedule.  Returns ``(iters, converged)``.
    """
    nr, nc = u.shape
    # slots on the image boundary carry no dof
    if not left:
        V[:, 0] = 0.0
    if not right:
        V[:, nc] = 0.0
    if not top:
        H[0, :] = 0.0
    if not bottom:
        H[nr, :] = 0.0
    Vbar = V.copy()
    Hbar = H.copy()
    dV = np.zeros_like(V)
    dH = np.zeros_like(H)
    tk, sk = tau0, sigma0
    for k in range(1, max_iter + 1):
        d = Vbar[:, 1:] - Vbar[:, :-1] + Hbar[1:, :] - Hbar[:-1, :]
        u[...] = prox(variant, u + sk * d, sk * alpha, f, w, g)

        dV[:, 1:nc] = u[:, :-1] - u[:, 1:]
        dH[1:nr, :] = u[:-1, :] - u[1:, :]
        if left:
            dV[:, 0] = -u[:, 0]
        if right:
            dV[:, nc] = u[:, -1]
        if top:
            dH[0, :] = -u[0, :]
        if bottom:
            dH[nr, :] = u[-1, :]

        c = 1.0 / (tau + tk)
        Vn = np.clip((tau * (V - tk * dV) + tk * Vhat) * c, -1.0, 1.0)
        Hn = np.clip((tau * (H - tk * dH) + tk * Hhat) * c, -1.0, 1.0)
        if not left:
            Vn[:, 0] = 0.0
        if not right:
            Vn[:, nc] = 0.0
        if not top:
            Hn[0, :] = 0.0
        if not bottom:
            Hn[nr, :] = 0.0

        diff = math.sqrt(float(np.vdot(Vn - V, Vn - V) + np.vdot(Hn - H, Hn - H)))
        nrm = math.sqrt(float(np.vdot(Vn, Vn) + np.vdot(Hn, Hn)))

        theta = 1.0 / math.sqrt(1.0 + 2.0 * gamma * tk)
        Vbar = Vn + theta * (Vn - V)
        Hbar = Hn + theta * (Hn - H)
        V[...] = Vn
        H[...] = Hn
        tk *= theta
        sk /= theta
        if diff < tol * nrm if nrm > 0.0 else diff < tol:
            return k, True
    return max_iter, False


def full_primal_dual(u, v, h, f, w, g, variant, alpha, tau0, sigma0, max_iter, tol, energies):
    """Plain primal-dual iteration on the whole grid.

    ``energies`` (length ``max_iter`` or 0) receives ``J(u^k)`` after every
    iteration.  Stops early when the relative change of ``u`` drops below
    ``tol`` (disabled for ``tol <= 0``).  Returns the iteration count.
    """
    record = energies.shape[0] > 0
    ubar = u.copy()
    for k in range(1, max_iter + 1):
        v[...] = np.clip(v - tau0 * (ubar[:, :-1] - ubar[:, 1:]), -1.0, 1.0)
        h[...] = np.clip(h - tau0 * (ubar[:-1, :] - ubar[1:, :]), -1.0, 1.0)
        d = np.zeros_like(u)
        d[:, :-1] += v
        d[:, 1:] -= v
        d[:-1, :] += h
        d[1:, :] -= h
        un = prox(variant, u + sigma0 * d, sigma0 * alpha, f, w, g)
        ubar = 2.0 * un - u
        diff = math.sqrt(float(np.vdot(un - u, un - u)))
        nrm = math.sqrt(float(np.vdot(un, un)))
        u[...] = un
        if record:
            energies[k - 1] = energy(variant, alpha, u, f, w, g)
        if tol > 0.0 and (diff < tol * nrm if nrm > 0.0 else diff < tol):
            return k
    return max_iter
