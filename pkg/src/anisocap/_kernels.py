"""Compiled per-cell envelope kernels for the built-in norm kinds.

The numpy route in :mod:`anisocap.anisotropy` is the reference; these
kernels evaluate the same resolvent equation point by point, which avoids
the temporaries of the vectorised bracket iteration inside the solver loop.
Kinds: 0 Euclidean, 1 l1, 2 linf, 3 weighted l2, each optionally
regularised by ``eps * |.|``.
"""

import math

import numpy as np
from numba import njit

EUCLIDEAN, L1, LINF, WEIGHTED = 0, 1, 2, 3


@njit(cache=True, inline="always")
def _base_value(x, kind, w):
    n = x.shape[0]
    s = 0.0
    if kind == EUCLIDEAN:
        for i in range(n):
            s += x[i] * x[i]
        return math.sqrt(s)
    if kind == L1:
        for i in range(n):
            s += abs(x[i])
        return s
    if kind == LINF:
        for i in range(n):
            s = max(s, abs(x[i]))
        return s
    for i in range(n):
        s += w[i] * x[i] * x[i]
    return math.sqrt(s)


@njit(cache=True, inline="always")
def _value(x, kind, eps, w):
    v = _base_value(x, kind, w)
    if eps > 0.0:
        s = 0.0
        for i in range(x.shape[0]):
            s += x[i] * x[i]
        v += eps * math.sqrt(s)
    return v


@njit(cache=True, inline="always")
def _project_base(x, out, kind, w):
    """Projection onto the polar unit ball of the base norm."""
    n = x.shape[0]
    if kind == EUCLIDEAN:
        s = 0.0
        for i in range(n):
            s += x[i] * x[i]
        s = math.sqrt(s)
        f = 1.0 / s if s > 1.0 else 1.0
        for i in range(n):
            out[i] = x[i] * f
    elif kind == L1:
        for i in range(n):
            out[i] = min(1.0, max(-1.0, x[i]))
    elif kind == LINF:
        s = 0.0
        for i in range(n):
            s += abs(x[i])
        if s <= 1.0:
            for i in range(n):
                out[i] = x[i]
            return
        a = np.empty(n)
        for i in range(n):
            a[i] = abs(x[i])
        srt = np.sort(a)[::-1]
        cs = 0.0
        tau = 0.0
        for j in range(n):
            cs += srt[j]
            t = (cs - 1.0) / (j + 1)
            if srt[j] - t > 0:
                tau = t
        for i in range(n):
            v = max(a[i] - tau, 0.0)
            out[i] = v if x[i] >= 0 else -v
    else:
        s = 0.0
        for i in range(n):
            s += x[i] * x[i] / w[i]
        if s <= 1.0:
            for i in range(n):
                out[i] = x[i]
            return
        nu = 0.0
        for _ in range(100):
            S = 0.0
            dS = 0.0
            for i in range(n):
                d = w[i] + nu
                q = w[i] * x[i] * x[i] / (d * d)
                S += q
                dS -= 2.0 * q / d
            r = math.sqrt(S)
            step = (1.0 / r - 1.0) / (-0.5 * dS / (S * r))
            nu = max(nu - step, 0.0)
            if abs(step) <= 1e-15 * (1.0 + nu):
                break
        for i in range(n):
            out[i] = w[i] * x[i] / (w[i] + nu)


@njit(cache=True, inline="always")
def _project(x, out, kind, eps, w):
    _project_base(x, out, kind, w)
    if eps > 0.0:
        n = x.shape[0]
        s = 0.0
        for i in range(n):
            s += (x[i] - out[i]) ** 2
        s = math.sqrt(s)
        if s > eps:
            f = eps / s
            for i in range(n):
                out[i] = out[i] + f * (x[i] - out[i])
        else:
            for i in range(n):
                out[i] = x[i]


@njit(cache=True, inline="always")
def _prox(xi, mu, eta, tmp, proj, kind, eps, w):
    n = xi.shape[0]
    for i in range(n):
        tmp[i] = xi[i] / mu
    _project(tmp, proj, kind, eps, w)
    for i in range(n):
        eta[i] = xi[i] - mu * proj[i]


@njit(cache=True, inline="always")
def _pow(t, e):
    # the common exponents avoid the general pow
    if e == 0.5:
        return math.sqrt(t)
    if e == 1.5:
        return t * math.sqrt(t)
    if e == 1.0:
        return t
    if e == 2.0:
        return t * t
    return t ** e


@njit(cache=True, inline="always")
def _value2(x0, x1, kind, eps, w0, w1):
    if kind == EUCLIDEAN:
        v = math.sqrt(x0 * x0 + x1 * x1)
    elif kind == L1:
        v = abs(x0) + abs(x1)
    elif kind == LINF:
        v = max(abs(x0), abs(x1))
    else:
        v = math.sqrt(w0 * x0 * x0 + w1 * x1 * x1)
    if eps > 0.0:
        v += eps * math.sqrt(x0 * x0 + x1 * x1)
    return v


@njit(cache=True, inline="always")
def _project2(y0, y1, kind, eps, w0, w1):
    if kind == EUCLIDEAN:
        s = math.sqrt(y0 * y0 + y1 * y1)
        f = 1.0 / s if s > 1.0 else 1.0
        q0 = y0 * f
        q1 = y1 * f
    elif kind == L1:
        q0 = min(1.0, max(-1.0, y0))
        q1 = min(1.0, max(-1.0, y1))
    elif kind == LINF:
        a0 = abs(y0)
        a1 = abs(y1)
        if a0 + a1 <= 1.0:
            q0 = y0
            q1 = y1
        else:
            if a0 - a1 >= 1.0:
                b0, b1 = 1.0, 0.0
            elif a1 - a0 >= 1.0:
                b0, b1 = 0.0, 1.0
            else:
                tau = 0.5 * (a0 + a1 - 1.0)
                b0 = a0 - tau
                b1 = a1 - tau
            q0 = b0 if y0 >= 0 else -b0
            q1 = b1 if y1 >= 0 else -b1
    else:
        if y0 * y0 / w0 + y1 * y1 / w1 <= 1.0:
            q0 = y0
            q1 = y1
        else:
            nu = 0.0
            for _ in range(100):
                d0 = w0 + nu
                d1 = w1 + nu
                g0 = w0 * y0 * y0 / (d0 * d0)
                g1 = w1 * y1 * y1 / (d1 * d1)
                S = g0 + g1
                dS = -2.0 * (g0 / d0 + g1 / d1)
                r = math.sqrt(S)
                step = (1.0 / r - 1.0) / (-0.5 * dS / (S * r))
                nu = max(nu - step, 0.0)
                if abs(step) <= 1e-15 * (1.0 + nu):
                    break
            q0 = w0 * y0 / (w0 + nu)
            q1 = w1 * y1 / (w1 + nu)
    if eps > 0.0:
        d0 = y0 - q0
        d1 = y1 - q1
        s = math.sqrt(d0 * d0 + d1 * d1)
        if s > eps:
            q0 += eps / s * d0
            q1 += eps / s * d1
        else:
            q0 = y0
            q1 = y1
    return q0, q1


@njit(cache=True, nogil=True)
def _envelope2(xi, lam, p, kind, eps, w, val, grad, eta_out, mu_out, mu_lap):
    w0 = w[0]
    w1 = w[1]
    for k in range(xi.shape[0]):
        x0 = xi[k, 0]
        x1 = xi[k, 1]
        F0 = _value2(x0, x1, kind, eps, w0, w1)
        if F0 == 0.0:
            val[k] = 0.0
            mu_out[k] = 0.0
            grad[k, 0] = grad[k, 1] = 0.0
            eta_out[k, 0] = eta_out[k, 1] = 0.0
            continue
        a = 0.0
        b = lam * p * _pow(F0, p - 1.0)
        fa = -b
        q0, q1 = _project2(x0 / b, x1 / b, kind, eps, w0, w1)
        fb = b - lam * p * _pow(_value2(x0 - b * q0, x1 - b * q1, kind, eps, w0, w1), p - 1.0)
        c = b
        side = 0
        if fb > 0.0:
            for _ in range(200):
                c = b - fb * (b - a) / (fb - fa)
                if not (c > a and c < b):
                    c = 0.5 * (a + b)
                q0, q1 = _project2(x0 / c, x1 / c, kind, eps, w0, w1)
                fc = c - lam * p * _pow(_value2(x0 - c * q0, x1 - c * q1, kind, eps, w0, w1),
                                        p - 1.0)
                if fc == 0.0:
                    break
                if (fc < 0.0) == (fa < 0.0):
                    a = c
                    fa = fc
                    if side == 1:
                        fb *= 0.5
                    side = 1
                else:
                    b = c
                    fb = fc
                    if side == -1:
                        fa *= 0.5
                    side = -1
                if b - a <= 1e-14 * b:
                    break
        q0, q1 = _project2(x0 / c, x1 / c, kind, eps, w0, w1)
        e0 = x0 - c * q0
        e1 = x1 - c * q1
        mu_out[k] = c
        d0 = x0 - e0
        d1 = x1 - e1
        grad[k, 0] = d0 / lam
        grad[k, 1] = d1 / lam
        eta_out[k, 0] = e0
        eta_out[k, 1] = e1
        val[k] = (d0 * d0 + d1 * d1) / (2.0 * lam) + _pow(_value2(e0, e1, kind, eps, w0, w1), p)
        if mu_lap > 0.0:
            nx = math.sqrt(x0 * x0 + x1 * x1)
            val[k] += mu_lap * _pow(nx, p)
            f = mu_lap * p * _pow(nx, p - 1.0) / nx
            grad[k, 0] += f * x0
            grad[k, 1] += f * x1


@njit(cache=True, nogil=True)
def envelope_batch(xi, lam, p, kind, eps, w, val, grad, eta_out, mu_out, mu_lap=0.0):
    """Envelope values, Yosida gradients, resolvents and prox parameters.

    With ``mu_lap > 0`` the values and gradients include ``mu_lap |ξ|^p``.
    """
    m, n = xi.shape
    if n == 2:
        _envelope2(xi, lam, p, kind, eps, w, val, grad, eta_out, mu_out, mu_lap)
        return
    eta = np.empty(n)
    tmp = np.empty(n)
    proj = np.empty(n)
    for k in range(m):
        x = xi[k]
        F0 = _value(x, kind, eps, w)
        if F0 == 0.0:
            val[k] = 0.0
            mu_out[k] = 0.0
            for i in range(n):
                grad[k, i] = 0.0
                eta_out[k, i] = 0.0
            continue
        # Illinois on psi(mu) = mu - lam p F(prox_{mu F}(xi))^{p-1}, increasing
        a = 0.0
        b = lam * p * F0 ** (p - 1.0)
        fa = -b
        _prox(x, b, eta, tmp, proj, kind, eps, w)
        fb = b - lam * p * _value(eta, kind, eps, w) ** (p - 1.0)
        c = b
        side = 0
        if fb > 0.0:
            for _ in range(200):
                c = b - fb * (b - a) / (fb - fa)
                if not (c > a and c < b):
                    c = 0.5 * (a + b)
                _prox(x, c, eta, tmp, proj, kind, eps, w)
                fc = c - lam * p * _value(eta, kind, eps, w) ** (p - 1.0)
                if fc == 0.0:
                    break
                if (fc < 0.0) == (fa < 0.0):
                    a = c
                    fa = fc
                    if side == 1:
                        fb *= 0.5
                    side = 1
                else:
                    b = c
                    fb = fc
                    if side == -1:
                        fa *= 0.5
                    side = -1
                if b - a <= 1e-14 * b:
                    break
        _prox(x, c, eta, tmp, proj, kind, eps, w)
        mu_out[k] = c
        s = 0.0
        for i in range(n):
            d = x[i] - eta[i]
            s += d * d
            grad[k, i] = d / lam
            eta_out[k, i] = eta[i]
        val[k] = s / (2.0 * lam) + _value(eta, kind, eps, w) ** p
        if mu_lap > 0.0:
            nx = 0.0
            for i in range(n):
                nx += x[i] * x[i]
            nx = math.sqrt(nx)
            val[k] += mu_lap * _pow(nx, p)
            f = mu_lap * p * _pow(nx, p - 1.0) / nx
            for i in range(n):
                grad[k, i] += f * x[i]
