"""Vectorised bracketed root finding for monotone scalar equations."""

import numpy as np

from .errors import ConvergenceError


def bracketed_root(fun, lo, hi, flo=None, fhi=None, rtol=1e-14, maxiter=200):
    """Solve ``fun(t) = 0`` elementwise on brackets ``[lo, hi]``.

    ``fun(t, mask)`` returns residuals for the elements selected by the
    boolean ``mask`` (``None`` meaning all), where ``t`` holds exactly those
    elements.  It must change sign on every bracket.  Uses the Illinois variant
    of regula falsi with a bisection fallback whenever a step fails to halve
    the bracket, so convergence is never slower than bisection.

    Stops when the bracket width is below ``rtol`` times the larger endpoint
    magnitude of the current bracket.  Returns the roots and the final
    absolute bracket widths.
    """
    a = np.array(lo, dtype=float, copy=True)
    b = np.array(hi, dtype=float, copy=True)
    fa = fun(a, None) if flo is None else np.array(flo, dtype=float, copy=True)
    fb = fun(b, None) if fhi is None else np.array(fhi, dtype=float, copy=True)
    if a.size == 0:
        return a, np.zeros_like(a)

    scale = np.maximum(np.abs(a), np.abs(b))
    scale = np.where(scale > 0, scale, 1.0)
    x = np.where(np.abs(fa) <= np.abs(fb), a, b)
    done = (fa == 0) | (fb == 0) | (b - a <= rtol * scale)
    x = np.where(fa == 0, a, np.where(fb == 0, b, x))
    side = np.zeros(a.shape, dtype=np.int8)
    width_prev = b - a

    for it in range(maxiter):
        act = ~done
        if not act.any():
            break
        ia = a[act]
        ib = b[act]
        ifa = fa[act]
        ifb = fb[act]
        denom = ifb - ifa
        c = np.where(denom != 0, ib - ifb * (ib - ia) / np.where(denom != 0, denom, 1.0),
                     0.5 * (ia + ib))
        # bisect when the secant point leaves the bracket or progress stalls
        stall = (b - a)[act] > 0.5 * width_prev[act]
        bad = ~((c > ia) & (c < ib)) | (stall & (it % 3 == 2))
        c = np.where(bad, 0.5 * (ia + ib), c)
        fc = np.asarray(fun(c, act), dtype=float)

        width_prev[act] = (b - a)[act]
        left = np.sign(fc) == np.sign(ifa)
        iside = side[act]
        # Illinois: halve the retained endpoint value on repeated same-side moves
        na = np.where(left, c, ia)
        nfa = np.where(left, fc, np.where(iside == -1, 0.5 * ifa, ifa))
        nb = np.where(left, ib, c)
        nfb = np.where(left, np.where(iside == 1, 0.5 * ifb, ifb), fc)
        side[act] = np.where(left, 1, -1)
        a[act] = na
        fa[act] = nfa
        b[act] = nb
        fb[act] = nfb
        x[act] = c
        # tolerance relative to the current bracket: roots far below the
        # initial upper end still get full relative accuracy
        scale[act] = np.maximum(np.maximum(np.abs(na), np.abs(nb)), 1e-300)
        done[act] = (fc == 0) | (nb - na <= rtol * scale[act])
    else:
        if not done.all():
            raise ConvergenceError("bracketed root did not converge",
                                   float(np.max((b - a) / scale)))
    return x, b - a

