"""Even norms on R^N and the calculus built on them.

An :class:`Anisotropy` evaluates a norm ``F``, its polar ``F°``, the
projection onto the polar unit ball ``{F° <= 1}`` (which equals ``∂F(0)``)
and projections onto the faces ``∂F(ζ)``.  Everything else in this module
(resolvents, Moreau envelopes and Yosida gradients of ``F^p``) is expressed
through those primitives, so every kind gets the same code path.

All evaluators are vectorised over leading axes: points have shape
``(..., N)`` and scalar results have shape ``(...)``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls
from scipy.spatial import ConvexHull
from scipy.special import gamma

from ._roots import bracketed_root
from .errors import ConvergenceError, DimensionError

__all__ = [
    "Anisotropy", "Euclidean", "L1", "LInf", "WeightedL2", "Regularized",
    "Polytope", "ProxConfig", "parse_anisotropy",
    "eval_F", "eval_polar", "subgrad_F", "subgrad_Fp", "resolvent_Fp",
    "moreau_yosida_Fp", "yosida_grad_Fp", "k_lambda", "regularize",
    "support_sampled_polar", "sphere_directions", "envelope_and_gradient",
]

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def _points(x, dim):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != dim:
        raise DimensionError(f"expected vectors of dimension {dim}, got shape {x.shape}")
    return x


def _norm(x):
    return np.sqrt(np.sum(x * x, axis=-1))


def _unit_ball_volume(n):
    return math.pi ** (n / 2) / gamma(n / 2 + 1)


def sphere_directions(dim, n=None):
    """Quasi-uniform unit directions: golden-angle circle or Fibonacci sphere."""
    if dim == 2:
        n = 4096 if n is None else n
        theta = np.mod(np.arange(n) * GOLDEN_ANGLE, 2 * math.pi)
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    if dim == 3:
        n = 16384 if n is None else n
        k = np.arange(n) + 0.5
        z = 1 - 2 * k / n
        rho = np.sqrt(1 - z * z)
        phi = k * GOLDEN_ANGLE
        return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)
    raise DimensionError("direction sampling is implemented for N = 2 and N = 3")


class Anisotropy:
    """Base class for even norms ``F`` on ``R^N``.

    Subclasses provide ``value``, ``polar``, ``project_dual_ball`` and
    ``face_projection``; the remaining methods have generic defaults.

    Attributes
    ----------
    dim : int
        Ambient dimension ``N``.
    c, C : float
        Constants with ``c |ξ| <= F(ξ) <= C |ξ|``.
    strictly_convex : bool
        Whether the unit ball of ``F`` is strictly convex.
    """

    kind = "abstract"
    strictly_convex = False

    def __init__(self, dim, c, C):
        if dim < 2:
            raise DimensionError("anisotropies are defined for N >= 2")
        self.dim = int(dim)
        self.c = float(c)
        self.C = float(C)

    def __call__(self, xi):
        return self.value(xi)

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"

    # -- primitives -------------------------------------------------------
    def value(self, xi):
        raise NotImplementedError

    def polar(self, x):
        raise NotImplementedError

    def project_dual_ball(self, x):
        """Euclidean projection onto ``{F° <= 1} = ∂F(0)``."""
        raise NotImplementedError

    def face_projection(self, zeta, y, tol=0.0):
        """Project ``y`` onto the face ``∂F(ζ)`` of the polar ball.

        With ``tol > 0`` the face is enlarged to every polar-ball point
        ``δ`` with ``δ·ζ >= (1 - tol) F(ζ)``-type tolerance (kind specific),
        so that near-kinks are treated as kinks.  At ``ζ = 0`` the face is
        the whole polar ball.
        """
        raise NotImplementedError

    # -- derived ----------------------------------------------------------
    def minimal_subgradient(self, zeta):
        """Least-norm element of ``∂F(ζ)``."""
        zeta = _points(zeta, self.dim)
        return self.face_projection(zeta, np.zeros_like(zeta))

    def prox(self, xi, mu):
        """``argmin_η |η - ξ|²/(2μ) + F(η)`` via Moreau's decomposition."""
        xi = _points(xi, self.dim)
        mu = np.asarray(mu, dtype=float)[..., None]
        safe = np.where(mu > 0, mu, 1.0)
        out = xi - safe * self.project_dual_ball(xi / safe)
        return np.where(mu > 0, out, xi)

    def polar_grad(self, x):
        """An element of ``∂F°(x)`` (central differences by default)."""
        x = _points(x, self.dim)
        scale = np.maximum(_norm(x), 1e-300)[..., None]
        step = 1e-7 * scale
        g = np.empty_like(x)
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = 1.0
            g[..., k] = (self.polar(x + step * e) - self.polar(x - step * e)) / (2 * step[..., 0])
        return g

    def wulff_volume(self):
        """Lebesgue measure of the unit Wulff shape ``{F° < 1}``."""
        return _qmc_wulff_volume(self)


class Euclidean(Anisotropy):
    kind = "euclidean"
    strictly_convex = True

    def __init__(self, dim=2):
        super().__init__(dim, 1.0, 1.0)

    def value(self, xi):
        return _norm(_points(xi, self.dim))

    def polar(self, x):
        return _norm(_points(x, self.dim))

    def project_dual_ball(self, x):
        x = _points(x, self.dim)
        return x / np.maximum(_norm(x), 1.0)[..., None]

    def face_projection(self, zeta, y, tol=0.0):
        zeta = _points(zeta, self.dim)
        n = _norm(zeta)[..., None]
        return np.where(n > 0, zeta / np.where(n > 0, n, 1.0), self.project_dual_ball(y))

    def polar_grad(self, x):
        x = _points(x, self.dim)
        n = _norm(x)[..., None]
        return np.where(n > 0, x / np.where(n > 0, n, 1.0), 0.0)

    def wulff_volume(self):
        return _unit_ball_volume(self.dim)


class L1(Anisotropy):
    """``F(ξ) = Σ|ξ_i|``; its Wulff shapes are cubes."""

    kind = "l1"

    def __init__(self, dim=2):
        super().__init__(dim, 1.0, math.sqrt(dim))

    def value(self, xi):
        return np.sum(np.abs(_points(xi, self.dim)), axis=-1)

    def polar(self, x):
        return np.max(np.abs(_points(x, self.dim)), axis=-1)

    def project_dual_ball(self, x):
        return np.clip(_points(x, self.dim), -1.0, 1.0)

    def face_projection(self, zeta, y, tol=0.0):
        zeta = _points(zeta, self.dim)
        y = np.broadcast_to(np.asarray(y, dtype=float), zeta.shape)
        thresh = tol * self.value(zeta)[..., None]
        fixed = np.abs(zeta) > thresh
        return np.where(fixed, np.sign(zeta), np.clip(y, -1.0, 1.0))

    def polar_grad(self, x):
        x = _points(x, self.dim)
        k = np.argmax(np.abs(x), axis=-1)
        g = np.zeros_like(x)
        np.put_along_axis(g, k[..., None], np.take_along_axis(np.sign(x), k[..., None], -1), -1)
        return g

    def wulff_volume(self):
        return 2.0 ** self.dim


def _project_simplex(v, mask=None):
    """Project rows of ``v`` onto ``{θ >= 0, Σθ = 1}`` restricted to ``mask``."""
    if mask is None:
        mask = np.ones(v.shape, dtype=bool)
    w = np.where(mask, v, -np.inf)
    s = -np.sort(-w, axis=-1)
    finite = np.isfinite(s)
    cs = np.cumsum(np.where(finite, s, 0.0), axis=-1)
    j = np.arange(1, v.shape[-1] + 1)
    cond = finite & (s - (cs - 1.0) / j > 0)
    rho = np.max(np.where(cond, j, 0), axis=-1)
    rho = np.maximum(rho, 1)
    tau = (np.take_along_axis(cs, (rho - 1)[..., None], -1)[..., 0] - 1.0) / rho
    return np.where(mask, np.maximum(v - tau[..., None], 0.0), 0.0)


class LInf(Anisotropy):
    """``F(ξ) = max|ξ_i|``; its Wulff shapes are cross-polytopes."""

    kind = "linf"

    def __init__(self, dim=2):
        super().__init__(dim, 1.0 / math.sqrt(dim), 1.0)

    def value(self, xi):
        return np.max(np.abs(_points(xi, self.dim)), axis=-1)

    def polar(self, x):
        return np.sum(np.abs(_points(x, self.dim)), axis=-1)

    def project_dual_ball(self, x):
        x = _points(x, self.dim)
        inside = np.sum(np.abs(x), axis=-1) <= 1.0
        proj = np.sign(x) * _project_simplex(np.abs(x))
        return np.where(inside[..., None], x, proj)

    def face_projection(self, zeta, y, tol=0.0):
        zeta = _points(zeta, self.dim)
        y = np.broadcast_to(np.asarray(y, dtype=float), zeta.shape)
        F = self.value(zeta)[..., None]
        active = np.abs(zeta) >= (1.0 - tol) * F
        s = np.sign(zeta)
        theta = _project_simplex(s * y, active)
        out = s * theta
        return np.where(F > 0, out, self.project_dual_ball(y))

    def polar_grad(self, x):
        return np.sign(_points(x, self.dim))

    def wulff_volume(self):
        return 2.0 ** self.dim / math.factorial(self.dim)


class WeightedL2(Anisotropy):
    """``F(ξ) = sqrt(Σ w_i ξ_i²)`` with positive weights."""

    kind = "weighted-l2"
    strictly_convex = True

    def __init__(self, weights):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or np.any(w <= 0):
            raise ValueError("weights must be a 1-D array of positive numbers")
        self.weights = w
        super().__init__(w.size, math.sqrt(w.min()), math.sqrt(w.max()))

    def __repr__(self):
        return f"WeightedL2({self.weights.tolist()})"

    def value(self, xi):
        xi = _points(xi, self.dim)
        return np.sqrt(np.sum(self.weights * xi * xi, axis=-1))

    def polar(self, x):
        x = _points(x, self.dim)
        return np.sqrt(np.sum(x * x / self.weights, axis=-1))

    def project_dual_ball(self, x):
        # y = w x / (w + ν) with ν >= 0 solving Σ w x² / (w + ν)² = 1
        x = _points(x, self.dim)
        w = self.weights
        shape = x.shape
        X = x.reshape(-1, self.dim)
        nu = np.zeros(len(X))
        idx = np.flatnonzero(self.polar(X) > 1.0)
        # Newton on 1/sqrt(S(ν)) - 1, which is nearly linear in ν
        for _ in range(100):
            if idx.size == 0:
                break
            xa = X[idx]
            d = w + nu[idx, None]
            q = w * xa * xa / d ** 2
            S = np.sum(q, axis=-1)
            dS = -2.0 * np.sum(q / d, axis=-1)
            r = np.sqrt(S)
            step = (1.0 / r - 1.0) / (-0.5 * dS / (S * r))
            nu[idx] = np.maximum(nu[idx] - step, 0.0)
            idx = idx[np.abs(step) > 1e-15 * (1.0 + nu[idx])]
        nu = nu.reshape(shape[:-1])
        return w * x / (w + nu[..., None])

    def face_projection(self, zeta, y, tol=0.0):
        zeta = _points(zeta, self.dim)
        F = self.value(zeta)[..., None]
        grad = self.weights * zeta / np.where(F > 0, F, 1.0)
        return np.where(F > 0, grad, self.project_dual_ball(y))

    def polar_grad(self, x):
        x = _points(x, self.dim)
        P = self.polar(x)[..., None]
        return np.where(P > 0, x / self.weights / np.where(P > 0, P, 1.0), 0.0)

    def wulff_volume(self):
        return _unit_ball_volume(self.dim) * float(np.prod(np.sqrt(self.weights)))


class Regularized(Anisotropy):
    """``F_ε = F + ε|·|``, a strictly convex approximant of ``F``.

    Its polar ball is the Minkowski sum of the polar ball of ``F`` with the
    Euclidean ball of radius ``ε``.
    """

    kind = "regularized"
    strictly_convex = True

    def __init__(self, base, eps):
        if eps <= 0:
            raise ValueError("eps must be positive")
        self.base = base
        self.eps = float(eps)
        super().__init__(base.dim, base.c + eps, base.C + eps)

    def __repr__(self):
        return f"Regularized({self.base!r}, eps={self.eps})"

    def value(self, xi):
        xi = _points(xi, self.dim)
        return self.base.value(xi) + self.eps * _norm(xi)

    def project_dual_ball(self, x):
        x = _points(x, self.dim)
        q = self.base.project_dual_ball(x)
        d = x - q
        dist = _norm(d)[..., None]
        far = dist > self.eps
        return np.where(far, q + self.eps * d / np.where(far, dist, 1.0), x)

    def polar(self, x):
        # gauge of K = B° + εB: smallest t with dist(x/t, B°) <= ε
        x = _points(x, self.dim)
        shape = x.shape[:-1]
        flat = x.reshape(-1, self.dim)
        nx = _norm(flat)
        out = np.zeros(nx.shape)
        nz = nx > 0
        if nz.any():
            pts = flat[nz]
            lo = _norm(pts) / (self.base.C + self.eps)
            hi = self.base.polar(pts)

            def residual(t, mask):
                p = pts if mask is None else pts[mask]
                y = p / t[:, None]
                return _norm(y - self.base.project_dual_ball(y)) - self.eps

            flo = residual(lo, None)
            fhi = np.full(hi.shape, -self.eps)
            flo = np.maximum(flo, 0.0)
            root, _ = bracketed_root(residual, lo, hi, flo, fhi, rtol=1e-15)
            out[nz] = root
        return out.reshape(shape)

    def face_projection(self, zeta, y, tol=0.0):
        zeta = _points(zeta, self.dim)
        y = np.broadcast_to(np.asarray(y, dtype=float), zeta.shape)
        n = _norm(zeta)[..., None]
        u = zeta / np.where(n > 0, n, 1.0)
        face = self.base.face_projection(zeta, y - self.eps * u, tol) + self.eps * u
        return np.where(n > 0, face, self.project_dual_ball(y))

    def wulff_volume(self):
        return _qmc_wulff_volume(self)


class Polytope(Anisotropy):
    """Crystalline norm ``F(ξ) = max_k |g_k·ξ|`` given by generators ``g_k``.

    ``F`` is the support function of ``conv{±g_k}``, which is therefore the
    polar ball.  The polar is the gauge of that hull, evaluated exactly from
    its facet inequalities.
    """

    kind = "polytope"

    def __init__(self, generators):
        g = np.atleast_2d(np.asarray(generators, dtype=float))
        dim = g.shape[1]
        pts = np.vstack([g, -g])
        hull = ConvexHull(pts)
        self.vertices = pts[hull.vertices]
        if dim == 2:
            # ConvexHull returns 2-D vertices in counterclockwise order
            self.vertices = pts[hull.vertices]
        eq = hull.equations
        if np.any(eq[:, -1] >= 0):
            raise ValueError("generators must span R^N (origin inside the hull)")
        self._facets = eq[:, :-1] / (-eq[:, -1:])
        self._hull_volume = hull.volume
        self.generators = g
        dirs = sphere_directions(dim)
        vals = np.max(np.abs(dirs @ g.T), axis=-1)
        # sampled equivalence constants, widened by 1%
        super().__init__(dim, 0.99 * vals.min(), 1.01 * vals.max())

    def __repr__(self):
        return f"Polytope({self.generators.tolist()})"

    def value(self, xi):
        xi = _points(xi, self.dim)
        return np.max(xi @ self.vertices.T, axis=-1)

    def polar(self, x):
        x = _points(x, self.dim)
        return np.maximum(np.max(x @ self._facets.T, axis=-1), 0.0)

    def polar_grad(self, x):
        x = _points(x, self.dim)
        k = np.argmax(x @ self._facets.T, axis=-1)
        return self._facets[k]

    def _project_hull(self, x, verts):
        """Projection of points ``x`` (M, N) onto ``conv(verts)`` (K, N)."""
        out = np.empty_like(x)
        A = np.vstack([verts.T, 1e3 * np.ones(verts.shape[0])])
        for i, xi in enumerate(x):
            b = np.concatenate([xi, [1e3]])
            w, _ = nnls(A, b)
            out[i] = verts.T @ (w / w.sum())
        return out

    def project_dual_ball(self, x):
        x = _points(x, self.dim)
        shape = x.shape
        flat = x.reshape(-1, self.dim)
        out = flat.copy()
        outside = self.polar(flat) > 1.0
        if outside.any():
            pts = flat[outside]
            if self.dim == 2:
                out[outside] = _project_polygon(pts, self.vertices)
            else:
                out[outside] = self._project_hull(pts, self.vertices)
        return out.reshape(shape)

    def face_projection(self, zeta, y, tol=0.0):
        zeta = _points(zeta, self.dim)
        y = np.broadcast_to(np.asarray(y, dtype=float), zeta.shape)
        shape = zeta.shape
        Z = zeta.reshape(-1, self.dim)
        Y = y.reshape(-1, self.dim)
        scores = Z @ self.vertices.T
        F = scores.max(axis=-1)
        active = scores >= F[:, None] - max(tol, 1e-12) * np.abs(F[:, None])
        out = np.empty_like(Z)
        zero = F <= 0
        if zero.any():
            out[zero] = self.project_dual_ball(Y[zero])
        count = active.sum(axis=-1)
        one = ~zero & (count == 1)
        if one.any():
            out[one] = self.vertices[np.argmax(scores[one], axis=-1)]
        many = ~zero & (count > 1)
        for i in np.flatnonzero(many):
            verts = self.vertices[active[i]]
            if self.dim == 2:
                out[i] = _project_polygon(Y[i:i + 1], verts, closed=len(verts) > 2)[0]
            else:
                out[i] = self._project_hull(Y[i:i + 1], verts)[0]
        return out.reshape(shape)

    def wulff_volume(self):
        return float(self._hull_volume)


def _project_polygon(pts, verts, closed=True):
    """Nearest points on the boundary of a convex polygon (or polyline)."""
    a = verts
    b = np.roll(verts, -1, axis=0) if closed else verts[1:]
    a = a if closed else verts[:-1]
    if len(verts) == 1:
        return np.broadcast_to(verts[0], pts.shape).copy()
    best = None
    bestd = None
    for ai, bi in zip(a, b):
        e = bi - ai
        t = np.clip(((pts - ai) @ e) / (e @ e), 0.0, 1.0)
        q = ai + t[:, None] * e
        d = np.sum((pts - q) ** 2, axis=-1)
        if best is None:
            best, bestd = q, d
        else:
            take = d < bestd
            best = np.where(take[:, None], q, best)
            bestd = np.where(take, d, bestd)
    if closed and len(verts) > 2:
        # points inside the polygon project to themselves
        inside = np.ones(len(pts), dtype=bool)
        for ai, bi in zip(a, b):
            e = bi - ai
            cross = e[0] * (pts[:, 1] - ai[1]) - e[1] * (pts[:, 0] - ai[0])
            inside &= cross >= 0
        best = np.where(inside[:, None], pts, best)
    return best


def _qmc_wulff_volume(a, log2n=20):
    """Quasi-Monte-Carlo volume of ``{F° < 1}`` with one Richardson step."""
    from scipy.stats import qmc

    R = 1.0 / a.c  # {F° < 1} lies in the Euclidean ball of radius 1/c
    box = (2 * R) ** a.dim

    def estimate(m):
        pts = qmc.Sobol(a.dim, scramble=False).random_base2(m)
        pts = (pts + 0.5 / 2 ** m) % 1.0
        x = (2 * pts - 1) * R
        return box * np.mean(a.polar(x) < 1.0)

    coarse = estimate(log2n - 2)
    fine = estimate(log2n)
    return fine + (fine - coarse) / 3.0


def support_sampled_polar(F, x, dim=None, directions=None, refine_steps=60, tol=1e-8):
    """Polar of a norm ``F`` by maximising ``x·u / F(u)`` over directions.

    A quasi-uniform direction sample (golden angle in 2-D, Fibonacci sphere
    in 3-D) locates the maximiser, then golden-section search on the
    bracketing arc (2-D) or a shrinking pattern search (3-D) refines it.
    ``F`` must be vectorised over ``(..., N)``.

    Raises
    ------
    ConvergenceError
        If the refined maximum is not resolved to relative ``tol``.
    """
    x = np.asarray(x, dtype=float)
    dim = x.shape[-1] if dim is None else dim
    x = _points(x, dim)
    shape = x.shape[:-1]
    X = x.reshape(-1, dim)
    U = sphere_directions(dim) if directions is None else directions
    FU = F(U)
    out = np.zeros(len(X))
    gaps = np.zeros(len(X))
    chunk = max(1, 2 ** 22 // len(U))
    if dim == 2:
        theta = np.arctan2(U[:, 1], U[:, 0])
        order = np.argsort(theta)
        theta_sorted = theta[order]
    for s in range(0, len(X), chunk):
        Xc = X[s:s + chunk]
        ratios = (Xc @ U.T) / FU
        k = np.argmax(ratios, axis=-1)
        best = ratios[np.arange(len(Xc)), k]
        if dim == 2:
            pos = np.searchsorted(theta_sorted, theta[k])
            n = len(theta_sorted)
            lo = theta_sorted[(pos - 1) % n]
            hi = theta_sorted[(pos + 1) % n]
            lo = np.where(lo > theta[k], lo - 2 * math.pi, lo)
            hi = np.where(hi < theta[k], hi + 2 * math.pi, hi)

            def f(t):
                u = np.stack([np.cos(t), np.sin(t)], axis=-1)
                return np.sum(Xc * u, axis=-1) / F(u)

            invphi = (math.sqrt(5) - 1) / 2
            c1 = hi - invphi * (hi - lo)
            c2 = lo + invphi * (hi - lo)
            f1, f2 = f(c1), f(c2)
            for _ in range(refine_steps):
                left = f1 >= f2
                hi = np.where(left, c2, hi)
                lo = np.where(left, lo, c1)
                nc1 = hi - invphi * (hi - lo)
                nc2 = lo + invphi * (hi - lo)
                c1n = np.where(left, nc1, c2)
                c2n = np.where(left, c1, nc2)
                f1n = np.where(left, np.nan, f2)
                f2n = np.where(left, f1, np.nan)
                need1 = np.isnan(f1n)
                need2 = np.isnan(f2n)
                f1n[need1] = f(c1n)[need1]
                f2n[need2] = f(c2n)[need2]
                c1, c2, f1, f2 = c1n, c2n, f1n, f2n
            refined = np.maximum(np.maximum(f1, f2), best)
            flo, fhi = f(lo), f(hi)
            gap = (refined - np.minimum(flo, fhi)) / np.maximum(np.abs(refined), 1e-300)
        else:
            refined, gap = _pattern_refine(F, Xc, U[k], best, refine_steps)
        out[s:s + chunk] = refined
        gaps[s:s + chunk] = gap
    achieved = float(gaps.max()) if gaps.size else 0.0
    if achieved > tol:
        raise ConvergenceError("direction refinement did not resolve the polar", achieved)
    return out.reshape(shape)


def _pattern_refine(F, X, U0, best, steps):
    u = U0.copy()
    step = np.full(len(X), 0.05)
    for _ in range(steps):
        # tangent basis at u
        a = np.where(np.abs(u[:, :1]) < 0.9, np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
        t1 = a - np.sum(a * u, -1, keepdims=True) * u
        t1 /= _norm(t1)[:, None]
        t2 = np.cross(u, t1)
        improved = np.zeros(len(X), dtype=bool)
        for d in (t1, -t1, t2, -t2):
            cand = u + step[:, None] * d
            cand /= _norm(cand)[:, None]
            val = np.sum(X * cand, -1) / F(cand)
            better = val > best
            u = np.where(better[:, None], cand, u)
            best = np.where(better, val, best)
            improved |= better
        step = np.where(improved, step, 0.5 * step)
    gap = step  # angular resolution reached; the maximum is flat to second order
    return best, gap ** 2


# ---------------------------------------------------------------------------
# calculus of F^p


@dataclass(frozen=True)
class ProxConfig:
    """Parameters of the resolvent solve for ``F^p``."""

    lam: float = 0.1
    tolerance: float = 1e-10
    max_iters: int = 10_000

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if not self.lam > 0:
            raise ValueError("lam must be positive")


def eval_F(a, xi):
    out = a.value(xi)
    return float(out) if np.ndim(out) == 0 else out


def eval_polar(a, x):
    out = a.polar(x)
    return float(out) if np.ndim(out) == 0 else out


def subgrad_F(a, zeta):
    """Minimal section of ``∂F(ζ)``."""
    return a.minimal_subgradient(zeta)


def subgrad_Fp(a, p, xi):
    """Minimal section of ``∂F^p(ξ) = p F^{p-1}(ξ) ∂F(ξ)``."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    xi = _points(xi, a.dim)
    F = a.value(xi)
    weight = p * np.where(F > 0, F, 0.0) ** (p - 1)
    return weight[..., None] * a.minimal_subgradient(xi)


def _resolvent(a, p, lam, xi, tolerance=1e-10, max_iters=10_000):
    """Resolvent of ``∂F^p`` and its prox parameter ``μ``.

    For ``ξ != 0`` the minimiser is ``η = prox_{μF}(ξ)`` where ``μ`` solves
    ``μ = λ p F(prox_{μF}(ξ))^{p-1}``.  The left side increases and the
    right side decreases in ``μ``, so the root is unique and bracketed by
    ``[0, λ p F(ξ)^{p-1}]``.
    """
    xi = _points(xi, a.dim)
    shape = xi.shape
    flat = xi.reshape(-1, a.dim)
    F0 = a.value(flat)
    eta = np.zeros_like(flat)
    mu = np.zeros(len(flat))
    nz = F0 > 0
    if nz.any():
        pts = flat[nz]
        hi = lam * p * F0[nz] ** (p - 1)

        def residual(m, mask):
            q = pts if mask is None else pts[mask]
            t = a.value(a.prox(q, m))
            return m - lam * p * t ** (p - 1)

        flo = -hi
        fhi = residual(hi, None)
        rtol = min(tolerance, 1e-12)
        m, _ = bracketed_root(residual, np.zeros_like(hi), hi, flo, np.maximum(fhi, 0.0),
                              rtol=rtol, maxiter=max_iters)
        mu[nz] = m
        eta[nz] = a.prox(pts, m)
        # the equation in both forms; near t = 0 only the inverted one is
        # well conditioned for p < 2 (and the direct one for p > 2)
        t = a.value(eta[nz])
        res = np.minimum(np.abs(m - lam * p * t ** (p - 1)) / hi,
                         np.abs(t - (m / (lam * p)) ** (1 / (p - 1))) / F0[nz])
        if res.size and res.max() > max(tolerance, 1e-8):
            raise ConvergenceError("resolvent of F^p did not converge", float(res.max()))
    return eta.reshape(shape), mu.reshape(shape[:-1])


def resolvent_Fp(a, p, cfg, xi):
    """``J_{p,λ}(ξ) = argmin_η |η - ξ|²/(2λ) + F^p(η)``."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    return _resolvent(a, p, cfg.lam, xi, cfg.tolerance, cfg.max_iters)[0]


def moreau_yosida_Fp(a, p, cfg, xi):
    """Moreau-Yosida envelope ``(F^p)_λ(ξ)``."""
    xi = _points(xi, a.dim)
    eta = resolvent_Fp(a, p, cfg, xi)
    out = np.sum((eta - xi) ** 2, axis=-1) / (2 * cfg.lam) + a.value(eta) ** p
    return float(out) if np.ndim(out) == 0 else out


def yosida_grad_Fp(a, p, cfg, xi):
    """Gradient of the envelope, ``(ξ - J_{p,λ}(ξ)) / λ``."""
    xi = _points(xi, a.dim)
    return (xi - resolvent_Fp(a, p, cfg, xi)) / cfg.lam


def envelope_and_gradient(a, p, lam, xi, route="auto", mu=0.0):
    """Envelope values, gradients and resolvents in one solve.

    ``route="kernel"`` uses the compiled per-cell kernels (built-in kinds
    only), ``route="numpy"`` the vectorised bracket iteration; ``"auto"``
    picks the kernel when one exists.  With ``mu > 0`` the returned values
    and gradients include the term ``mu |ξ|^p`` (the resolvent does not).
    """
    xi = _points(xi, a.dim)
    spec = kernel_spec(a)
    if route == "kernel" or (route == "auto" and spec is not None):
        if spec is None:
            raise ValueError(f"no compiled kernel for {a!r}")
        from ._kernels import envelope_batch

        flat = np.ascontiguousarray(xi.reshape(-1, a.dim))
        m = len(flat)
        val = np.empty(m)
        grad = np.empty_like(flat)
        eta = np.empty_like(flat)
        envelope_batch(flat, float(lam), float(p), spec[0], spec[1], spec[2], val, grad, eta,
                       np.empty(m), float(mu))
        return val.reshape(xi.shape[:-1]), grad.reshape(xi.shape), eta.reshape(xi.shape)
    eta, _ = _resolvent(a, p, lam, xi)
    d = xi - eta
    val = np.sum(d * d, axis=-1) / (2 * lam) + a.value(eta) ** p
    grad = d / lam
    if mu > 0:
        n = _norm(xi)
        val = val + mu * n ** p
        with np.errstate(divide="ignore", invalid="ignore"):
            wgt = np.where(n > 0, mu * p * n ** (p - 2), 0.0)
        grad = grad + wgt[..., None] * xi
    return val, grad, eta


def kernel_spec(a):
    """``(kind code, eps, weights)`` for kinds with a compiled kernel, else ``None``."""
    ones = np.ones(a.dim)
    if isinstance(a, Regularized):
        base = kernel_spec(a.base)
        if base is None or base[1] > 0:
            return None
        return base[0], a.eps, base[2]
    codes = {Euclidean: 0, L1: 1, LInf: 2}
    if type(a) in codes:
        return codes[type(a)], 0.0, ones
    if type(a) is WeightedL2:
        return 3, 0.0, a.weights.copy()
    return None


def k_lambda(a, p, lam):
    """Threshold above which ``(F^p)_λ(ξ) >= (c^p/2)|ξ|^p`` for ``1 < p < 2``."""
    if not 1 < p < 2:
        raise ValueError("k_lambda requires 1 < p < 2")
    c = a.c if isinstance(a, Anisotropy) else float(a)
    return (lam * c ** p / (1 - 2 ** (-1 / p)) ** 2) ** (1 / (2 - p))


def regularize(a, eps):
    """Strictly convex approximant ``F + ε|·|``."""
    return Regularized(a, eps)


def parse_anisotropy(text, dim=2):
    """Build an anisotropy from a config string.

    Accepted forms: ``euclidean``, ``l1``, ``linf``, ``weighted-l2(w1,w2,...)``,
    ``regularized(<base>,eps)`` and ``polytope(x1,y1;x2,y2;...)``.
    """
    text = text.strip()
    name, _, rest = text.partition("(")
    name = name.strip().lower()
    args = rest[:-1] if rest.endswith(")") else rest
    if name == "euclidean":
        return Euclidean(dim)
    if name == "l1":
        return L1(dim)
    if name == "linf":
        return LInf(dim)
    if name == "weighted-l2":
        return WeightedL2([float(v) for v in args.split(",")])
    if name == "regularized":
        base, _, eps = args.rpartition(",")
        return Regularized(parse_anisotropy(base, dim), float(eps))
    if name == "polytope":
        gens = [[float(v) for v in g.split(",")] for g in args.split(";")]
        return Polytope(gens)
    raise ValueError(f"unknown anisotropy {text!r}")
