"""Wulff shapes, obstacle domains, radial barriers and the annulus oracle.

A Wulff shape of radius ``r`` is the open polar ball ``W_r = {F° < r}``.
Obstacles are described by :class:`DomainSpec`, a level-set function
(negative inside) together with a boundary sampler.  All geometric
predicates here are sampled and come with the sampling tolerance attached.
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np
from scipy.integrate import quad
from scipy.spatial import cKDTree

from .anisotropy import Anisotropy, sphere_directions
from .errors import ConvergenceError, DimensionError, GeometryError

__all__ = [
    "DomainSpec", "AnnulusProblem", "RadiusBounds", "WulffCheck",
    "disk", "ellipse", "wulff", "polygon", "parse_domain",
    "wulff_contains", "radius_bounds", "barrier_v", "radial_potential",
    "annulus_capacity_exact", "annulus_capacity_closed_form",
    "check_wulff_condition", "lipschitz_bound_L1", "wulff_boundary",
]

DEFAULT_SAMPLES = 4096


@dataclass(frozen=True)
class DomainSpec:
    """Bounded open obstacle ``Ω`` containing the origin.

    Attributes
    ----------
    name : str
        Config string the domain was built from.
    dim : int
        Ambient dimension.
    level : callable
        ``level(x)`` is negative inside ``Ω``, zero on ``∂Ω`` and positive
        outside; it is 1-Lipschitz (up to a moderate factor) in the
        Euclidean metric, so ``level`` values are comparable to distances.
    sampler : callable
        ``sampler(m)`` returns ``(points, normals)``, ``m`` roughly
        equispaced boundary points with outward unit normals.
    extent : float
        Euclidean radius of a ball containing ``Ω``.
    """

    name: str
    dim: int
    level: Callable
    sampler: Callable
    extent: float

    def contains(self, x):
        return self.level(np.asarray(x, dtype=float)) < 0

    def boundary(self, m=DEFAULT_SAMPLES):
        return self.sampler(m)


@dataclass(frozen=True)
class AnnulusProblem:
    """Condenser ``W_R \\ Ω̄`` with data 1 on ``∂Ω`` and 0 on ``∂W_R``."""

    domain: DomainSpec
    R: float
    aniso: Anisotropy
    p: float

    def __post_init__(self):
        if self.domain.dim != self.aniso.dim:
            raise DimensionError("domain and anisotropy dimensions differ")
        if not self.p > 1:
            raise ValueError("p must exceed 1")
        if not self.R > 0:
            raise ValueError("R must be positive")

    @property
    def dim(self):
        return self.aniso.dim

    @property
    def alpha(self):
        return (self.p - self.dim) / (self.p - 1)


class RadiusBounds(NamedTuple):
    r1: float
    r2: float
    tol: float


class WulffCheck(NamedTuple):
    ok: bool
    witness: object
    violation: float
    tol: float


# -- boundary sampling helpers ------------------------------------------------

def _resample_closed_curve(pts, m):
    """Arc-length resample a densely sampled closed 2-D curve to ``m`` points."""
    closed = np.vstack([pts, pts[:1]])
    seg = np.sqrt(np.sum(np.diff(closed, axis=0) ** 2, axis=-1))
    s = np.concatenate([[0.0], np.cumsum(seg)])
    t = np.arange(m) * (s[-1] / m)
    return np.stack([np.interp(t, s, closed[:, 0]), np.interp(t, s, closed[:, 1])], axis=-1)


def _unit(v):
    n = np.sqrt(np.sum(v * v, axis=-1, keepdims=True))
    return v / np.where(n > 0, n, 1.0)


def wulff_boundary(a, r, m=DEFAULT_SAMPLES):
    """Roughly equispaced points of ``∂W_r`` (arc length in 2-D)."""
    if a.dim == 2:
        theta = np.linspace(0, 2 * math.pi, 16 * m, endpoint=False)
        u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        dense = r * u / a.polar(u)[:, None]
        return _resample_closed_curve(dense, m)
    u = sphere_directions(a.dim, m)
    return r * u / a.polar(u)[:, None]


def disk(radius=1.0, dim=2):
    """Euclidean ball of the given radius."""
    radius = float(radius)
    if radius <= 0:
        raise ValueError("radius must be positive")

    def level(x):
        return np.sqrt(np.sum(x * x, axis=-1)) - radius

    def sampler(m):
        if dim == 2:
            theta = 2 * math.pi * np.arange(m) / m
            n = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        else:
            n = sphere_directions(dim, m)
        return radius * n, n

    return DomainSpec(f"disk({radius:g})", dim, level, sampler, radius)


def ellipse(a, b):
    """Axis-aligned ellipse with semi-axes ``a`` and ``b``."""
    a, b = float(a), float(b)
    if a <= 0 or b <= 0:
        raise ValueError("semi-axes must be positive")
    scale = min(a, b)

    def level(x):
        return (np.sqrt((x[..., 0] / a) ** 2 + (x[..., 1] / b) ** 2) - 1.0) * scale

    def sampler(m):
        theta = np.linspace(0, 2 * math.pi, 16 * m, endpoint=False)
        pts = _resample_closed_curve(np.stack([a * np.cos(theta), b * np.sin(theta)], -1), m)
        return pts, _unit(pts / np.array([a * a, b * b]))

    return DomainSpec(f"ellipse({a:g},{b:g})", 2, level, sampler, max(a, b))


def wulff(r, aniso):
    """The Wulff shape ``W_r`` of ``aniso`` used as an obstacle."""
    r = float(r)
    if r <= 0:
        raise ValueError("radius must be positive")

    def level(x):
        return aniso.c * (aniso.polar(x) - r)

    def sampler(m):
        pts = wulff_boundary(aniso, r, m)
        return pts, _unit(aniso.polar_grad(pts))

    return DomainSpec(f"wulff({r:g})", aniso.dim, level, sampler, r / aniso.c)


def _polygon_level(verts):
    a = verts
    b = np.roll(verts, -1, axis=0)

    def level(x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, 2)
        d2 = np.full(len(flat), np.inf)
        inside = np.zeros(len(flat), dtype=bool)
        for ai, bi in zip(a, b):
            e = bi - ai
            t = np.clip(((flat - ai) @ e) / (e @ e), 0.0, 1.0)
            q = ai + t[:, None] * e
            d2 = np.minimum(d2, np.sum((flat - q) ** 2, axis=-1))
            # crossing number test
            cond = (ai[1] > flat[:, 1]) != (bi[1] > flat[:, 1])
            xcross = ai[0] + (flat[:, 1] - ai[1]) * e[0] / np.where(e[1] != 0, e[1], 1.0)
            inside ^= cond & (flat[:, 0] < xcross)
        out = np.where(inside, -np.sqrt(d2), np.sqrt(d2))
        return out.reshape(x.shape[:-1])

    return level


def polygon(vertices, name=None):
    """Polygon with counterclockwise vertices (array-like or path to a text file)."""
    if isinstance(vertices, (str, Path)):
        name = name or f"polygon({vertices})"
        vertices = np.loadtxt(vertices, ndmin=2)
    verts = np.asarray(vertices, dtype=float)
    if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 3:
        raise GeometryError("a polygon needs at least three 2-D vertices")
    signed_area = 0.5 * np.sum(verts[:, 0] * np.roll(verts[:, 1], -1)
                               - np.roll(verts[:, 0], -1) * verts[:, 1])
    if signed_area <= 0:
        raise GeometryError("polygon vertices must be listed counterclockwise")
    edges = np.roll(verts, -1, axis=0) - verts
    edge_normals = _unit(np.stack([edges[:, 1], -edges[:, 0]], axis=-1))
    lengths = np.sqrt(np.sum(edges ** 2, axis=-1))
    cum = np.concatenate([[0.0], np.cumsum(lengths)])

    def sampler(m):
        t = np.arange(m) * (cum[-1] / m)
        k = np.clip(np.searchsorted(cum, t, side="right") - 1, 0, len(verts) - 1)
        s = (t - cum[k]) / lengths[k]
        pts = verts[k] + s[:, None] * edges[k]
        n = edge_normals[k].copy()
        at_vertex = s < 1e-12
        n[at_vertex] = _unit(edge_normals[k[at_vertex]] + edge_normals[k[at_vertex] - 1])
        return pts, n

    level = _polygon_level(verts)
    if level(np.zeros(2)) >= 0:
        raise GeometryError("the origin must lie inside the polygon")
    extent = float(np.max(np.sqrt(np.sum(verts ** 2, axis=-1))))
    return DomainSpec(name or "polygon", 2, level, sampler, extent)


def parse_domain(text, aniso, base_dir=None):
    """Build a domain from ``disk(r)``, ``ellipse(a,b)``, ``wulff(r)`` or ``polygon(path)``."""
    text = text.strip()
    name, _, rest = text.partition("(")
    args = rest[:-1] if rest.endswith(")") else rest
    name = name.strip().lower()
    try:
        if name in ("disk", "ball"):
            return disk(float(args) if args else 1.0, aniso.dim)
        if name == "ellipse":
            a, b = (float(v) for v in args.split(","))
            return ellipse(a, b)
        if name == "wulff":
            return wulff(float(args) if args else 1.0, aniso)
    except ValueError as exc:
        raise ValueError(f"bad domain {text!r}: {exc}") from exc
    if name == "polygon":
        path = Path(args.strip())
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return polygon(path, name=text)
    raise ValueError(f"unknown domain {text!r}")


# -- predicates and radii -----------------------------------------------------

def wulff_contains(a, r, x):
    """True iff ``F°(x) < r``."""
    if not r > 0:
        raise ValueError("r must be positive")
    out = a.polar(x) < r
    return bool(out) if np.ndim(out) == 0 else out


def _sampling_tol(a, pts):
    # any boundary point lies within half a neighbour spacing of a sample
    _, idx = cKDTree(pts).query(pts, k=2)
    return 0.5 * float(np.max(a.polar(pts - pts[idx[:, 1]])))


def radius_bounds(a, d, m=DEFAULT_SAMPLES):
    """Radii with ``W_{r1} ⊆ Ω ⊆ W_{r2}``, from boundary samples.

    Returns the sampled extremes of ``F°`` on ``∂Ω`` narrowed (``r1``) and
    widened (``r2``) by the sampling tolerance, which is returned as well.
    """
    pts, _ = d.boundary(m)
    if len(pts) == 0:
        raise GeometryError("domain has no boundary samples")
    vals = a.polar(pts)
    tol = _sampling_tol(a, pts)
    r1 = max(float(vals.min()) - tol, 0.5 * float(vals.min()))
    return RadiusBounds(r1, float(vals.max()) + tol, tol)


# -- barriers -----------------------------------------------------------------

def _alpha(a, p):
    n = a.dim
    if not 1 < p < n:
        raise ValueError(f"p must lie in (1, N) = (1, {n})")
    return (p - n) / (p - 1)


def barrier_v(a, p, r, R, x):
    """Radial barrier equal to 1 on ``∂W_r`` and 0 on ``∂W_R``."""
    if not 0 < r < R:
        raise ValueError("need 0 < r < R")
    al = _alpha(a, p)
    t = a.polar(x)
    with np.errstate(divide="ignore"):
        out = (t ** al - R ** al) / (r ** al - R ** al)
    return float(out) if np.ndim(out) == 0 else out


def radial_potential(a, p, r, x):
    """``(F°(x)/r)^α``, the exterior capacitary potential of ``W_r``."""
    if not r > 0:
        raise ValueError("r must be positive")
    al = _alpha(a, p)
    t = a.polar(x)
    if np.any(t == 0):
        raise ValueError("the radial potential is singular at the origin")
    out = (t / r) ** al
    return float(out) if np.ndim(out) == 0 else out


def annulus_capacity_closed_form(a, p, r, R, volume=None):
    """``N |W_1| |α|^{p-1} |r^α - R^α|^{1-p}`` (``R = inf`` allowed)."""
    al = _alpha(a, p)
    vol = a.wulff_volume() if volume is None else volume
    Ra = 0.0 if math.isinf(R) else R ** al
    return a.dim * vol * abs(al) ** (p - 1) * abs(r ** al - Ra) ** (1 - p)


def annulus_capacity_exact(a, p, r, R, volume=None):
    """Energy of the barrier ``v_{r,R}``, by quadrature of its radial profile.

    Level sets of ``F°`` are Wulff shapes and ``F(∇F°) = 1``, so the energy
    reduces to ``N |W_1| ∫_r^R |v'(t)|^p t^{N-1} dt``.
    """
    if not 0 < r < R:
        raise ValueError("need 0 < r < R")
    al = _alpha(a, p)
    n = a.dim
    vol = a.wulff_volume() if volume is None else volume
    Ra = 0.0 if math.isinf(R) else R ** al
    denom = r ** al - Ra

    def integrand(t):
        return abs(al * t ** (al - 1) / denom) ** p * t ** (n - 1)

    val, err = quad(integrand, r, R, epsabs=0.0, epsrel=1e-12, limit=200)
    if err > 1e-10 * abs(val):
        raise ConvergenceError("annulus capacity quadrature", err / abs(val))
    return n * vol * val


def lipschitz_bound_L1(a, p, N, r, R0):
    """Lipschitz constant of the inner barrier on the annulus ``r < F° < R0``."""
    if not 0 < r < R0:
        raise ValueError("need 0 < r < R0")
    if not 1 < p < N:
        raise ValueError("p must lie in (1, N)")
    c = a.c if isinstance(a, Anisotropy) else float(a)
    al = (p - N) / (p - 1)
    return (abs(N - p) / (p - 1)) * r ** ((1 - N) / (p - 1)) / ((r ** al - R0 ** al) * c)


# -- uniform interior Wulff condition ------------------------------------------

def check_wulff_condition(a, d, r, m=1024, shape_samples=256, tol=None):
    """Test whether every boundary point is touched by ``y + W_r ⊆ Ω̄``.

    For a boundary point ``x`` with outward normal ``ν`` the touching
    Wulff shapes have centres ``y = x - r ξ`` with ``ξ ∈ ∂F(ν)``.  The face
    is searched (golden section along the segment in 2-D, a face sample
    otherwise), then a 21 x 21 grid of offsets re-projected onto
    ``F°(x - y) = r``.  A centre is accepted when every sample of
    ``y + ∂W_r`` has level value at most ``tol``.

    Returns
    -------
    WulffCheck
        ``ok`` flag, the worst boundary point as witness (``None`` when ok),
        its violation and the tolerance used.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    pts, normals = d.boundary(m)
    shape = wulff_boundary(a, r, shape_samples)
    if tol is None:
        # shape samples lie exactly on y + ∂W_r, so only the centre search errs
        tol = 1e-6 * max(1.0, d.extent)

    def violation(y):
        # y has shape (k, N); worst level value over the translated shape
        return np.max(d.level(y[:, None, :] + shape[None, :, :]), axis=-1)

    best = np.full(len(pts), np.inf)
    # candidate face points from projections of spread-out targets
    targets = np.concatenate([np.zeros((1, a.dim)), 2.0 * sphere_directions(a.dim, 16)])
    for t in targets:
        xi = a.face_projection(normals, np.broadcast_to(t, normals.shape), tol=1e-9)
        best = np.minimum(best, violation(pts - r * xi))
    if a.dim == 2:
        fail = np.flatnonzero(best > tol)
        if fail.size:
            best[fail] = np.minimum(best[fail], _golden_face(a, d, pts[fail], normals[fail],
                                                             r, violation))
    fail = np.flatnonzero(best > tol)
    if fail.size:
        offs = np.linspace(-0.5, 0.5, 21) * r / a.c
        grid = np.stack(np.meshgrid(offs, offs, indexing="ij"), -1).reshape(-1, 2)
        if a.dim == 3:
            grid = np.concatenate([grid, np.zeros((len(grid), 1))], -1)
        # worst first; one confirmed failure settles the answer
        for i in fail[np.argsort(-best[fail])]:
            x = pts[i]
            cand = x - r * a.face_projection(normals[i], np.zeros(a.dim)) + grid
            dist = a.polar(x - cand)
            keep = dist > 0
            cand = x - r * (x - cand[keep]) / dist[keep, None]
            best[i] = min(best[i], float(np.min(violation(cand))))
            if best[i] > tol:
                return WulffCheck(False, pts[i].tolist(), float(best[i]), tol)
    worst = int(np.argmax(best))
    return WulffCheck(True, None, float(max(best[worst], 0.0)), tol)


def _golden_face(a, d, pts, normals, r, violation, steps=40):
    """Minimise the violation along the (segment) face ``∂F(ν)`` in 2-D."""
    tang = np.stack([-normals[:, 1], normals[:, 0]], axis=-1)
    big = 4.0 * a.C
    e0 = a.face_projection(normals, -big * tang, tol=1e-9)
    e1 = a.face_projection(normals, big * tang, tol=1e-9)
    g = (math.sqrt(5) - 1) / 2
    lo = np.zeros(len(pts))
    hi = np.ones(len(pts))

    def f(s):
        xi = e0 + s[:, None] * (e1 - e0)
        return violation(pts - r * xi)

    c1 = hi - g * (hi - lo)
    c2 = lo + g * (hi - lo)
    f1, f2 = f(c1), f(c2)
    best = np.minimum(np.minimum(f1, f2), np.minimum(f(lo), f(hi)))
    for _ in range(steps):
        left = f1 <= f2
        hi = np.where(left, c2, hi)
        lo = np.where(left, lo, c1)
        c1 = hi - g * (hi - lo)
        c2 = lo + g * (hi - lo)
        f1, f2 = f(c1), f(c2)
        best = np.minimum(best, np.minimum(f1, f2))
    return best
