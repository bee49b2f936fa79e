"""Cartesian grids on a condenser and the discrete calculus on them.

Nodes sit at integer multiples of ``h`` with the origin a node, so grids of
the same spacing nest when ``R`` grows.  The box reaches one layer past
``W_R`` in every direction, which makes every box-boundary node an outer
Dirichlet node.

Gradients are forward differences with zero extension beyond the box and
the divergence is their exact negative adjoint on the whole box, so
``<div z, w> = -<z, grad w>`` holds to round-off for every ``w``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError
from .wulff import radius_bounds

__all__ = [
    "Grid", "ScalarField", "VectorField", "build_grid", "gradient", "divergence",
    "energy", "weak_div_residual", "write_scalar_csv", "write_vector_csv",
]

INTERIOR, INNER, OUTER = 0, 1, 2


@dataclass(eq=False)
class Grid:
    """Node classification of the box around ``W_R``.

    Attributes
    ----------
    h : float
        Spacing.
    half_width : tuple of int
        Node ``i`` along axis ``k`` sits at ``i h`` for ``-n_k <= i <= n_k``.
    kind : ndarray of int8
        ``0`` interior, ``1`` inner Dirichlet (in ``Ω̄``), ``2`` outer Dirichlet.
    r1, r2 : float
        Radii used to validate the resolution.
    """

    h: float
    half_width: tuple
    kind: np.ndarray
    r1: float = math.nan
    r2: float = math.nan
    R: float = math.nan
    _coords: list = field(default=None, repr=False)

    @property
    def dim(self):
        return self.kind.ndim

    @property
    def shape(self):
        return self.kind.shape

    @property
    def interior(self):
        return self.kind == INTERIOR

    @property
    def inner(self):
        return self.kind == INNER

    @property
    def outer(self):
        return self.kind == OUTER

    @property
    def axes(self):
        return [self.h * np.arange(-n, n + 1) for n in self.half_width]

    def points(self):
        """Node coordinates, shape ``(*shape, N)``."""
        if self._coords is None:
            self._coords = np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)
        return self._coords

    def dirichlet_values(self):
        return np.where(self.inner, 1.0, 0.0)

    def index_of(self, x):
        """Multi-index of the node at point ``x`` (which must be a node)."""
        return tuple(int(round(xi / self.h)) + n for xi, n in zip(x, self.half_width))


@dataclass(eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray


@dataclass(eq=False)
class VectorField:
    grid: Grid
    values: np.ndarray


def _unwrap(f):
    return f.values if isinstance(f, (ScalarField, VectorField)) else np.asarray(f, dtype=float)


def build_grid(problem, h, bounds=None, check_resolution=True):
    """Classify the nodes of the box around ``W_R`` for spacing ``h``.

    Raises
    ------
    GeometryError
        If ``h`` does not resolve both boundaries (``h < (R - r2)/8`` and
        ``h < r1/8``), if no node is interior, or if an inner node touches
        an outer node.
    """
    a, dom, R = problem.aniso, problem.domain, float(problem.R)
    if not h > 0:
        raise GeometryError("h must be positive")
    r1, r2, _ = radius_bounds(a, dom) if bounds is None else bounds
    if r2 >= R:
        raise GeometryError(f"obstacle (r2={r2:.4g}) is not inside W_R (R={R:g})")
    if check_resolution and not (h < (R - r2) / 8 and h < r1 / 8):
        raise GeometryError(
            f"h={h:g} does not resolve the geometry; need h < (R-r2)/8 = {(R - r2) / 8:.4g}"
            f" and h < r1/8 = {r1 / 8:.4g}")
    eye = np.eye(a.dim)
    half = tuple(int(math.ceil(R * float(a.value(eye[k])) / h - 1e-9)) + 1 for k in range(a.dim))
    grid = Grid(h, half, np.empty(0, dtype=np.int8), r1, r2, R)
    pts = grid.points()
    kind = np.full(pts.shape[:-1], INTERIOR, dtype=np.int8)
    kind[a.polar(pts) >= R * (1 - 1e-12)] = OUTER
    kind[dom.level(pts) <= 0] = INNER
    grid.kind = kind
    if not grid.interior.any():
        raise GeometryError("no interior nodes")
    inner, outer = grid.inner, grid.outer
    for k in range(a.dim):
        a0 = [slice(None)] * a.dim
        a1 = [slice(None)] * a.dim
        a0[k] = slice(0, -1)
        a1[k] = slice(1, None)
        a0, a1 = tuple(a0), tuple(a1)
        if np.any(inner[a0] & outer[a1]) or np.any(outer[a0] & inner[a1]):
            raise GeometryError("an inner Dirichlet node touches an outer one")
    return grid


def forward_diff(u, h):
    """Forward differences with zero extension; shape ``(*u.shape, N)``."""
    out = np.empty(u.shape + (u.ndim,))
    for k in range(u.ndim):
        d = np.negative(u, out=np.empty_like(u))
        lo = [slice(None)] * u.ndim
        hi = [slice(None)] * u.ndim
        lo[k] = slice(0, -1)
        hi[k] = slice(1, None)
        d[tuple(lo)] += u[tuple(hi)]
        out[..., k] = d
    out /= h
    return out


def backward_div(z, h):
    """``-D⁺ᵀ z``: backward differences of the components with zero extension."""
    n = z.ndim - 1
    out = np.zeros(z.shape[:-1])
    for k in range(n):
        zk = z[..., k]
        out += zk
        lo = [slice(None)] * n
        hi = [slice(None)] * n
        lo[k] = slice(0, -1)
        hi[k] = slice(1, None)
        out[tuple(hi)] -= zk[tuple(lo)]
    out /= h
    return out


def gradient(g, u):
    """Forward-difference gradient on every box node."""
    return VectorField(g, forward_diff(_unwrap(u), g.h))


def divergence(g, z):
    """Negative adjoint of :func:`gradient`."""
    return ScalarField(g, backward_div(_unwrap(z), g.h))


def energy(g, u, a, p):
    """``h^N Σ F^p(D⁺u)`` over all box cells.

    Summing every cell (not only cells based at interior nodes) keeps the
    differences across the lower and left obstacle faces in the objective.
    """
    du = forward_diff(_unwrap(u), g.h)
    return float(g.h ** g.dim * np.sum(a.value(du) ** p))


def weak_div_residual(g, z, data=None, mask=None):
    """Worst normalised weak-form defect over nodal test functions.

    For the hat function ``w`` at node ``i`` this is
    ``|<data, w>_h - <z, D⁺w>_h| / ||w||_h = h^{N/2} |data_i + (div z)_i|``,
    so it vanishes exactly when ``-div z = data`` weakly at the tested
    nodes (interior nodes by default).
    """
    div = backward_div(_unwrap(z), g.h)
    if data is not None:
        div = div + _unwrap(data)
    mask = g.interior if mask is None else mask
    if not mask.any():
        return 0.0
    return float(g.h ** (g.dim / 2) * np.max(np.abs(div[mask])))


def _fmt(v):
    return "%.12g" % v


def write_scalar_csv(path, g, u):
    """Rows ``x,y,value`` in row-major node order."""
    vals = _unwrap(u).reshape(-1)
    pts = g.points().reshape(-1, g.dim)
    names = "xyz"[: g.dim]
    with open(path, "w") as fh:
        fh.write(",".join(names) + ",value\n")
        for row, v in zip(pts, vals):
            fh.write(",".join(_fmt(c) for c in row) + "," + _fmt(v) + "\n")


def write_vector_csv(path, g, z):
    """Rows ``x,y,zx,zy`` in row-major node order."""
    vals = _unwrap(z).reshape(-1, g.dim)
    pts = g.points().reshape(-1, g.dim)
    names = "xyz"[: g.dim]
    with open(path, "w") as fh:
        fh.write(",".join(names) + "," + ",".join("z" + c for c in names) + "\n")
        for row, v in zip(pts, vals):
            fh.write(",".join(_fmt(c) for c in row) + "," + ",".join(_fmt(c) for c in v) + "\n")
