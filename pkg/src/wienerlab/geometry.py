"""Uniform lattices, domain masks, balls, condensers and space-time cylinders.

Domains live on a uniform Cartesian lattice (N = 1 or 2).  Curved boundaries
are represented by node masks (staircase); every downstream quantity compares
two discrete objects on the same lattice, so the staircase bias cancels in
ratios.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

INTERIOR = 0
BOUNDARY = 1
EXTERIOR = 2

_LABEL_NAMES = {INTERIOR: "interior", BOUNDARY: "boundary", EXTERIOR: "exterior"}


@dataclass(frozen=True)
class Ball:
    """Open ball B_r(center) in R^N."""

    center: tuple
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def dim(self):
        return len(self.center)


@dataclass(frozen=True)
class Cylinder:
    """Space-time cylinder B_rho(x) x (t - eta_minus, t + eta_plus].

    orientation "backward" keeps only times at or before the center time,
    "forward" only after, "full" both.
    """

    center: tuple          # spatial point
    t_center: float
    radius: float
    eta_minus: float = 0.0
    eta_plus: float = 0.0
    orientation: str = "backward"

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("cylinder radius must be positive")
        if self.orientation not in ("backward", "forward", "full"):
            raise ValueError(f"unknown orientation {self.orientation!r}")
        if self.orientation == "backward" and self.eta_plus != 0.0:
            raise ValueError("backward cylinder requires eta_plus == 0")
        if self.orientation == "forward" and self.eta_minus != 0.0:
            raise ValueError("forward cylinder requires eta_minus == 0")
        if self.eta_minus < 0 or self.eta_plus < 0:
            raise ValueError("cylinder lengths must be nonnegative")
        if self.eta_minus + self.eta_plus <= 0:
            raise ValueError("cylinder needs a positive time length")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    def time_interval(self):
        """(t_lo, t_hi] of the cylinder."""
        return self.t_center - self.eta_minus, self.t_center + self.eta_plus


def backward_cylinder(center, t_center, radius, eta):
    return Cylinder(center, t_center, radius, eta_minus=eta, orientation="backward")


def forward_cylinder(center, t_center, radius, eta):
    return Cylinder(center, t_center, radius, eta_plus=eta, orientation="forward")


@dataclass(frozen=True)
class GridDomain:
    """Lattice discretization of a bounded open set Omega in R^N.

    ``inside[k] == True`` means node k lies in Omega.  Labels partition the
    nodes into interior (in Omega, all axis neighbors in Omega and not on the
    extent edge), boundary (in Omega, adjacent to the complement or the extent
    edge) and exterior (complement) nodes.  Arrays are read-only after
    construction; the object is safe to share across workers.
    """

    dim: int
    h: float
    extent: tuple                       # ((lo, hi), ...) per axis
    axes: tuple                         # 1-D coordinate arrays per axis
    inside: np.ndarray                  # bool, shape = grid shape
    labels: np.ndarray                  # uint8, same shape
    complement_fn: Callable = field(repr=False, compare=False, default=None)
    scenario: str = ""
    scenario_params: tuple = ()
    anchor: tuple = None                # canonical test point of the scenario

    @property
    def shape(self):
        return self.inside.shape

    def coords(self):
        """Node coordinates as an array of shape (*grid shape, dim)."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def label_counts(self):
        return {name: int(np.count_nonzero(self.labels == lab))
                for lab, name in _LABEL_NAMES.items()}


def _classify(inside):
    """Label nodes from the inside mask; extent edge counts as exterior."""
    labels = np.full(inside.shape, EXTERIOR, dtype=np.uint8)
    surrounded = inside.copy()
    for ax in range(inside.ndim):
        lo = np.ones_like(inside)
        hi = np.ones_like(inside)
        sl_lo = [slice(None)] * inside.ndim
        sl_hi = [slice(None)] * inside.ndim
        sl_lo[ax] = slice(1, None)
        sl_hi[ax] = slice(None, -1)
        lo[tuple(sl_lo)] = inside[tuple(sl_hi)]      # neighbor below
        hi[tuple(sl_hi)] = inside[tuple(sl_lo)]      # neighbor above
        edge_lo = [slice(None)] * inside.ndim
        edge_lo[ax] = 0
        edge_hi = [slice(None)] * inside.ndim
        edge_hi[ax] = -1
        lo[tuple(edge_lo)] = False                   # off-grid is exterior
        hi[tuple(edge_hi)] = False
        surrounded &= lo & hi
    labels[inside & surrounded] = INTERIOR
    labels[inside & ~surrounded] = BOUNDARY
    return labels


def _moore_shifts(ndim):
    from itertools import product
    return [off for off in product((-1, 0, 1), repeat=ndim)
            if any(o != 0 for o in off)]


def _has_interior_neighbor(labels):
    """True where some Moore-neighborhood node is interior."""
    out = np.zeros(labels.shape, dtype=bool)
    interior = labels == INTERIOR
    for off in _moore_shifts(labels.ndim):
        shifted = np.zeros_like(interior)
        src = tuple(slice(None, -1) if o == 1 else slice(1, None) if o == -1
                    else slice(None) for o in off)
        dst = tuple(slice(1, None) if o == 1 else slice(None, -1) if o == -1
                    else slice(None) for o in off)
        shifted[dst] = interior[src]
        out |= shifted
    return out


def domain_from_complement(complement_fn, extent, h, scenario="custom",
                           scenario_params=(), anchor=None,
                           require_resolved=True):
    """Build a GridDomain by sampling a complement predicate at the nodes.

    complement_fn takes an (M, dim) array of points and returns a bool mask;
    True means the point lies in R^N minus Omega.
    """
    extent = tuple((float(lo), float(hi)) for lo, hi in extent)
    dim = len(extent)
    if dim not in (1, 2):
        raise ValueError(f"only N in {{1, 2}} supported, got {dim}")
    if h <= 0:
        raise ValueError("spacing h must be positive")
    axes = []
    for lo, hi in extent:
        n = int(np.floor((hi - lo) / h + 1e-9)) + 1
        if n < 8:
            raise ValueError(
                f"h={h} too coarse: only {n} nodes on axis [{lo}, {hi}] (need >= 8)")
        ax = lo + h * np.arange(n)
        ax[np.abs(ax) < 1e-9 * h] = 0.0     # scenario predicates test x <= 0
        axes.append(ax)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    comp = np.asarray(complement_fn(pts), dtype=bool).reshape(mesh[0].shape)
    inside = ~comp
    if not inside.any():
        raise ValueError("scenario leaves Omega empty on this lattice")
    labels = _classify(inside)
    if require_resolved:
        bad = (labels == BOUNDARY) & ~_has_interior_neighbor(labels)
        if bad.any():
            raise ValueError(
                "h too coarse: boundary node without interior neighbor "
                f"({int(bad.sum())} offending nodes)")
    for arr in (inside, labels):
        arr.flags.writeable = False
    for ax in axes:
        ax.flags.writeable = False
    return GridDomain(dim=dim, h=float(h), extent=extent, axes=tuple(axes),
                      inside=inside, labels=labels, complement_fn=complement_fn,
                      scenario=scenario, scenario_params=tuple(scenario_params),
                      anchor=tuple(anchor) if anchor is not None else None)


# --------------------------------------------------------------------------
# Scenario catalog
# --------------------------------------------------------------------------

def _halfspace_pred(pts):
    return pts[:, 0] <= 0.0


def _cone_pred(angle):
    t = np.tan(angle)

    def pred(pts):
        return (pts[:, 0] <= 0.0) & (np.abs(pts[:, 1]) <= -pts[:, 0] * t)

    return pred


def _slit_pred(h):
    def pred(pts):
        return (pts[:, 0] >= 0.0) & (np.abs(pts[:, 1]) < 0.5 * h)

    return pred


def _spike_pred(width_exponent):
    def pred(pts):
        x1, x2 = pts[:, 0], pts[:, 1]
        return (x1 <= 0.0) | ((x1 > 0.0) & (np.abs(x2) <= x1 ** width_exponent))

    return pred


def _ball_pred(radius):
    def pred(pts):
        return np.sqrt((pts ** 2).sum(axis=1)) <= radius

    return pred


SCENARIOS = {
    "flat-halfspace": {
        "params": (),
        "dims": (1, 2),
        "modes": "p-mode or q-mode (phase decides)",
        "exercises": "constant capacity density; divergent Wiener profile",
    },
    "exterior-cone": {
        "params": ("angle",),
        "dims": (2,),
        "modes": "p-mode or q-mode",
        "exercises": "uniform fatness with cone-dependent constant",
    },
    "slit": {
        "params": (),
        "dims": (2,),
        "modes": "p-mode or q-mode",
        "exercises": "thin set with positive capacity",
    },
    "spike": {
        "params": ("width_exponent",),
        "dims": (2,),
        "modes": "p-mode (honesty scenario)",
        "exercises": "sub-resolution cusp; resolution-limited Wiener profile",
    },
    "full-ball-complement": {
        "params": ("radius",),
        "dims": (1, 2),
        "modes": "p-mode or q-mode",
        "exercises": "capacity density identically one",
    },
}


def build_domain(scenario, h, dim=2, extent=None, **params):
    """Build the lattice domain of a named complement scenario.

    Unknown scenario names and lattices too coarse for eight nodes per axis
    are rejected, never silently coarsened.
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}; "
                         f"choose one of {sorted(SCENARIOS)}")
    meta = SCENARIOS[scenario]
    if dim not in meta["dims"]:
        raise ValueError(f"scenario {scenario!r} supports N in {meta['dims']}")
    if extent is None:
        extent = tuple((-1.0, 1.0) for _ in range(dim))
    anchor = (0.0,) * dim
    if scenario == "flat-halfspace":
        pred = _halfspace_pred
        plist = ()
    elif scenario == "exterior-cone":
        angle = float(params.pop("angle", np.pi / 6))
        if not 0 < angle <= np.pi / 2:
            raise ValueError("cone angle must lie in (0, pi/2]")
        pred = _cone_pred(angle)
        plist = (angle,)
    elif scenario == "slit":
        pred = _slit_pred(h)
        plist = ()
    elif scenario == "spike":
        w = float(params.pop("width_exponent", 3.0))
        if w <= 1:
            raise ValueError("spike width exponent must exceed 1")
        pred = _spike_pred(w)
        plist = (w,)
    else:  # full-ball-complement
        radius = float(params.pop("radius", 0.5))
        pred = _ball_pred(radius)
        plist = (radius,)
        anchor = (0.0,) * dim          # ball center: the delta == 1 point
    if params:
        raise ValueError(f"unexpected parameters for {scenario!r}: {sorted(params)}")
    return domain_from_complement(pred, extent, h, scenario=scenario,
                                  scenario_params=plist, anchor=anchor)


# --------------------------------------------------------------------------
# Condenser
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Condenser:
    """Compact node set K inside an open ball B, on a private lattice.

    The lattice is centered at the ball center with spacing ``h``; index
    offsets run over [-n, n] per axis with n = radius / h (exact).  Nodes at
    distance >= radius are on or outside the boundary sphere and will be
    clamped to zero by the capacity solver.  K must keep one layer of non-K
    nodes next to the sphere; K may be empty.
    """

    ball: Ball
    h: float
    k_mask: np.ndarray

    def __post_init__(self):
        n = int(round(self.ball.radius / self.h))
        if n < 4:
            raise ValueError("condenser lattice too coarse (need >= 4 nodes per radius)")
        if abs(n * self.h - self.ball.radius) > 1e-9 * self.ball.radius:
            raise ValueError("spacing must divide the ball radius exactly")
        shape = (2 * n + 1,) * self.ball.dim
        if self.k_mask.shape != shape:
            raise ValueError(f"K mask shape {self.k_mask.shape} != lattice {shape}")
        rad = self.node_radii()
        outside = rad >= self.ball.radius - 1e-12 * self.ball.radius
        if (self.k_mask & outside).any():
            raise ValueError("K nodes must lie strictly inside B")
        near = _dilate(outside)
        if (self.k_mask & near).any():
            raise ValueError("K must keep one non-K layer adjacent to the sphere")
        self.k_mask.flags.writeable = False

    @property
    def n(self):
        return int(round(self.ball.radius / self.h))

    def node_radii(self):
        n = self.n
        offs = self.h * np.arange(-n, n + 1)
        if self.ball.dim == 1:
            return np.abs(offs)
        gx, gy = np.meshgrid(offs, offs, indexing="ij")
        return np.sqrt(gx ** 2 + gy ** 2)

    def node_points(self):
        n = self.n
        offs = self.h * np.arange(-n, n + 1)
        c = np.asarray(self.ball.center)
        if self.ball.dim == 1:
            return (c[0] + offs)[:, None]
        gx, gy = np.meshgrid(c[0] + offs, c[1] + offs, indexing="ij")
        return np.stack([gx.ravel(), gy.ravel()], axis=-1)


def _dilate(mask):
    out = mask.copy()
    for ax in range(mask.ndim):
        sl_dst = [slice(None)] * mask.ndim
        sl_src = [slice(None)] * mask.ndim
        sl_dst[ax] = slice(1, None)
        sl_src[ax] = slice(None, -1)
        out[tuple(sl_dst)] |= mask[tuple(sl_src)]
        out[tuple(sl_src)] |= mask[tuple(sl_dst)]
    return out


def concentric_condenser(dim, k_radius, ball_radius, nodes_per_radius=16,
                         center=None):
    """Condenser (closed ball of k_radius ; open ball of ball_radius)."""
    if not 0 < k_radius < ball_radius:
        raise ValueError("need 0 < k_radius < ball_radius")
    if center is None:
        center = (0.0,) * dim
    ball = Ball(center, ball_radius)
    cond_n = int(nodes_per_radius)
    h = ball_radius / cond_n
    offs = h * np.arange(-cond_n, cond_n + 1)
    if dim == 1:
        rad = np.abs(offs)
    else:
        gx, gy = np.meshgrid(offs, offs, indexing="ij")
        rad = np.sqrt(gx ** 2 + gy ** 2)
    k_mask = rad <= k_radius + 1e-12 * ball_radius
    return Condenser(ball=ball, h=h, k_mask=k_mask)


def complement_condenser(complement_fn, x0, r, nodes_per_radius=16):
    """Condenser (closed B_r(x0) minus Omega ; B_2r(x0)) sampled at nodes."""
    x0 = tuple(float(c) for c in x0)
    dim = len(x0)
    ball = Ball(x0, 2.0 * r)
    n = 2 * int(nodes_per_radius)
    h = 2.0 * r / n
    offs = h * np.arange(-n, n + 1)
    if dim == 1:
        rad = np.abs(offs)
        pts = (x0[0] + offs)[:, None]
    else:
        gx, gy = np.meshgrid(offs, offs, indexing="ij")
        rad = np.sqrt(gx ** 2 + gy ** 2)
        pts = np.stack([(x0[0] + gx).ravel(), (x0[1] + gy).ravel()], axis=-1)
    in_small = rad <= r + 1e-12 * r
    comp = np.asarray(complement_fn(pts), dtype=bool).reshape(rad.shape)
    return Condenser(ball=ball, h=h, k_mask=in_small & comp)


def full_ball_condenser(x0, r, dim, nodes_per_radius=16):
    """Condenser (closed B_r(x0) ; B_2r(x0)): the delta denominator."""
    return complement_condenser(lambda pts: np.ones(len(pts), dtype=bool),
                                x0, r, nodes_per_radius)


# --------------------------------------------------------------------------
# Cylinder node enumeration
# --------------------------------------------------------------------------

def cylinder_nodes(domain, cyl, dt, inside_only=False):
    """Lattice points (node index, time slab index) covered by a cylinder.

    Time slabs live on the uniform grid t_k = k * dt; the slab set is the
    half-open interval (t_lo, t_hi] of the cylinder.  Returns (space_idx,
    time_idx): space_idx is an (M, dim) integer array of node multi-indices,
    time_idx the 1-D array of slab indices; the cylinder covers their product.
    An empty intersection gives empty arrays, not an error.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    mesh = np.meshgrid(*domain.axes, indexing="ij")
    d2 = np.zeros(domain.shape)
    for ax, m in enumerate(mesh):
        d2 += (m - cyl.center[ax]) ** 2
    mask = d2 < cyl.radius ** 2
    if inside_only:
        mask &= domain.inside
    space_idx = np.argwhere(mask)
    t_lo, t_hi = cyl.time_interval()
    k_hi = int(np.floor(t_hi / dt + 1e-9))
    k_lo = int(np.floor(t_lo / dt + 1e-9)) + 1
    if k_hi < k_lo or len(space_idx) == 0:
        return np.empty((0, domain.dim), dtype=int), np.empty(0, dtype=int)
    return space_idx, np.arange(k_lo, k_hi + 1)
