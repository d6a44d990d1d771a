"""Variational s-capacity of condensers and derived Wiener quantities.

The capacity of a condenser (K; B) is the minimal discrete s-Dirichlet
energy over lattice fields equal to 1 on K and 0 on and outside the boundary
sphere.  Minimization runs damped nonlinear relaxation sweeps (node-wise
exact 1-D minimization, red-black ordering, optional over-relaxation) with an
energy-decrease guarantee; a gradient-descent fallback with backtracking
covers the rare case the sweeps stall.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .errors import ConvergenceFailure
from .geometry import (Condenser, complement_condenser, full_ball_condenser)

EPS_FACTOR = 1e-8          # gradient regularization: eps = EPS_FACTOR * h
DELTA_CLAMP_TOL = 1e-3     # tolerated capacity-ratio overshoot above 1
DYADIC = 0.5               # radius ratio of Wiener profiles


@dataclass
class CapacityResult:
    value: float
    minimizer: np.ndarray
    iterations: int
    residual: float


@dataclass
class WienerProfile:
    """delta_s sampled at dyadic radii with partial sums S_l = sum delta*ln2."""

    exponent: float
    center: tuple
    radii: np.ndarray
    deltas: np.ndarray
    partial_sums: np.ndarray
    cap_num: np.ndarray
    cap_den: np.ndarray
    divergence_consistent: bool
    truncated: bool = False

    def __post_init__(self):
        if np.any(np.diff(self.radii) >= 0):
            raise ValueError("profile radii must decrease strictly")
        if np.any(self.deltas < 0) or np.any(self.deltas > 1):
            raise ValueError("deltas must lie in [0, 1]")
        if np.any(np.diff(self.partial_sums) < -1e-15):
            raise ValueError("partial sums must be nondecreasing")

    def delta_fn(self):
        """Piecewise log-linear interpolant of delta(r), clamped at the ends."""
        r = self.radii[::-1]
        d = self.deltas[::-1]
        logr = np.log(r)

        def f(rho):
            return float(np.interp(np.log(rho), logr, d))

        return f

    def integral(self, rho_lo, rho_hi):
        """Trapezoid quadrature of int delta(s) ds/s over [rho_lo, rho_hi]."""
        lo = max(rho_lo, float(self.radii[-1]))
        hi = min(rho_hi, float(self.radii[0]))
        if hi <= lo:
            return 0.0
        xs = np.log(np.array([lo] + [float(r) for r in self.radii[::-1]
                                     if lo < r < hi] + [hi]))
        f = self.delta_fn()
        ys = np.array([f(math.exp(x)) for x in xs])
        return float(np.trapezoid(ys, xs))


@dataclass
class FatnessSpec:
    exponent: float
    lam: float
    r_max: float

    def __post_init__(self):
        if self.lam <= 0 or self.r_max <= 0:
            raise ValueError("fatness constants must be positive")


# --------------------------------------------------------------------------
# Discrete s-Dirichlet energy
# --------------------------------------------------------------------------

def _energy(f, h, s, dim, eps):
    """Sum over lattice edges of h^N ((|grad|^2+eps^2)^(s/2) - eps^s).

    The subtraction uses the identical power expression so constant fields
    have energy exactly zero.
    """
    c0 = (eps * eps) ** (s / 2.0)
    total = 0.0
    hN = h ** dim
    for ax in range(f.ndim):
        g = np.diff(f, axis=ax) / h
        total += hN * float(np.sum((g * g + eps * eps) ** (s / 2.0) - c0))
    return total


def _energy_gradient(f, h, s, dim, eps):
    grad = np.zeros_like(f)
    hN = h ** dim
    for ax in range(f.ndim):
        u = np.diff(f, axis=ax) / h
        w = s * u * (u * u + eps * eps) ** (s / 2.0 - 1.0) * (hN / h)
        sl_hi = [slice(None)] * f.ndim
        sl_lo = [slice(None)] * f.ndim
        sl_hi[ax] = slice(1, None)
        sl_lo[ax] = slice(None, -1)
        grad[tuple(sl_hi)] += w
        grad[tuple(sl_lo)] -= w
    return grad


def _neighbor_stack(f):
    """Axis-neighbor values per node, via wrap-around shifts.

    Wrapped entries only pollute array-edge nodes, which are never free in a
    condenser lattice.
    """
    nbs = []
    for ax in range(f.ndim):
        nbs.append(np.roll(f, 1, axis=ax))
        nbs.append(np.roll(f, -1, axis=ax))
    return np.stack(nbs, axis=0)


def _node_minimizer(nbs, s, eps, h, x0, iters=50):
    """Vectorized safeguarded Newton for the node-wise 1-D minimum.

    Solves sum_e u_e (u_e^2+eps^2)^(s/2-1) = 0 with u_e = (x - nb_e)/h,
    strictly increasing in x; the solution lies in the neighbor hull.
    """
    lo = nbs.min(axis=0)
    hi = nbs.max(axis=0)
    x = np.clip(x0, lo, hi)
    for _ in range(iters):
        u = (x[None, ...] - nbs) / h
        m2 = u * u + eps * eps
        w = m2 ** (s / 2.0 - 1.0)
        g = (u * w).sum(axis=0)
        gp = (w + (s - 2.0) * u * u * m2 ** (s / 2.0 - 2.0)).sum(axis=0) / h
        hi = np.where(g > 0, x, hi)
        lo = np.where(g <= 0, x, lo)
        step = np.where(gp > 0, g * h / np.where(gp > 0, gp, 1.0), 0.0)
        x_new = x - step
        bad = (x_new <= lo) | (x_new >= hi) | ~np.isfinite(x_new)
        x_new = np.where(bad, 0.5 * (lo + hi), x_new)
        if np.max(hi - lo) < 1e-15 * max(1.0, np.max(np.abs(hi))):
            x = x_new
            break
        x = x_new
    return x


def minimize_energy(f0, free, h, s, dim, eps, tol=1e-10, max_sweeps=100_000,
                    omega=1.85, method="relax"):
    """Minimize the regularized s-Dirichlet energy over the free nodes.

    Returns (field, sweeps, residual); residual is the last relative
    per-sweep energy decrease.  Raises ConvergenceFailure when the sweep
    budget runs out.
    """
    f = f0.copy()
    idx = np.indices(f.shape).sum(axis=0)
    colors = [free & (idx % 2 == 0), free & (idx % 2 == 1)]
    energy = _energy(f, h, s, dim, eps)
    residual = np.inf
    w = omega
    sweeps = 0
    use_gd = method == "gd"
    while sweeps < max_sweeps:
        sweeps += 1
        f_prev = f.copy()
        if use_gd:
            f = _gd_step(f, free, h, s, dim, eps)
        else:
            for color in colors:
                nbs = _neighbor_stack(f)
                if s == 2.0:
                    target = nbs.mean(axis=0)
                else:
                    target = _node_minimizer(nbs, s, eps, h, f)
                f = np.where(color, f + w * (target - f), f)
        e_new = _energy(f, h, s, dim, eps)
        if e_new > energy:
            if not use_gd and w > 1.0:
                f = f_prev
                w = max(1.0, 0.5 * (w + 1.0))
                continue
            # exact descent cannot increase energy beyond rounding: stop here
            f = f_prev
            residual = 0.0
            return f, sweeps, residual
        residual = (energy - e_new) / max(e_new, 1e-300)
        energy = e_new
        if residual < tol:
            return f, sweeps, residual
    raise ConvergenceFailure(
        f"no convergence within {max_sweeps} sweeps (residual {residual:.3g})",
        residual=residual, iterations=sweeps)


def _gd_step(f, free, h, s, dim, eps):
    g = _energy_gradient(f, h, s, dim, eps)
    g = np.where(free, g, 0.0)
    gnorm2 = float(np.sum(g * g))
    if gnorm2 == 0.0:
        return f
    e0 = _energy(f, h, s, dim, eps)
    step = 1.0
    for _ in range(60):
        trial = f - step * g
        if _energy(trial, h, s, dim, eps) <= e0 - 0.25 * step * gnorm2:
            return trial
        step *= 0.5
    return f


def _weighted_harmonic_solve(f, free, h, weights):
    """Minimize sum_e w_e (f_i - f_j)^2 with the fixed nodes of f held.

    weights is a per-axis list of edge-weight arrays (shape reduced by one
    along the axis).  Returns the solved field.
    """
    shape = f.shape
    size = f.size
    ids = np.arange(size).reshape(shape)
    free_flat = free.ravel()
    fval = f.ravel()
    n_free = int(free_flat.sum())
    col_of = -np.ones(size, dtype=int)
    col_of[free_flat] = np.arange(n_free)
    diag = np.zeros(n_free)
    b = np.zeros(n_free)
    rows, cols, vals = [], [], []
    for ax in range(f.ndim):
        sl_lo = [slice(None)] * f.ndim
        sl_hi = [slice(None)] * f.ndim
        sl_lo[ax] = slice(None, -1)
        sl_hi[ax] = slice(1, None)
        left = ids[tuple(sl_lo)].ravel()
        right = ids[tuple(sl_hi)].ravel()
        w = weights[ax].ravel()
        for a_side, b_side in ((left, right), (right, left)):
            sel = free_flat[a_side]
            ra = col_of[a_side[sel]]
            np.add.at(diag, ra, w[sel])
            nb = b_side[sel]
            nb_free = free_flat[nb]
            rows.extend(ra[nb_free])
            cols.extend(col_of[nb[nb_free]])
            vals.extend(-w[sel][nb_free])
            np.add.at(b, ra[~nb_free], w[sel][~nb_free] * fval[nb[~nb_free]])
    mat = scipy.sparse.coo_matrix(
        (np.concatenate([diag, np.array(vals)]),
         (np.concatenate([np.arange(n_free), np.array(rows, dtype=int)]),
          np.concatenate([np.arange(n_free), np.array(cols, dtype=int)]))),
        shape=(n_free, n_free)).tocsr()
    x = scipy.sparse.linalg.spsolve(mat, b)
    out = fval.copy()
    out[free_flat] = x
    return out.reshape(shape)


def _irls_descend(f, free, h, s, dim, eps, rounds=40, rtol=1e-12):
    """Picard / IRLS descent: reweighted harmonic solves with a line search.

    Each round solves the quadratic model with frozen weights
    w_e = (g_e^2 + eps^2)^(s/2-1) and backtracks along the segment to the
    solution, so the true energy never increases.
    """
    energy = _energy(f, h, s, dim, eps)
    for _ in range(rounds):
        weights = []
        for ax in range(f.ndim):
            g = np.diff(f, axis=ax) / h
            w = (g * g + eps * eps) ** (s / 2.0 - 1.0)
            weights.append(w)
        w_max = max(float(w.max()) for w in weights)
        floor = w_max * 1e-12
        weights = [np.maximum(w, floor) for w in weights]
        target = _weighted_harmonic_solve(f, free, h, weights)
        direction = target - f
        theta = 1.0
        improved = False
        for _ in range(40):
            trial = f + theta * direction
            e_trial = _energy(trial, h, s, dim, eps)
            if e_trial < energy:
                f, improved = trial, True
                gain = (energy - e_trial) / max(e_trial, 1e-300)
                energy = e_trial
                break
            theta *= 0.5
        if not improved or gain < rtol:
            break
    return f


def compute_capacity(cond: Condenser, s, tol=1e-10, max_sweeps=100_000,
                     omega=1.85, method="relax"):
    """Variational s-capacity of a condenser by constrained minimization.

    The constraint f = 1 on K is imposed as an equality (the truncation
    argument makes the inequality-constrained optimum attain it anyway);
    nodes on and outside the boundary sphere are pinned to 0.  For s = 2 the
    minimizer runs pure relaxation sweeps so the direct sparse solve stays an
    independent cross-check; for s != 2 a reweighted-quadratic descent with
    line search accelerates the approach and relaxation sweeps certify the
    stopping rule.
    """
    if s <= 1:
        raise ValueError(f"capacity exponent must exceed 1, got s={s}")
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    s = float(s)
    dim = cond.ball.dim
    rad = cond.node_radii()
    fixed0 = rad >= cond.ball.radius * (1 - 1e-12)
    free = ~fixed0 & ~cond.k_mask
    f0 = cond.k_mask.astype(float)
    eps = EPS_FACTOR * cond.h
    if not cond.k_mask.any():
        return CapacityResult(value=0.0, minimizer=f0, iterations=0, residual=0.0)
    irls_rounds = 0
    if s != 2.0 and method == "relax":
        unit = [np.ones(np.diff(f0, axis=ax).shape) for ax in range(f0.ndim)]
        f0 = _weighted_harmonic_solve(f0, free, cond.h, unit)
        f0 = np.clip(f0, 0.0, 1.0)
        f0 = _irls_descend(f0, free, cond.h, s, dim, eps, rtol=min(tol, 1e-12))
        irls_rounds = 1
        relax_omega = 1.0              # certification sweeps: exact descent
    else:
        relax_omega = omega
    try:
        f, sweeps, residual = minimize_energy(
            f0, free, cond.h, s, dim, eps, tol=tol,
            max_sweeps=max_sweeps, omega=relax_omega, method=method)
    except ConvergenceFailure:
        if method == "relax":
            f, sweeps, residual = minimize_energy(
                f0, free, cond.h, s, dim, eps, tol=tol,
                max_sweeps=max_sweeps, method="gd")
        else:
            raise
    f = np.clip(f, 0.0, 1.0)           # truncation cannot increase the energy
    value = _energy(f, cond.h, s, dim, eps)
    return CapacityResult(value=value, minimizer=f, iterations=sweeps + irls_rounds,
                          residual=residual)


def solve_linear_capacity(cond: Condenser):
    """Direct sparse solve of the s = 2 capacity (discrete harmonic system).

    Independent cross-check route for the nonlinear minimizer; returns a
    CapacityResult with the energy of the solved field.
    """
    dim = cond.ball.dim
    rad = cond.node_radii()
    fixed0 = rad >= cond.ball.radius * (1 - 1e-12)
    free = ~fixed0 & ~cond.k_mask
    f = cond.k_mask.astype(float)
    n_free = int(free.sum())
    if n_free == 0 or not cond.k_mask.any():
        value = _energy(f, cond.h, 2.0, dim, EPS_FACTOR * cond.h)
        return CapacityResult(value=value, minimizer=f, iterations=0, residual=0.0)
    index = -np.ones(f.shape, dtype=int)
    index[free] = np.arange(n_free)
    rows, cols, vals = [], [], []
    b = np.zeros(n_free)
    deg = np.zeros(n_free)
    for ax in range(f.ndim):
        for shift in (1, -1):
            nb_val = np.roll(f, shift, axis=ax)
            nb_idx = np.roll(index, shift, axis=ax)
            nb_free = np.roll(free, shift, axis=ax)
            here = free
            deg[index[here]] += 1.0
            both = here & nb_free
            rows.extend(index[both])
            cols.extend(nb_idx[both])
            vals.extend([-1.0] * int(both.sum()))
            fixed_nb = here & ~nb_free
            np.add.at(b, index[fixed_nb], nb_val[fixed_nb])
    a = scipy.sparse.coo_matrix(
        (np.concatenate([deg, np.array(vals)]),
         (np.concatenate([np.arange(n_free), np.array(rows, dtype=int)]),
          np.concatenate([np.arange(n_free), np.array(cols, dtype=int)]))),
        shape=(n_free, n_free)).tocsr()
    x = scipy.sparse.linalg.spsolve(a, b)
    f = f.copy()
    f[free] = x
    f = np.clip(f, 0.0, 1.0)
    value = _energy(f, cond.h, 2.0, dim, EPS_FACTOR * cond.h)
    return CapacityResult(value=value, minimizer=f, iterations=1, residual=0.0)


# --------------------------------------------------------------------------
# delta_s, Wiener sums, fatness, density
# --------------------------------------------------------------------------

def _complement_of(domain):
    if domain.complement_fn is None:
        raise ValueError("domain carries no complement predicate")
    return domain.complement_fn


def _check_radius(domain, x0, r):
    for ax, (lo, hi) in enumerate(domain.extent):
        if x0[ax] - 2 * r < lo - 1e-12 or x0[ax] + 2 * r > hi + 1e-12:
            raise ValueError(f"ball B_2r at r={r} leaves the grid extent")


def delta_s(domain, x0, r, s, nodes_per_radius=16, tol=1e-10,
            clamp_tol=DELTA_CLAMP_TOL, _detail=False):
    """Capacity density of the complement at scale r.

    Ratio of the capacities of (closed B_r minus Omega; B_2r) and
    (closed B_r; B_2r), raised to 1/(s-1).  Both solves share one lattice, so
    the raw ratio exceeds 1 only by discretization noise; overshoot below
    ``clamp_tol`` is clamped to 1, anything larger raises.
    """
    if s <= 1:
        raise ValueError("delta_s needs s > 1")
    _check_radius(domain, x0, r)
    pred = _complement_of(domain)
    num_cond = complement_condenser(pred, x0, r, nodes_per_radius)
    den_cond = full_ball_condenser(x0, r, domain.dim, nodes_per_radius)
    num = compute_capacity(num_cond, s, tol=tol)
    den = compute_capacity(den_cond, s, tol=tol)
    if num_cond.k_mask.sum() == den_cond.k_mask.sum():
        ratio = 1.0                    # identical condensers: exact by definition
    elif num.value == 0.0:
        ratio = 0.0
    else:
        ratio = num.value / den.value
        if ratio > 1.0 + clamp_tol:
            raise ValueError(f"capacity ratio {ratio:.6f} exceeds 1 beyond noise")
        ratio = min(ratio, 1.0)
    d = ratio ** (1.0 / (s - 1.0))
    if _detail:
        return d, num.value, den.value
    return d


def wiener_sum(domain, x0, r0, levels, s, nodes_per_radius=16,
               divergence_floor=0.02, min_radius=None, tol=1e-10, jobs=1):
    """Wiener profile: delta_s at dyadic radii with partial sums.

    S_l = sum_{j<=l} delta_s(r0 2^-j) ln 2.  The profile is flagged
    divergence-consistent when the last three increments all stay above
    ``divergence_floor``; radii below ``min_radius`` are truncated with a
    flag rather than computed.  Solves at distinct radii are independent;
    ``jobs`` > 1 runs them on a thread pool (results stay radius-ordered).
    """
    if levels < 1:
        raise ValueError("need at least one level")
    radii, truncated = [], False
    for j in range(levels + 1):
        r = r0 * DYADIC ** j
        if min_radius is not None and r < min_radius:
            truncated = True
            break
        radii.append(r)

    def one(r):
        return delta_s(domain, x0, r, s, nodes_per_radius, tol=tol,
                       _detail=True)

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, radii))
    else:
        results = [one(r) for r in radii]
    deltas = [d for d, _, _ in results]
    nums = [cn for _, cn, _ in results]
    dens = [cd for _, _, cd in results]
    deltas = np.array(deltas)
    sums = np.cumsum(deltas) * math.log(2.0)
    tail = deltas[-3:] * math.log(2.0)
    consistent = bool(len(tail) > 0 and np.all(tail > divergence_floor))
    return WienerProfile(exponent=float(s), center=tuple(x0),
                         radii=np.array(radii), deltas=deltas,
                         partial_sums=sums, cap_num=np.array(nums),
                         cap_den=np.array(dens),
                         divergence_consistent=consistent, truncated=truncated)


def _mask_predicate(domain, mask):
    axes = domain.axes

    def pred(pts):
        idx = []
        for ax in range(domain.dim):
            i = np.clip(np.round((pts[:, ax] - axes[ax][0]) / domain.h), 0,
                        len(axes[ax]) - 1).astype(int)
            idx.append(i)
        return mask[tuple(idx)]

    return pred


def fatness_capacity(domain, pred, y, rho, s):
    """Capacity of (closed B_rho(y) cap X; B_2rho) at the domain's resolution.

    The lattice spacing tracks the physical grid h (clipped to keep the
    solve well posed), so sub-grid sets thin out as rho grows instead of
    being rescaled along with the ball.
    """
    npr = int(np.clip(round(rho / domain.h), 4, 64))
    cond = complement_condenser(pred, tuple(y), rho, nodes_per_radius=npr)
    return compute_capacity(cond, s).value


def is_uniformly_fat(domain, spec: FatnessSpec, radii, x_mask=None,
                     points=None, max_points=24):
    """Check C_s(closed B_rho(y) cap X; B_2rho(y)) >= lam rho^(N-s).

    X defaults to the complement of Omega.  Sample points default to X nodes
    adjacent to Omega (the discrete interface), deterministically thinned to
    ``max_points``.  Returns (ok, witness); witness names the violating
    (y, rho, capacity, bound) on failure.
    """
    if x_mask is None:
        x_mask = ~domain.inside
        pred = _complement_of(domain)
    else:
        pred = _mask_predicate(domain, x_mask)
    if points is None:
        from .geometry import _dilate
        interface = x_mask & _dilate(domain.inside.copy())
        coords = domain.coords()[interface]
        if len(coords) == 0:
            raise ValueError("X has no interface nodes to sample")
        stride = max(1, len(coords) // max_points)
        points = coords[::stride]
    for y in points:
        for rho in radii:
            if rho >= spec.r_max:
                raise ValueError("sample radii must stay below R_s")
            try:
                _check_radius(domain, y, rho)
            except ValueError:
                continue
            cap = fatness_capacity(domain, pred, y, rho, spec.exponent)
            bound = spec.lam * rho ** (domain.dim - spec.exponent)
            if cap < bound:
                return False, (tuple(y), float(rho), cap, bound)
    return True, None


def density_condition(domain, x0, alpha, radii):
    """Node-count test of |Omega cap B_rho(x0)| <= (1 - alpha) |B_rho|."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    coords = domain.coords()
    d2 = ((coords - np.asarray(x0)) ** 2).sum(axis=-1)
    for rho in radii:
        ball = d2 < rho ** 2
        total = int(ball.sum())
        if total == 0:
            raise ValueError(f"radius {rho} captures no nodes")
        frac = int((ball & domain.inside).sum()) / total
        if frac > 1.0 - alpha:
            return False
    return True


def classify_phase_mode(phase, x0, t0):
    """p-mode iff the phase vanishes exactly at the boundary point."""
    return "p" if phase(x0, t0) == 0.0 else "q"
