"""Bisectors B(-x, x): per-line roots, traces, intersection, nonlinearity.

The bisector of -x and x is sliced by the family of lines base + s*x with
base running along a transversal direction.  On each such line the defect
phi(s) = ||base + (s-1)x|| - ||base + (s+1)x|| is non-increasing (it is a
difference of one convex function evaluated two apart), positive far left
and negative far right, so its zero set is a point or an interval and both
boundaries are found by bracketing and bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .norms import Norm, Vec2, as_vec2, det, sphere_point_scalar, sphere_points
from .rootfind import refine_predicate_boundary, scan_events

LINE_SOLVE_ITERS = 80
DEGENERATE_WIDTH = 1e-8   # root intervals no wider than this count as points
NONZERO_RADIUS = 1e-6     # relative filter excluding the always-common origin
INTERSECT_TOL = 1e-9      # residual bound for reported common points
CONE_SCAN_SAMPLES = 2048
_PROBE_MAX_EXP = 48


@dataclass(frozen=True)
class LineRoot:
    """Solution set of the bisector equation on the line {base + s*x}."""

    base: Vec2
    s_lo: float
    s_hi: float

    @property
    def width(self) -> float:
        return self.s_hi - self.s_lo

    def point(self, x: Vec2, s: float) -> Vec2:
        return Vec2(self.base.u + s * x.u, self.base.w + s * x.w)

    def midpoint(self, x: Vec2) -> Vec2:
        return self.point(x, 0.5 * (self.s_lo + self.s_hi))


@dataclass(frozen=True)
class BisectorTrace:
    """Sampled B(-x, x) as one root interval per transversal offset."""

    x: Vec2
    transversal: Vec2
    offsets: np.ndarray
    roots: list[LineRoot]

    def midpoints(self) -> np.ndarray:
        s_mid = np.array([0.5 * (r.s_lo + r.s_hi) for r in self.roots])
        bases = np.array([[r.base.u, r.base.w] for r in self.roots])
        return bases + s_mid[:, None] * np.array([self.x.u, self.x.w])


def _phi_scalar(n: Norm, x: Vec2, base: Vec2, s: float) -> float:
    return (n._gauge_scalar(base.u + (s - 1.0) * x.u, base.w + (s - 1.0) * x.w)
            - n._gauge_scalar(base.u + (s + 1.0) * x.u, base.w + (s + 1.0) * x.w))


def line_root(n: Norm, x, base) -> LineRoot:
    """Root interval of the bisector equation on the line {base + s*x}."""
    x = as_vec2(x, "x")
    base = as_vec2(base, "base")
    if n.gauge(x) == 0.0:
        raise ValueError("x must be nonzero")
    zero_tol = 1e-12 * max(1.0, n.gauge(x))

    def phi(s: float) -> float:
        return _phi_scalar(n, x, base, s)

    # bracket by symmetric powers of two; phi -> +-2||x|| at the ends
    pos_side = None
    neg_side = None
    p0 = phi(0.0)
    if p0 > zero_tol:
        pos_side = 0.0
    elif p0 < -zero_tol:
        neg_side = 0.0
    step = 1.0
    for _ in range(_PROBE_MAX_EXP):
        if pos_side is not None and neg_side is not None:
            break
        if pos_side is None and phi(-step) > zero_tol:
            pos_side = -step
        if neg_side is None and phi(step) < -zero_tol:
            neg_side = step
        step *= 2.0
    else:  # pragma: no cover - impossible for a genuine norm at desk scale
        raise RuntimeError("line root bracketing failed")

    # s_lo: frontier between phi > zero_tol and the zero set, landing inside
    a, b = pos_side, neg_side
    for _ in range(LINE_SOLVE_ITERS):
        mid = 0.5 * (a + b)
        if phi(mid) > zero_tol:
            a = mid
        else:
            b = mid
    s_lo = b
    a, b = neg_side, pos_side
    for _ in range(LINE_SOLVE_ITERS):
        mid = 0.5 * (a + b)
        if phi(mid) < -zero_tol:
            a = mid
        else:
            b = mid
    s_hi = b
    if s_lo > s_hi:
        s_lo = s_hi = 0.5 * (s_lo + s_hi)
    return LineRoot(base, s_lo, s_hi)


def _line_roots_many(n: Norm, x: Vec2, bases: np.ndarray) -> list[LineRoot]:
    """Lockstep line_root over many bases (one bisection across all lines)."""
    count = len(bases)
    xx = np.array([x.u, x.w])
    zero_tol = 1e-12 * max(1.0, n.gauge(x))

    def phi(ss: np.ndarray) -> np.ndarray:
        return (n._gauge_array(bases + (ss[:, None] - 1.0) * xx)
                - n._gauge_array(bases + (ss[:, None] + 1.0) * xx))

    pos = np.full(count, np.nan)
    neg = np.full(count, np.nan)
    p0 = phi(np.zeros(count))
    pos = np.where(p0 > zero_tol, 0.0, pos)
    neg = np.where(p0 < -zero_tol, 0.0, neg)
    step = 1.0
    for _ in range(_PROBE_MAX_EXP):
        todo_pos = np.isnan(pos)
        todo_neg = np.isnan(neg)
        if not (todo_pos.any() or todo_neg.any()):
            break
        if todo_pos.any():
            vals = phi(np.full(count, -step))
            pos = np.where(todo_pos & (vals > zero_tol), -step, pos)
        if todo_neg.any():
            vals = phi(np.full(count, step))
            neg = np.where(todo_neg & (vals < -zero_tol), step, neg)
        step *= 2.0
    else:  # pragma: no cover
        raise RuntimeError("line root bracketing failed")

    a = pos.copy()
    b = neg.copy()
    for _ in range(LINE_SOLVE_ITERS):
        mid = 0.5 * (a + b)
        keep = phi(mid) > zero_tol
        a = np.where(keep, mid, a)
        b = np.where(keep, b, mid)
    s_lo = b
    a = neg.copy()
    b = pos.copy()
    for _ in range(LINE_SOLVE_ITERS):
        mid = 0.5 * (a + b)
        keep = phi(mid) < -zero_tol
        a = np.where(keep, mid, a)
        b = np.where(keep, b, mid)
    s_hi = b
    swap = s_lo > s_hi
    if swap.any():
        fixed = 0.5 * (s_lo + s_hi)
        s_lo = np.where(swap, fixed, s_lo)
        s_hi = np.where(swap, fixed, s_hi)
    return [LineRoot(Vec2(*bases[i]), float(s_lo[i]), float(s_hi[i])) for i in range(count)]


def pick_transversal(x: Vec2) -> Vec2:
    """The coordinate axis least aligned with x (largest |det(x, axis)|)."""
    return Vec2(1.0, 0.0) if abs(x.w) > abs(x.u) else Vec2(0.0, 1.0)


def trace_symmetric(n: Norm, x, t_max: float, count: int) -> BisectorTrace:
    """Trace B(-x, x) on count evenly spaced parallel lines.

    Offsets run over [-t_max, t_max] along the coordinate axis least
    aligned with x; each line is solved independently.
    """
    x = as_vec2(x, "x")
    if n.gauge(x) == 0.0:
        raise ValueError("x must be nonzero")
    if count < 3 or count % 2 == 0:
        raise ValueError("count must be an odd integer >= 3")
    if not t_max > 0.0:
        raise ValueError("t_max must be positive")
    transversal = pick_transversal(x)
    offsets = np.linspace(-t_max, t_max, count)
    bases = offsets[:, None] * np.array([transversal.u, transversal.w])
    roots = _line_roots_many(n, x, bases)
    return BisectorTrace(x, transversal, offsets, roots)


def reduce_general(n: Norm, a, b) -> tuple[Vec2, float, Vec2]:
    """Affine data (center, scale, u) reducing B(a, b) to the symmetric case.

    z lies on B(-u, u) exactly when center + scale * z lies on B(a, b),
    with center = (a+b)/2, scale = ||a-b||/2 and u = (a-b)/||a-b||.
    """
    a = as_vec2(a, "a")
    b = as_vec2(b, "b")
    dist = n.gauge(a - b)
    if dist == 0.0:
        raise ValueError("a and b must differ")
    center = Vec2(0.5 * (a.u + b.u), 0.5 * (a.w + b.w))
    u = Vec2((a.u - b.u) / dist, (a.w - b.w) / dist)
    return center, 0.5 * dist, u


def deviation_from_line(trace: BisectorTrace) -> float:
    """Largest Euclidean distance of trace midpoints from the secant line.

    The reference line joins the origin to the midpoint at the largest
    offset; coordinates are compared Euclideanly because straightness is
    an affine property independent of the norm.
    """
    if len(trace.offsets) < 3:
        raise ValueError("trace needs at least 3 offsets")
    mids = trace.midpoints()
    ref = mids[-1]
    nrm = math.hypot(ref[0], ref[1])
    if nrm == 0.0:
        raise ValueError("degenerate trace: reference midpoint at the origin")
    cross = np.abs(mids[:, 0] * ref[1] - mids[:, 1] * ref[0]) / nrm
    return float(cross.max())


def intersect_symmetric(n: Norm, x, y, t_max: float | None = None,
                        count: int = 201) -> list[Vec2]:
    """Nonzero common points of B(-x, x) and B(-y, y) found along a trace.

    B(-x, x) is traced line by line; psi(z) = ||z-y|| - ||z+y|| is sampled
    at the root midpoints and inside non-degenerate root intervals.  Sign
    changes refine by bisection (in the offset along the trace, or in s
    within a line); flat stretches of psi report their refined boundary
    points plus a representative.  The origin is always common and is
    excluded by a radius filter.
    """
    x = as_vec2(x, "x")
    y = as_vec2(y, "y")
    gx = n.gauge(x)
    gy = n.gauge(y)
    if gx == 0.0 or gy == 0.0:
        raise ValueError("x and y must be nonzero")
    if abs(det(x, y)) <= 1e-9 * gx * gy:
        raise ValueError("x and y must be linearly independent")
    scale = max(gx, gy)
    if t_max is None:
        t_max = 8.0 * scale
    res_tol = INTERSECT_TOL * max(1.0, scale)
    flat_tol = 1e-12 * max(1.0, scale)
    yy = np.array([y.u, y.w])

    trace = trace_symmetric(n, x, t_max, count)
    tr = trace.transversal

    def psi_point(p: Vec2) -> float:
        return (n._gauge_scalar(p.u - y.u, p.w - y.w)
                - n._gauge_scalar(p.u + y.u, p.w + y.w))

    def mid_at_offset(tau: float) -> Vec2:
        root = line_root(n, x, Vec2(tau * tr.u, tau * tr.w))
        return root.midpoint(x)

    def psi_at_offset(tau: float) -> float:
        return psi_point(mid_at_offset(tau))

    candidates: list[Vec2] = []

    mids = trace.midpoints()
    psis = n._gauge_array(mids - yy) - n._gauge_array(mids + yy)
    for ev in scan_events(trace.offsets, psis, psi_at_offset, flat_tol=flat_tol,
                          refine_ftol=res_tol):
        if ev.kind == "interval":
            candidates.extend([mid_at_offset(ev.t_lo), mid_at_offset(ev.t),
                               mid_at_offset(ev.t_hi)])
        else:
            candidates.append(mid_at_offset(ev.t))

    # 2-dimensional bisector pieces: scan within each non-degenerate interval
    deg = DEGENERATE_WIDTH * max(1.0, scale)
    xx = np.array([x.u, x.w])
    for root in trace.roots:
        if root.width <= deg:
            continue
        ss = np.linspace(root.s_lo, root.s_hi, 9)
        pts = np.array([root.base.u, root.base.w]) + ss[:, None] * xx
        vals = n._gauge_array(pts - yy) - n._gauge_array(pts + yy)

        def psi_at_s(s: float, _root=root) -> float:
            return psi_point(_root.point(x, s))

        for ev in scan_events(ss, vals, psi_at_s, flat_tol=flat_tol,
                              refine_ftol=res_tol):
            if ev.kind == "interval":
                candidates.extend([root.point(x, ev.t_lo), root.point(x, ev.t),
                                   root.point(x, ev.t_hi)])
            else:
                candidates.append(root.point(x, ev.t))

    found: list[Vec2] = []
    for z in candidates:
        if n.gauge(z) <= NONZERO_RADIUS * scale:
            continue
        res_x = abs(n._gauge_scalar(z.u - x.u, z.w - x.w)
                    - n._gauge_scalar(z.u + x.u, z.w + x.w))
        if res_x > res_tol or abs(psi_point(z)) > res_tol:
            continue
        if any(math.hypot(z.u - q.u, z.w - q.w) <= 1e-7 * max(1.0, scale) for q in found):
            continue
        found.append(z)
    return found


def origin_direction_cone(n: Norm, z, radii,
                          samples: int = CONE_SCAN_SAMPLES) -> list[list[tuple[float, float]]]:
    """Angle sets where B(-z, z) meets the gauge circles of the given radii.

    For each radius s the returned list holds (t_lo, t_hi) arcs of angles
    (up to sign, normalized to start in [0, pi)) whose gauge-s points q
    satisfy |iso_residual(z, q)| <= 1e-9.  Isolated crossings appear as
    degenerate arcs.
    """
    z = as_vec2(z, "z")
    gz = n.gauge(z)
    if gz == 0.0:
        raise ValueError("z must be nonzero")
    radii = [float(s) for s in radii]
    if not radii or any(s <= 0.0 for s in radii):
        raise ValueError("radii must be positive")
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    if radii[0] >= gz:
        raise ValueError("radii must stay below gauge(z)")

    member_tol = 1e-9
    zz = np.array([z.u, z.w])
    ts = np.pi * np.arange(samples) / samples
    out = []
    for s in radii:
        qs = sphere_points(n, ts, s)
        gs = n._gauge_array(qs + zz) - n._gauge_array(qs - zz)

        def g(t: float, _s=s) -> float:
            q = sphere_point_scalar(n, t, _s)
            return (n._gauge_scalar(z.u + q.u, z.w + q.w)
                    - n._gauge_scalar(z.u - q.u, z.w - q.w))

        arcs = []
        for ev in scan_events(ts, gs, g, flat_tol=member_tol, wrap=(np.pi, -1.0),
                              min_run=1):
            if ev.kind == "interval":
                lo, hi = ev.t_lo, ev.t_hi
            else:
                lo = hi = ev.t
            shift = lo % np.pi - lo
            arcs.append((lo + shift, hi + shift))
        arcs.sort()
        out.append(arcs)
    return out
