"""Isosceles orthogonality equations and the chord-midpoint problem.

x is isosceles orthogonal to y when ||x+y|| = ||x-y||; equivalently y lies
on the bisector of -x and x.  Everything here reduces to scanning a sign
function over sphere directions and refining by bisection, since the
gauges involved need not be differentiable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .norms import Norm, Vec2, as_vec2, sphere_point_scalar, sphere_points
from .rootfind import ScanEvent, scan_events

SCAN_SAMPLES = 2048   # default t-samples on [0, pi)
FLAT_RUN_TOL = 1e-12  # |g| at or below this marks a flat sample
FLAT_RUN_MIN = 3      # consecutive flat samples that make an arc of solutions


@dataclass(frozen=True)
class IsoSolution:
    """One solution y of the isosceles orthogonality equation on a sphere.

    interval is set when a whole arc solves the equation (possible only
    for norms that are not strictly convex); it holds the arc endpoints.
    """

    y: Vec2
    residual: float
    interval: tuple[Vec2, Vec2] | None = None


class ChordPair(NamedTuple):
    x: Vec2
    x_prime: Vec2
    unique: bool


def iso_residual(n: Norm, x, y) -> float:
    """Signed defect ||x+y|| - ||x-y||; zero iff x is isosceles orthogonal to y."""
    a = as_vec2(x, "x")
    b = as_vec2(y, "y")
    return n._gauge_scalar(a.u + b.u, a.w + b.w) - n._gauge_scalar(a.u - b.u, a.w - b.w)


def _iso_many(n: Norm, z: Vec2, ys: np.ndarray) -> np.ndarray:
    zz = np.array([z.u, z.w])
    return n._gauge_array(ys + zz) - n._gauge_array(ys - zz)


def find_iso_orthogonal(n: Norm, z, r: float = 1.0, samples: int = SCAN_SAMPLES) -> list[IsoSolution]:
    """All y with gauge(y) = r isosceles orthogonal to z, up to sign.

    Scans g(t) = iso_residual(z, sphere_point(t, r)) on t in [0, pi); the
    antisymmetry g(t + pi) = -g(t) makes that half-turn a complete search.
    Sign changes refine to isolated solutions; runs of |g| <= FLAT_RUN_TOL
    become solution arcs reported once with their endpoints.
    """
    z = as_vec2(z, "z")
    if z == Vec2(0.0, 0.0):
        raise ValueError("z must be nonzero")
    if not r > 0.0:
        raise ValueError("radius must be positive")
    scale = max(r, n.gauge(z))
    res_tol = 1e-10 * scale
    flat_tol = FLAT_RUN_TOL * max(1.0, scale)

    ts = np.pi * np.arange(samples) / samples
    ys = sphere_points(n, ts, r)
    gs = _iso_many(n, z, ys)

    def y_at(t: float) -> Vec2:
        return sphere_point_scalar(n, t, r)

    def g(t: float) -> float:
        y = y_at(t)
        return n._gauge_scalar(z.u + y.u, z.w + y.w) - n._gauge_scalar(z.u - y.u, z.w - y.w)

    events = scan_events(ts, gs, g, flat_tol=flat_tol, wrap=(np.pi, -1.0),
                         min_run=FLAT_RUN_MIN, refine_ftol=res_tol)
    if not events:
        raise RuntimeError("isosceles orthogonality scan found no root; "
                           "increase samples or check the norm definition")

    solutions = []
    for ev in events:
        if ev.kind == "interval":
            y = y_at(ev.t)
            solutions.append(IsoSolution(y, abs(g(ev.t)), (y_at(ev.t_lo), y_at(ev.t_hi))))
        else:
            res = abs(g(ev.t))
            if res > res_tol:  # pragma: no cover - genuine crossings refine below tol
                raise RuntimeError(f"root refinement stalled at residual {res:.3e}")
            solutions.append(IsoSolution(y_at(ev.t), res))
    return solutions


def chord_midpoint_pair(n: Norm, z, samples: int = SCAN_SAMPLES,
                        grid_offset: float = 0.0) -> ChordPair:
    """The couple x, x' on the unit sphere whose midpoint is the interior point z.

    y(t) is the exit point of the ray from z at Euclidean angle t; the root
    of h(t) = ||z - y(t+pi)|| - ||z - y(t)|| on [0, pi) gives the chord.
    Strictly convex norms have exactly one such chord; otherwise the first
    root in t-order is returned and the pair is flagged non-unique.
    """
    z = as_vec2(z, "z")
    gz = n.gauge(z)
    if gz == 0.0:
        raise ValueError("z must be nonzero (every diameter bisects the origin)")
    if gz >= 1.0:
        raise ValueError(f"z must be interior to the unit ball, gauge(z) = {gz}")

    def exit_point(t: float) -> Vec2:
        du = math.cos(t)
        dw = math.sin(t)
        lo = 0.0
        hi = 2.0
        for _ in range(200):
            if n._gauge_scalar(z.u + hi * du, z.w + hi * dw) >= 1.0:
                break
            hi *= 2.0
        else:  # pragma: no cover
            raise RuntimeError("ray never leaves the unit ball")
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if n._gauge_scalar(z.u + mid * du, z.w + mid * dw) < 1.0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-16 * hi:
                break
        lam = 0.5 * (lo + hi)
        return Vec2(z.u + lam * du, z.w + lam * dw)

    def h(t: float) -> float:
        y0 = exit_point(t)
        y1 = exit_point(t + np.pi)
        return (n._gauge_scalar(z.u - y1.u, z.w - y1.w)
                - n._gauge_scalar(z.u - y0.u, z.w - y0.w))

    ts = grid_offset + np.pi * np.arange(samples) / samples
    exits = _ray_exits(n, z, ts)
    exits_op = _ray_exits(n, z, ts + np.pi)
    zz = np.array([z.u, z.w])
    hs = n._gauge_array(zz - exits_op) - n._gauge_array(zz - exits)

    events = scan_events(ts, hs, h, flat_tol=FLAT_RUN_TOL * max(1.0, gz),
                         wrap=(np.pi, -1.0), min_run=FLAT_RUN_MIN)
    if not events:  # pragma: no cover - h always changes sign on [0, pi]
        raise RuntimeError("chord scan found no sign change")

    first = events[0]
    t_star = first.t
    x = exit_point(t_star)
    x_prime = exit_point(t_star + np.pi)
    unique = len(events) == 1 and first.kind == "root"
    mid = Vec2(0.5 * (x.u + x_prime.u), 0.5 * (x.w + x_prime.w))
    err = math.hypot(mid.u - z.u, mid.w - z.w)
    if err > 1e-10 * max(1.0, gz):
        raise RuntimeError(f"chord midpoint off by {err:.3e}")
    return ChordPair(x, x_prime, unique)


def _ray_exits(n: Norm, z: Vec2, ts: np.ndarray) -> np.ndarray:
    """Vectorized exit points of rays from the interior point z."""
    dirs = np.stack([np.cos(ts), np.sin(ts)], axis=-1)
    zz = np.array([z.u, z.w])
    lo = np.zeros(len(ts))
    hi = np.full(len(ts), 2.0)
    for _ in range(200):
        inside = n._gauge_array(zz + dirs * hi[:, None]) < 1.0
        if not inside.any():
            break
        hi = np.where(inside, hi * 2.0, hi)
    else:  # pragma: no cover
        raise RuntimeError("ray never leaves the unit ball")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        inside = n._gauge_array(zz + dirs * mid[:, None]) < 1.0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
        if ((hi - lo) <= 1e-16 * hi).all():
            break
    lam = 0.5 * (lo + hi)
    return zz + dirs * lam[:, None]
