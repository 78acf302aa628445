"""Bisection and sign-scan helpers shared by the geometric solvers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


def bisect_sign_change(f, a: float, b: float, fa: float | None = None,
                       fb: float | None = None, iters: int = 100,
                       ftol: float = 0.0) -> float:
    """Root of f on [a, b] given a sign change; plain bisection.

    Derivative-free on purpose: the functions fed here (gauge differences)
    are piecewise smooth at best.
    """
    fa = f(a) if fa is None else fa
    fb = f(b) if fb is None else fb
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0.0) == (fb > 0.0):
        raise ValueError("bisect_sign_change needs endpoints of opposite sign")
    for _ in range(iters):
        m = 0.5 * (a + b)
        if m == a or m == b:
            break
        fm = f(m)
        if ftol > 0.0 and abs(fm) <= ftol:
            return m
        if (fm > 0.0) == (fa > 0.0):
            a, fa = m, fm
        else:
            b, fb = m, fm
    return 0.5 * (a + b)


def refine_predicate_boundary(pred: Callable[[float], bool], t_true: float,
                              t_false: float, iters: int = 80) -> float:
    """Frontier between pred == True at t_true and False at t_false."""
    for _ in range(iters):
        m = 0.5 * (t_true + t_false)
        if m == t_true or m == t_false:
            break
        if pred(m):
            t_true = m
        else:
            t_false = m
    return t_true


@dataclass(frozen=True)
class ScanEvent:
    """A zero of a sampled function: isolated root or flat interval."""

    kind: str  # "root" | "interval"
    t: float   # root location, or interval representative (midpoint)
    t_lo: float | None = None
    t_hi: float | None = None


def scan_events(ts: Sequence[float], gs: Sequence[float], g: Callable[[float], float],
                flat_tol: float, wrap: tuple[float, float] | None = None,
                min_run: int = 3, refine_ftol: float = 0.0) -> list[ScanEvent]:
    """Locate zeros of g from its samples gs on the grid ts.

    Samples with |g| <= flat_tol are "flat".  Runs of at least min_run flat
    samples become interval events whose endpoints are refined against the
    flat predicate; shorter runs collapse to the sample of least |g|; sign
    changes between non-flat neighbours are refined by bisection.

    wrap = (period, sign) treats the grid as circular: the sample after
    ts[-1] is ts[0] + period with value sign * gs[0], and runs touching both
    ends merge (the merged interval may then start below ts[0]).  g must be
    evaluable on the extended range.
    """
    ts = np.asarray(ts, dtype=float)
    gs = np.asarray(gs, dtype=float)
    m = len(ts)
    if wrap is not None:
        period, sign = wrap
        ts = np.append(ts, ts[0] + period)
        gs = np.append(gs, sign * gs[0])
    npts = len(ts)
    flat = np.abs(gs) <= flat_tol

    events: list[ScanEvent] = []

    # flat runs over the base grid (circular when wrapped)
    runs = []
    i = 0
    while i < m:
        if not flat[i]:
            i += 1
            continue
        j = i
        while j + 1 < m and flat[j + 1]:
            j += 1
        runs.append([i, j])
        i = j + 2
    if wrap is not None and len(runs) >= 2:
        first, last = runs[0], runs[-1]
        if first[0] == 0 and last[1] == m - 1:
            # run crosses the seam; shift the tail below ts[0]
            runs = runs[1:-1] + [[last[0] - m, first[1]]]

    def t_at(idx: int) -> float:
        if idx < 0:
            return ts[idx + m] - wrap[0]
        return ts[idx]

    def is_flat(t: float) -> bool:
        return abs(g(t)) <= flat_tol

    for lo_idx, hi_idx in runs:
        length = hi_idx - lo_idx + 1
        if length >= min_run:
            t_lo = t_at(lo_idx)
            t_hi = t_at(hi_idx)
            if length < m:  # an all-flat circle has no boundaries to refine
                if lo_idx > 0 or wrap is not None:
                    t_lo = refine_predicate_boundary(is_flat, t_lo, t_at(lo_idx - 1))
                if hi_idx + 1 < m or wrap is not None:
                    t_hi = refine_predicate_boundary(is_flat, t_hi, t_at(hi_idx + 1))
            events.append(ScanEvent("interval", 0.5 * (t_lo + t_hi), t_lo, t_hi))
        else:
            idxs = list(range(lo_idx, hi_idx + 1))
            vals = [abs(gs[k % m]) for k in idxs]
            best = idxs[int(np.argmin(vals))]
            events.append(ScanEvent("root", t_at(best)))

    # sign changes between consecutive non-flat samples
    last_pair = npts - 1
    for i in range(last_pair):
        if flat[i] or flat[i + 1]:
            continue
        if (gs[i] > 0.0) != (gs[i + 1] > 0.0):
            root = bisect_sign_change(g, float(ts[i]), float(ts[i + 1]),
                                      float(gs[i]), float(gs[i + 1]), ftol=refine_ftol)
            events.append(ScanEvent("root", root))

    events.sort(key=lambda e: e.t if e.t_lo is None else e.t_lo)
    return events
