"""Witness constructions and verification suites for the bisector dichotomies.

Two characterizations drive everything here:

* a norm is strictly convex exactly when the bisectors B(-x, x) and
  B(-y, y) of independent unit x, y never share a nonzero point;
* a norm fails to be Euclidean exactly when for some x and every ratio
  lambda != 1 there is a y with ||y|| = lambda * ||x|| whose bisector
  meets B(-x, x) away from the origin.

Witnesses for the negative sides are constructed explicitly from flat
segments of the sphere, or searched for along bent bisectors in the
strictly convex case.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bisector import deviation_from_line, intersect_symmetric, trace_symmetric
from .norms import (R2_A1, R2_A2, FlatSegment, Norm, Vec2, det,
                    detect_flat_segments, is_euclidean, is_strictly_convex,
                    sphere_point, sphere_points)
from .ortho import chord_midpoint_pair, find_iso_orthogonal, iso_residual

WITNESS_RES_TOL = 1e-9
INDEPENDENCE_MIN = 1e-9
DEVIATION_FLOOR = 1e-9    # max trace deviation below this reads as "a line"
INTERIOR_MARGIN = 1e-8    # margin for counting a sampled point as interior
VIOLATION_SLACK = 1e-12   # beyond-boundary excess that counts as a violation


class WitnessError(RuntimeError):
    """A witness construction cannot proceed on this norm."""


class SearchFailure(WitnessError):
    """A witness search exhausted its budget; diagnostics say how close it got."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class Witness:
    """A certified triple: z != 0 lies on both B(-x, x) and B(-y, y)."""

    x: Vec2
    y: Vec2
    z: Vec2
    lam: float
    residual_x: float
    residual_y: float
    independence: float

    @classmethod
    def build(cls, n: Norm, x: Vec2, y: Vec2, z: Vec2,
              res_tol: float = WITNESS_RES_TOL) -> "Witness":
        gx = n.gauge(x)
        gy = n.gauge(y)
        scale = max(1.0, gx, gy)
        res_x = abs(n.gauge(z - x) - n.gauge(z + x))
        res_y = abs(n.gauge(z - y) - n.gauge(z + y))
        indep = abs(det(x, y))
        if n.gauge(z) <= 1e-6 * gx:
            raise WitnessError(f"witness point is not separated from the origin: {z}")
        if res_x > res_tol * scale or res_y > res_tol * scale:
            raise WitnessError(
                f"witness residuals too large: {res_x:.3e}, {res_y:.3e}")
        if indep <= INDEPENDENCE_MIN:
            raise WitnessError(f"witness directions nearly dependent: det = {indep:.3e}")
        return cls(x, y, z, gy / gx, res_x, res_y, indep)

    def to_dict(self) -> dict:
        return {
            "x": [self.x.u, self.x.w],
            "y": [self.y.u, self.y.w],
            "z": [self.z.u, self.z.w],
            "lambda": self.lam,
            "residuals": {"x": self.residual_x, "y": self.residual_y},
            "independence": self.independence,
        }


def _first_segment(n: Norm, segment: FlatSegment | None, resolution: int) -> FlatSegment:
    if segment is not None:
        return segment
    segs = detect_flat_segments(n, resolution)
    if not segs:
        raise WitnessError("norm has no flat segment: it is strictly convex "
                           "at the scanned resolution")
    return segs[0]


def witness_nonstrict_prop(n: Norm, segment: FlatSegment | None = None,
                           resolution: int = 1024) -> Witness:
    """Unit-sphere witness violating the trivial-intersection property.

    From a flat segment [c, c'] of the sphere take

        a = (3c + c')/4,  a' = (-3c' - c)/4,  b = c,  b' = -(c + c')/2,

    all on the sphere, with common midpoint z = (a + a')/2 = (b + b')/2.
    Then x = a - z and y = b - z are independent unit vectors and z lies
    on both of their symmetric bisectors.
    """
    seg = _first_segment(n, segment, resolution)
    c, cp = seg.c, seg.c_prime
    a = (3.0 * c + cp) / 4.0
    ap = (-3.0 * cp - c) / 4.0
    b = c
    z = 0.5 * (a + ap)
    x = a - z
    y = b - z
    return Witness.build(n, x, y, z)


def witness_nonstrict_theorem(n: Norm, lam: float, segment: FlatSegment | None = None,
                              resolution: int = 1024) -> Witness:
    """Cross-radius witness on a non-strictly-convex norm.

    With [a, b] flat in the sphere, x = (3a + b)/4 and z = (a + 3b)/4 share
    the bisector segment through (z - x)/2; scaling by lam <= 1 (or leaving
    it for lam >= 1) keeps a common point with y = lam * z.
    """
    if not (lam > 0.0) or lam == 1.0:
        raise ValueError("lambda must be positive and differ from 1")
    seg = _first_segment(n, segment, resolution)
    a, b = seg.c, seg.c_prime
    x = (3.0 * a + b) / 4.0
    zp = (a + 3.0 * b) / 4.0
    y = lam * zp
    common = (0.5 * lam) * (zp - x) if lam <= 1.0 else 0.5 * (zp - x)
    w = Witness.build(n, x, y, common)
    if abs(n.gauge(y) - lam * n.gauge(x)) > 1e-10 * max(1.0, lam):
        raise WitnessError("scaled witness radius drifted")  # pragma: no cover
    return w


def witness_strictconvex_theorem(n: Norm, lam: float, angles: int = 180,
                                 p_samples: int = 64, t_max: float = 8.0,
                                 count: int = 201,
                                 independence_min: float = 1e-3) -> Witness:
    """Search for a cross-radius witness on a strictly convex norm.

    Ranks unit directions by how far their traced bisector bends away from
    a straight line, then walks points p outward along the most bent
    bisector.  Any p that is not already on B(-lam*x0, lam*x0) pairs with
    the unique y isosceles-orthogonal to p at radius lam to give a witness;
    candidates too close to dependence are skipped and reported.
    """
    if not (lam > 0.0) or lam == 1.0:
        raise ValueError("lambda must be positive and differ from 1")
    thetas = np.pi * np.arange(angles) / angles
    traces = []
    deviations = np.empty(angles)
    for i, th in enumerate(thetas):
        x0 = sphere_point(n, float(th), 1.0)
        tr = trace_symmetric(n, x0, t_max, count)
        traces.append(tr)
        deviations[i] = deviation_from_line(tr)
    order = np.argsort(-deviations, kind="stable")
    best_dev = float(deviations[order[0]])
    diagnostics = {
        "angles_scanned": angles,
        "max_deviation": best_dev,
        "best_angle": float(thetas[order[0]]),
    }
    if best_dev <= DEVIATION_FLOOR:
        raise SearchFailure(
            "every traced bisector is a straight line at the deviation floor; "
            "the norm looks Euclidean", diagnostics)

    best_indep = 0.0
    candidates_tried = 0
    for idx in order[:3]:
        if deviations[idx] <= DEVIATION_FLOOR:
            break
        trace = traces[idx]
        x0 = trace.x
        r = lam * n.gauge(x0)
        lam_x0 = Vec2(lam * x0.u, lam * x0.w)
        mids = trace.midpoints()
        walk = np.argsort(np.abs(trace.offsets), kind="stable")
        for j in walk:
            p = Vec2(*mids[j])
            if n.gauge(p) <= 1e-6:
                continue
            if abs(iso_residual(n, lam_x0, p)) <= 1e-9:
                continue  # p sits on the scaled bisector as well; useless
            candidates_tried += 1
            if candidates_tried > p_samples:
                break
            sols = find_iso_orthogonal(n, p, r)
            sol = sols[0]
            if sol.interval is not None:
                continue
            indep = abs(det(x0, sol.y))
            best_indep = max(best_indep, indep)
            if indep <= independence_min:
                continue
            return Witness.build(n, x0, sol.y, p)
        if candidates_tried > p_samples:
            break
    diagnostics["candidates_tried"] = candidates_tried
    diagnostics["best_independence"] = best_indep
    raise SearchFailure("witness search budget exhausted", diagnostics)


# ---------------------------------------------------------------------------
# suites


def worker_count(explicit: int | None = None) -> int:
    """Suite parallelism: NORM_LAB_THREADS caps it, 0 means auto."""
    if explicit is not None:
        return max(1, explicit)
    env = os.environ.get("NORM_LAB_THREADS")
    if env is None:
        return 1
    value = int(env)
    if value == 0:
        return min(8, os.cpu_count() or 1)
    return max(1, value)


def _ordered_map(fn, items, workers: int):
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class PropReport:
    pairs_checked: int
    violations: list[Witness]

    def to_dict(self) -> dict:
        return {
            "name": "pairwise_bisector_intersections",
            "checked": self.pairs_checked,
            "violations": [w.to_dict() for w in self.violations],
            "margins": {},
        }


def unit_pair_grid(pairs: int) -> list[tuple[float, float]]:
    """Deterministic low-discrepancy direction pairs in [0, pi)^2."""
    out = []
    k = 0
    while len(out) < pairs:
        th = math.pi * ((0.5 + k * R2_A1) % 1.0)
        ph = math.pi * ((0.5 + k * R2_A2) % 1.0)
        k += 1
        if abs(math.sin(th - ph)) < 1e-6:  # grid pair too close to dependent
            continue
        out.append((th, ph))
    return out


def verify_prop_strict(n: Norm, pairs: int = 200, t_max: float = 8.0,
                       count: int = 201, angle_pairs=None,
                       workers: int | None = None) -> PropReport:
    """Check that sampled independent unit pairs share no nonzero bisector point.

    For strictly convex norms the violations list must come back empty; a
    flat-sided norm fed a grid containing a witness pair will populate it.
    """
    if angle_pairs is None:
        angle_pairs = unit_pair_grid(pairs)
    else:
        angle_pairs = list(angle_pairs)[:pairs] if pairs else list(angle_pairs)

    def check(pair):
        th, ph = pair
        x = sphere_point(n, th, 1.0)
        y = sphere_point(n, ph, 1.0)
        if abs(det(x, y)) <= 1e-9 * n.gauge(x) * n.gauge(y):
            return []
        points = intersect_symmetric(n, x, y, t_max, count)
        return [Witness.build(n, x, y, z) for z in points]

    results = _ordered_map(check, angle_pairs, worker_count(workers))
    violations = [w for per_pair in results for w in per_pair]
    return PropReport(pairs_checked=len(angle_pairs), violations=violations)


# ---------------------------------------------------------------------------
# chord frames and the side-result suite


@dataclass(frozen=True)
class LemmaFrame:
    """Coordinate frame {z, (a - a')/2} built from two sphere chords.

    The chords through (alpha/2) z and (beta/2) z satisfy a + a' = alpha z
    and b + b' = beta z.  In frame coordinates the chord line of a sits at
    first coordinate a1 (= alpha/2 in z-units), d = (0, delta) lies on the
    sphere, and the cone over d, d' with apex c = (delta a1/(delta-1), 0)
    sandwiches the ball across the strip boundary at a1.
    """

    basis_e1: Vec2
    basis_e2: Vec2
    alpha: float
    beta: float
    delta: float
    a: Vec2
    a_prime: Vec2
    b: Vec2
    b_prime: Vec2
    c: Vec2
    d: Vec2
    d_prime: Vec2
    r_plus_slope: float
    r_minus_slope: float
    a1: float
    c1: float
    _inv: np.ndarray = field(repr=False)

    def to_frame(self, p) -> np.ndarray:
        return self._inv @ np.asarray([p[0], p[1]], dtype=float)

    def to_frame_many(self, pts: np.ndarray) -> np.ndarray:
        return pts @ self._inv.T

    def from_frame(self, f1: float, f2: float) -> Vec2:
        return Vec2(f1 * self.basis_e1.u + f2 * self.basis_e2.u,
                    f1 * self.basis_e1.w + f2 * self.basis_e2.w)


def build_lemma_frame(n: Norm, z_dir: float, alpha: float, beta: float,
                      samples: int = 2048) -> LemmaFrame:
    """Assemble the chord frame at unit direction z_dir.

    Needs a strictly convex norm so the two chord-midpoint problems have
    unique solutions; alpha <= beta keeps the a-chord the inner one.
    """
    if not (0.0 < alpha <= beta):
        raise ValueError("need 0 < alpha <= beta")
    if beta >= 2.0:
        raise ValueError("beta z / 2 must stay interior to the unit ball")
    z = sphere_point(n, z_dir, 1.0)
    a, ap, _ = chord_midpoint_pair(n, (0.5 * alpha) * z, samples)
    b, bp, _ = chord_midpoint_pair(n, (0.5 * beta) * z, samples)
    e2 = 0.5 * (a - ap)
    width = n.gauge(a - ap)
    delta = 2.0 / width
    basis = np.array([[z.u, e2.u], [z.w, e2.w]])
    d_basis = basis[0, 0] * basis[1, 1] - basis[0, 1] * basis[1, 0]
    if abs(d_basis) < 1e-12:  # pragma: no cover - chord can't align with z
        raise RuntimeError("degenerate chord frame")
    inv = np.array([[basis[1, 1], -basis[0, 1]], [-basis[1, 0], basis[0, 0]]]) / d_basis
    a1 = float((inv @ np.array([a.u, a.w]))[0])
    c1 = delta * a1 / (delta - 1.0)
    d = delta * e2
    frame = LemmaFrame(
        basis_e1=z, basis_e2=e2, alpha=alpha, beta=beta, delta=delta,
        a=a, a_prime=ap, b=b, b_prime=bp,
        c=Vec2(c1 * z.u, c1 * z.w), d=d, d_prime=-d,
        r_plus_slope=(1.0 - delta) / a1, r_minus_slope=(delta - 1.0) / a1,
        a1=a1, c1=c1, _inv=inv,
    )
    _validate_frame(n, frame)
    return frame


def _validate_frame(n: Norm, fr: LemmaFrame) -> None:
    tol = 1e-8
    for name, p in (("a", fr.a), ("a_prime", fr.a_prime), ("b", fr.b),
                    ("b_prime", fr.b_prime), ("d", fr.d), ("d_prime", fr.d_prime)):
        if abs(n.gauge(p) - 1.0) > tol:
            raise RuntimeError(f"frame point {name} left the sphere: {p}")
    z = fr.basis_e1
    for coeff, p, q in ((fr.alpha, fr.a, fr.a_prime), (fr.beta, fr.b, fr.b_prime)):
        drift = math.hypot(p.u + q.u - coeff * z.u, p.w + q.w - coeff * z.w)
        if drift > tol:
            raise RuntimeError(f"chord sum drifted from its axis point by {drift:.3e}")
    if not fr.delta > 1.0:
        raise RuntimeError(f"delta = {fr.delta} should exceed 1 for an interior chord")


@dataclass
class SuiteResult:
    name: str
    checked: int
    violations: list[dict]
    margins: dict

    def to_dict(self) -> dict:
        return {"name": self.name, "checked": self.checked,
                "violations": self.violations, "margins": self.margins}


def _triangle_margin(p1: float, p2: float, d_: float, c1: float) -> float:
    """Signed distance (frame chart) of (p1, p2) into triangle {d, d', c}.

    Vertices in frame coordinates: d = (0, d_), d' = (0, -d_), c = (c1, 0).
    Positive means strictly inside by that much.
    """
    h = math.hypot(c1, d_)
    top = -(c1 * (p2 - d_) + d_ * p1) / h   # inward distance from edge d -> c
    bot = (c1 * (p2 + d_) - d_ * p1) / h    # inward distance from edge c -> d'
    return min(top, bot, p1)


def lemma_suite(n: Norm, frames: int = 10, samples_per_frame: int = 500,
                seed: int = 0, workers: int | None = None) -> list[SuiteResult]:
    """Sampled checks of the chord-frame inclusions on a strictly convex norm.

    Per random frame: the triangle {d, d', c} clipped to the strip before
    the chord line stays interior to the ball; the ball past the chord line
    stays interior to the triangle and to the shifted shrunk ball; the
    shifted shrunk ball before the chord line stays interior to the ball;
    chord widths shrink strictly as the midpoint moves outward; equal
    offsets reproduce the same chord.
    """
    children = np.random.SeedSequence(seed).spawn(frames + 1)
    seeds = children[:frames]
    base = np.random.default_rng(children[-1])
    specs = []
    for k in range(frames):
        z_dir = float(base.uniform(0.0, 2.0 * np.pi))
        lo, hi = sorted(base.uniform(0.3, 1.7, size=2))
        if k % 5 == 4:
            lo = hi  # exercise the equal-offsets uniqueness case
        specs.append((k, z_dir, float(lo), float(hi)))

    def run_frame(spec):
        k, z_dir, alpha, beta = spec
        rng = np.random.default_rng(seeds[k])
        fr = build_lemma_frame(n, z_dir, alpha, beta)
        out = {
            "triangle_cap_inside_ball": dict(checked=0, violations=[], margin=math.inf, indet=0),
            "ball_cap_inside_triangle": dict(checked=0, violations=[], margin=math.inf, indet=0),
            "ball_cap_inside_shifted_ball": dict(checked=0, violations=[], margin=math.inf, indet=0),
            "shifted_ball_cap_inside_ball": dict(checked=0, violations=[], margin=math.inf, indet=0),
            "chord_width_monotone": dict(checked=0, violations=[], margin=math.inf, indet=0),
            "chord_uniqueness_equal_offsets": dict(checked=0, violations=[], margin=math.inf, indet=0),
        }
        a1, c1, d_ = fr.a1, fr.c1, fr.delta
        center = fr.from_frame(a1, 0.0)

        def record(entry, margin, point, frame_pt, what):
            entry["checked"] += 1
            if margin >= INTERIOR_MARGIN:
                entry["margin"] = min(entry["margin"], margin)
            elif margin > -VIOLATION_SLACK:
                entry["indet"] += 1
            else:
                entry["violations"].append({
                    "frame": k, "point": [point.u, point.w],
                    "frame_point": [float(frame_pt[0]), float(frame_pt[1])],
                    "margin": margin, "what": what,
                })

        # extent of the ball in frame coordinates, for stripe sampling
        ring = sphere_points(n, np.linspace(0.0, 2.0 * np.pi, 720, endpoint=False))
        ringf = fr.to_frame_many(ring)
        f1max = float(ringf[:, 0].max())
        f2max = float(np.abs(ringf[:, 1]).max())

        # triangle cap (strip before the chord line) sits inside the ball
        r1 = rng.uniform(0.0, 1.0, samples_per_frame)
        r2 = rng.uniform(0.0, 1.0, samples_per_frame)
        flip = r1 + r2 > 1.0
        r1[flip] = 1.0 - r1[flip]
        r2[flip] = 1.0 - r2[flip]
        # barycentric map of the unit triangle onto {d, d', c}
        p1 = r2 * c1
        p2 = d_ * (1.0 - 2.0 * r1 - r2)
        for f1, f2 in zip(p1, p2):
            if not (INTERIOR_MARGIN < f1 < a1 - INTERIOR_MARGIN):
                continue
            q = fr.from_frame(float(f1), float(f2))
            record(out["triangle_cap_inside_ball"], 1.0 - n.gauge(q), q, (f1, f2),
                   "triangle point outside the ball")

        # ball cap past the chord line: inside triangle and shifted shrunk ball
        if a1 + INTERIOR_MARGIN < f1max:
            f1s = rng.uniform(a1 + INTERIOR_MARGIN, f1max, samples_per_frame)
            f2s = rng.uniform(-f2max, f2max, samples_per_frame)
            for f1, f2 in zip(f1s, f2s):
                q = fr.from_frame(float(f1), float(f2))
                if n.gauge(q) > 1.0:
                    continue
                record(out["ball_cap_inside_triangle"],
                       _triangle_margin(float(f1), float(f2), d_, c1), q, (f1, f2),
                       "ball point outside the triangle")
                shifted = d_ * n.gauge(q - center)
                record(out["ball_cap_inside_shifted_ball"], 1.0 - shifted, q, (f1, f2),
                       "ball point outside the shifted shrunk ball")

        # shifted shrunk ball before the chord line sits inside the ball
        angs = rng.uniform(0.0, 2.0 * np.pi, samples_per_frame)
        rads = rng.uniform(0.0, 1.0, samples_per_frame)
        ring_pts = sphere_points(n, angs)
        for ang_pt, rad in zip(ring_pts, rads):
            q = Vec2(center.u + rad * ang_pt[0] / d_, center.w + rad * ang_pt[1] / d_)
            fq = fr.to_frame(q)
            if fq[0] >= a1 - INTERIOR_MARGIN:
                continue
            record(out["shifted_ball_cap_inside_ball"], 1.0 - n.gauge(q), q, fq,
                   "shifted ball point outside the ball")

        # chord widths shrink strictly outward
        if beta > alpha + 1e-9:
            gap = n.gauge(fr.a - fr.a_prime) - n.gauge(fr.b - fr.b_prime)
            entry = out["chord_width_monotone"]
            entry["checked"] += 1
            if gap > 0.0:
                entry["margin"] = min(entry["margin"], gap)
            else:
                entry["violations"].append({"frame": k, "gap": gap,
                                            "alpha": alpha, "beta": beta,
                                            "what": "outer chord is not narrower"})
        elif beta == alpha:
            entry = out["chord_uniqueness_equal_offsets"]
            entry["checked"] += 1
            straight = max(math.hypot(*(fr.a - fr.b)), math.hypot(*(fr.a_prime - fr.b_prime)))
            swapped = max(math.hypot(*(fr.a - fr.b_prime)), math.hypot(*(fr.a_prime - fr.b)))
            drift = min(straight, swapped)
            if drift <= 1e-9:
                entry["margin"] = min(entry["margin"], drift)
            else:
                entry["violations"].append({"frame": k, "drift": drift,
                                            "what": "equal offsets found different chords"})
        return out

    per_frame = _ordered_map(run_frame, specs, worker_count(workers))

    names = ["triangle_cap_inside_ball", "ball_cap_inside_triangle",
             "ball_cap_inside_shifted_ball", "shifted_ball_cap_inside_ball",
             "chord_width_monotone", "chord_uniqueness_equal_offsets"]
    results = []
    for name in names:
        checked = sum(pf[name]["checked"] for pf in per_frame)
        violations = [v for pf in per_frame for v in pf[name]["violations"]]
        margin = min((pf[name]["margin"] for pf in per_frame), default=math.inf)
        indet = sum(pf[name]["indet"] for pf in per_frame)
        margins = {"min_margin": None if margin is math.inf else margin,
                   "indeterminate": indet}
        results.append(SuiteResult(name, checked, violations, margins))
    return results


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class Classification:
    label: str  # euclidean | strictly_convex_non_euclidean | not_strictly_convex
    parallelogram_residual: float
    flat_segment: FlatSegment | None

    def to_dict(self) -> dict:
        seg = None
        if self.flat_segment is not None:
            seg = {"c": [self.flat_segment.c.u, self.flat_segment.c.w],
                   "c_prime": [self.flat_segment.c_prime.u, self.flat_segment.c_prime.w],
                   "certified": self.flat_segment.certified}
        return {"label": self.label,
                "parallelogram_residual": self.parallelogram_residual,
                "flat_segment": seg}


def classify(n: Norm, resolution: int = 1024, samples: int = 360) -> Classification:
    """Dispatch on strict convexity and the parallelogram law."""
    verdict = is_strictly_convex(n, resolution)
    euclidean, residual = is_euclidean(n, samples)
    if not verdict.strictly_convex:
        label = "not_strictly_convex"
    elif euclidean:
        label = "euclidean"
    else:
        label = "strictly_convex_non_euclidean"
    return Classification(label, residual, verdict.segment)
