"""Norms on the plane: gauge evaluation, sphere points, and convexity probes.

A norm is described by the shape of its unit ball.  Four kinds are
supported: quadratic forms (ellipses), p-norms, centrally symmetric
convex polygons, and invertible linear images of any of these.  All
evaluation is exact up to float rounding for polygons and within a few
ulp for the smooth kinds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

# 1 - gauge(chord midpoint) at or below this counts as "on the sphere"
# when scanning for flat pieces of the unit sphere.
FLATNESS_TOL = 1e-10

# Bisection steps used when locating sphere points along a ray.
SPHERE_SOLVE_ITERS = 80

# Additive constants of the R2 low-discrepancy sequence (plastic-number
# based); used for deterministic angle grids.
R2_A1 = 0.7548776662466927
R2_A2 = 0.5698402909980532


class NormDefinitionError(ValueError):
    """A norm definition violates the schema or a kind invariant."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class Vec2(NamedTuple):
    """A point/vector of the plane in the fixed global basis."""

    u: float
    w: float

    def __add__(self, other):
        return Vec2(self.u + other[0], self.w + other[1])

    def __sub__(self, other):
        return Vec2(self.u - other[0], self.w - other[1])

    def __neg__(self):
        return Vec2(-self.u, -self.w)

    def __mul__(self, t):
        return Vec2(self.u * t, self.w * t)

    __rmul__ = __mul__

    def __truediv__(self, t):
        return Vec2(self.u / t, self.w / t)


def det(a, b) -> float:
    """Determinant of the 2x2 matrix with columns a, b."""
    return a[0] * b[1] - a[1] * b[0]


def as_vec2(v, name: str = "vector") -> Vec2:
    p = Vec2(float(v[0]), float(v[1]))
    if not (math.isfinite(p.u) and math.isfinite(p.w)):
        raise ValueError(f"{name} must have finite components, got {p}")
    return p


def _as_points(pts) -> np.ndarray:
    arr = np.asarray(pts, dtype=float)
    if arr.shape[-1] != 2:
        raise ValueError(f"expected points of shape (..., 2), got {arr.shape}")
    return arr


class Norm:
    """Base class for plane norms.  Instances are immutable after construction."""

    kind = "norm"

    def gauge(self, v) -> float:
        """Norm of a single point; 0 iff v = 0."""
        p = as_vec2(v)
        return self._gauge_scalar(p.u, p.w)

    def gauge_many(self, pts) -> np.ndarray:
        """Vectorized gauge over an (..., 2) array of points."""
        arr = _as_points(pts)
        if not np.isfinite(arr).all():
            raise ValueError("non-finite point passed to gauge")
        return self._gauge_array(arr)

    def _gauge_scalar(self, u: float, w: float) -> float:
        raise NotImplementedError

    def _gauge_array(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def strictly_convex_kind(self) -> bool:
        """True when the kind guarantees a strictly convex unit ball."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()})"


class Quadratic(Norm):
    """Inner-product norm sqrt(v' A v) for a symmetric positive definite A."""

    kind = "quadratic"

    def __init__(self, form):
        arr = np.asarray(form, dtype=float)
        if arr.shape != (2, 2) or not np.isfinite(arr).all():
            raise NormDefinitionError("form", "must be a finite 2x2 matrix")
        if arr[0, 1] != arr[1, 0]:
            raise NormDefinitionError("form", "must be symmetric")
        if arr[0, 0] <= 0 or arr[0, 0] * arr[1, 1] - arr[0, 1] ** 2 <= 0:
            raise NormDefinitionError("form", "must be positive definite")
        self.form = arr
        self._a = float(arr[0, 0])
        self._b = float(arr[0, 1])
        self._c = float(arr[1, 1])

    def _gauge_scalar(self, u, w):
        return math.sqrt(self._a * u * u + 2.0 * self._b * u * w + self._c * w * w)

    def _gauge_array(self, pts):
        u = pts[..., 0]
        w = pts[..., 1]
        return np.sqrt(self._a * u * u + 2.0 * self._b * u * w + self._c * w * w)

    @property
    def strictly_convex_kind(self):
        return True

    def to_dict(self):
        return {"kind": "quadratic", "form": [list(map(float, r)) for r in self.form]}


class PNorm(Norm):
    """The p-norm (|u|^p + |w|^p)^(1/p); p = 1 and p = inf are explicit branches."""

    kind = "pnorm"

    def __init__(self, p):
        if isinstance(p, str):
            if p != "inf":
                raise NormDefinitionError("p", "must be a number >= 1 or 'inf'")
            p = math.inf
        p = float(p)
        if math.isnan(p) or p < 1.0:
            raise NormDefinitionError("p", "must be >= 1 or 'inf'")
        self.p = p

    def _gauge_scalar(self, u, w):
        au = abs(u)
        aw = abs(w)
        p = self.p
        if p == math.inf:
            return au if au > aw else aw
        if p == 1.0:
            return au + aw
        m = au if au > aw else aw
        if m == 0.0:
            return 0.0
        return m * ((au / m) ** p + (aw / m) ** p) ** (1.0 / p)

    def _gauge_array(self, pts):
        a = np.abs(pts)
        if self.p == math.inf:
            return a.max(axis=-1)
        if self.p == 1.0:
            return a.sum(axis=-1)
        m = a.max(axis=-1)
        safe = np.where(m == 0.0, 1.0, m)
        r = a / safe[..., None]
        return m * (r[..., 0] ** self.p + r[..., 1] ** self.p) ** (1.0 / self.p)

    @property
    def strictly_convex_kind(self):
        return 1.0 < self.p < math.inf

    def to_dict(self):
        return {"kind": "pnorm", "p": "inf" if self.p == math.inf else self.p}


class Polygon(Norm):
    """Gauge of a centrally symmetric convex polygon.

    Evaluation uses the dual edge functionals built once at construction:
    gauge(v) = max_i |<n_i, v>| / h_i over the edges, which is exact up to
    float rounding and makes the sphere's flat pieces exactly detectable.
    """

    kind = "polygon"

    def __init__(self, vertices):
        arr = np.asarray(vertices, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or not np.isfinite(arr).all():
            raise NormDefinitionError("vertices", "must be a finite list of [u, w] pairs")
        n = len(arr)
        if n < 4 or n % 2 != 0:
            raise NormDefinitionError("vertices", "needs an even count of at least 4 vertices")
        if (np.hypot(arr[:, 0], arr[:, 1]) == 0.0).any():
            raise NormDefinitionError("vertices", "no vertex may sit at the origin")
        # canonical orientation: counterclockwise
        area2 = float(np.sum(arr[:, 0] * np.roll(arr[:, 1], -1) - np.roll(arr[:, 0], -1) * arr[:, 1]))
        if area2 < 0:
            arr = arr[::-1].copy()
        nxt = np.roll(arr, -1, axis=0)
        cross_pos = arr[:, 0] * nxt[:, 1] - arr[:, 1] * nxt[:, 0]
        if not (cross_pos > 0.0).all():
            raise NormDefinitionError("vertices", "must be strictly ordered by angle")
        edge = nxt - arr
        turn = edge[:, 0] * np.roll(edge, -1, axis=0)[:, 1] - edge[:, 1] * np.roll(edge, -1, axis=0)[:, 0]
        if not (turn > 0.0).all():
            raise NormDefinitionError("vertices", "must be in strictly convex position")
        half = n // 2
        scale = np.abs(arr).max()
        if not np.allclose(arr, -np.roll(arr, -half, axis=0), rtol=0.0, atol=1e-12 * scale):
            raise NormDefinitionError("vertices", "must be centrally symmetric (v paired with -v)")
        self.vertices = arr
        # outward normals scaled so <f_i, x> = 1 on edge i
        normals = np.stack([edge[:, 1], -edge[:, 0]], axis=1)
        support = np.einsum("ij,ij->i", normals, arr)
        if not (support > 0.0).all():
            raise NormDefinitionError("vertices", "origin must lie strictly inside")
        self._funcs = normals / support[:, None]

    def _gauge_scalar(self, u, w):
        best = 0.0
        for fu, fw in self._funcs:
            val = fu * u + fw * w
            if val < 0.0:
                val = -val
            if val > best:
                best = val
        return best

    def _gauge_array(self, pts):
        return np.abs(pts @ self._funcs.T).max(axis=-1)

    @property
    def strictly_convex_kind(self):
        return False

    def edges(self) -> list[tuple[Vec2, Vec2]]:
        vs = self.vertices
        return [
            (Vec2(*vs[i]), Vec2(*vs[(i + 1) % len(vs)]))
            for i in range(len(vs))
        ]

    def to_dict(self):
        return {"kind": "polygon", "vertices": [list(map(float, v)) for v in self.vertices]}


class LinearImage(Norm):
    """Norm v -> inner_gauge(M v) for an invertible matrix M."""

    kind = "linear_image"

    def __init__(self, inner: Norm, map):
        if not isinstance(inner, Norm):
            raise NormDefinitionError("inner", "must be a norm")
        arr = np.asarray(map, dtype=float)
        if arr.shape != (2, 2) or not np.isfinite(arr).all():
            raise NormDefinitionError("map", "must be a finite 2x2 matrix")
        d = arr[0, 0] * arr[1, 1] - arr[0, 1] * arr[1, 0]
        if d == 0.0:
            raise NormDefinitionError("map", "must be invertible")
        self.inner = inner
        self.map = arr
        self._m00, self._m01 = float(arr[0, 0]), float(arr[0, 1])
        self._m10, self._m11 = float(arr[1, 0]), float(arr[1, 1])
        self.map_inv = np.array([[arr[1, 1], -arr[0, 1]], [-arr[1, 0], arr[0, 0]]]) / d

    def _gauge_scalar(self, u, w):
        return self.inner._gauge_scalar(self._m00 * u + self._m01 * w, self._m10 * u + self._m11 * w)

    def _gauge_array(self, pts):
        return self.inner._gauge_array(pts @ self.map.T)

    @property
    def strictly_convex_kind(self):
        return self.inner.strictly_convex_kind

    def to_dict(self):
        return {
            "kind": "linear_image",
            "inner": self.inner.to_dict(),
            "map": [list(map(float, r)) for r in self.map],
        }


# ---------------------------------------------------------------------------
# sphere points


def sphere_points(n: Norm, thetas, r: float = 1.0) -> np.ndarray:
    """Points of gauge r in the Euclidean directions thetas, shape (len, 2).

    Solves gauge(lam * dir) = r by bracketing and bisection on lam, which
    needs no derivatives and therefore works for polygons and p in {1, inf}.
    """
    if not (r > 0.0 and math.isfinite(r)):
        raise ValueError(f"radius must be positive and finite, got {r}")
    th = np.asarray(thetas, dtype=float)
    if not np.isfinite(th).all():
        raise ValueError("non-finite angle")
    dirs = np.stack([np.cos(th), np.sin(th)], axis=-1)
    lo = np.zeros(th.shape)
    hi = np.ones(th.shape)
    for _ in range(200):
        low = n._gauge_array(dirs * hi[..., None]) < r
        if not low.any():
            break
        hi = np.where(low, hi * 2.0, hi)
    else:  # pragma: no cover - gauge positivity precludes this
        raise RuntimeError("sphere point bracketing failed to expand")
    for _ in range(SPHERE_SOLVE_ITERS):
        mid = 0.5 * (lo + hi)
        low = n._gauge_array(dirs * mid[..., None]) < r
        lo = np.where(low, mid, lo)
        hi = np.where(low, hi, mid)
        if ((hi - lo) <= 1e-16 * hi).all():
            break
    lam = 0.5 * (lo + hi)
    return dirs * lam[..., None]


def sphere_point_scalar(n: Norm, theta: float, r: float = 1.0) -> Vec2:
    """Scalar fast path of sphere_points (same bracketing + bisection)."""
    cu = math.cos(theta)
    cw = math.sin(theta)
    lo = 0.0
    hi = 1.0
    for _ in range(200):
        if n._gauge_scalar(cu * hi, cw * hi) >= r:
            break
        hi *= 2.0
    else:  # pragma: no cover
        raise RuntimeError("sphere point bracketing failed to expand")
    for _ in range(SPHERE_SOLVE_ITERS):
        mid = 0.5 * (lo + hi)
        if n._gauge_scalar(cu * mid, cw * mid) < r:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * hi:
            break
    lam = 0.5 * (lo + hi)
    return Vec2(cu * lam, cw * lam)


def sphere_point(n: Norm, theta: float, r: float = 1.0) -> Vec2:
    """The unique point with gauge r on the ray at Euclidean angle theta."""
    if not math.isfinite(theta):
        raise ValueError("non-finite angle")
    return sphere_point_scalar(n, theta, r)


# ---------------------------------------------------------------------------
# flat segments / strict convexity


@dataclass(frozen=True)
class FlatSegment:
    """A maximal straight segment [c, c'] contained in the unit sphere.

    certified is True only when the segment is known exactly (polygon
    edges and their linear images); scan results are resolution-limited.
    """

    c: Vec2
    c_prime: Vec2
    certified: bool = False

    def midpoint(self) -> Vec2:
        return Vec2(0.5 * (self.c.u + self.c_prime.u), 0.5 * (self.c.w + self.c_prime.w))


@dataclass(frozen=True)
class ConvexityVerdict:
    strictly_convex: bool
    segment: FlatSegment | None = None


def detect_flat_segments(n: Norm, resolution: int = 1024) -> list[FlatSegment]:
    """Flat pieces of the unit sphere.

    Polygons report their edges exactly.  Linear images transform the
    inner norm's segments.  Structurally strictly convex kinds return no
    segments.  Everything else is scanned: a run of consecutive sphere
    points whose chord midpoints stay on the sphere (within FLATNESS_TOL)
    is one segment, split at corner points that happen to lie on the grid.
    """
    if resolution < 64:
        raise ValueError("resolution must be at least 64")
    if isinstance(n, Polygon):
        return [FlatSegment(a, b, certified=True) for a, b in n.edges()]
    if isinstance(n, LinearImage):
        inv = n.map_inv
        return [
            FlatSegment(Vec2(*(inv @ seg.c)), Vec2(*(inv @ seg.c_prime)), certified=seg.certified)
            for seg in detect_flat_segments(n.inner, resolution)
        ]
    if n.strictly_convex_kind:
        return []

    thetas = 2.0 * np.pi * np.arange(resolution) / resolution
    pts = sphere_points(n, thetas, 1.0)
    nxt = np.roll(pts, -1, axis=0)
    gap_flat = 1.0 - n._gauge_array(0.5 * (pts + nxt)) <= FLATNESS_TOL
    if not gap_flat.any():
        return []

    # A grid point interior to a flat stretch is a corner ("kink") when the
    # chord skipping over it leaves the sphere.
    prv = np.roll(pts, 1, axis=0)
    across = 1.0 - n._gauge_array(0.5 * (prv + nxt)) > FLATNESS_TOL
    prev_flat = np.roll(gap_flat, 1)
    breaks = ~(gap_flat & prev_flat) | (gap_flat & prev_flat & across)
    break_idx = np.flatnonzero(breaks)
    if len(break_idx) == 0:  # pragma: no cover - a sphere cannot be all flat
        raise RuntimeError("flat segment scan found no corners on an all-flat sphere")

    segments = []
    for k, start in enumerate(break_idx):
        if not gap_flat[start]:
            continue
        stop = break_idx[(k + 1) % len(break_idx)]
        a = Vec2(*pts[start])
        b = Vec2(*pts[stop])
        segments.append(FlatSegment(a, b, certified=False))
    return segments


def is_strictly_convex(n: Norm, resolution: int = 1024) -> ConvexityVerdict:
    """Strict convexity verdict; carries the first flat segment found."""
    segs = detect_flat_segments(n, resolution)
    if segs:
        return ConvexityVerdict(False, segs[0])
    return ConvexityVerdict(True, None)


# ---------------------------------------------------------------------------
# Euclidean test


def lowdisc_angles(count: int, constant: float) -> np.ndarray:
    """Deterministic low-discrepancy angles in [0, 2*pi)."""
    k = np.arange(count)
    return 2.0 * np.pi * np.mod(0.5 + k * constant, 1.0)


def is_euclidean(n: Norm, samples: int = 360) -> tuple[bool, float]:
    """Parallelogram-law test over a deterministic low-discrepancy angle grid.

    Returns (verdict, residual) where residual is the worst violation of
    ||u+v||^2 + ||u-v||^2 = 2||u||^2 + 2||v||^2 over sampled unit pairs.
    """
    if samples < 100:
        raise ValueError("samples must be at least 100")
    us = sphere_points(n, lowdisc_angles(samples, R2_A1), 1.0)
    vs = sphere_points(n, lowdisc_angles(samples, R2_A2), 1.0)
    lhs = n._gauge_array(us + vs) ** 2 + n._gauge_array(us - vs) ** 2
    rhs = 2.0 * n._gauge_array(us) ** 2 + 2.0 * n._gauge_array(vs) ** 2
    residual = float(np.abs(lhs - rhs).max())
    return residual <= 1e-9, residual


# ---------------------------------------------------------------------------
# JSON definitions

_KIND_FIELDS = {
    "quadratic": {"form"},
    "pnorm": {"p"},
    "polygon": {"vertices"},
    "linear_image": {"inner", "map"},
}


def norm_from_dict(data, field_prefix: str = "") -> Norm:
    """Build a norm from its JSON definition; unknown fields are rejected."""

    def fld(name):
        return f"{field_prefix}{name}"

    if not isinstance(data, dict):
        raise NormDefinitionError(field_prefix or "norm", "definition must be an object")
    kind = data.get("kind")
    if kind not in _KIND_FIELDS:
        raise NormDefinitionError(fld("kind"), f"must be one of {sorted(_KIND_FIELDS)}")
    allowed = _KIND_FIELDS[kind] | {"kind"}
    extra = set(data) - allowed
    if extra:
        raise NormDefinitionError(fld(sorted(extra)[0]), f"unknown field for kind '{kind}'")
    missing = allowed - set(data)
    if missing:
        raise NormDefinitionError(fld(sorted(missing)[0]), f"required for kind '{kind}'")

    try:
        if kind == "quadratic":
            return Quadratic(data["form"])
        if kind == "pnorm":
            p = data["p"]
            if not isinstance(p, (int, float, str)):
                raise NormDefinitionError("p", "must be a number >= 1 or 'inf'")
            return PNorm(p)
        if kind == "polygon":
            return Polygon(data["vertices"])
        inner = norm_from_dict(data["inner"], field_prefix=fld("inner."))
        return LinearImage(inner, data["map"])
    except NormDefinitionError as exc:
        if exc.field.startswith(field_prefix):
            raise
        raise NormDefinitionError(fld(exc.field), exc.args[0].split(": ", 1)[-1]) from None
    except (TypeError, ValueError) as exc:
        raise NormDefinitionError(fld(kind), str(exc)) from None


def norm_from_json(text: str) -> Norm:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NormDefinitionError("norm", f"invalid JSON: {exc}") from None
    return norm_from_dict(data)


def load_norm(path) -> Norm:
    with open(path, "r", encoding="utf-8") as fh:
        return norm_from_json(fh.read())
