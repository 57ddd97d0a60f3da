"""Empirical thinness of finite point clouds.

A finite cloud never contains a ball, so thinness is measured on its
``delta``-fattening: project the cloud on a random k-plane, mark the lattice
points (spacing ``delta/2``) lying within ``delta`` of a projected point, and
find the largest open ball, centred on the coarser ``delta`` lattice, whose
lattice points are all marked.  Subtracting the fattening ``delta`` gives
the reported radius, so a single point scores exactly 0 and a filled square
of side 1 scores about 0.5.

The lattices are anchored at the origin (not at the bounding box), which
makes the radius monotone under adding points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage

from .streams import stream

MAX_LATTICE_CELLS = 40_000_000


@dataclass
class PointCloud:
    points: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1) if pts.size else pts.reshape(0, 1)
        if pts.ndim != 2:
            raise ValueError("points must be an (m, d) array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point cloud has non-finite coordinates")
        self.points = pts

    @classmethod
    def empty(cls, dim: int, meta: dict | None = None) -> "PointCloud":
        return cls(np.zeros((0, dim)), meta or {})

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]


def _pts(X) -> np.ndarray:
    return X.points if isinstance(X, PointCloud) else np.atleast_2d(np.asarray(X, dtype=float))


# ---------------------------------------------------------------------------
# distances


def _directed(A: np.ndarray, B: np.ndarray, chunk: int = 2048) -> float:
    worst = 0.0
    for s in range(0, A.shape[0], chunk):
        a = A[s:s + chunk]
        d2 = np.sum((a[:, None, :] - B[None, :, :]) ** 2, axis=2)
        worst = max(worst, float(np.sqrt(d2.min(axis=1).max())))
    return worst


def hausdorff(X, Y) -> float:
    """Brute-force Hausdorff distance; ``inf`` if either cloud is empty."""
    A, B = _pts(X), _pts(Y)
    if A.shape[0] == 0 or B.shape[0] == 0:
        return math.inf
    if A.shape[1] != B.shape[1]:
        raise ValueError("clouds live in different dimensions")
    return max(_directed(A, B), _directed(B, A))


def in_z_neighborhood(x, Y, z: float) -> bool:
    """Whether ``d(x, Y) < z``."""
    if not z > 0:
        raise ValueError("z must be positive")
    B = _pts(Y)
    if B.shape[0] == 0:
        return False
    x = np.asarray(x, dtype=float)
    return bool(np.sqrt(np.min(np.sum((B - x) ** 2, axis=1))) < z)


# ---------------------------------------------------------------------------
# projections


def random_projection(n: int, k: int, seed: int, index: int = 0) -> np.ndarray:
    """k x n matrix with orthonormal rows from a seeded Gaussian draw."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    attempt = 0
    while True:
        G = stream(seed, "projection", index, attempt).standard_normal((n, k))
        Q, R = np.linalg.qr(G)
        diag = np.abs(np.diag(R))
        if diag.min() > 1e-8 * max(diag.max(), 1.0):
            # fix signs so the factorisation is unique
            Q = Q * np.sign(np.diag(R))
            return np.ascontiguousarray(Q.T)
        attempt += 1


# ---------------------------------------------------------------------------
# inscribed balls


def inscribed_radius(Y: np.ndarray, delta: float) -> tuple[float, float]:
    """Largest covered-ball radius of the delta-fattened cloud ``Y`` (m, k).

    Returns ``(fattened, deflated)``: the radius within the fattening, and
    that radius minus ``delta`` clamped at zero.
    """
    Y = np.asarray(Y, dtype=float)
    m, k = Y.shape
    if m == 0:
        return 0.0, 0.0
    h = delta / 2.0
    lo = np.floor(Y.min(axis=0) / delta) * delta - 2 * delta
    lo_idx = np.rint(lo / h).astype(np.int64)
    hi_idx = np.ceil((Y.max(axis=0) + 2 * delta) / h).astype(np.int64)
    shape = tuple(int(s) for s in hi_idx - lo_idx + 1)
    if math.prod(shape) > MAX_LATTICE_CELLS:
        raise ValueError(f"lattice of {math.prod(shape)} cells is too fine; increase delta")
    covered = np.zeros(shape, dtype=bool)

    offs = np.array(np.meshgrid(*[np.arange(-2, 4)] * k, indexing="ij")).reshape(k, -1).T
    chunk = max(1, 2_000_000 // offs.shape[0])
    for s in range(0, m, chunk):
        y = Y[s:s + chunk]
        base = np.floor(y / h).astype(np.int64)
        cand = base[:, None, :] + offs[None, :, :]
        d2 = np.sum((cand * h - y[:, None, :]) ** 2, axis=2)
        # lattice points exactly delta away must stay uncovered despite rounding
        hit = cand[d2 < delta * delta * (1 - 1e-9)] - lo_idx
        covered[tuple(hit.T)] = True

    dist = ndimage.distance_transform_edt(covered)
    # centres on the delta lattice: even absolute indices
    start = [int(i) % 2 for i in lo_idx]
    centres = dist[tuple(slice(s, None, 2) for s in start)]
    r_units = float(centres.max()) if centres.size else 0.0
    return r_units * h, max(r_units - 2.0, 0.0) * h


@dataclass
class ThinnessReport:
    k: int
    delta: float
    n_projections: int
    seed: int
    per_projection_radius: list
    fattened_radius: list
    score: float
    max_radius: float
    n_points: int

    def verdict(self, z: float) -> bool:
        """Empirically z-thin at resolution ``delta``."""
        return self.score < z

    def to_json(self) -> dict:
        return {"k": self.k, "delta": self.delta, "n_projections": self.n_projections,
                "seed": self.seed, "n_points": self.n_points,
                "per_projection_radius": list(self.per_projection_radius),
                "fattened_radius": list(self.fattened_radius),
                "score": self.score, "max_radius": self.max_radius}


def thinness_score(X, k: int, delta: float, n_projections: int = 8, seed: int = 0) -> ThinnessReport:
    """Median inscribed radius over ``n_projections`` random k-projections."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if n_projections < 1:
        raise ValueError("need at least one projection")
    P = _pts(X)
    m, d = P.shape
    if m == 0:
        zeros = [0.0] * n_projections
        return ThinnessReport(k, delta, n_projections, seed, zeros, zeros, 0.0, 0.0, 0)
    if not 1 <= k <= d:
        raise ValueError(f"need 1 <= k <= {d}")
    radii, fat = [], []
    for p in range(n_projections):
        proj = random_projection(d, k, seed, p)
        f, r = inscribed_radius(P @ proj.T, delta)
        fat.append(f)
        radii.append(r)
    return ThinnessReport(k, delta, n_projections, seed, radii, fat,
                          float(np.median(radii)), float(max(radii)), m)


# ---------------------------------------------------------------------------
# box counting


def box_dimension(X, scales: Sequence[float]) -> float:
    """Least-squares slope of log N(eps) against log(1/eps)."""
    P = _pts(X)
    scales = [float(s) for s in scales]
    if len(scales) < 2:
        raise ValueError("need at least two scales")
    if P.shape[0] == 0:
        raise ValueError("empty cloud")
    if np.unique(P, axis=0).shape[0] == 1:
        return 0.0
    counts = [np.unique(np.floor(P / eps).astype(np.int64), axis=0).shape[0] for eps in scales]
    slope = np.polyfit(np.log(1.0 / np.asarray(scales)), np.log(counts), 1)[0]
    return float(slope)


def _z_value(z_of_t, t: float):
    if z_of_t is None:
        return None
    if callable(z_of_t):
        return float(z_of_t(t))
    if hasattr(z_of_t, "evaluate_at"):
        return float(z_of_t.evaluate_at(t))
    return float(z_of_t)


def family_sweep(family: Sequence[tuple[float, object]], k: int, delta: float,
                 z_of_t: Callable | float | None = None, n_projections: int = 8,
                 seed: int = 0) -> dict:
    """Thinness of each fiber, of the stacked family, and of its t -> 0 limit.

    ``z_of_t`` may be a number, a callable, or a Puiseux germ (evaluated at t).
    """
    if not family:
        raise ValueError("empty family")
    ts = [float(t) for t, _ in family]
    if len(set(ts)) != len(ts):
        raise ValueError("fiber parameters must be distinct")
    order = np.argsort(ts, kind="stable")
    fibers = [(ts[i], _pts(family[i][1])) for i in order]
    dims = {P.shape[1] for _, P in fibers if P.shape[0]}
    if len(dims) > 1:
        raise ValueError("fibers live in different dimensions")
    d = dims.pop() if dims else k

    per_fiber = []
    for t, P in fibers:
        rep = thinness_score(P, k, delta, n_projections, seed)
        z = _z_value(z_of_t, t)
        per_fiber.append({"t": t, "report": rep.to_json(),
                          "z": z, "thin": None if z is None else rep.verdict(z)})

    stacked = np.concatenate([np.hstack([P, np.full((P.shape[0], 1), t)])
                              for t, P in fibers]) if fibers else np.zeros((0, d + 1))
    stacked_rep = thinness_score(stacked, min(k + 1, d + 1), delta, n_projections, seed)

    cut = float(np.quantile(ts, 0.25))
    near = [P for t, P in fibers if t <= cut and P.shape[0]]
    limit = {"t_cut": cut, "n_representatives": 0, "box_dimension": 0.0}
    if near:
        U = np.concatenate(near)
        keys, inv = np.unique(np.floor(U / delta).astype(np.int64), axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        reps = np.zeros((keys.shape[0], U.shape[1]))
        np.add.at(reps, inv, U)
        reps /= np.bincount(inv)[:, None]
        diam = float(np.max(np.ptp(reps, axis=0))) if reps.shape[0] > 1 else 0.0
        dim = 0.0
        if diam > 2 * delta:
            scales = np.geomspace(max(delta, diam / 64), diam / 2, 5)
            dim = box_dimension(reps, scales)
        limit.update(n_representatives=int(reps.shape[0]), box_dimension=dim)
    return {"fibers": per_fiber, "stacked": stacked_rep.to_json(), "limit": limit,
            "max_fiber_score": max(f["report"]["score"] for f in per_fiber)}
