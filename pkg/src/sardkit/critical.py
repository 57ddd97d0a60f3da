"""z-critical points and sampled estimates of generalized critical values.

All estimators are sound but not complete: each reported witness is
re-checked against its defining inequality, but sampling can miss thin
critical regions.

* ``find_z_critical``: points with ``nu(d_x f) < z`` in a bounded domain.
* ``estimate_K0``: values at (numerically) singular points.
* ``estimate_Kinf``: values along spheres ``|x| = l`` with
  ``nu(d_x f) <= l^-(1 + 1/i)``; with ``t = 1/l`` and ``g_t(y) = f(y/t)``
  this is ``nu(d_y g_t) <= t^(1/i)`` on the unit sphere.
* ``estimate_K1``: values in shells ``t/2 < d(x, fr X) < 2t`` with
  ``nu(d_x f) <= t^(1/i)``.

Asymptotic estimates keep a value cluster only when every scale in the last
half of the schedule contributes to it.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from . import rabier
from .expr import DimensionError, Expression, PolynomialMap, parse_expression
from .simplex import nelder_mead
from .streams import stream
from .thin import PointCloud, thinness_score

log = logging.getLogger(__name__)

CLUSTER_REL = 0.05
CLUSTER_FLOOR = 1e-6
GRAD_CLAMP = 1e-8
# polishing stops once nu falls this far below the threshold
POLISH_TARGET = 1e-3
# restarts continue only while they gain this relative improvement
RESTART_GAIN = 1e-6


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class Budget:
    samples: int = 4096
    n_starts: int = 32
    max_iter: int = 200
    max_restarts: int = 20
    batch_size: int = 1024
    max_witnesses: int = 16

    def __post_init__(self):
        for name in ("samples", "n_starts", "max_iter", "batch_size", "max_witnesses"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.max_restarts < 0:
            raise ValueError("max_restarts must be non-negative")


@dataclass(frozen=True)
class Schedule:
    scales: tuple
    i: int = 2
    samples_per_scale: int = 4096
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scales", tuple(float(s) for s in self.scales))
        if not self.scales:
            raise ValueError("empty schedule")
        if any(not s > 0 for s in self.scales):
            raise ValueError("scales must be positive")
        if self.i < 1 or self.samples_per_scale < 1:
            raise ValueError("i and samples_per_scale must be positive")

    def increasing(self) -> bool:
        return all(a < b for a, b in zip(self.scales, self.scales[1:]))

    def decreasing(self) -> bool:
        return all(a > b for a, b in zip(self.scales, self.scales[1:]))


@dataclass(frozen=True)
class Domain:
    """Open set ``box ∩ {g_j > 0 for all j}``."""

    box: tuple
    constraints: tuple = ()
    vars: tuple = ()

    def __post_init__(self):
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        if not box:
            raise ValueError("empty box")
        for lo, hi in box:
            if not lo < hi:
                raise ValueError(f"degenerate interval [{lo}, {hi}]")
        object.__setattr__(self, "box", box)

    @classmethod
    def from_json(cls, obj: dict, vars: Sequence[str]) -> "Domain":
        cons = tuple(parse_expression(c, vars) for c in obj.get("constraints", []))
        return cls(tuple(obj["box"]), cons, tuple(vars))

    @property
    def n(self) -> int:
        return len(self.box)

    @property
    def lo(self) -> np.ndarray:
        return np.array([b[0] for b in self.box])

    @property
    def hi(self) -> np.ndarray:
        return np.array([b[1] for b in self.box])

    def constraint_map(self) -> PolynomialMap | None:
        return self._constraint_map

    @cached_property
    def _constraint_map(self) -> PolynomialMap | None:
        if not self.constraints:
            return None
        vars = self.vars or tuple(f"x{j + 1}" for j in range(self.n))
        return PolynomialMap(vars, self.constraints)

    def contains(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        ok = np.all((X > self.lo) & (X < self.hi), axis=1)
        g = self.constraint_map()
        if g is not None and X.shape[0]:
            ok &= np.all(g.values(X) > 0, axis=1)
        return ok

    def frontier_distance(self, X: np.ndarray) -> np.ndarray:
        """First-order proxy ``min_j |g_j| / |grad g_j|`` (exact for affine g_j)."""
        g = self.constraint_map()
        if g is None:
            raise ValueError("domain has no constraints")
        vals = g.values(X)
        grads = np.linalg.norm(g.jacobians(X), axis=2)
        return np.min(np.abs(vals) / np.maximum(grads, GRAD_CLAMP), axis=1)

    def to_json(self) -> dict:
        from .expr import to_text
        return {"box": [list(b) for b in self.box],
                "constraints": [to_text(c, self.vars or None) for c in self.constraints]}


# ---------------------------------------------------------------------------
# nu along a map


def nu_points(fmap: PolynomialMap, X: np.ndarray) -> np.ndarray:
    """nu(d_x f) for each row of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        return np.zeros(0)
    return rabier.nu_batch(fmap.jacobians(X))


def nu_at(fmap: PolynomialMap, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != fmap.n:
        raise DimensionError(f"point has length {x.size}, map expects {fmap.n}")
    return float(nu_points(fmap, x[None])[0])


def kos_weight(fmap: PolynomialMap, x) -> float:
    """``(1 + |x|) nu(d_x f)``."""
    return (1.0 + float(np.linalg.norm(x))) * nu_at(fmap, x)


# ---------------------------------------------------------------------------
# clustering and reports


def cluster_labels(values: np.ndarray, eps: float) -> np.ndarray:
    """Single-linkage clusters at distance ``eps``, labelled by first occurrence."""
    m, k = values.shape
    if m == 0:
        return np.zeros(0, dtype=int)
    # points sharing a cell of diagonal eps are linked outright; neighbouring
    # cells are linked when their closest pair is within eps
    cells = np.floor(values / (eps / math.sqrt(k))).astype(np.int64)
    keys, inv = np.unique(cells, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    members = [[] for _ in range(keys.shape[0])]
    for idx, c in enumerate(inv):
        members[c].append(idx)
    lookup = {tuple(key): c for c, key in enumerate(keys.tolist())}
    reach = math.ceil(math.sqrt(k))
    offsets = [o for o in itertools.product(range(-reach, reach + 1), repeat=k)
               if o > (0,) * k]
    trees: dict = {}
    rows, cols = [], []
    for a, key in enumerate(keys.tolist()):
        pa = values[members[a]]
        for o in offsets:
            b = lookup.get(tuple(x + y for x, y in zip(key, o)))
            if b is None:
                continue
            if b not in trees:
                trees[b] = cKDTree(values[members[b]])
            d, _ = trees[b].query(pa, k=1, distance_upper_bound=eps * (1 + 1e-12))
            if np.min(d) <= eps:
                rows.append(a)
                cols.append(b)
    C = keys.shape[0]
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(C, C))
    _, comp = connected_components(graph, directed=False)
    raw = comp[inv]
    first = {}
    labels = np.empty(m, dtype=int)
    for idx, r in enumerate(raw):
        labels[idx] = first.setdefault(r, len(first))
    return labels


def default_eps(values: np.ndarray) -> float:
    if values.shape[0] < 2:
        return CLUSTER_FLOOR
    diam = float(np.linalg.norm(np.ptp(values, axis=0)))
    return max(CLUSTER_REL * diam, CLUSTER_FLOOR)


@dataclass
class Witnesses:
    """Flat witness table: points, values, nu, scale index, scale, threshold."""

    x: np.ndarray
    value: np.ndarray
    nu: np.ndarray
    scale_index: np.ndarray
    scale: np.ndarray
    threshold: np.ndarray

    @classmethod
    def empty(cls, n: int, k: int) -> "Witnesses":
        return cls(np.zeros((0, n)), np.zeros((0, k)), np.zeros(0), np.zeros(0, dtype=int),
                   np.zeros(0), np.zeros(0))

    @classmethod
    def concat(cls, parts: list, n: int, k: int) -> "Witnesses":
        parts = [p for p in parts if p.x.shape[0]]
        if not parts:
            return cls.empty(n, k)
        return cls(*[np.concatenate([getattr(p, f) for p in parts])
                     for f in ("x", "value", "nu", "scale_index", "scale", "threshold")])

    def __len__(self):
        return self.x.shape[0]

    def take(self, idx) -> "Witnesses":
        return Witnesses(self.x[idx], self.value[idx], self.nu[idx], self.scale_index[idx],
                         self.scale[idx], self.threshold[idx])

    def canonical(self) -> "Witnesses":
        """Deduplicated by point and sorted lexicographically (order-independent output)."""
        if not len(self):
            return self
        key = np.column_stack([self.scale_index, self.x])
        _, idx = np.unique(key, axis=0, return_index=True)
        return self.take(idx)


@dataclass
class CriticalValueEstimate:
    kind: str
    clusters: list
    parameters: dict
    witnesses: Witnesses
    diagnostics: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"kind": self.kind, "clusters": self.clusters, "parameters": self.parameters,
                "n_witnesses": len(self.witnesses), "diagnostics": self.diagnostics}

    def violations(self, fmap: PolynomialMap) -> int:
        """Re-evaluate every witness; count those breaking ``nu <= threshold``."""
        if not len(self.witnesses):
            return 0
        nu = nu_points(fmap, self.witnesses.x)
        return int(np.sum(~(nu <= self.witnesses.threshold)))


def _witness_json(w: Witnesses, j: int) -> dict:
    return {"x": w.x[j].tolist(), "value": w.value[j].tolist(), "nu": float(w.nu[j]),
            "scale": float(w.scale[j])}


def _build_clusters(w: Witnesses, eps: float, n_scales: int, persistent_from: int | None,
                    max_witnesses: int) -> list:
    labels = cluster_labels(w.value, eps)
    out = []
    for lab in range(labels.max() + 1 if labels.size else 0):
        members = np.flatnonzero(labels == lab)
        scales_hit = set(w.scale_index[members].tolist())
        if persistent_from is not None:
            if not set(range(persistent_from, n_scales)) <= scales_hit:
                continue
            top = members[w.scale_index[members] == max(scales_hit)]
        else:
            top = members
        center = w.value[top].mean(axis=0)
        radius = float(np.max(np.linalg.norm(w.value[members] - center, axis=1)))
        best = members[np.lexsort((members, w.nu[members]))][:max_witnesses]
        out.append({"center": center.tolist(), "radius": radius, "support": int(members.size),
                    "scales": sorted(int(s) for s in scales_hit),
                    "witnesses": [_witness_json(w, j) for j in best]})
    return out


# ---------------------------------------------------------------------------
# z-critical points


def _check_dims(fmap: PolynomialMap, domain: Domain | None = None):
    if fmap.k > fmap.n:
        raise ValueError(f"need k <= n, got k={fmap.k}, n={fmap.n}")
    if domain is not None and domain.n != fmap.n:
        raise DimensionError("domain and map dimensions differ")


def _box_samples(domain: Domain, samples: int, rng: np.random.Generator) -> np.ndarray:
    n = domain.n
    lo, hi = domain.lo, domain.hi
    per_axis = max(1, int((samples / 2) ** (1.0 / n)))
    axes = [lo[j] + (np.arange(per_axis) + 0.5) * (hi[j] - lo[j]) / per_axis for j in range(n)]
    grid = np.array(np.meshgrid(*axes, indexing="ij")).reshape(n, -1).T
    rand = lo + rng.random((max(samples - grid.shape[0], 0), n)) * (hi - lo)
    return np.vstack([grid, rand])


class _Collector:
    """Keeps every evaluated point whose nu passes the threshold."""

    def __init__(self, threshold: float, strict: bool):
        self.threshold = threshold
        self.strict = strict
        self.points: list = []

    def passes(self, val: float) -> bool:
        return val < self.threshold if self.strict else val <= self.threshold

    def __call__(self, x, val):
        if self.passes(val):
            self.points.append(np.array(x, dtype=float))


def _improved(new: float, best: float) -> bool:
    return new < best * (1.0 - RESTART_GAIN) if math.isfinite(best) else new < best


def _polish_in_domain(fmap, domain, starts, step, budget, collector, target=0.0):
    def obj(x):
        if not domain.contains(x[None])[0]:
            return math.inf
        return nu_points(fmap, x[None])[0]

    for x0 in starts:
        x = x0
        best = math.inf
        s = step
        for _ in range(budget.max_restarts + 1):
            res = nelder_mead(obj, x, s, max_iter=budget.max_iter, visit=collector)
            if not _improved(res.fun, best):
                break
            s = np.maximum(np.abs(res.x - x), 1e-3 * np.abs(s))
            best, x = res.fun, res.x
            if best <= target:
                break


def _z_critical(fmap, domain, z, budget, seed, strict=True, label="z_critical"):
    _check_dims(fmap, domain)
    rng = stream(seed, label, 0, 0)
    X = _box_samples(domain, budget.samples, rng)
    X = X[domain.contains(X)]
    if X.shape[0] == 0:
        raise ValueError("domain is empty at the sampling resolution")
    nu = np.concatenate([nu_points(fmap, X[s:s + budget.batch_size])
                         for s in range(0, X.shape[0], budget.batch_size)])
    collector = _Collector(z, strict)
    keep = nu < z if strict else nu <= z
    order = np.lexsort((np.arange(nu.size), nu))
    starts = X[order[:budget.n_starts]]
    width = domain.hi - domain.lo
    step = width / max(2.0, (budget.samples / 2) ** (1.0 / domain.n))
    _polish_in_domain(fmap, domain, starts, step, budget, collector, target=POLISH_TARGET * z)
    found = [X[keep]]
    if collector.points:
        found.append(np.array(collector.points))
    P = np.vstack(found)
    if P.shape[0]:
        P = np.unique(P, axis=0)
        P = P[domain.contains(P)]
    Pnu = nu_points(fmap, P)
    ok = Pnu < z if strict else Pnu <= z
    return P[ok], Pnu[ok]


def find_z_critical(fmap: PolynomialMap, domain: Domain, z: float,
                    budget: Budget = Budget(), seed: int = 0) -> PointCloud:
    """Sample of ``c_z(f) = {x in X : nu(d_x f) < z}``."""
    if not z > 0:
        raise ValueError("z must be positive")
    P, _ = _z_critical(fmap, domain, z, budget, seed)
    return PointCloud(P, {"operation": "find_z_critical", "z": z, "seed": seed,
                          "budget": asdict(budget)})


def estimate_K0(fmap: PolynomialMap, domain: Domain, tol: float = 1e-6,
                budget: Budget = Budget(), seed: int = 0,
                eps_cluster: float | None = None) -> CriticalValueEstimate:
    """Clusters of f at points with ``nu(d_x f) <= tol``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    P, nu = _z_critical(fmap, domain, tol, budget, seed, strict=False, label="k0")
    m = P.shape[0]
    w = Witnesses(P, fmap.values(P) if m else np.zeros((0, fmap.k)), nu,
                  np.zeros(m, dtype=int), np.full(m, tol), np.full(m, tol)).canonical()
    eps = eps_cluster if eps_cluster is not None else default_eps(w.value)
    params = {"tol": tol, "seed": seed, "budget": asdict(budget), "eps_cluster": eps,
              "domain": domain.to_json()}
    return CriticalValueEstimate("K0", _build_clusters(w, eps, 1, None, budget.max_witnesses),
                                 params, w)


# ---------------------------------------------------------------------------
# asymptotic values at infinity


def _tangent_basis(p: np.ndarray) -> np.ndarray:
    n = p.size
    Q, _ = np.linalg.qr(np.column_stack([p, np.eye(n)]))
    return Q[:, 1:n]


def _polish_on_sphere(fmap, l, p0, step, budget, collector):
    p = p0 / np.linalg.norm(p0)
    best = math.inf
    s = step
    for _ in range(budget.max_restarts + 1):
        B = _tangent_basis(p)

        def point(u, p=p, B=B):
            q = p + B @ u
            return l * q / np.linalg.norm(q)

        def obj(u):
            return nu_points(fmap, point(u)[None])[0]

        def visit(u, val):
            collector(point(u), val)

        res = nelder_mead(obj, np.zeros(p.size - 1), s, max_iter=budget.max_iter, visit=visit)
        if not _improved(res.fun, best):
            break
        s = max(float(np.linalg.norm(res.x)), 1e-3 * s)
        best = res.fun
        p = point(res.x) / l
        if best == 0.0:
            break


def _persistent_from(n_scales: int) -> int:
    return n_scales // 2


def estimate_Kinf(fmap: PolynomialMap, schedule: Schedule, budget: Budget = Budget(),
                  eps_cluster: float | None = None) -> CriticalValueEstimate:
    """Persistent value clusters along spheres of increasing radius."""
    _check_dims(fmap)
    if not schedule.increasing():
        raise ValueError("K_inf radii must be strictly increasing")
    n = fmap.n
    parts, diags = [], []
    for si, l in enumerate(schedule.scales):
        thr = l ** -(1.0 + 1.0 / schedule.i)
        collector = _Collector(thr, strict=False)
        if n == 1:
            X = np.array([[-l], [l]])
        else:
            chunks = []
            for b, s in enumerate(range(0, schedule.samples_per_scale, budget.batch_size)):
                size = min(budget.batch_size, schedule.samples_per_scale - s)
                G = stream(schedule.seed, "kinf", si, b).standard_normal((size, n))
                chunks.append(G / np.linalg.norm(G, axis=1, keepdims=True))
            X = l * np.vstack(chunks)
        nu = nu_points(fmap, X)
        for x, v in zip(X, nu):
            collector(x, v)
        if n > 1:
            order = np.lexsort((np.arange(nu.size), nu))
            step = 2 * math.pi / schedule.samples_per_scale ** (1.0 / (n - 1))
            for x0 in X[order[:budget.n_starts]]:
                _polish_on_sphere(fmap, l, x0 / l, step, budget, collector)
        P = np.array(collector.points).reshape(-1, n)
        Pnu = nu_points(fmap, P)
        P, Pnu = P[Pnu <= thr], Pnu[Pnu <= thr]
        m = P.shape[0]
        parts.append(Witnesses(P, fmap.values(P) if m else np.zeros((0, fmap.k)), Pnu,
                               np.full(m, si), np.full(m, l), np.full(m, thr)))
        diags.append({"scale": l, "threshold": thr, "samples": int(X.shape[0]), "retained": m,
                      "min_nu": float(nu.min()) if nu.size else None,
                      "min_scaled_nu": float(l * nu.min()) if nu.size else None})
    w = Witnesses.concat(parts, n, fmap.k).canonical()
    eps = eps_cluster if eps_cluster is not None else default_eps(w.value)
    params = {"schedule": asdict(schedule), "budget": asdict(budget), "eps_cluster": eps,
              "persistent_from_scale_index": _persistent_from(len(schedule.scales))}
    clusters = _build_clusters(w, eps, len(schedule.scales),
                               _persistent_from(len(schedule.scales)), budget.max_witnesses)
    return CriticalValueEstimate("Kinf", clusters, params, w, diags)


# ---------------------------------------------------------------------------
# asymptotic values at the frontier


def _shell_samples(domain: Domain, t: float, size: int, rng: np.random.Generator) -> np.ndarray:
    g = domain.constraint_map()
    lo, hi = domain.lo, domain.hi
    X = lo + rng.random((size, domain.n)) * (hi - lo)
    target = rng.uniform(0.5 * t, 2.0 * t, size)
    vals = g.values(X)
    J = g.jacobians(X)
    norms = np.maximum(np.linalg.norm(J, axis=2), GRAD_CLAMP)
    j = np.argmin(np.abs(vals) / norms, axis=1)
    rows = np.arange(size)
    for _ in range(6):
        vals = g.values(X)[rows, j]
        grad = g.jacobians(X)[rows, j, :]
        gn2 = np.maximum(np.sum(grad * grad, axis=1), GRAD_CLAMP ** 2)
        # Newton step towards g_j = target * |grad g_j|, on the feasible side
        X = X - ((vals - target * np.sqrt(gn2)) / gn2)[:, None] * grad
        X = np.clip(X, lo, hi)
    return X


def estimate_K1(fmap: PolynomialMap, domain: Domain, schedule: Schedule,
                budget: Budget = Budget(), eps_cluster: float | None = None
                ) -> CriticalValueEstimate:
    """Persistent value clusters in shells approaching the frontier of the domain."""
    _check_dims(fmap, domain)
    if not domain.constraints:
        raise ValueError("K_1 needs a domain with at least one constraint")
    if not schedule.decreasing():
        raise ValueError("K_1 shell widths must be strictly decreasing")
    n = fmap.n
    parts, diags, skipped = [], [], []
    for si, t in enumerate(schedule.scales):
        thr = t ** (1.0 / schedule.i)
        chunks = []
        for b, s in enumerate(range(0, schedule.samples_per_scale, budget.batch_size)):
            size = min(budget.batch_size, schedule.samples_per_scale - s)
            chunks.append(_shell_samples(domain, t, size, stream(schedule.seed, "k1", si, b)))
        X = np.vstack(chunks)

        def in_shell(Y, t=t):
            ok = domain.contains(Y)
            if np.any(ok):
                d = domain.frontier_distance(Y[ok])
                ok[ok] = (d > 0.5 * t) & (d < 2.0 * t)
            return ok

        X = X[in_shell(X)]
        if X.shape[0] == 0:
            log.warning("K1 shell at t=%g is empty; scale skipped", t)
            skipped.append(t)
            diags.append({"scale": t, "threshold": thr, "samples": 0, "retained": 0,
                          "skipped": True})
            parts.append(Witnesses.empty(n, fmap.k))
            continue
        nu = nu_points(fmap, X)
        collector = _Collector(thr, strict=False)
        for x, v in zip(X, nu):
            collector(x, v)

        def obj(x, in_shell=in_shell):
            if not in_shell(x[None])[0]:
                return math.inf
            return nu_points(fmap, x[None])[0]

        order = np.lexsort((np.arange(nu.size), nu))
        for x0 in X[order[:budget.n_starts]]:
            x, best, s = x0, math.inf, np.full(n, t / 4)
            for _ in range(budget.max_restarts + 1):
                res = nelder_mead(obj, x, s, max_iter=budget.max_iter, visit=collector)
                if not _improved(res.fun, best):
                    break
                s = np.maximum(np.abs(res.x - x), 1e-3 * s)
                best, x = res.fun, res.x
                if best == 0.0:
                    break
        P = np.array(collector.points).reshape(-1, n)
        if P.shape[0]:
            P = P[in_shell(P)]
        Pnu = nu_points(fmap, P)
        P, Pnu = P[Pnu <= thr], Pnu[Pnu <= thr]
        m = P.shape[0]
        parts.append(Witnesses(P, fmap.values(P) if m else np.zeros((0, fmap.k)), Pnu,
                               np.full(m, si), np.full(m, t), np.full(m, thr)))
        diags.append({"scale": t, "threshold": thr, "samples": int(X.shape[0]), "retained": m,
                      "min_nu": float(nu.min()), "skipped": False})
    w = Witnesses.concat(parts, n, fmap.k).canonical()
    eps = eps_cluster if eps_cluster is not None else default_eps(w.value)
    params = {"schedule": asdict(schedule), "budget": asdict(budget), "eps_cluster": eps,
              "persistent_from_scale_index": _persistent_from(len(schedule.scales)),
              "domain": domain.to_json(), "skipped_scales": skipped}
    clusters = _build_clusters(w, eps, len(schedule.scales),
                               _persistent_from(len(schedule.scales)), budget.max_witnesses)
    return CriticalValueEstimate("K1", clusters, params, w, diags)


# ---------------------------------------------------------------------------
# Sard experiment


def sard_experiment(fmap: PolynomialMap, domain: Domain, z_schedule: Sequence[float],
                    budget: Budget = Budget(), seed: int = 0, delta: float = 5e-3,
                    n_projections: int = 8) -> dict:
    """Thinness of ``f(c_z(f))`` along a decreasing schedule of z."""
    zs = [float(z) for z in z_schedule]
    if not zs or any(not z > 0 for z in zs):
        raise ValueError("z schedule must be non-empty and positive")
    if any(a <= b for a, b in zip(zs, zs[1:])):
        raise ValueError("z schedule must be strictly decreasing")
    _check_dims(fmap, domain)
    rows = []
    clouds = []
    for zi, z in enumerate(zs):
        P, nu = _z_critical(fmap, domain, z, budget, seed)
        V = fmap.values(P) if P.shape[0] else np.zeros((0, fmap.k))
        rep = thinness_score(V, fmap.k, delta, n_projections, seed)
        rows.append({"z": z, "n_points": int(P.shape[0]), "report": rep.to_json(),
                     "value_min": V.min(axis=0).tolist() if V.size else None,
                     "value_max": V.max(axis=0).tolist() if V.size else None})
        clouds.append((z, P, V, nu))
    scores = [r["report"]["score"] for r in rows]
    monotone = all(b <= a + delta for a, b in zip(scores, scores[1:]))
    strictly = all(b < a for a, b in zip(scores, scores[1:]))
    return {"z_schedule": zs, "delta": delta, "n_projections": n_projections, "seed": seed,
            "budget": asdict(budget), "domain": domain.to_json(), "per_z": rows,
            "scores": scores, "non_increasing": monotone, "strictly_decreasing": strictly,
            "_clouds": clouds}
