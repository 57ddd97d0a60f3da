"""Acceptance criteria, each checked at its stated tolerance and runtime.

Run ``pytest tests/test_acceptance.py -v``; the terminal summary ends with one
PASS/FAIL line per criterion.
"""
import os
import random
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import ortho_group

from sardkit.critical import Budget, Domain, Schedule, estimate_K0, estimate_Kinf, nu_at, sard_experiment
from sardkit.expr import parse_map
from sardkit.rabier import nu, smallest_singular_oracle
from sardkit.rcf import ConvexSubgroup, PuiseuxSeries, evaluate_at, in_subgroup
from sardkit.thin import hausdorff, thinness_score

criterion = pytest.mark.criterion
XY = ["x", "y"]


def orthogonal(rng, d):
    if d == 1:
        return np.array([[rng.choice([-1.0, 1.0])]])
    return ortho_group.rvs(d, random_state=rng)


@criterion(1, "nu agrees with the closed-form oracle on 1000 matrices")
def test_nu_matches_oracle():
    rng = np.random.default_rng(1001)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        k = int(rng.integers(1, min(n, 3) + 1))
        A = rng.normal(size=(k, n)) * 10 ** rng.uniform(-3, 3)
        err = abs(nu(A) - smallest_singular_oracle(A)) / (1 + np.linalg.norm(A, 2))
        worst = max(worst, err)
    elapsed = time.perf_counter() - start
    assert worst <= 1e-9
    assert elapsed < 5.0


@criterion(2, "nu is orthogonally invariant, absolutely homogeneous, zero for k > n")
def test_nu_invariances():
    rng = np.random.default_rng(1002)
    for _ in range(500):
        n = int(rng.integers(1, 9))
        k = int(rng.integers(1, n + 1))
        A = rng.normal(size=(k, n))
        tol = 1e-8 * (1 + np.linalg.norm(A, 2))
        v = nu(A)
        assert abs(nu(orthogonal(rng, k) @ A) - v) <= tol
        assert abs(nu(A @ orthogonal(rng, n)) - v) <= tol
        c = float(rng.uniform(-10, 10))
        assert abs(nu(c * A) - abs(c) * v) <= 1e-8 * (1 + np.linalg.norm(c * A, 2))
    for _ in range(500):
        n = int(rng.integers(1, 8))
        k = int(rng.integers(n + 1, 9))
        assert nu(rng.normal(size=(k, n))) == 0.0


def _timed_k0(text, names, box):
    fmap = parse_map(text, names)
    start = time.perf_counter()
    est = estimate_K0(fmap, Domain(box, (), tuple(names)), 1e-6, Budget(samples=4096))
    elapsed = time.perf_counter() - start
    assert est.violations(fmap) == 0
    assert elapsed < 30.0
    return sorted(c["center"][0] for c in est.clusters)


@criterion(3, "critical values of the polynomial fixtures")
def test_k0_fixtures():
    assert _timed_k0("x^2 + y^2", XY, ((-2, 2), (-2, 2))) == pytest.approx([0.0], abs=1e-3)
    assert _timed_k0("x^3 - 3*x", ["x"], ((-2, 2),)) == pytest.approx([-2.0, 2.0], abs=1e-3)
    assert _timed_k0("x + x^2*y", XY, ((-2, 2), (-2, 2))) == []


@criterion(4, "asymptotic critical values at infinity of the fixtures")
def test_kinf_fixture():
    sched = Schedule((10, 100, 1000, 10000), i=2)
    start = time.perf_counter()
    f = parse_map("x + x^2*y", XY)
    est = estimate_Kinf(f, sched)
    assert len(est.clusters) == 1
    assert abs(est.clusters[0]["center"][0]) <= 1e-2
    assert est.violations(f) == 0
    assert estimate_Kinf(parse_map("x^2 + y^2", XY), sched).clusters == []
    assert time.perf_counter() - start < 120.0


@criterion(5, "thinness of f(c_z) shrinks along the z schedule")
def test_sard_trend():
    delta = 5e-3
    rep = sard_experiment(parse_map("x^2 + y^2", XY), Domain(((-2, 2), (-2, 2)), (), tuple(XY)),
                          [0.5, 0.25, 0.125], Budget(), delta=delta)
    for row in rep["per_z"]:
        z = row["z"]
        assert row["n_points"] > 0
        assert row["report"]["score"] <= z * z / 4 + 2 * delta
    scores = rep["scores"]
    assert all(b < a for a, b in zip(scores, scores[1:]))


@criterion(6, "thinness fixtures and neighbourhood bounds")
def test_thinness_fixtures():
    delta = 0.02
    rng = np.random.default_rng(1006)
    seg = np.column_stack([rng.uniform(0, 1, 200), np.zeros(200)])
    assert thinness_score(seg, 2, delta).score <= 2 * delta

    g = np.arange(0, 1.005, 0.01)
    square = np.array(np.meshgrid(g, g)).reshape(2, -1).T
    assert thinness_score(square, 2, delta).score >= 0.4

    grid = np.array(np.meshgrid(np.arange(-0.5, 1.5, 0.01), np.arange(-0.5, 0.5, 0.01))).reshape(2, -1).T
    dist = np.sqrt(((grid[:, None, :] - seg[None, :, :]) ** 2).sum(axis=2)).min(axis=1)
    for z in (0.05, 0.1, 0.2):
        assert thinness_score(grid[dist < z], 2, delta).score <= 4 * z + 2 * delta

    # clouds within Hausdorff distance h of a segment (a line in the plane)
    for h in (0.01, 0.03, 0.08):
        noise = rng.normal(size=seg.shape)
        noise *= (h * rng.uniform(0, 1, len(seg)) / np.linalg.norm(noise, axis=1))[:, None]
        X = seg + noise
        hd = hausdorff(X, seg)
        assert thinness_score(X, 2, delta).score <= 2 * hd + 2 * delta


def _loop_hausdorff(A, B):
    def directed(P, Q):
        return max(min(float(np.sqrt(sum((p - q) ** 2 for p, q in zip(a, b)))) for b in Q) for a in P)
    return max(directed(A.tolist(), B.tolist()), directed(B.tolist(), A.tolist()))


@criterion(7, "Hausdorff distance is a metric and matches a double loop")
def test_hausdorff_properties():
    rng = np.random.default_rng(1007)
    for _ in range(200):
        d = int(rng.integers(1, 4))
        A, B, C = (rng.normal(size=(int(rng.integers(1, 40)), d)) for _ in range(3))
        assert hausdorff(A, A) == 0.0
        assert hausdorff(A, B) == hausdorff(B, A)
        assert hausdorff(A, C) <= hausdorff(A, B) + hausdorff(B, C) + 1e-12
    for _ in range(50):
        d = int(rng.integers(1, 4))
        A = rng.uniform(-3, 3, (int(rng.integers(1, 51)), d))
        B = rng.uniform(-3, 3, (int(rng.integers(1, 51)), d))
        assert abs(hausdorff(A, B) - _loop_hausdorff(A, B)) <= 1e-12 * (1 + hausdorff(A, B))


def _random_series(rnd, trunc=8):
    terms = []
    for _ in range(rnd.randint(0, 4)):
        q = Fraction(rnd.randint(-8, 16), rnd.randint(1, 4))
        c = Fraction(rnd.randint(-30, 30), rnd.randint(1, 6))
        if c:
            terms.append((q, c))
    return PuiseuxSeries(terms, trunc)


@criterion(8, "Puiseux series form an ordered field up to truncation")
def test_puiseux_field():
    rnd = random.Random(1008)
    for _ in range(500):
        a, b, c = (_random_series(rnd) for _ in range(3))
        if a < b and b < c:
            assert a < c
        if a < b:
            assert a + c < b + c
        if a < b and c > 0:
            ac, bc = a * c, b * c
            shared = min(ac.trunc_order, bc.trunc_order)
            assert (bc - ac).truncate(shared).sign() >= 0
        if not a.is_zero():
            bound = a.trunc_order - 2 * abs(a.valuation())
            assert all(q >= bound for q, _ in (a * a.inv() - 1).terms)
        s, _ = a.compare_detail(b)
        if s != 0:
            lo, hi = (a, b) if s < 0 else (b, a)
            gap = hi - lo
            lead = abs(float(gap.leading_coefficient()))
            v = gap.valuation()
            for t in (1e-2, 1e-4, 1e-6):
                tail = sum(abs(float(cf)) * t ** float(q - v) for q, cf in gap.terms[1:])
                size = max(abs(evaluate_at(lo, t)), abs(evaluate_at(hi, t)))
                resolvable = lead * t ** float(v) > 1e-12 * size
                if tail < lead / 2 and resolvable:
                    assert evaluate_at(lo, t) < evaluate_at(hi, t)
    T = PuiseuxSeries.T()
    v = ConvexSubgroup(2, "val_gt")
    assert in_subgroup(T**3, v)
    assert not in_subgroup(T**2, v)


@criterion(9, "rescaling identity for g_t(x) = f(x/t)")
def test_rescaling_identity():
    rng = np.random.default_rng(1009)
    names = ["x", "y", "z"]
    for _ in range(100):
        n = int(rng.integers(1, 4))
        k = int(rng.integers(1, n + 1))
        comps = []
        for _ in range(k):
            terms = [f"{int(rng.integers(-5, 6)) or 1}*"
                     + "*".join(f"{v}^{int(rng.integers(0, 4))}" for v in names[:n])
                     for _ in range(3)]
            comps.append(" + ".join(terms))
        f = parse_map("; ".join(comps), names[:n])
        t = float(10 ** rng.uniform(-3, 0))
        x = rng.uniform(-1, 1, n) * t
        lhs = nu_at(f.rescaled(t), x)
        rhs = nu_at(f, x / t) / t
        assert abs(lhs - rhs) <= 1e-9 * max(abs(rhs), 1e-300)


@criterion(10, "two kinf runs with identical flags give byte-identical JSON")
def test_kinf_determinism(tmp_path):
    (tmp_path / "f.json").write_text('{"vars": ["x", "y"], "components": ["x + x^2*y"]}')
    argv = [sys.executable, "-m", "sardkit", "kinf", "--map", "f.json", "--seed", "7",
            "--out", "report.json", "--cloud-out", "witnesses.csv"]
    outputs = []
    for _ in range(2):
        subprocess.run(argv, cwd=tmp_path, check=True, env={**os.environ, "PYTHONHASHSEED": "random"})
        outputs.append(((tmp_path / "report.json").read_bytes(),
                        (tmp_path / "witnesses.csv").read_bytes()))
    assert outputs[0] == outputs[1]
    assert len(outputs[0][0]) > 0
