"""Rabier's distance-to-singularity of a k x n matrix.

``nu(A) = min_{|phi|=1} |A^T phi|``, the smallest singular value in the
surjectivity sense.  It is zero whenever ``k > n``.  The value is taken from
the smallest eigenvalue of the Gram matrix ``A A^T`` (cyclic Jacobi), so
near ``nu = 0`` only about half of the float digits survive; every caller in
this package compares ``nu`` against thresholds of at least ``1e-6``.
"""
from __future__ import annotations

import math

import numpy as np

JACOBI_REL_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100


class CharacterizationsDiverge(ValueError):
    """Kernel form requested on a rank-deficient matrix, where it disagrees with ``nu``."""


def _as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[None, :]
    if A.ndim < 2 or A.shape[-1] < 1 or A.shape[-2] < 1:
        raise ValueError("expected a k x n matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def jacobi_eigvalsh(G: np.ndarray) -> np.ndarray:
    """Eigenvalues of symmetric matrices by cyclic Jacobi rotations.

    ``G`` has shape (..., k, k); all matrices in the batch are rotated in
    lock-step.  Sweeps stop once the off-diagonal Frobenius norm is below
    ``1e-14 * trace`` for every matrix (or after 100 sweeps).
    """
    G = np.array(G, dtype=float, copy=True)
    batch_shape = G.shape[:-2]
    k = G.shape[-1]
    G = G.reshape((-1, k, k))
    if k == 1:
        return G[:, 0, 0].reshape(batch_shape + (1,))
    scale = np.abs(np.trace(G, axis1=1, axis2=2))
    thresh = JACOBI_REL_TOL * np.where(scale > 0, scale, 1.0)
    iu = np.triu_indices(k, 1)
    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.sqrt(2.0 * np.sum(G[:, iu[0], iu[1]] ** 2, axis=1))
        if np.all((off <= thresh) | (off == 0)):
            break
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = G[:, p, q]
                active = apq != 0
                if not np.any(active):
                    continue
                app, aqq = G[:, p, p], G[:, q, q]
                theta = np.where(active, (aqq - app) / (2.0 * np.where(active, apq, 1.0)), 0.0)
                t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
                t = np.where(theta == 0, 1.0, t)
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # G <- J^T G J with J the (p, q) rotation
                gp = G[:, :, p].copy()
                gq = G[:, :, q].copy()
                G[:, :, p] = c[:, None] * gp - s[:, None] * gq
                G[:, :, q] = s[:, None] * gp + c[:, None] * gq
                rp = G[:, p, :].copy()
                rq = G[:, q, :].copy()
                G[:, p, :] = c[:, None] * rp - s[:, None] * rq
                G[:, q, :] = s[:, None] * rp + c[:, None] * rq
                G[:, p, q] = 0.0
                G[:, q, p] = 0.0
    return np.diagonal(G, axis1=1, axis2=2).reshape(batch_shape + (k,))


def nu(A) -> float:
    """Rabier function of a single k x n matrix."""
    A = _as_matrix(A)
    if A.ndim != 2:
        raise ValueError("nu expects one matrix; use nu_batch for stacks")
    return float(nu_batch(A[None])[0])


def nu_batch(A: np.ndarray) -> np.ndarray:
    """Rabier function of a stack of matrices, shape (m, k, n) -> (m,)."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 3:
        raise ValueError("expected shape (m, k, n)")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    m, k, n = A.shape
    if k > n:
        return np.zeros(m)
    if k == 1:
        return np.sqrt(np.sum(A[:, 0, :] ** 2, axis=1))
    gram = A @ np.swapaxes(A, 1, 2)
    lam = jacobi_eigvalsh(gram).min(axis=1)
    return np.sqrt(np.maximum(lam, 0.0))


def nu_kernel(A) -> float:
    """Kernel form: min |Av| over unit v orthogonal to ker A.

    Only defined here for full row rank (rank decided at ``1e-10 * |A|``);
    on rank-deficient input it would return the smallest *nonzero* singular
    value, which is not ``nu``.
    """
    A = _as_matrix(A)
    k, n = A.shape
    if n < k:
        raise CharacterizationsDiverge(f"kernel form needs n >= k, got {k} x {n}")
    norm = np.linalg.norm(A, 2)
    sv = np.linalg.svd(A, compute_uv=False)
    rank = int(np.sum(sv > 1e-10 * norm)) if norm > 0 else 0
    if rank < k:
        raise CharacterizationsDiverge(f"rank {rank} < k = {k}: kernel and dual forms differ")
    # orthonormal basis of the row space = (ker A)^perp
    Q, _ = np.linalg.qr(A.T)
    return float(np.linalg.svd(A @ Q, compute_uv=False).min())


def smallest_singular_oracle(A) -> float:
    """Closed-form nu for k <= 3 via the characteristic polynomial of A A^T.

    Independent of the Jacobi path; meant for tests.
    """
    A = _as_matrix(A)
    k, n = A.shape
    if k > n:
        if n > 3:
            raise ValueError("oracle limited to k <= 3 or n <= 3")
        return 0.0
    if k > 3:
        raise ValueError("oracle limited to k <= 3 or n <= 3")
    G = (A @ A.T).tolist()
    if k == 1:
        lam = G[0][0]
    elif k == 2:
        a, b, d = G[0][0], G[0][1], G[1][1]
        mean = 0.5 * (a + d)
        rad = math.hypot(0.5 * (a - d), b)
        # product / larger root avoids cancellation in mean - rad
        big = mean + rad
        lam = (a * d - b * b) / big if big > 0 else 0.0
    else:
        lam = _cubic_smallest(G)
    return math.sqrt(max(lam, 0.0))


def _cubic_smallest(G) -> float:
    # symmetric 3x3: trigonometric solution of det(G - lam I) = 0
    a11, a12, a13 = G[0]
    _, a22, a23 = G[1]
    a33 = G[2][2]
    p1 = a12 * a12 + a13 * a13 + a23 * a23
    q = (a11 + a22 + a33) / 3.0
    if p1 == 0:
        return min(a11, a22, a33)
    p2 = (a11 - q) ** 2 + (a22 - q) ** 2 + (a33 - q) ** 2 + 2 * p1
    p = math.sqrt(p2 / 6.0)
    b11, b22, b33 = (a11 - q) / p, (a22 - q) / p, (a33 - q) / p
    b12, b13, b23 = a12 / p, a13 / p, a23 / p
    detb = (b11 * (b22 * b33 - b23 * b23) - b12 * (b12 * b33 - b23 * b13)
            + b13 * (b12 * b23 - b22 * b13))
    r = max(-1.0, min(1.0, detb / 2.0))
    phi = math.acos(r) / 3.0
    big = q + 2 * p * math.cos(phi)
    small = q + 2 * p * math.cos(phi + 2 * math.pi / 3)
    mid = 3 * q - big - small
    # recover the small root from the determinant when it is tiny relative to the others
    det = (a11 * (a22 * a33 - a23 * a23) - a12 * (a12 * a33 - a23 * a13)
           + a13 * (a12 * a23 - a22 * a13))
    if big > 0 and mid > 0 and small < 1e-3 * big:
        return det / (big * mid)
    return small
