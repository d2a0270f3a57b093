"""Affine independence of encoding states, simplex coordinates, Caratheodory witnesses.

States are compared through their real Hermitian coordinates
(:func:`~darwin_certify.qmath.hermitian_vec`), so Euclidean distances and
singular values agree with the Hilbert-Schmidt geometry and do not depend on
the matrix basis.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .qmath import ValidationError, hermitian_vec, trace_norm

DEFAULT_RANK_TOL = 1e-8


class OutsideAffineHullError(ValidationError):
    def __init__(self, residual: float):
        super().__init__(f"target lies outside the affine hull (residual {residual:.3g})")
        self.residual = residual


@dataclass
class AffineIndependence:
    independent: bool
    rank: int
    singular_values: np.ndarray
    marginal: bool          # smallest retained singular value within 10x of the tolerance

    def __bool__(self):
        return self.independent


def _family(states) -> list[np.ndarray]:
    states = [np.asarray(s) for s in states]
    if not states:
        raise ValidationError("state family is empty")
    if len({s.shape for s in states}) != 1:
        raise ValidationError("states in a family must share one dimension")
    return states


def _differences(states, ref: int = -1) -> np.ndarray:
    vecs = np.array([hermitian_vec(s) for s in states])
    base = vecs[ref]
    rows = np.delete(vecs, ref % len(states), axis=0) - base
    return rows


def is_affinely_independent(states: Sequence, tol: float = DEFAULT_RANK_TOL) -> AffineIndependence:
    """Rank test on the k-1 difference vectors sigma_k - sigma_last."""
    states = _family(states)
    k = len(states)
    n = states[0].shape[0]
    if k == 1:
        return AffineIndependence(True, 0, np.zeros(0), False)
    sv = np.linalg.svd(_differences(states), compute_uv=False)
    rank = int(np.sum(sv > tol))
    # traceless differences live in an (n^2 - 1)-dimensional space
    independent = rank == k - 1 and k <= n * n
    retained = sv[sv > tol]
    marginal = bool(retained.size and retained[-1] <= 10 * tol) or bool(
        np.any((sv <= tol) & (sv > tol / 10)))
    return AffineIndependence(independent, rank, sv, marginal)


def simplex_coordinates(states: Sequence, target, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Unique affine coefficients q (sum 1) with sum_k q_k sigma_k = target.

    Coefficients may come out slightly negative; convexity is the caller's call.
    """
    states = _family(states)
    target = np.asarray(target)
    if not is_affinely_independent(states, tol):
        raise ValidationError("coordinates are only unique for an affinely independent family")
    k = len(states)
    if k == 1:
        q = np.ones(1)
    else:
        a = _differences(states).T
        b = hermitian_vec(target) - hermitian_vec(states[-1])
        head = np.linalg.lstsq(a, b, rcond=None)[0]
        q = np.append(head, 1.0 - head.sum())
    residual = trace_norm(sum(qk * s for qk, s in zip(q, states)) - target)
    if residual > tol:
        raise OutsideAffineHullError(residual)
    return q


def caratheodory_witness(states: Sequence, target, tol: float = DEFAULT_RANK_TOL):
    """Convex coefficients for ``target`` with at least one exact zero, or ``None``.

    Only affinely dependent families have such a witness for interior targets.
    Coordinates are deleted in increasing index order and the first feasible
    restricted decomposition is returned.
    """
    states = _family(states)
    target = np.asarray(target)
    if is_affinely_independent(states, tol):
        return None
    k = len(states)
    vecs = np.array([hermitian_vec(s) for s in states]).T        # (n^2, k)
    tvec = hermitian_vec(target)
    # well-conditioned equality rows: project onto an orthonormal basis of the family's span
    u, sv, _ = np.linalg.svd(vecs, full_matrices=False)
    r = int(np.sum(sv > tol * max(1.0, sv[0])))
    basis = u[:, :r]
    if np.linalg.norm(tvec - basis @ (basis.T @ tvec)) > tol:
        return None
    a_eq = np.vstack([basis.T @ vecs, np.ones((1, k))])
    b_eq = np.append(basis.T @ tvec, 1.0)
    for drop in range(k):
        bounds = [(0.0, 0.0) if i == drop else (0.0, None) for i in range(k)]
        res = linprog(np.zeros(k), A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
        if res.status != 0:
            continue
        q = _polish(np.clip(res.x, 0.0, None), drop, vecs, tvec)
        err = trace_norm(sum(qk * s for qk, s in zip(q, states)) - target)
        if err <= tol and q[drop] == 0.0:
            return q
    return None


def _polish(q, drop, vecs, tvec):
    """Least-squares correction on the support, keeping q[drop] = 0 and sum(q) = 1."""
    q = q.copy()
    q[drop] = 0.0
    support = np.flatnonzero(q > 0)
    if support.size == 0:
        return q
    a = np.vstack([vecs[:, support], np.ones((1, support.size))])
    resid = np.append(tvec - vecs @ q, 1.0 - q.sum())
    delta = np.linalg.lstsq(a, resid, rcond=None)[0]
    trial = q.copy()
    trial[support] += delta
    if np.all(trial[support] >= 0):
        return trial
    return q


def statistical_distance(p, q) -> float:
    """Half the l1 distance between two distributions."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValidationError(f"distributions have different lengths {p.shape} and {q.shape}")
    return 0.5 * float(np.sum(np.abs(p - q)))
