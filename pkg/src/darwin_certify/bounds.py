"""Distinguishability cut-off, objectivity verdict and the quantitative bounds.

The cut-off of a pointer POVM {E_k} is

    P_hat = 1 - maximin / 2,     maximin = max_rho min_k Tr(E_k rho),

computed in its dual form ``min_{lambda in simplex} lambda_max(sum_k lambda_k E_k)``.
The optimal lambda certifies the upper side and the witness state the lower
side of the bracket.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _lmi
from ._lmi import ConvergenceError
from .qmath import Povm, ValidationError


@dataclass
class CutoffResult:
    p_hat: float
    maximin: float              # certified: min_k Tr(E_k witness_state)
    dual_value: float           # lambda_max(sum_k w_k E_k) >= true maximin
    optimal_weights: np.ndarray
    witness_state: np.ndarray
    boundary: bool = False      # maximizer has a (numerically) vanishing prior

    @property
    def gap(self) -> float:
        return self.dual_value - self.maximin


def distinguishability_bound(pointer: Povm, tol: float = 1e-9) -> CutoffResult:
    k = len(pointer)
    d = pointer.dim
    effects = list(pointer.effects)
    if k == 1:
        rho = np.eye(d) / d
        return CutoffResult(0.5, 1.0, 1.0, np.ones(1), rho)

    # variables: w_1..w_{k-1} (w_k = 1 - sum), s ; minimize s
    n = k
    e_last = effects[-1]
    co = np.zeros((n, d, d), dtype=complex)
    for i in range(k - 1):
        co[i] = -(effects[i] - e_last)
    co[-1] = np.eye(d)
    blocks = [_lmi.LmiBlock(-np.array(e_last), co)]
    # w_i >= 0 and w_k = 1 - sum >= 0 as one diagonal block (same barrier, one factorization)
    cw = np.zeros((n, k, k), dtype=complex)
    for i in range(k - 1):
        cw[i, i, i] = 1.0
        cw[i, k - 1, k - 1] = -1.0
    const = np.zeros((k, k), dtype=complex)
    const[k - 1, k - 1] = 1.0
    blocks.append(_lmi.LmiBlock(const, cw))

    x0 = np.full(n, 1.0 / k)
    x0[-1] = np.linalg.eigvalsh(sum(effects) / k)[-1] + 1.0
    c = np.zeros(n)
    c[-1] = 1.0
    best = {}

    def keep_best(x, duals):
        cand = _cutoff_from(x, duals[0], effects)
        if "lo" not in best or cand.maximin > best["lo"].maximin:
            best["lo"] = cand
        if "hi" not in best or cand.dual_value < best["hi"].dual_value:
            best["hi"] = cand

    try:
        _lmi.solve(c, blocks, x0, gap_tol=tol / 4, callback=keep_best)
    except ConvergenceError as exc:
        raise ConvergenceError(f"cut-off did not converge: {exc}", result=_merge(best)) from None
    res = _merge(best)
    if res.gap > tol:
        raise ConvergenceError(f"cut-off certificate gap {res.gap:.3g} exceeds tolerance {tol:g}", result=res)
    return res


def _merge(best) -> CutoffResult:
    lo, hi = best["lo"], best["hi"]
    return CutoffResult(p_hat=lo.p_hat, maximin=lo.maximin, dual_value=hi.dual_value,
                        optimal_weights=hi.optimal_weights, witness_state=lo.witness_state,
                        boundary=lo.boundary)


def _cutoff_from(x, rho, effects) -> CutoffResult:
    k = len(effects)
    w = np.append(x[:k - 1], 1.0 - x[:k - 1].sum())
    w = np.clip(w, 0.0, None)
    w = w / w.sum()
    dual_value = float(np.linalg.eigvalsh(sum(wi * e for wi, e in zip(w, effects)))[-1])
    ev, vec = np.linalg.eigh((rho + rho.conj().T) / 2)
    rho = (vec * np.clip(ev, 0.0, None)) @ vec.conj().T
    rho = rho / np.trace(rho).real
    priors = np.array([np.real(np.vdot(e, rho)) for e in effects])
    maximin = float(priors.min())
    return CutoffResult(p_hat=1.0 - maximin / 2.0, maximin=maximin, dual_value=dual_value,
                        optimal_weights=w, witness_state=rho, boundary=bool(maximin <= 1e-9))


def projective_bound(d: int) -> float:
    """Cut-off of a rank-1 projective pointer basis in dimension d."""
    if d < 1:
        raise ValidationError("dimension must be positive")
    return 1.0 - 1.0 / (2.0 * d)


class Verdict(str, enum.Enum):
    EMERGED = "EMERGED"
    NOT_CERTIFIED = "NOT_CERTIFIED"
    MARGINAL = "MARGINAL"


def classical_objectivity_verdict(eta: float, cutoff, solver_tols=(5e-7, 5e-7)) -> Verdict:
    """EMERGED when eta exceeds the cut-off by more than the combined tolerance.

    ``cutoff`` is a :class:`CutoffResult` or a bare P_hat value. Differences
    inside the tolerance band are MARGINAL: a strict inequality cannot be
    decided below solver precision.
    """
    if not 0.0 <= eta <= 1.0 + 1e-9:
        raise ValidationError(f"eta must lie in [0, 1], got {eta}")
    p_hat = cutoff.p_hat if isinstance(cutoff, CutoffResult) else float(cutoff)
    band = float(sum(solver_tols))
    diff = eta - p_hat
    if diff > band:
        return Verdict.EMERGED
    if abs(diff) <= band:
        return Verdict.MARGINAL
    return Verdict.NOT_CERTIFIED


def agreement_lower_bound(t: int, eta: float) -> float:
    """1 - 6 t (1 - eta)^(1/4); negative values are returned as-is."""
    if t < 1:
        raise ValidationError("t must be at least 1")
    if not 0.0 <= eta <= 1.0 + 1e-12:
        raise ValidationError(f"eta must lie in [0, 1], got {eta}")
    delta = max(0.0, 1.0 - eta)
    return 1.0 - 6.0 * t * delta ** 0.25


def bph_deviation_bound(d_A: int, t: int, N: int, delta: float) -> float:
    """Finite-environment diamond-norm deviation from measure-and-prepare form.

    ``(27 ln2 d_A^6 log2(d_A) t / (N delta^3))^(1/3)``; the logarithm is read
    in base 2, matching the explicit ln 2 conversion factor.
    """
    if not 0.0 < delta < 1.0:
        raise ValidationError("delta must lie in (0, 1)")
    if not (N >= t >= 1):
        raise ValidationError("need N >= t >= 1")
    if d_A < 2:
        raise ValidationError("d_A must be at least 2")
    val = 27.0 * math.log(2.0) * d_A ** 6 * math.log2(d_A) * t / (N * delta ** 3)
    return val ** (1.0 / 3.0)


def ic_contextuality_bound(d_A: int, d_B: int, t: int, N: int, delta: float) -> float:
    """Contextuality-distance bound for informationally complete observer POVMs (C <= d_B^3)."""
    return d_B ** 3 / d_A * bph_deviation_bound(d_A, t, N, delta)
