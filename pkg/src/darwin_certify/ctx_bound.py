"""Finite-environment contextuality bound: effect constant, diamond distance, bound chain.

For two channels with unnormalized Choi difference ``J`` (input factor first)

    ||Phi_1 - Phi_2||_diamond = 2 min { ||Tr_out Z||_inf : Z >= 0, Z >= J }

and any input state ``rho`` gives the lower bound
``||(sqrt(rho) (x) I) J (sqrt(rho) (x) I)||_1``, the output trace distance on
the purification of ``rho``. The dual of the ``s I - Tr_out Z`` constraint is
exactly such a state, so each barrier centring yields a two-sided bracket.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _lmi
from ._lmi import ConvergenceError
from .channels import MeasureAndPrepareChannel, apply, apply_choi, choi, choi_reduce
from .qmath import Povm, ValidationError, hermitian_basis, hs_norm, partial_trace, psd_sqrt, trace_norm


def effect_constant(measurements: Sequence[Povm]) -> float:
    """C = max_M sum_b sqrt(Tr F_b^dag F_b)."""
    if not measurements:
        raise ValidationError("effect_constant needs at least one measurement")
    return max(sum(hs_norm(f) for f in m) for m in measurements)


@dataclass
class DiamondResult:
    value: float
    lower: float
    upper: float
    primal_witness: np.ndarray      # input state rho whose purification attains ``lower``
    dual_certificate: np.ndarray    # Z with Z >= 0, Z >= J (unnormalized Choi difference)

    @property
    def gap(self) -> float:
        return self.upper - self.lower


def _lower_from(ju, rho, d_in, d_out) -> float:
    r = np.kron(psd_sqrt(rho), np.eye(d_out))
    return trace_norm(r @ ju @ r)


def diamond_distance(j1, j2, d_in: int, tol: float = 1e-9) -> DiamondResult:
    """Two-sided certified ``||Phi_1 - Phi_2||_diamond`` from normalized Choi matrices."""
    j1 = np.asarray(j1, dtype=complex)
    j2 = np.asarray(j2, dtype=complex)
    if j1.shape != j2.shape or j1.shape[0] % d_in:
        raise ValidationError(f"Choi shapes {j1.shape} and {j2.shape} do not match input dimension {d_in}")
    dim = j1.shape[0]
    d_out = dim // d_in
    ju = d_in * (j1 - j2)
    ju = (ju + ju.conj().T) / 2

    # cheap bracket: maximally mixed input below, ||J||_1 above
    tn = trace_norm(ju)
    mixed = np.eye(d_in) / d_in
    lower0 = _lower_from(ju, mixed, d_in, d_out)
    ev, vec = np.linalg.eigh(ju)
    z0 = (vec * np.clip(ev, 0.0, None)) @ vec.conj().T
    upper0 = min(tn, 2.0 * float(np.linalg.eigvalsh(partial_trace(z0, [d_in, d_out], [0]))[-1]))
    best = {"lower": lower0, "rho": mixed, "upper": upper0, "z": z0}
    if upper0 - lower0 <= tol:
        return _result(best)

    basis = hermitian_basis(dim)
    nz = dim * dim
    n = nz + 1
    zero = np.zeros((dim, dim), dtype=complex)
    co_z = np.zeros((n, dim, dim), dtype=complex)
    co_z[:nz] = basis
    co_s = np.zeros((n, d_in, d_in), dtype=complex)
    co_s[:nz] = -np.array([partial_trace(b, [d_in, d_out], [0]) for b in basis])
    co_s[-1] = np.eye(d_in)
    blocks = [_lmi.LmiBlock(zero, co_z), _lmi.LmiBlock(-ju, co_z),
              _lmi.LmiBlock(np.zeros((d_in, d_in), dtype=complex), co_s)]
    x0 = np.zeros(n)
    x0[:dim] = max(0.0, ev[-1]) + 1.0
    x0[-1] = d_out * x0[0] + 1.0
    c = np.zeros(n)
    c[-1] = 1.0

    def keep_best(x, duals):
        z = np.tensordot(x[:nz], basis, axes=1)
        shift = max(0.0, -np.linalg.eigvalsh(z)[0], -np.linalg.eigvalsh(z - ju)[0])
        z = z + shift * np.eye(dim)
        up = 2.0 * float(np.linalg.eigvalsh(partial_trace(z, [d_in, d_out], [0]))[-1])
        if up < best["upper"]:
            best["upper"], best["z"] = up, z
        rho = duals[2]
        w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
        rho = (v * np.clip(w, 0.0, None)) @ v.conj().T
        rho = rho / np.trace(rho).real
        lo = _lower_from(ju, rho, d_in, d_out)
        if lo > best["lower"]:
            best["lower"], best["rho"] = lo, rho

    try:
        _lmi.solve(c, blocks, x0, gap_tol=tol / 8, callback=keep_best)
    except ConvergenceError as exc:
        raise ConvergenceError(f"diamond distance did not converge: {exc}", result=_result(best)) from None
    res = _result(best)
    if res.gap > tol:
        raise ConvergenceError(f"diamond bracket [{res.lower:.12g}, {res.upper:.12g}] wider than {tol:g}",
                               result=res)
    return res


def _result(best) -> DiamondResult:
    lo, up = best["lower"], max(best["upper"], best["lower"])
    return DiamondResult(0.5 * (lo + up), lo, up, best["rho"], best["z"])


@dataclass
class BehaviorDeviation:
    C: float
    diamond: float
    bound: float                # C * diamond / d_A, with the certified upper side of diamond
    observed_l1: float          # max over (M, P) of sum_b |p - q|
    diamond_gap: float
    consistent: bool            # observed_l1 <= bound + 1e-8


def contextuality_distance_bound(channel_choi, ideal: MeasureAndPrepareChannel,
                                 measurements: Sequence[Povm], preparations: Sequence,
                                 d_A: int, tol: float = 1e-9) -> BehaviorDeviation:
    """Evaluate d(p) <= (C / d_A) ||Phi - Phi_obs||_diamond against the observed deviation.

    A violated chain is reported through ``consistent`` instead of raised, so
    a sweep keeps its other rows; callers decide whether to treat it as fatal.
    """
    channel_choi = np.asarray(channel_choi, dtype=complex)
    if ideal.d_in != d_A or channel_choi.shape[0] != d_A * ideal.d_out:
        raise ValidationError(f"Choi of shape {channel_choi.shape} does not match "
                              f"{d_A} -> {ideal.d_out} reference channel")
    for m in measurements:
        if m.dim != ideal.d_out:
            raise ValidationError(f"measurement on dimension {m.dim}, observer has {ideal.d_out}")
    c_val = effect_constant(measurements)
    dia = diamond_distance(channel_choi, choi(ideal), d_A, tol=tol)
    observed = 0.0
    for rho in preparations:
        out = apply_choi(channel_choi, rho, d_A)
        ref = apply(ideal, rho)
        for m in measurements:
            dev = sum(abs(np.real(np.vdot(f, out - ref))) for f in m)
            observed = max(observed, float(dev))
    bound = c_val * dia.upper / d_A
    return BehaviorDeviation(c_val, dia.value, bound, observed, dia.gap, observed <= bound + 1e-8)


def bob_choi(j, d_in: int, out_dims: Sequence[int], bob: int) -> np.ndarray:
    """Choi matrix of the channel seen by one observer."""
    return choi_reduce(j, d_in, out_dims, [bob])
