"""Minimum-error state discrimination and per-observer distinguishability.

``p_guess`` solves the guessing-probability SDP

    max  sum_k p_k Tr(F_k sigma_k)   over POVMs {F_k}

through its dual ``min Tr(Y) s.t. Y >= p_k sigma_k`` with a log-barrier
method. Every result carries a feasible POVM (the reported value is what that
POVM achieves) and a strictly feasible ``Y``; ``gap = Tr(Y) - value`` bounds
the distance to the optimum from above.

``eta`` is the worst case of ``p_guess`` over system states. Since
``p_guess`` is a maximum of functions linear in the priors, and the priors
are affine in the system state, minimax gives

    eta = max_{POVM F} lambda_min( sum_k Tr(F_k sigma_k) E_k ),

which is again a single LMI program and gives the lower bound. The upper
bound comes from the joint dual ``min Tr(Y) s.t. Y >= Tr(E_k rho) sigma_k``
over states rho, whose iterates are feasible by construction.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _lmi
from ._lmi import ConvergenceError
from .channels import MeasureAndPrepareChannel
from .qmath import Povm, ValidationError, hermitian_basis, psd_sqrt, tensor, trace_norm

__all__ = ["DiscriminationInstance", "DiscriminationResult", "EtaResult", "p_guess", "helstrom_two",
           "pgm", "eta", "agreement_probability", "ConvergenceError"]


@dataclass(frozen=True)
class DiscriminationInstance:
    priors: np.ndarray
    states: tuple

    def __post_init__(self):
        priors = np.asarray(self.priors, dtype=float)
        states = tuple(np.asarray(s, dtype=complex) for s in self.states)
        if priors.ndim != 1 or priors.size != len(states):
            raise ValidationError(f"{priors.size} priors for {len(states)} states")
        if np.any(priors < -1e-12) or abs(priors.sum() - 1.0) > 1e-12:
            raise ValidationError(f"priors must be a probability vector, got {priors}")
        if len({s.shape for s in states}) != 1:
            raise ValidationError("states must share one dimension")
        object.__setattr__(self, "priors", np.clip(priors, 0.0, None))
        object.__setattr__(self, "states", states)

    @property
    def dim(self) -> int:
        return self.states[0].shape[0]


@dataclass
class DiscriminationResult:
    value: float
    povm: Povm
    dual_certificate: np.ndarray
    gap: float

    @property
    def upper(self) -> float:
        return self.value + self.gap


def _normalize_povm(effects: list[np.ndarray]) -> Povm:
    """Map nearly-complete PSD operators to an exact POVM: F_k -> S^{-1/2} F_k S^{-1/2}."""
    effects = [(e + e.conj().T) / 2 for e in effects]
    s_inv = psd_sqrt(sum(effects), pinv=True)
    out = [s_inv @ e @ s_inv for e in effects]
    out = [(e + e.conj().T) / 2 for e in out]
    d = out[0].shape[0]
    # project away tiny negative eigenvalues, then put the rounding residue on the largest effect
    fixed = []
    for e in out:
        w, v = np.linalg.eigh(e)
        fixed.append((v * np.clip(w, 0.0, None)) @ v.conj().T)
    big = int(np.argmax([np.trace(e).real for e in fixed]))
    fixed[big] = fixed[big] + (np.eye(d) - sum(fixed))
    return Povm(fixed, allow_zero=True)


def _success(priors, states, povm: Povm) -> float:
    return float(sum(p * np.real(np.vdot(f, s)) for p, f, s in zip(priors, povm, states)))


def p_guess(instance: DiscriminationInstance, tol: float = 1e-9) -> DiscriminationResult:
    """Optimal guessing probability with a feasible POVM and a dual certificate."""
    priors, states = instance.priors, instance.states
    d = instance.dim
    k = len(states)
    weighted = [p * s for p, s in zip(priors, states)]
    if k == 1:
        povm = Povm([np.eye(d)])
        return DiscriminationResult(_success(priors, states, povm), povm, weighted[0].copy(), 0.0)

    basis = hermitian_basis(d)
    c = np.array([np.trace(b).real for b in basis])
    blocks = [_lmi.LmiBlock(-a, basis) for a in weighted]
    top = max(np.linalg.eigvalsh(a)[-1] for a in weighted)
    x0 = np.zeros(d * d)
    x0[:d] = top + 1.0
    best = {}

    def keep_best(x, duals):
        povm = _normalize_povm(list(duals))
        value = _success(priors, states, povm)
        y = np.tensordot(x, basis, axes=1)
        # make Y exactly dominate every p_k sigma_k (shift by the worst violation, if any)
        shift = max(0.0, -min(np.linalg.eigvalsh(y - a)[0] for a in weighted))
        y = y + shift * np.eye(d)
        if "value" not in best or value > best["value"]:
            best["value"], best["povm"] = value, povm
        if "y" not in best or np.trace(y).real < np.trace(best["y"]).real:
            best["y"] = y

    def result():
        gap = float(np.trace(best["y"]).real - best["value"])
        return DiscriminationResult(best["value"], best["povm"], best["y"], gap)

    try:
        _lmi.solve(c, blocks, x0, gap_tol=tol / 4, callback=keep_best)
    except ConvergenceError as exc:
        raise ConvergenceError(f"p_guess did not converge: {exc}", result=result()) from None
    res = result()
    if res.gap > tol:
        raise ConvergenceError(f"p_guess certificate gap {res.gap:.3g} exceeds tolerance {tol:g}", result=res)
    return res


def helstrom_two(p0: float, rho0, p1: float, rho1) -> float:
    """Two-state optimum: (1 + ||p0 rho0 - p1 rho1||_1) / 2."""
    if abs(p0 + p1 - 1.0) > 1e-12:
        raise ValidationError(f"priors must sum to 1, got {p0} + {p1}")
    return 0.5 * (1.0 + trace_norm(p0 * np.asarray(rho0) - p1 * np.asarray(rho1)))


def pgm(instance: DiscriminationInstance) -> tuple[float, Povm]:
    """Pretty-good (square-root) measurement and its success probability.

    The average state may be singular; its pseudo-inverse square root is used
    and the projector onto its kernel is added to the first effect. For
    identical states the measurement guesses label k with probability p_k, so
    the value is sum_k p_k^2, not max_k p_k.
    """
    weighted = [p * s for p, s in zip(instance.priors, instance.states)]
    avg = sum(weighted)
    s_inv = psd_sqrt(avg, pinv=True)
    effects = [s_inv @ a @ s_inv for a in weighted]
    d = instance.dim
    kernel = np.eye(d) - sum(effects)
    kernel = (kernel + kernel.conj().T) / 2
    effects[0] = effects[0] + kernel
    effects = [(e + e.conj().T) / 2 for e in effects]
    povm = _normalize_povm(effects)
    return _success(instance.priors, instance.states, povm), povm


# ---------------------------------------------------------------------------
# worst-case distinguishability over system states
# ---------------------------------------------------------------------------

@dataclass
class EtaResult:
    eta: float                 # certified lower bound: lambda_min of the POVM-weighted pointer operator
    upper: float               # p_guess upper bound at worst_state
    worst_state: np.ndarray
    povm: Povm                 # observer POVM attaining ``eta``

    @property
    def gap(self) -> float:
        return self.upper - self.eta


def weighted_pointer(channel: MeasureAndPrepareChannel, povm: Sequence) -> np.ndarray:
    """sum_k Tr(F_k sigma_k) E_k."""
    return sum(np.real(np.vdot(f, s)) * e for f, s, e in zip(povm, channel.prepared, channel.pointer))


def eta(bob_channel: MeasureAndPrepareChannel, tol: float = 1e-9) -> EtaResult:
    """Worst-case guessing probability of the pointer label for one observer."""
    ch = bob_channel
    k = ch.k_max
    d_a, d_b = ch.d_in, ch.d_out
    if k == 1:
        rho = np.eye(d_a) / d_a
        return EtaResult(1.0, 1.0, rho, Povm([np.eye(d_b)]))

    basis = hermitian_basis(d_b)
    nb = d_b * d_b
    n = (k - 1) * nb + 1
    e_last = ch.pointer[k - 1]
    s_last = ch.prepared[k - 1]

    # block 0: W(F) - t I >= 0
    w_coeffs = np.zeros((n, d_a, d_a), dtype=complex)
    for kk in range(k - 1):
        for a, b in enumerate(basis):
            w_coeffs[kk * nb + a] = (np.real(np.vdot(b, ch.prepared[kk])) * ch.pointer[kk]
                                     - np.real(np.vdot(b, s_last)) * e_last)
    w_coeffs[-1] = -np.eye(d_a)
    blocks = [_lmi.LmiBlock(np.array(e_last), w_coeffs)]
    # F_k >= 0 for k < K, and F_K = I - sum F_k >= 0
    for kk in range(k - 1):
        co = np.zeros((n, d_b, d_b), dtype=complex)
        co[kk * nb:(kk + 1) * nb] = basis
        blocks.append(_lmi.LmiBlock(np.zeros((d_b, d_b), dtype=complex), co))
    co = np.zeros((n, d_b, d_b), dtype=complex)
    for kk in range(k - 1):
        co[kk * nb:(kk + 1) * nb] = -basis
    blocks.append(_lmi.LmiBlock(np.eye(d_b, dtype=complex), co))

    x0 = np.zeros(n)
    for kk in range(k - 1):
        x0[kk * nb:kk * nb + d_b] = 1.0 / k
    w0 = blocks[0].at(x0)           # t = 0 here
    x0[-1] = np.linalg.eigvalsh(w0)[0] - 1.0
    c = np.zeros(n)
    c[-1] = -1.0

    best = {}

    def keep_best(x, duals):
        effects = [np.tensordot(x[kk * nb:(kk + 1) * nb], basis, axes=1) for kk in range(k - 1)]
        effects.append(np.eye(d_b) - sum(effects))
        povm = _normalize_povm(effects)
        lower = float(np.linalg.eigvalsh(weighted_pointer(ch, povm))[0])
        if "lower" not in best or lower > best["lower"]:
            best["lower"], best["povm"] = lower, povm

    def result():
        upper, rho = _eta_upper(ch, tol)
        return EtaResult(best["lower"], max(upper, best["lower"]), rho, best["povm"])

    try:
        _lmi.solve(c, blocks, x0, gap_tol=tol / 4, callback=keep_best)
    except ConvergenceError as exc:
        raise ConvergenceError(f"eta did not converge: {exc}", result=result()) from None
    res = result()
    if res.gap > tol:
        raise ConvergenceError(f"eta certificate gap {res.gap:.3g} exceeds tolerance {tol:g}", result=res)
    return res


def _eta_upper(ch: MeasureAndPrepareChannel, tol: float):
    """min over (rho, Y) of Tr Y subject to Y >= Tr(E_k rho) sigma_k and rho a state.

    Barrier iterates are strictly feasible, so every iterate is a certified
    upper bound together with the state rho that attains it.
    """
    d_a, d_b = ch.d_in, ch.d_out
    # rho = |last><last| + sum_a r_a G_a with traceless diagonal directions
    g = []
    for i in range(d_a - 1):
        e = np.zeros((d_a, d_a), dtype=complex)
        e[i, i], e[-1, -1] = 1.0, -1.0
        g.append(e)
    g.extend(hermitian_basis(d_a)[d_a:])
    g = np.array(g).reshape(-1, d_a, d_a)
    r0 = np.zeros((d_a, d_a), dtype=complex)
    r0[-1, -1] = 1.0
    nr = len(g)
    yb = hermitian_basis(d_b)
    n = nr + d_b * d_b
    co = np.zeros((n, d_a, d_a), dtype=complex)
    co[:nr] = g
    blocks = [_lmi.LmiBlock(r0, co)]
    for e, s in zip(ch.pointer, ch.prepared):
        co = np.zeros((n, d_b, d_b), dtype=complex)
        co[:nr] = -np.array([np.real(np.vdot(e, ga)) * s for ga in g]).reshape(nr, d_b, d_b)
        co[nr:] = yb
        blocks.append(_lmi.LmiBlock(-np.real(np.vdot(e, r0)) * s, co))
    c = np.zeros(n)
    c[nr:] = [np.trace(b).real for b in yb]
    x0 = np.zeros(n)
    x0[:d_a - 1] = 1.0 / d_a
    x0[nr:nr + d_b] = 1.0 + max(np.linalg.eigvalsh(s)[-1] for s in ch.prepared)
    best = {}

    def keep_best(x, duals):
        val = float(c @ x)
        if "upper" not in best or val < best["upper"]:
            rho = r0 + np.tensordot(x[:nr], g, axes=1)
            best["upper"], best["rho"] = val, (rho + rho.conj().T) / 2

    try:
        _lmi.solve(c, blocks, x0, gap_tol=tol / 4, callback=keep_best)
    except ConvergenceError:
        pass            # the best iterate is still a valid upper bound
    return best["upper"], best["rho"]


def agreement_probability(channel: MeasureAndPrepareChannel, bob_dims: Sequence[int],
                          povms: Sequence[Povm]) -> float:
    """Worst-case probability that every observer reports the encoded label.

    ``min_rho sum_k Tr(E_k rho) Tr[(x)_j F_k^{B_j} sigma_k]``, i.e. the smallest
    eigenvalue of ``sum_k c_k E_k``.
    """
    bob_dims = list(bob_dims)
    if len(povms) != len(bob_dims):
        raise ValidationError(f"{len(povms)} POVMs for {len(bob_dims)} observers")
    if int(np.prod(bob_dims)) != channel.d_out:
        raise ValidationError(f"output dimension {channel.d_out} does not factor as {bob_dims}")
    for j, (m, d) in enumerate(zip(povms, bob_dims)):
        if len(m) != channel.k_max:
            raise ValidationError(f"observer {j} POVM has {len(m)} outcomes, channel has {channel.k_max}")
        if m.dim != d:
            raise ValidationError(f"observer {j} POVM acts on dimension {m.dim}, expected {d}")
    op = np.zeros((channel.d_in, channel.d_in), dtype=complex)
    for k, (e, s) in enumerate(zip(channel.pointer, channel.prepared)):
        joint = tensor(*[m[k] for m in povms])
        op += np.real(np.vdot(joint, s)) * e
    return float(np.linalg.eigvalsh(op)[0])
