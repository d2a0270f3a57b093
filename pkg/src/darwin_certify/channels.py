"""Measure-and-prepare channels, per-observer reductions and environment models.

An environment-as-witness dynamics is stored in measure-and-prepare form: a
pointer POVM ``{E_k}`` on the system and one prepared state ``sigma_k`` on the
retained environment fragment per outcome. The Choi matrix is derived on
demand (``J = (1/d_in) sum_ij |i><j| (x) Phi(|i><j|)``, input factor first).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qmath import (Povm, ValidationError, basis_povm, density_matrix, partial_trace,
                    tensor, trace_norm)


@dataclass(frozen=True)
class MeasureAndPrepareChannel:
    """rho -> sum_k Tr(E_k rho) sigma_k."""

    pointer: Povm
    prepared: tuple

    def __post_init__(self):
        prepared = tuple(density_matrix(s) for s in self.prepared)
        if len(prepared) != len(self.pointer):
            raise ValidationError(
                f"pointer has {len(self.pointer)} outcomes but {len(prepared)} prepared states were given")
        dims = {s.shape[0] for s in prepared}
        if len(dims) != 1:
            raise ValidationError(f"prepared states have mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "prepared", prepared)

    @property
    def d_in(self) -> int:
        return self.pointer.dim

    @property
    def d_out(self) -> int:
        return self.prepared[0].shape[0]

    @property
    def k_max(self) -> int:
        return len(self.prepared)

    def priors(self, rho) -> np.ndarray:
        return self.pointer.probabilities(rho)


def apply(channel: MeasureAndPrepareChannel, rho) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.shape != (channel.d_in, channel.d_in):
        raise ValidationError(f"input of shape {rho.shape} does not match channel input dimension {channel.d_in}")
    out = np.zeros((channel.d_out, channel.d_out), dtype=complex)
    for e, s in zip(channel.pointer, channel.prepared):
        out += np.vdot(e, rho) * s
    return out


def reduce_to_bob(channel: MeasureAndPrepareChannel, bob_dims: Sequence[int], j: int) -> MeasureAndPrepareChannel:
    """Per-observer channel: same pointer, prepared states traced down to factor ``j``."""
    bob_dims = list(bob_dims)
    if int(np.prod(bob_dims)) != channel.d_out:
        raise ValidationError(f"output dimension {channel.d_out} does not factor as {bob_dims}")
    if not 0 <= j < len(bob_dims):
        raise ValidationError(f"observer index {j} out of range for {len(bob_dims)} factors")
    if len(bob_dims) == 1:
        return channel
    reduced = [partial_trace(s, bob_dims, [j]) for s in channel.prepared]
    return MeasureAndPrepareChannel(channel.pointer, tuple(reduced))


def depolarize(rho, noise: float) -> np.ndarray:
    d = rho.shape[0]
    return (1.0 - noise) * rho + noise * np.eye(d) / d


@dataclass(frozen=True)
class BroadcastSpec:
    """Pointer-basis broadcast to ``t`` observers followed by local depolarizing noise.

    With ``system_copy`` the system itself is kept (decohered in the pointer
    basis) as an extra leading output factor, which is the joint A + fragment
    form needed for spectrum-broadcasting checks.
    """

    d_A: int
    t: int
    bob_dims: tuple = ()
    noise: float = 0.0
    pointer_basis: np.ndarray | None = None
    system_copy: bool = False

    def __post_init__(self):
        if self.t < 1:
            raise ValidationError("t must be at least 1")
        if not 0.0 <= self.noise <= 1.0:
            raise ValidationError(f"noise must lie in [0, 1], got {self.noise}")
        dims = tuple(self.bob_dims) if len(self.bob_dims) else (self.d_A,) * self.t
        if len(dims) != self.t:
            raise ValidationError(f"bob_dims has {len(dims)} entries, expected t = {self.t}")
        if any(d < self.d_A for d in dims):
            raise ValidationError(f"every observer dimension must be >= d_A = {self.d_A}")
        object.__setattr__(self, "bob_dims", dims)
        basis = np.eye(self.d_A, dtype=complex) if self.pointer_basis is None else np.asarray(
            self.pointer_basis, dtype=complex)
        if basis.shape != (self.d_A, self.d_A):
            raise ValidationError(f"pointer basis must be {self.d_A} x {self.d_A}")
        if np.max(np.abs(basis.conj().T @ basis - np.eye(self.d_A))) > 1e-10:
            raise ValidationError("pointer basis is not orthonormal")
        object.__setattr__(self, "pointer_basis", basis)

    @property
    def output_dims(self) -> list[int]:
        return ([self.d_A] if self.system_copy else []) + list(self.bob_dims)


def make_broadcast(spec: BroadcastSpec) -> MeasureAndPrepareChannel:
    pointer = basis_povm(spec.d_A, spec.pointer_basis)
    prepared = []
    for k in range(spec.d_A):
        factors = []
        if spec.system_copy:
            factors.append(pointer[k])
        for d in spec.bob_dims:
            ket = np.zeros((d, d), dtype=complex)
            ket[k, k] = 1.0
            factors.append(depolarize(ket, spec.noise))
        prepared.append(tensor(*factors))
    return MeasureAndPrepareChannel(pointer, tuple(prepared))


# ---------------------------------------------------------------------------
# Choi matrices
# ---------------------------------------------------------------------------

def choi(channel: MeasureAndPrepareChannel) -> np.ndarray:
    """Normalized Choi matrix; for measure-and-prepare maps J = (1/d) sum_k E_k^T (x) sigma_k."""
    d = channel.d_in
    j = sum(np.kron(e.T, s) for e, s in zip(channel.pointer, channel.prepared))
    return j / d


def choi_from_map(fn, d_in: int) -> np.ndarray:
    """Choi matrix of an arbitrary linear map given as a Python callable."""
    blocks = []
    for i in range(d_in):
        row = []
        for k in range(d_in):
            unit = np.zeros((d_in, d_in), dtype=complex)
            unit[i, k] = 1.0
            row.append(np.asarray(fn(unit), dtype=complex))
        blocks.append(row)
    d_out = blocks[0][0].shape[0]
    j = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for i in range(d_in):
        for k in range(d_in):
            j[i * d_out:(i + 1) * d_out, k * d_out:(k + 1) * d_out] = blocks[i][k]
    return j / d_in


def apply_choi(j, rho, d_in: int) -> np.ndarray:
    """Phi(rho) = d_in Tr_in[(rho^T (x) I) J]."""
    j = np.asarray(j)
    d_out = j.shape[0] // d_in
    t = j.reshape(d_in, d_out, d_in, d_out)
    return d_in * np.einsum("ij,iajb->ab", np.asarray(rho), t)


def choi_reduce(j, d_in: int, out_dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Choi matrix of the channel followed by tracing the output down to ``keep``."""
    out_dims = list(out_dims)
    keep = [0] + [1 + k for k in keep]
    return partial_trace(j, [d_in] + out_dims, keep)


def identity_channel_choi(d: int) -> np.ndarray:
    omega = np.eye(d, dtype=complex).reshape(-1)
    return np.outer(omega, omega) / d


def depolarizing_channel_choi(d: int, p: float = 1.0) -> np.ndarray:
    """Choi of rho -> (1-p) rho + p Tr(rho) I/d."""
    return (1 - p) * identity_channel_choi(d) + p * np.eye(d * d) / (d * d)


# ---------------------------------------------------------------------------
# finite environment circuit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FiniteEnvSpec:
    """Qubit system coupled to ``N`` environment qubits by controlled-Y rotations.

    Environment qubit ``j`` starts in |0> and is rotated to
    ``cos(a_j)|0> + sin(a_j)|1>`` when the system is |1>; ``a_j = pi/2`` is a
    perfect CNOT-style record. ``S_t`` lists the retained environment qubits.
    """

    N: int
    S_t: tuple
    coupling_angle: tuple | float = np.pi / 2
    d_A: int = 2

    MAX_N = 10

    def __post_init__(self):
        if self.d_A != 2:
            raise ValidationError("finite-environment simulation supports qubit systems only (d_A = 2)")
        if self.N > self.MAX_N:
            raise ValidationError(f"N = {self.N} exceeds the state-vector cap of {self.MAX_N}")
        s_t = tuple(sorted(set(int(i) for i in self.S_t)))
        if not (1 <= len(s_t) <= self.N):
            raise ValidationError(f"need 1 <= |S_t| <= N, got |S_t| = {len(s_t)}, N = {self.N}")
        if s_t[0] < 0 or s_t[-1] >= self.N:
            raise ValidationError(f"S_t indices {s_t} out of range for N = {self.N}")
        object.__setattr__(self, "S_t", s_t)
        angles = np.broadcast_to(np.asarray(self.coupling_angle, dtype=float), (self.N,))
        if np.any(angles < -1e-12) or np.any(angles > np.pi / 2 + 1e-12):
            raise ValidationError("coupling angles must lie in [0, pi/2]")
        object.__setattr__(self, "coupling_angle", tuple(float(a) for a in angles))

    @property
    def t(self) -> int:
        return len(self.S_t)


def _global_kets(spec: FiniteEnvSpec) -> np.ndarray:
    """U |i>|0...0> for i = 0, 1 as arrays of shape (2, 2, ..., 2)."""
    n = spec.N + 1
    kets = []
    for i in range(2):
        psi = np.zeros((2,) * n, dtype=complex)
        psi[(i,) + (0,) * spec.N] = 1.0
        for j, a in enumerate(spec.coupling_angle):
            ry = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]], dtype=complex)
            axis = 1 + j
            # controlled on the system (axis 0) being |1>
            branch = np.moveaxis(psi[1], axis - 1, 0)
            branch = np.tensordot(ry, branch, axes=([1], [0]))
            psi[1] = np.moveaxis(branch, 0, axis - 1)
        kets.append(psi)
    return np.array(kets)


def simulate_finite_env(spec: FiniteEnvSpec) -> np.ndarray:
    """Normalized Choi matrix of rho_A -> Tr_{A, E \\ S_t}[U (rho_A (x) |0..0><0..0|) U^dag]."""
    kets = _global_kets(spec)
    n = spec.N + 1
    keep_axes = [1 + j for j in spec.S_t]
    drop_axes = [ax for ax in range(n) if ax not in keep_axes]
    d_out = 2 ** spec.t
    flat = []
    for i in range(2):
        psi = np.transpose(kets[i], keep_axes + drop_axes).reshape(d_out, -1)
        flat.append(psi)

    def phi(unit):
        out = np.zeros((d_out, d_out), dtype=complex)
        for a in range(2):
            for b in range(2):
                if unit[a, b] != 0:
                    out += unit[a, b] * flat[a] @ flat[b].conj().T
        return out

    return choi_from_map(phi, 2)


def finite_env_channel(spec: FiniteEnvSpec, tol: float = 1e-12) -> MeasureAndPrepareChannel:
    """The simulated finite-environment dynamics in measure-and-prepare form.

    The circuit records only the computational-basis populations of the
    system, so images of off-diagonal matrix units vanish and the map is
    exactly ``rho -> sum_k <k|rho|k> Phi(|k><k|)``. This is checked, not assumed.
    """
    j = simulate_finite_env(spec)
    d_out = 2 ** spec.t
    for a in range(2):
        for b in range(2):
            if a != b:
                unit = np.zeros((2, 2))
                unit[a, b] = 1.0
                if np.max(np.abs(apply_choi(j, unit, 2))) > tol:
                    raise ValidationError("simulated dynamics is not measure-and-prepare in the computational basis")
    prepared = []
    for k in range(2):
        unit = np.zeros((2, 2))
        unit[k, k] = 1.0
        s = apply_choi(j, unit, 2)
        prepared.append((s + s.conj().T) / 2)
    assert prepared[0].shape == (d_out, d_out)
    return MeasureAndPrepareChannel(basis_povm(2), tuple(prepared))


def ideal_broadcast_for(spec: FiniteEnvSpec) -> MeasureAndPrepareChannel:
    """The infinite-environment reference: perfect broadcast onto the retained qubits."""
    return make_broadcast(BroadcastSpec(d_A=2, t=spec.t, noise=0.0))


# ---------------------------------------------------------------------------
# state spectrum broadcasting
# ---------------------------------------------------------------------------

@dataclass
class SsbReport:
    is_ssb: bool
    violations: list = field(default_factory=list)

    def __bool__(self):
        return self.is_ssb


def is_ssb_form(pointer_basis, joint: MeasureAndPrepareChannel, dims: Sequence[int],
                tol: float = 1e-8) -> SsbReport:
    """Check the spectrum-broadcast structure of a joint system + fragment channel.

    ``dims[0]`` is the system factor, ``dims[1:]`` the environment observers.
    Requires: the pointer is the projective measurement onto ``pointer_basis``;
    each prepared state is ``|k><k| (x) (x)_j sigma_k^{B_j}``; and for every
    observer the encodings have pairwise disjoint supports
    (``||sigma_k sigma_k'||_1 <= tol``).
    """
    dims = list(dims)
    basis = np.asarray(pointer_basis, dtype=complex)
    d = basis.shape[0]
    violations = []
    if int(np.prod(dims)) != joint.d_out:
        raise ValidationError(f"joint output dimension {joint.d_out} does not factor as {dims}")
    if dims[0] != d or joint.k_max != d or joint.d_in != d:
        violations.append(("shape", f"expected {d} outcomes with system factor of dimension {d}"))
        return SsbReport(False, violations)
    projectors = [np.outer(basis[:, k], basis[:, k].conj()) for k in range(d)]
    for k in range(d):
        dev = trace_norm(joint.pointer[k] - projectors[k])
        if dev > tol:
            violations.append(("pointer", k, dev))
    marginals = []
    for k, s in enumerate(joint.prepared):
        parts = [partial_trace(s, dims, [i]) for i in range(len(dims))]
        dev = trace_norm(s - tensor(*parts))
        if dev > tol:
            violations.append(("product", k, dev))
        dev = trace_norm(parts[0] - projectors[k])
        if dev > tol:
            violations.append(("system", k, dev))
        marginals.append(parts)
    for i in range(1, len(dims)):
        for k in range(d):
            for kk in range(k + 1, d):
                overlap = trace_norm(marginals[k][i] @ marginals[kk][i])
                if overlap > tol:
                    violations.append(("support", i, k, kk, overlap))
    return SsbReport(not violations, violations)
