"""Hermitian linear algebra and quantum-state primitives.

Matrices are plain ``numpy`` arrays. The validating constructors
(:func:`hermitian`, :func:`density_matrix`) return read-only complex copies so
that values can be shared freely once built. :class:`Povm` is the one
structured type here because its effects have to be checked together.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

# Tolerance hierarchy: representation checks, eigen-residuals, optimization certificates.
STRUCT_TOL = 1e-10
EIG_TOL = 1e-9
CERT_TOL = 1e-6


class ValidationError(ValueError):
    """An input violates a structural invariant (Hermiticity, PSD, trace, ...)."""


class PovmError(ValidationError):
    """A POVM is malformed. ``effect_index`` names the offending effect."""

    def __init__(self, message: str, effect_index: int | None = None):
        super().__init__(message)
        self.effect_index = effect_index


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def hermitian(a, tol: float = 1e-12) -> np.ndarray:
    """Validate a square Hermitian matrix and return a read-only complex copy."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValidationError(f"expected a non-empty square matrix, got shape {a.shape}")
    dev = np.max(np.abs(a - a.conj().T))
    if dev > tol:
        raise ValidationError(f"matrix is not Hermitian (max deviation {dev:.3g})")
    return _frozen(a)


def density_matrix(a, tol: float = STRUCT_TOL) -> np.ndarray:
    """Validate a density matrix: Hermitian, unit trace, PSD.

    Negative eigenvalues below ``-tol`` are rejected, never clipped.
    """
    a = hermitian(a, tol=max(tol, 1e-12))
    tr = np.trace(a).real
    if abs(tr - 1.0) > tol:
        raise ValidationError(f"trace is {tr:.12g}, expected 1")
    lmin = np.linalg.eigvalsh(a)[0]
    if lmin < -tol:
        raise ValidationError(f"matrix is not positive semidefinite (min eigenvalue {lmin:.3g})")
    return a


@dataclass(frozen=True)
class Povm:
    """Finite list of PSD effects summing to the identity.

    Zero effects are rejected unless ``allow_zero`` is set: pointer
    observables must not contain them, whereas an optimal discriminating
    measurement may legitimately never output some label.
    """

    effects: tuple

    def __init__(self, effects: Sequence, tol: float = STRUCT_TOL, allow_zero: bool = False):
        effects = list(effects)
        if not effects:
            raise PovmError("a POVM needs at least one effect")
        checked = []
        dim = None
        for i, e in enumerate(effects):
            try:
                e = hermitian(e, tol=max(tol, 1e-12))
            except ValidationError as exc:
                raise PovmError(f"effect {i}: {exc}", effect_index=i) from None
            if dim is None:
                dim = e.shape[0]
            elif e.shape[0] != dim:
                raise PovmError(f"effect {i} has dimension {e.shape[0]}, expected {dim}", effect_index=i)
            if not allow_zero and np.max(np.abs(e)) <= tol:
                raise PovmError(f"effect {i} is the zero matrix", effect_index=i)
            lmin = np.linalg.eigvalsh(e)[0]
            if lmin < -tol:
                raise PovmError(f"effect {i} is not positive semidefinite (min eigenvalue {lmin:.3g})",
                                effect_index=i)
            checked.append(e)
        dev = np.max(np.abs(sum(checked) - np.eye(dim)))
        if dev > tol:
            last = len(checked) - 1
            raise PovmError(
                f"effect {last} does not complete the resolution of the identity "
                f"(sum of effects deviates from I by {dev:.3g})", effect_index=last)
        object.__setattr__(self, "effects", tuple(checked))

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    def __len__(self) -> int:
        return len(self.effects)

    def __iter__(self):
        return iter(self.effects)

    def __getitem__(self, i):
        return self.effects[i]

    def probabilities(self, rho) -> np.ndarray:
        """Born-rule outcome distribution ``Tr(E_k rho)``."""
        rho = np.asarray(rho)
        return np.array([np.real(np.vdot(e, rho)) for e in self.effects])


def basis_povm(d: int, basis=None) -> Povm:
    """Rank-1 projective measurement onto the columns of ``basis`` (default: computational)."""
    u = np.eye(d, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
    return Povm([np.outer(u[:, k], u[:, k].conj()) for k in range(d)])


def ket_to_dm(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def tensor(*ops) -> np.ndarray:
    """Kronecker product of one or more square matrices."""
    return reduce(np.kron, [np.asarray(o) for o in ops])


def partial_trace(state, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every factor not listed in ``keep``.

    Works for any square operator on the composite space (not only density
    matrices), which the Choi construction relies on. Kept factors stay in
    their original order.
    """
    state = np.asarray(state)
    dims = [int(d) for d in dims]
    keep = sorted(set(int(k) for k in keep))
    n = len(dims)
    total = int(np.prod(dims))
    if state.shape != (total, total):
        raise ValidationError(f"state of shape {state.shape} does not match factor dims {dims}")
    if not keep:
        raise ValidationError("keep must name at least one factor")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValidationError(f"keep indices {keep} out of range for {n} factors")
    t = state.reshape(dims + dims)
    row = list(range(n))
    col = [n + i if i in keep else i for i in range(n)]
    out = [i for i in keep] + [n + i for i in keep]
    reduced = np.einsum(t, row + col, out)
    dk = int(np.prod([dims[i] for i in keep]))
    return reduced.reshape(dk, dk)


def trace_norm(a) -> float:
    """Sum of singular values (absolute eigenvalues for Hermitian input)."""
    a = np.asarray(a)
    if np.allclose(a, a.conj().T, atol=1e-13, rtol=0):
        return float(np.sum(np.abs(np.linalg.eigvalsh(a))))
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def hs_norm(a) -> float:
    """Hilbert-Schmidt (Frobenius) norm ``sqrt(Tr A^dag A)``."""
    return float(np.linalg.norm(np.asarray(a)))


def min_eigen(a) -> tuple[float, np.ndarray]:
    """Smallest eigenvalue of a Hermitian matrix and a unit eigenvector."""
    w, v = np.linalg.eigh(np.asarray(a))
    return float(w[0]), v[:, 0]


def max_eigen(a) -> tuple[float, np.ndarray]:
    w, v = np.linalg.eigh(np.asarray(a))
    return float(w[-1]), v[:, -1]


def psd_sqrt(a, pinv: bool = False, cutoff: float = 1e-12) -> np.ndarray:
    """Square root (or pseudo-inverse square root) of a PSD matrix."""
    w, v = np.linalg.eigh(np.asarray(a))
    w = np.clip(w, 0.0, None)
    if pinv:
        s = np.zeros_like(w)
        mask = w > cutoff * max(1.0, w[-1])
        s[mask] = 1.0 / np.sqrt(w[mask])
    else:
        s = np.sqrt(w)
    return (v * s) @ v.conj().T


def hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal (Hilbert-Schmidt) basis of d x d Hermitian matrices.

    Ordering: diagonal units first, then for each i < j the symmetric and
    antisymmetric off-diagonal elements scaled by 1/sqrt(2).
    """
    basis = []
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = 1.0
        basis.append(e)
    s = 1.0 / np.sqrt(2.0)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = e[j, i] = s
            basis.append(e)
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = -1j * s
            e[j, i] = 1j * s
            basis.append(e)
    return np.array(basis)


def hermitian_vec(a) -> np.ndarray:
    """Real coordinates of a Hermitian matrix in :func:`hermitian_basis`.

    Euclidean inner products of these vectors equal Hilbert-Schmidt inner
    products of the matrices.
    """
    a = np.asarray(a)
    d = a.shape[0]
    iu = np.triu_indices(d, 1)
    off = a[iu] * np.sqrt(2.0)
    out = np.empty(d * d)
    out[:d] = np.real(np.diag(a))
    out[d::2] = off.real
    out[d + 1::2] = -off.imag
    return out


def hermitian_unvec(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    d = int(round(np.sqrt(x.size)))
    return np.tensordot(x, hermitian_basis(d), axes=1)


# ---------------------------------------------------------------------------
# random sampling (tests, demos, scenario shorthand)
# ---------------------------------------------------------------------------

def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return ket_to_dm(psi)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Induced-measure random state (Hilbert-Schmidt measure at full rank)."""
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    rho = rho / np.trace(rho).real
    return (rho + rho.conj().T) / 2


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * (g + g.conj().T) / 2


def random_povm(d: int, m: int, rng: np.random.Generator) -> Povm:
    """Random m-outcome POVM: normalized Wishart effects S^{-1/2} G_k S^{-1/2}."""
    gs = []
    for _ in range(m):
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        gs.append(g @ g.conj().T)
    s_inv = psd_sqrt(sum(gs), pinv=True)
    effects = [s_inv @ g @ s_inv for g in gs]
    effects = [(e + e.conj().T) / 2 for e in effects]
    # absorb rounding so the sum is exactly I to machine precision
    effects[-1] = effects[-1] + (np.eye(d) - sum(effects))
    return Povm(effects)


def qubit_sic_povm() -> Povm:
    """Tetrahedral qubit SIC-POVM, effects |psi_b><psi_b| / 2."""
    return Povm([ket_to_dm(v) / 2 for v in qubit_sic_kets()])


def qubit_sic_kets() -> list[np.ndarray]:
    w = np.exp(2j * np.pi / 3)
    a = 1 / np.sqrt(3)
    b = np.sqrt(2 / 3)
    return [np.array([1, 0], dtype=complex),
            np.array([a, b]), np.array([a, b * w]), np.array([a, b * w * w])]


# ---------------------------------------------------------------------------
# text serialization: row-major lists of [re, im] pairs
# ---------------------------------------------------------------------------

def sig12(x: float) -> float:
    """Round to 12 significant digits (the precision of every exported file)."""
    return float(f"{float(x):.12g}")


def matrix_to_pairs(a, digits12: bool = False) -> list:
    a = np.asarray(a, dtype=complex)
    conv = sig12 if digits12 else float
    return [[[conv(z.real), conv(z.imag)] for z in row] for row in a]


def matrix_from_pairs(rows, where: str = "matrix") -> np.ndarray:
    """Inverse of :func:`matrix_to_pairs`. ``where`` prefixes error messages."""
    if not isinstance(rows, list) or not rows:
        raise ValidationError(f"{where}: expected a non-empty list of rows")
    n = len(rows)
    out = np.zeros((n, n), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise ValidationError(f"{where}[{i}]: expected a row of {n} [re, im] pairs")
        for j, z in enumerate(row):
            if (not isinstance(z, list) or len(z) != 2
                    or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in z)):
                raise ValidationError(f"{where}[{i}][{j}]: expected a [re, im] pair of numbers")
            out[i, j] = complex(z[0], z[1])
    return out
