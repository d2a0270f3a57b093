"""Small dense log-barrier solver for linear matrix inequalities.

Solves

    minimize    c . x
    subject to  L_i(x) = F0_i + sum_a x_a F_i[a]  >= 0   (PSD, every block i)

by the standard path-following barrier method: for increasing ``tau`` it
Newton-minimizes ``tau c.x - sum_i log det L_i(x)``. At a centred point the
matrices ``Z_i = L_i(x)^{-1} / tau`` are dual feasible and the duality gap is
``m / tau`` with ``m`` the total block size, so every caller gets a
primal-dual pair it can turn into a certificate.

Problem sizes in this package are tiny (a few hundred variables, blocks of
size <= 16), so the Hessian is formed densely.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla


class ConvergenceError(RuntimeError):
    """Iteration cap hit before the requested gap. ``result`` holds the best pair."""

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


@dataclass
class LmiBlock:
    const: np.ndarray          # (d, d) Hermitian
    coeffs: np.ndarray         # (n, d, d) Hermitian

    def at(self, x: np.ndarray) -> np.ndarray:
        return self.const + np.tensordot(x, self.coeffs, axes=1)


@dataclass
class LmiSolution:
    x: np.ndarray
    duals: list
    gap: float
    objective: float
    newton_steps: int
    converged: bool
    history: list = field(default_factory=list)


def _logdet_chol(mat):
    try:
        ch = np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        return None, None
    return 2.0 * np.sum(np.log(np.real(np.diag(ch)))), ch


def _barrier(blocks, x):
    total = 0.0
    chols = []
    for b in blocks:
        ld, ch = _logdet_chol(b.at(x))
        if ch is None:
            return np.inf, None
        total -= ld
        chols.append(ch)
    return total, chols


def solve(c, blocks: list[LmiBlock], x0, gap_tol: float = 1e-9, tau0: float = 1.0,
          mu: float = 10.0, max_newton: int = 2000, max_center: int = 60,
          newton_tol: float = 1e-10, callback=None) -> LmiSolution:
    """Barrier method from a strictly feasible ``x0``.

    ``callback(x, duals)`` runs after every centring. Late on the path the
    slack matrices are tiny and the duals lose relative precision, so callers
    use it to keep the best certificate seen rather than trusting the last one.

    Raises :class:`ConvergenceError` (carrying the last iterate) if the Newton
    budget runs out before ``m / tau <= gap_tol``.
    """
    c = np.asarray(c, dtype=float)
    x = np.array(x0, dtype=float)
    n = x.size
    m = sum(b.const.shape[0] for b in blocks)
    phi, chols = _barrier(blocks, x)
    if chols is None:
        raise ValueError("starting point is not strictly feasible")
    tau = tau0
    steps = 0
    history = []

    def duals_at(chols_, tau_):
        out = []
        for ch in chols_:
            inv = sla.cho_solve((ch, True), np.eye(ch.shape[0]))
            out.append((inv + inv.conj().T) / (2.0 * tau_))
        return out

    while True:
        # centring at fixed tau
        for _ in range(max_center):
            # Newton step from the scaled constraint matrix A (columns C^-1 F_a C^-H,
            # with L = C C^H): H = A^T A and grad = tau c - A^T e, e = stacked identities.
            # Least squares on A keeps cond(A) instead of cond(A)^2.
            a_rows = []
            e_rows = []
            scaled_blocks = []
            for b, ch in zip(blocks, chols):
                d = ch.shape[0]
                # X_a = C^-1 F_a, then C^-1 X_a^H = C^-1 F_a C^-H (Hermitian)
                xa = sla.solve_triangular(ch, b.coeffs.transpose(1, 0, 2).reshape(d, n * d), lower=True)
                xa_h = xa.reshape(d, n, d).transpose(1, 2, 0).conj()
                scaled = sla.solve_triangular(ch, xa_h.transpose(1, 0, 2).reshape(d, n * d), lower=True)
                flat = scaled.reshape(d, n, d).transpose(1, 0, 2).reshape(n, d * d)
                scaled_blocks.append(flat.reshape(n, d, d))
                a_rows.append(np.concatenate([flat.real, flat.imag], axis=1).T)
                eye = np.eye(d).reshape(-1)
                e_rows.append(np.concatenate([eye, np.zeros(d * d)]))
            amat = np.vstack(a_rows)
            evec = np.concatenate(e_rows)
            grad = tau * c - amat.T @ evec
            # A = QR: dx = R^-1 (Q^T e - R^-T tau c)
            q, r = np.linalg.qr(amat)
            diag = np.abs(np.diag(r))
            if diag.min() > 1e-14 * diag.max():
                w = sla.solve_triangular(r, tau * c, trans="T")
                dx = sla.solve_triangular(r, q.T @ evec - w)
            else:
                z = np.linalg.lstsq(amat.T, tau * c, rcond=None)[0]
                dx = np.linalg.lstsq(amat, evec - z, rcond=None)[0]
            dec = float(-grad @ dx)
            if not np.isfinite(dec) or dec / 2.0 <= newton_tol:
                break
            # along dx each scaled slack is I + s M, so the barrier increment is
            # -sum log(1 + s lam(M)): exact, and no factorization per trial step
            lam = np.concatenate([np.linalg.eigvalsh(np.tensordot(dx, sb, axes=1)) for sb in scaled_blocks])
            lam = lam.real
            step = 1.0
            if lam.min() < 0:
                step = min(1.0, 0.99 / -lam.min())
            accepted = False
            chols_new = None
            while step > 1e-12:
                inc = tau * step * (c @ dx) - np.sum(np.log1p(step * lam))
                if inc <= -0.25 * step * dec + 1e-13:
                    x_new = x + step * dx
                    phi_new, chols_new = _barrier(blocks, x_new)
                    if chols_new is not None:
                        accepted = True
                        break
                step *= 0.5
            steps += 1
            if not accepted:
                break
            x, phi, chols = x_new, phi_new, chols_new
            if steps >= max_newton:
                break
        gap = m / tau
        history.append((tau, float(c @ x), gap))
        if callback is not None:
            callback(x.copy(), duals_at(chols, tau))
        if gap <= gap_tol or steps >= max_newton:
            break
        tau *= mu

    sol = LmiSolution(x=x, duals=duals_at(chols, tau), gap=m / tau, objective=float(c @ x),
                      newton_steps=steps, converged=(m / tau) <= gap_tol, history=history)
    if not sol.converged:
        raise ConvergenceError(f"barrier method stopped at gap {sol.gap:.3g} after {steps} Newton steps",
                               result=sol)
    return sol
