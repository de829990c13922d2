"""Dense brute-force reference: probe matrix-free operators into matrices.

Only meant for tiny problems. Elimination and power iteration are written out
here so the reference shares no code path with the solvers it checks.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, ConvergenceError, SingularMatrixError

MAX_DIMENSION = 2000


def probe_operator(apply_fn, d: int) -> np.ndarray:
    """Column j is ``apply_fn(e_j)``."""
    if d > MAX_DIMENSION:
        raise ConfigurationError(f"refusing to probe a {d}-dimensional operator (limit {MAX_DIMENSION})")
    out = np.empty((d, d))
    e = np.zeros(d)
    for j in range(d):
        e[j] = 1.0
        out[:, j] = apply_fn(e.copy())
        e[j] = 0.0
    return out


class LUFactors:
    """Row-pivoted LU of a square matrix, by Gaussian elimination."""

    def __init__(self, A):
        A = np.array(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ConfigurationError("dense_solve needs a square matrix")
        n = A.shape[0]
        scale = float(np.max(np.abs(A))) if A.size else 0.0
        perm = np.arange(n)
        for k in range(n):
            p = k + int(np.argmax(np.abs(A[k:, k])))
            if abs(A[p, k]) < 1e-14 * scale or scale == 0.0:
                raise SingularMatrixError(f"matrix is singular to working precision (column {k})")
            if p != k:
                A[[k, p]] = A[[p, k]]
                perm[[k, p]] = perm[[p, k]]
            A[k + 1:, k] /= A[k, k]
            A[k + 1:, k + 1:] -= np.outer(A[k + 1:, k], A[k, k + 1:])
        self.lu = A
        self.perm = perm

    def solve(self, b):
        lu = self.lu
        n = lu.shape[0]
        y = np.asarray(b, dtype=float)[self.perm].copy()
        for i in range(n):
            y[i] -= lu[i, :i] @ y[:i]
        for i in range(n - 1, -1, -1):
            y[i] = (y[i] - lu[i, i + 1:] @ y[i + 1:]) / lu[i, i]
        return y


def dense_solve(A, b) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    x = LUFactors(A).solve(b)
    bnorm = np.linalg.norm(b)
    res = np.linalg.norm(A @ x - b)
    if bnorm > 0 and res > 1e-10 * bnorm:
        raise SingularMatrixError(f"elimination lost accuracy: relative residual {res / bnorm:.2e}")
    return x


def dense_dominant_eig(A, B=None, *, tol=1e-12, max_steps=100000, x0=None):
    """Dominant eigenpair by power iteration.

    With ``B`` the iteration is ``x <- A^-1 B x`` and the returned value is
    the dominant eigenvalue of ``A^-1 B`` (k for the pair (I - TMS, TMF)).
    Raises when the iteration oscillates or fails to settle.
    """
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    if B is None:
        step = lambda v: A @ v  # noqa: E731
    else:
        B = np.asarray(B, dtype=float)
        lu = LUFactors(A)
        step = lambda v: lu.solve(B @ v)  # noqa: E731
    x = np.ones(d) if x0 is None else np.asarray(x0, dtype=float).copy()
    x /= np.linalg.norm(x)
    lam = None
    history = [x]
    for it in range(max_steps):
        y = step(x)
        ynorm = np.linalg.norm(y)
        if ynorm == 0.0:
            return 0.0, x
        new_lam = float(x @ y)  # x has unit norm
        x_new = y / ynorm
        if new_lam < 0:
            x_new = -x_new
        dx = min(np.linalg.norm(x_new - x), np.linalg.norm(x_new + x))
        converged = lam is not None and abs(new_lam - lam) <= tol * abs(new_lam) and dx <= tol
        lam = new_lam
        x = x_new
        if converged:
            break
        history.append(x)
        if len(history) > 3:
            history.pop(0)
            # period-2 pattern: back where we were two steps ago but not one step ago
            if (np.linalg.norm(history[-1] - history[-3]) < 1e-10
                    and np.linalg.norm(history[-1] - history[-2]) > 1e-6
                    and np.linalg.norm(history[-1] + history[-2]) > 1e-6):
                raise ConvergenceError("power iteration oscillates: dominant eigenvalue is not real and simple")
    else:
        raise ConvergenceError(f"power iteration did not converge in {max_steps} steps")
    # polish: Rayleigh quotient of the converged vector
    y = step(x)
    lam = float(x @ y) / float(x @ x)
    if x[np.argmax(np.abs(x))] < 0:
        x = -x
    return lam, x


def transport_matrices(model, quadrature=None, shift=None):
    """Dense (I - TM S~), TMF, TM and S~ for a small model."""
    from .operators import apply_A, apply_B, apply_fission, apply_scatter, apply_TM
    from .sweep import default_quadrature

    quad = quadrature or default_quadrature(model)
    d = model.size
    rho = 0.0 if shift is None else getattr(shift, "rho", shift)
    return {
        "A": probe_operator(lambda v: apply_A(model, quad, v, shift), d),
        "B": probe_operator(lambda v: apply_B(model, quad, v), d),
        "T": probe_operator(lambda v: apply_TM(model, quad, v), d),
        "S": probe_operator(lambda v: apply_scatter(model, v, rho=rho), d),
        "F": probe_operator(lambda v: apply_fission(model, v), d),
    }


def oracle_eigenpair(model, quadrature=None):
    """k and normalized flux from the dense generalized pair."""
    from .operators import apply_A, apply_B
    from .sweep import default_quadrature

    quad = quadrature or default_quadrature(model)
    d = model.size
    A = probe_operator(lambda v: apply_A(model, quad, v), d)
    B = probe_operator(lambda v: apply_B(model, quad, v), d)
    k, phi = dense_dominant_eig(A, B)
    return k, phi / np.linalg.norm(phi), A, B
