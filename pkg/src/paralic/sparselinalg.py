"""Sparse assembly helpers and Krylov solvers.

Matrices live in scipy CSR format and are assembled from COO triplets with
duplicate summing.  The solvers are written out longhand so the nullspace
handling (pure Neumann problems have the constants in their kernel) and the
residual bookkeeping stay explicit and inspectable.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.sparse as sp


class SolverError(RuntimeError):
    """Raised when an iterative solve fails to reach the requested tolerance."""


@dataclass
class SolveInfo:
    converged: bool
    iterations: int
    relative_residual: float
    residual_history: list = field(default_factory=list)
    compatibility_error: float = 0.0


def assemble_csr(rows, cols, vals, n) -> sp.csr_matrix:
    """CSR matrix from triplets; repeated (i, j) entries are summed."""
    a = sp.coo_matrix((vals, (rows, cols)), shape=(n, n))
    return a.tocsr()


def write_matrix_market(path, a) -> None:
    scipy.io.mmwrite(str(path), sp.coo_matrix(a))


def cg_solve(
    a,
    b,
    tol: float = 1e-10,
    maxiter: int | None = None,
    x0=None,
    deflate_mean: bool = False,
) -> tuple:
    """Jacobi preconditioned CG for SPD systems.

    With ``deflate_mean`` the constants nullspace of a pure Neumann operator
    is projected out of the residual and the preconditioned residual every
    iteration, and the returned solution has zero mean.  The right hand side
    imbalance abs(sum(b)) is reported as the compatibility error.
    """
    b = np.asarray(b, float)
    n = len(b)
    if maxiter is None:
        maxiter = max(1000, 10 * n)
    diag = a.diagonal()
    if np.any(diag <= 0):
        raise SolverError("matrix diagonal must be positive for Jacobi scaling")
    minv = 1.0 / diag

    compat = abs(float(b.sum()))
    if deflate_mean:
        b = b - b.mean()
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(n), SolveInfo(True, 0, 0.0, [0.0], compat)

    x = np.zeros(n) if x0 is None else np.array(x0, float)
    if deflate_mean:
        x -= x.mean()
    r = b - a @ x
    if deflate_mean:
        r -= r.mean()
    z = minv * r
    if deflate_mean:
        z -= z.mean()
    p = z.copy()
    rz = float(r @ z)
    history = [float(np.linalg.norm(r)) / bnorm]
    for it in range(1, maxiter + 1):
        q = a @ p
        pq = float(p @ q)
        if pq <= 0:
            raise SolverError("matrix is not positive definite on the search space")
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        if deflate_mean:
            r -= r.mean()
        relres = float(np.linalg.norm(r)) / bnorm
        history.append(relres)
        if relres <= tol:
            if deflate_mean:
                x -= x.mean()
            return x, SolveInfo(True, it, relres, history, compat)
        z = minv * r
        if deflate_mean:
            z -= z.mean()
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(f"cg did not converge in {maxiter} iterations (relres={history[-1]:.3e})")


def bicgstab_solve(
    a,
    b,
    tol: float = 1e-10,
    maxiter: int | None = None,
    x0=None,
) -> tuple:
    """Jacobi preconditioned BiCGStab for nonsymmetric systems.

    Recurrence breakdowns (the shadow residual drifting orthogonal to the
    running residual) are healed by reseeding the shadow residual from the
    current residual; the solve fails only when reseeding stops reducing the
    residual or the iteration budget runs out.
    """
    b = np.asarray(b, float)
    n = len(b)
    if maxiter is None:
        maxiter = max(1000, 10 * n)
    diag = a.diagonal()
    if np.any(diag == 0):
        raise SolverError("matrix diagonal must be nonzero for Jacobi scaling")
    minv = 1.0 / diag

    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(n), SolveInfo(True, 0, 0.0, [0.0])

    x = np.zeros(n) if x0 is None else np.array(x0, float)
    r = b - a @ x
    history = [float(np.linalg.norm(r)) / bnorm]
    if history[-1] <= tol:
        return x, SolveInfo(True, 0, history[-1], history)

    eps = 1e-14
    it = 0
    stalls = 0
    while it < maxiter:
        rhat = r.copy()
        rho = alpha = omega = 1.0
        v = np.zeros(n)
        p = np.zeros(n)
        res_at_seed = history[-1]
        while it < maxiter:
            rho_new = float(rhat @ r)
            if abs(rho_new) < eps * float(np.linalg.norm(rhat) * np.linalg.norm(r)):
                break
            beta = (rho_new / rho) * (alpha / omega)
            rho = rho_new
            p = r + beta * (p - omega * v)
            phat = minv * p
            v = a @ phat
            denom = float(rhat @ v)
            if abs(denom) < eps * float(np.linalg.norm(rhat) * np.linalg.norm(v)):
                break
            alpha = rho / denom
            s = r - alpha * v
            it += 1
            snorm = float(np.linalg.norm(s)) / bnorm
            if snorm <= tol:
                x += alpha * phat
                history.append(snorm)
                return x, SolveInfo(True, it, snorm, history)
            shat = minv * s
            t = a @ shat
            tt = float(t @ t)
            if tt == 0.0:
                x += alpha * phat
                r = s
                history.append(snorm)
                break
            omega = float(t @ s) / tt
            x += alpha * phat + omega * shat
            r = s - omega * t
            relres = float(np.linalg.norm(r)) / bnorm
            history.append(relres)
            if relres <= tol:
                return x, SolveInfo(True, it, relres, history)
            if omega == 0.0:
                break
        if history[-1] < res_at_seed * (1.0 - 1e-12):
            stalls = 0
        else:
            stalls += 1
            if stalls >= 3:
                raise SolverError(
                    f"bicgstab stalled after {it} iterations (relres={history[-1]:.3e})"
                )
    raise SolverError(
        f"bicgstab did not converge in {maxiter} iterations (relres={history[-1]:.3e})"
    )
