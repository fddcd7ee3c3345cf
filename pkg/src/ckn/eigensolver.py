"""Lowest eigenpair of the weighted operator -Laplace - kappa V on the cylinder.

The discrete operator comes from the staggered-difference energy form, so it
is symmetric in the weighted inner product by construction.  Dirichlet rows
at s = +-L and the zero-weight pole nodes are eliminated; the remaining
generalized problem K u = lambda M u is scaled by M^(-1/2) into a standard
symmetric one and solved by shifted inverse power iteration (shift = current
Rayleigh quotient - 0.5) with a preconditioned conjugate-gradient inner
solve.  Every outer step is followed by a two-dimensional Rayleigh-Ritz
extraction on span{previous, new}, which makes the Rayleigh quotient
sequence non-increasing -- the fixed-point loop asserts exactly that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import NonConvergenceError, NormalizationError, PositivityError
from .model import CylinderGrid, Field

CG_RTOL = 1e-11


def _stiffness_full(grid: CylinderGrid) -> sp.csr_matrix:
    """Energy-form stiffness on the full tensor grid (pole rows are zero)."""
    if grid._stiffness is not None:
        return grid._stiffness
    n_s, n_phi = grid.n_s, grid.n_phi

    diag_s = np.full(n_s, 2.0)
    diag_s[0] = diag_s[-1] = 1.0
    T_s = sp.diags(
        [np.full(n_s - 1, -1.0), diag_s, np.full(n_s - 1, -1.0)], [-1, 0, 1]
    ) / grid.h_s

    cell = grid.mphi / grid.dphi**2
    diag_p = np.zeros(n_phi)
    diag_p[:-1] += cell
    diag_p[1:] += cell
    A_phi = sp.diags([-cell, diag_p, -cell], [-1, 0, 1])

    K = sp.kron(T_s, sp.diags(grid.wphi)) + sp.kron(sp.diags(grid.ws), A_phi)
    grid._stiffness = K.tocsr()
    return grid._stiffness


def _reduced_parts(grid: CylinderGrid):
    """Cache of (B0, mass, 1/sqrt(mass), diag(B0)) on the interior dofs."""
    if grid._reduced is None:
        K = _stiffness_full(grid)
        mask = interior_mask(grid)
        K_red = K[mask][:, mask].tocsr()
        m = np.outer(grid.ws, grid.wphi)[1:-1, 1:-1].ravel()
        isq = 1.0 / np.sqrt(m)
        S = sp.diags(isq)
        B0 = (S @ K_red @ S).tocsr()
        grid._reduced = (B0, m, isq, B0.diagonal())
    return grid._reduced


def interior_mask(grid: CylinderGrid) -> np.ndarray:
    """Flattened mask of solver dofs: interior in s, off-pole in phi."""
    m = np.zeros(grid.shape, dtype=bool)
    m[1:-1, 1:-1] = True
    return m.ravel()


def restrict(grid: CylinderGrid, values: np.ndarray) -> np.ndarray:
    return values[1:-1, 1:-1].ravel()


def embed(grid: CylinderGrid, vec: np.ndarray) -> np.ndarray:
    """Inverse of restrict: zero Dirichlet rows, pole rows copy neighbors."""
    full = np.zeros(grid.shape)
    full[1:-1, 1:-1] = vec.reshape(grid.n_s - 2, grid.n_phi - 2)
    full[:, 0] = full[:, 1]
    full[:, -1] = full[:, -2]
    full[0] = 0.0
    full[-1] = 0.0
    return full


@dataclass
class EigenResult:
    """Converged lowest eigenpair: unit-norm nonnegative ground state."""

    lam: float
    u: Field
    iterations: int
    residual: float


class CylinderOperator:
    """Handle for -Laplace - kappa V in symmetric (mass-scaled) form."""

    def __init__(self, kappa: float, V: Field, grid: CylinderGrid):
        self.grid = grid
        self.kappa = kappa
        self.V = V
        B0, m, isq, diag0 = _reduced_parts(grid)
        self.B0 = B0
        self.m = m
        self.isq = isq
        self.kv = kappa * restrict(grid, V.values) if kappa != 0.0 else np.zeros(B0.shape[0])
        self.diag = diag0 - self.kv
        self.n = B0.shape[0]

    def matvec(self, y: np.ndarray) -> np.ndarray:
        return self.B0 @ y - self.kv * y

    def matrix(self, shift: float = 0.0) -> sp.csc_matrix:
        return (self.B0 - sp.diags(self.kv + shift)).tocsc()

    def rayleigh(self, y: np.ndarray) -> float:
        return float(y @ self.matvec(y) / (y @ y))

    def to_field(self, y: np.ndarray) -> Field:
        return Field(self.grid, embed(self.grid, y * self.isq))

    def from_field(self, u: Field) -> np.ndarray:
        return restrict(self.grid, u.values) / self.isq

    def apply(self, u: Field) -> Field:
        """Pointwise action (M^-1 K - kappa V) u on the interior nodes.

        Boundary columns of the full stiffness contribute, so fields with
        nonzero values at s = +-L are differentiated against those values.
        """
        g = self.grid
        K = _stiffness_full(g)
        act = (K @ u.values.ravel())[interior_mask(g)] / self.m
        if self.kappa != 0.0:
            act = act - self.kv * restrict(g, u.values)
        return Field(g, embed(g, act))


def assemble_operator(kappa: float, V: Field, grid: CylinderGrid) -> CylinderOperator:
    """Build the sparse symmetric operator handle for -Laplace - kappa V."""
    _check_potential(kappa, V, grid)
    return CylinderOperator(kappa, V, grid)


def q_norm(V: Field) -> float:
    g = V.grid
    q = g.p / (g.p - 2.0)
    return float(g.integrate(np.abs(V.values) ** q) ** (1.0 / q))


def _check_potential(kappa: float, V: Field, grid: CylinderGrid):
    if kappa < 0:
        raise ValueError(f"kappa must be nonnegative, got {kappa}")
    if V.values.shape != grid.shape:
        raise ValueError("potential lives on a different grid")
    vmin = V.values.min()
    if vmin < -1e-12 * max(V.values.max(), 1.0):
        raise ValueError(f"potential has negative values (min {vmin})")
    nq = q_norm(V)
    if abs(nq - 1.0) > 1e-8:
        raise NormalizationError(f"potential q-norm is {nq}, expected 1 within 1e-8")


class SolverCache:
    """Reusable factorization preconditioning the shifted inner solves.

    The factorization uses symmetric mode (symmetric permutation, no
    pivoting), so applying it inside CG is a symmetric positive operation.
    One instance can be shared across fixed-point iterations and whole
    continuation runs; it is rebuilt only when requested (typically because
    CG slowed down after the operator drifted).
    """

    def __init__(self):
        self._factor = None
        self._grid_id = None

    def preconditioner(self, op: CylinderOperator, shift: float, rebuild: bool = False):
        if rebuild or self._factor is None or self._grid_id != id(op.grid):
            self._factor = splu(
                op.matrix(shift), permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.0, options={"SymmetricMode": True},
            )
            self._grid_id = id(op.grid)
        return self._factor.solve

    def invalidate(self):
        self._factor = None


def _pcg(op: CylinderOperator, shift: float, rhs: np.ndarray, x0: np.ndarray,
         rtol: float, max_iter: int, precond):
    """Preconditioned CG for (B - shift I) x = rhs.

    Returns (x, converged).  x is None when the shifted matrix is detected
    indefinite so the caller can lower the shift; converged False means
    the iteration budget ran out.
    """
    x = x0.copy()
    r = rhs - (op.matvec(x) - shift * x)
    bnorm = float(np.linalg.norm(rhs))
    if bnorm == 0.0:
        return x, True
    z = precond(r)
    pvec = z.copy()
    rz = float(r @ z)
    if rz <= 0.0:
        return None, False
    for _ in range(max_iter):
        if np.linalg.norm(r) <= rtol * bnorm:
            return x, True
        Ap = op.matvec(pvec) - shift * pvec
        pAp = float(pvec @ Ap)
        if pAp <= 0.0:
            return None, False
        alpha = rz / pAp
        x += alpha * pvec
        r -= alpha * Ap
        z = precond(r)
        rz_new = float(r @ z)
        if rz_new <= 0.0:
            return None, False
        pvec = z + (rz_new / rz) * pvec
        rz = rz_new
    return x, False


def _jacobi(op: CylinderOperator, shift: float):
    dinv = op.diag - shift
    if np.any(dinv <= 0.0):
        dinv = np.maximum(dinv, 1e-12)
    dinv = 1.0 / dinv
    return lambda r: dinv * r


def _inner_solve(op: CylinderOperator, shift: float, rhs: np.ndarray, x0: np.ndarray,
                 rtol: float, cache: SolverCache):
    x, ok = _pcg(op, shift, rhs, x0, rtol, 200, cache.preconditioner(op, shift))
    if ok:
        return x
    if x is None:
        # Indefiniteness may stem from a stale preconditioner; retry fresh.
        x, ok = _pcg(op, shift, rhs, x0, rtol, 200,
                     cache.preconditioner(op, shift, rebuild=True))
        if ok:
            return x
        if x is None:
            return None  # shifted operator itself indefinite: lower the shift
    else:
        x, ok = _pcg(op, shift, rhs, x, rtol, 200,
                     cache.preconditioner(op, shift, rebuild=True))
        if ok:
            return x
    x, ok = _pcg(op, shift, rhs, x if x is not None else x0, rtol, 20000,
                 _jacobi(op, shift))
    if x is None:
        return None
    if not ok:
        raise NonConvergenceError("inner CG stalled even with Jacobi fallback")
    return x


def _default_start(op: CylinderOperator) -> np.ndarray:
    g = op.grid
    blob = np.exp(-g.s**2)[:, None] * np.ones(g.n_phi)[None, :]
    y = restrict(g, blob) / op.isq
    return y / np.linalg.norm(y)


def lowest_eigenpair(kappa: float, V: Field, grid: CylinderGrid, tol: float = 1e-9,
                     warm_start: Field | None = None, max_iter: int = 200,
                     cg_rtol: float = CG_RTOL, cache: SolverCache | None = None) -> EigenResult:
    """Ground state of -Laplace - kappa V with unit weighted L2 norm.

    `warm_start` (a Field) is the previous iterate in fixed-point or
    continuation loops; reusing it typically cuts the outer iterations to
    a handful.  The returned Rayleigh quotient never exceeds the warm
    start's, which downstream monotonicity assertions rely on.
    """
    _check_potential(kappa, V, grid)
    op = CylinderOperator(kappa, V, grid)
    if cache is None:
        cache = SolverCache()

    if warm_start is not None:
        y = op.from_field(warm_start)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            raise ValueError("warm start is zero on the interior")
        y = y / ny
    else:
        y = _default_start(op)

    lam = op.rayleigh(y)
    resid = float(np.linalg.norm(op.matvec(y) - lam * y))
    it = 0
    for it in range(1, max_iter + 1):
        if resid <= tol:
            break
        sigma = lam - 0.5
        x = None
        for attempt in range(8):
            x = _inner_solve(op, sigma, y, y / max(lam - sigma, 1e-3), cg_rtol, cache)
            if x is not None:
                break
            sigma -= 2.0 * (attempt + 1)
            cache.invalidate()
        if x is None:
            raise NonConvergenceError("inner CG failed: shifted operator stayed indefinite")

        # Rayleigh-Ritz on span{y, x}: optimal combination, monotone quotient.
        # Near convergence the orthogonalized correction drowns in projection
        # roundoff, so switch to the plain (also monotone) inverse step.
        q1 = y
        v = x - (x @ q1) * q1
        v -= (v @ q1) * q1
        nv = np.linalg.norm(v)
        if nv > 1e-6 * np.linalg.norm(x):
            q2 = v / nv
            b1, b2 = op.matvec(q1), op.matvec(q2)
            H = np.array([[q1 @ b1, q1 @ b2], [q2 @ b1, q2 @ b2]])
            w, U = np.linalg.eigh(H)
            y = U[0, 0] * q1 + U[1, 0] * q2
        else:
            y = x
        y = y / np.linalg.norm(y)
        lam = op.rayleigh(y)
        resid = float(np.linalg.norm(op.matvec(y) - lam * y))
    else:
        raise NonConvergenceError(
            f"eigensolver did not reach residual {tol} in {max_iter} iterations "
            f"(last residual {resid:.3e})"
        )

    u = op.to_field(y)
    if grid.integrate(u.values) < 0:
        u = Field(grid, -u.values)
    nrm = np.sqrt(u.norm_sq())
    u = Field(grid, u.values / nrm)
    umin, umax = u.values.min(), u.values.max()
    if umin < -1e-8 * umax:
        raise PositivityError(
            f"computed ground state is not sign-definite (min {umin:.3e}, max {umax:.3e})"
        )
    return EigenResult(lam=lam, u=u, iterations=it, residual=resid)
