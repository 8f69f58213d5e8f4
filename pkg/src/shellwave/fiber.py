"""Nystrom discretization of the fiber integral operators on (-1, 1).

Every kernel in scope splits exactly as

    K(t, s) = S(t - s) + sign(t - s) * O(t - s)

with S, O entire (exponentials of |t - s| decompose via
e^{i k |u|} = cos(k u) + sign(u) sin(k u)).  The smooth part is discretized
by plain Gauss-Legendre Nystrom; the sign part by product quadrature that
integrates sign(tau - s) * polynomial exactly through Legendre
antiderivatives.  This keeps spectral accuracy despite the kink and makes
the sign-kernel operator exactly skew-symmetric at the matrix level.

Matrices are stored with symmetric sqrt-weight scaling, so the matrix
2-norm is the discretized L^2 operator norm and composition is plain
matrix multiplication.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.sparse.linalg

from .dirac import DiracRep
from .errors import DivergentBoundError, DomainError, SingularError
from .green import FiberContext

__all__ = [
    "QuadratureGrid", "gauss_legendre_grid", "ProfileQ", "half_indicator",
    "tabulated_profile", "KernelMatrix", "op_frak_D", "op_frak_H", "op_T",
    "volterra_radius", "inverse_I_plus", "schur_bound",
]


# ---------------------------------------------------------------------------
# grid and Legendre machinery
# ---------------------------------------------------------------------------

def _legendre_rows(tau: np.ndarray, n: int) -> np.ndarray:
    """P_k(tau) for k = 0..n, shape (len(tau), n+1)."""
    return np.polynomial.legendre.legvander(tau, n)


@dataclass(eq=False)
class QuadratureGrid:
    """Gauss-Legendre nodes/weights on (-1, 1) plus exact sign-quadrature
    tables (coef transform, node antiderivatives, cumulative matrix)."""
    n: int
    nodes: np.ndarray
    weights: np.ndarray
    sqrt_w: np.ndarray
    coef: np.ndarray       # Legendre coefficients of the Lagrange basis
    sign_nodes: np.ndarray  # Sigma[i, j] = int sign(t_i - s) l_j(s) ds
    cum: np.ndarray         # Cum[i, j] = int_{-1}^{t_i} l_j(s) ds

    def antider_rows(self, tau) -> np.ndarray:
        """J[r, k] = int_{-1}^{tau_r} P_k, for k = 0..n-1."""
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        p = _legendre_rows(tau, self.n)
        j = np.empty((len(tau), self.n))
        j[:, 0] = tau + 1.0
        ks = np.arange(1, self.n)
        j[:, 1:] = (p[:, 2:self.n + 1] - p[:, 0:self.n - 1]) / (2 * ks + 1)
        return j

    def signed_weights(self, tau) -> np.ndarray:
        """sigma[r, j] = int_{-1}^{1} sign(tau_r - s) l_j(s) ds, exact."""
        j = self.antider_rows(np.clip(tau, -1.0, 1.0))
        return 2.0 * (j @ self.coef) - self.weights[None, :]

    def interp_rows(self, tau) -> np.ndarray:
        """l_j(tau_r): evaluation of the Lagrange basis off the nodes."""
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        return _legendre_rows(tau, self.n - 1) @ self.coef

    def cum_rows(self, tau) -> np.ndarray:
        """rows of int_{-1}^{tau_r} l_j(s) ds."""
        return self.antider_rows(tau) @ self.coef

    def cumulative_at(self, tau, values: np.ndarray) -> np.ndarray:
        """int_{-1}^{tau} (interpolant of values), vectorized over tau."""
        return self.cum_rows(tau) @ values


def gauss_legendre_grid(n: int) -> QuadratureGrid:
    if n < 8:
        raise DomainError(f"need at least 8 nodes, got {n}")
    nodes, weights = np.polynomial.legendre.leggauss(n)
    # Lagrange basis in the Legendre basis: l_j = sum_k coef[k, j] P_k,
    # coef[k, j] = (2k+1)/2 * w_j P_k(t_j); exact because deg P_k l_j <= 2n-2
    p = _legendre_rows(nodes, n - 1)            # (n, n): P_k(t_j) for k < n
    coef = ((2 * np.arange(n) + 1) / 2.0)[:, None] * (weights[None, :] * p.T)
    grid = QuadratureGrid(n=n, nodes=nodes, weights=weights,
                          sqrt_w=np.sqrt(weights), coef=coef,
                          sign_nodes=np.empty(0), cum=np.empty(0))
    grid.sign_nodes = grid.signed_weights(nodes)
    grid.cum = 0.5 * (grid.sign_nodes + weights[None, :])
    return grid


# ---------------------------------------------------------------------------
# interaction profiles
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class ProfileQ:
    """Nonnegative profile with unit mass on (-1, 1), tabulated on a grid."""
    kind: str
    values: np.ndarray
    sup_norm: float

    def primitive_at_nodes(self, grid: QuadratureGrid) -> np.ndarray:
        """Q(t) = int_{-1}^{t} q - 1/2 at the grid nodes."""
        return grid.cum @ self.values - 0.5


def half_indicator(grid: QuadratureGrid) -> ProfileQ:
    return ProfileQ(kind="half", values=np.full(grid.n, 0.5), sup_norm=0.5)


def tabulated_profile(grid: QuadratureGrid, values) -> ProfileQ:
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n,):
        raise DomainError("profile values must be given at the grid nodes")
    if np.any(values < 0.0):
        raise DomainError("profile must be nonnegative")
    mass = float(grid.weights @ values)
    if mass <= 0.0:
        raise DomainError("profile must have positive mass")
    values = values / mass
    return ProfileQ(kind="tabulated", values=values,
                    sup_norm=float(values.max()))


# ---------------------------------------------------------------------------
# weighted kernel matrices
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class KernelMatrix:
    """Dense matrix of a discretized integral operator, sqrt-weight scaled
    so that the 2-norm equals the discretized operator norm."""
    mat: np.ndarray
    nspin: int

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def norm(self) -> float:
        if self.dim <= 1200:
            return float(np.linalg.svd(self.mat, compute_uv=False)[0])
        return power_norm([(self.mat, None)])


def power_norm(terms, tol: float = 1e-10) -> float:
    """2-norm of sum_i P_i Q_i (Q_i = None means the identity) by Lanczos
    on the normal operator (robust against clustered top singular values);
    deterministic start vector."""
    ncols = terms[0][0].shape[1] if terms[0][1] is None else terms[0][1].shape[1]

    def apply(v):
        out = None
        for p, q in terms:
            w = p @ (v if q is None else q @ v)
            out = w if out is None else out + w
        return out

    def apply_h(v):
        out = None
        for p, q in terms:
            w = p.conj().T @ v
            if q is not None:
                w = q.conj().T @ w
            out = w if out is None else out + w
        return out

    upper = sum(np.linalg.norm(p) * (1.0 if q is None else np.linalg.norm(q))
                for p, q in terms)
    if upper == 0.0:
        return 0.0
    v0 = np.full(ncols, 1.0) / np.sqrt(ncols)
    op = scipy.sparse.linalg.LinearOperator(
        (ncols, ncols),
        matvec=lambda v: apply_h(apply(v.astype(complex))),
        dtype=complex)
    try:
        vals = scipy.sparse.linalg.eigsh(op, k=1, which="LA", v0=v0,
                                         tol=tol, maxiter=20000,
                                         return_eigenvectors=False)
        lam = float(vals[0])
    except scipy.sparse.linalg.ArpackNoConvergence as exc:
        if exc.eigenvalues is not None and len(exc.eigenvalues):
            lam = float(exc.eigenvalues[-1])
        else:
            raise
    return math.sqrt(max(lam, 0.0))


def _kron(node_mat: np.ndarray, spin_mat: np.ndarray) -> np.ndarray:
    return np.kron(node_mat, spin_mat)


def _weighted_smooth(grid: QuadratureGrid, node_kernel: np.ndarray) -> np.ndarray:
    return grid.sqrt_w[:, None] * node_kernel * grid.sqrt_w[None, :]


def _weighted_t0(grid: QuadratureGrid) -> np.ndarray:
    """Weighted matrix of the kernel sign(t - s); exactly antisymmetric."""
    m = grid.sqrt_w[:, None] * grid.sign_nodes / grid.sqrt_w[None, :]
    return 0.5 * (m - m.T)


def _sign_sandwich(grid: QuadratureGrid, t0w: np.ndarray, f: np.ndarray,
                   g: np.ndarray) -> np.ndarray:
    """Weighted matrix of the kernel sign(t-s) f(t) g(s) by product quadrature."""
    return f[:, None] * t0w * g[None, :]


# The cos/sin (cosh/sinh) separation used below has factors growing like
# e^{|Im kappa|}; past this stiffness the split cancels and the directional
# exponential-moment quadrature takes over.
_SPLIT_STIFFNESS = 5.0


def _exp_moments(grid: QuadratureGrid, a: complex, taus: np.ndarray) -> np.ndarray:
    """m[r, k] = int_{-1}^{tau_r} e^{a (s - tau_r)} P_k(s) ds, k = 0..n-1.

    Re a >= 0, so the integrand is bounded by |P_k|.  The three-term
    recurrence a m_{k+1} + (2k+1) m_k - a m_{k-1} = P_{k+1}(tau) - P_{k-1}(tau)
    is solved as a tridiagonal system with decay closure (Olver's method),
    which extracts the minimal solution stably for any stiffness.
    """
    import scipy.linalg as sla
    n = grid.n
    pad = max(24, int(1.5 * abs(a)) + 8)
    kk = n + pad                       # m_0 .. m_kk with m_kk ~ 0
    p = _legendre_rows(taus, kk + 1)   # (R, kk+2)
    m0 = (1.0 - np.exp(-a * (taus + 1.0))) / a
    # unknowns m_1 .. m_{kk-1}; equations k = 1 .. kk-1 with m_kk = 0
    ks = np.arange(1, kk)
    diag = (2.0 * ks + 1.0).astype(complex)
    ab = np.zeros((3, kk - 1), dtype=complex)
    ab[0, 1:] = a          # super-diagonal (coef of m_{k+1})
    ab[1, :] = diag
    ab[2, :-1] = -a        # sub-diagonal (coef of m_{k-1})
    rhs = (p[:, 2:kk + 1] - p[:, 0:kk - 1]).astype(complex).T  # (kk-1, R)
    rhs[0, :] += a * m0
    sol = sla.solve_banded((1, 1), ab, rhs)   # (kk-1, R)
    out = np.empty((len(taus), n), dtype=complex)
    out[:, 0] = m0
    out[:, 1:] = sol[: n - 1, :].T
    return out


def _directional_rows(grid: QuadratureGrid, a: complex, taus=None):
    """Exact product-quadrature row matrices for one-sided exponentials.

    Returns (L, R) with L[r, j] = int_{-1}^{tau_r} e^{a (s - tau_r)} l_j(s) ds
    and R[r, j] = int_{tau_r}^{1} e^{a (tau_r - s)} l_j(s) ds.
    """
    taus = grid.nodes if taus is None else np.asarray(taus, dtype=float)
    mom_l = _exp_moments(grid, a, taus)
    mom_r = _exp_moments(grid, a, -taus)
    # reflection: int_t^1 e^{a(t-s)} P_k(s) ds = (-1)^k int_{-1}^{-t} e^{a(s'+t)} P_k(-s') ds'
    parity = (-1.0) ** np.arange(grid.n)
    mom_r = mom_r * parity[None, :]
    left = mom_l @ grid.coef
    right = mom_r @ grid.coef
    return left, right


def _weighted_rows(grid: QuadratureGrid, rows: np.ndarray) -> np.ndarray:
    return grid.sqrt_w[:, None] * rows / grid.sqrt_w[None, :]


def _split_pieces(ctx: FiberContext):
    """P, Q with fiber kernel (P + sign(u) Q) e^{i k |u|}."""
    k = ctx.k
    p = 1j * ctx.m_matrix() / (2.0 * k)
    q = 0.5j * ctx.alpha_normal
    return p, q


def op_frak_D(ctx: FiberContext, grid: QuadratureGrid, eps: float) -> KernelMatrix:
    """Fiber operator with kernel (P + sign(t-s) Q) e^{i k |eps (t-s)|},
    P = i(alpha'.xi' + m beta + z)/(2k), Q = i alpha_normal / 2."""
    if eps < 0.0:
        raise DomainError("eps must be nonnegative")
    p, q = _split_pieces(ctx)
    ka = eps * ctx.k
    if 2.0 * abs(ka.imag) > _SPLIT_STIFFNESS:
        # kernel is (P+Q) e^{i ka (t-s)} for s < t and (P-Q) e^{i ka (s-t)} for s > t
        left, right = _directional_rows(grid, -1j * ka)
        mat = _kron(_weighted_rows(grid, left), p + q)
        mat += _kron(_weighted_rows(grid, right), p - q)
        return KernelMatrix(mat=mat, nspin=ctx.rep.n)
    # exact split: e^{i ka |u|} = cos(ka u) + sign(u) sin(ka u)
    t = grid.nodes
    u = t[:, None] - t[None, :]
    mat = _kron(_weighted_smooth(grid, np.cos(ka * u)), p)
    mat += _kron(_weighted_smooth(grid, np.sin(ka * u)), 1j * q)
    t0w = _weighted_t0(grid)
    ct, st = np.cos(ka * t), np.sin(ka * t)
    # sign(u) sin(ka u) -> st x ct - ct x st ; sign(u) cos(ka u) -> ct x ct + st x st
    odd_sin = (_sign_sandwich(grid, t0w, st, ct)
               - _sign_sandwich(grid, t0w, ct, st))
    odd_cos = (_sign_sandwich(grid, t0w, ct, ct)
               + _sign_sandwich(grid, t0w, st, st))
    mat += _kron(odd_sin, 1j * p) + _kron(odd_cos, q)
    return KernelMatrix(mat=mat, nspin=ctx.rep.n)


def op_frak_H(rho: float, w_prime, grid: QuadratureGrid,
              rep: DiracRep) -> KernelMatrix:
    """Self-adjoint auxiliary operator with kernel
    (alpha'.w' + i alpha_normal sign(t-s)) e^{-rho |t-s|} / 2."""
    if rho <= 0.0:
        raise DomainError("rho must be positive")
    w_prime = np.asarray(w_prime, dtype=float)
    a_m = sum(rep.alphas[j] * w_prime[j] for j in range(rep.theta - 1))
    b_m = rep.alphas[rep.theta - 1]
    if 2.0 * rho > _SPLIT_STIFFNESS:
        # (A + iB)/2 e^{-rho(t-s)} for s < t and (A - iB)/2 e^{-rho(s-t)} for s > t
        left, right = _directional_rows(grid, complex(rho))
        mat = _kron(_weighted_rows(grid, left), 0.5 * (a_m + 1j * b_m))
        mat += _kron(_weighted_rows(grid, right), 0.5 * (a_m - 1j * b_m))
        mat = 0.5 * (mat + mat.conj().T)   # self-adjoint operator
        return KernelMatrix(mat=mat, nspin=rep.n)
    t = grid.nodes
    u = t[:, None] - t[None, :]
    # e^{-rho|u|} = cosh(rho u) - sign(u) sinh(rho u)
    mat = _kron(_weighted_smooth(grid, np.cosh(rho * u)), 0.5 * a_m)
    mat += _kron(_weighted_smooth(grid, np.sinh(rho * u)), -0.5j * b_m)
    t0w = _weighted_t0(grid)
    ch, sh = np.cosh(rho * t), np.sinh(rho * t)
    sg_cosh = (_sign_sandwich(grid, t0w, ch, ch)
               - _sign_sandwich(grid, t0w, sh, sh))
    sg_sinh = (_sign_sandwich(grid, t0w, sh, ch)
               - _sign_sandwich(grid, t0w, ch, sh))
    mat += _kron(sg_sinh, -0.5 * a_m) + _kron(sg_cosh, 0.5j * b_m)
    return KernelMatrix(mat=mat, nspin=rep.n)


def op_T(grid: QuadratureGrid, rep: DiracRep, nu_matrix) -> KernelMatrix:
    """Kernel (i/2) sign(t-s) nu_matrix."""
    nu_matrix = np.asarray(nu_matrix, dtype=complex)
    return KernelMatrix(mat=_kron(_weighted_t0(grid), 0.5j * nu_matrix),
                        nspin=nu_matrix.shape[0])


def multiplication_matrix(grid: QuadratureGrid, q: ProfileQ,
                          spin_mat: np.ndarray) -> np.ndarray:
    """Weighted matrix of multiplication by q(t) * spin_mat (exact)."""
    return _kron(np.diag(q.values), np.asarray(spin_mat, dtype=complex))


def volterra_radius(rho: float, w_prime, q: ProfileQ, grid: QuadratureGrid,
                    rep: DiracRep) -> float:
    """Spectral radius of sqrt(q) H_{rho,w'} sqrt(q) (Hermitian)."""
    h = op_frak_H(rho, w_prime, grid, rep).mat
    sq = _kron(np.diag(np.sqrt(q.values)), np.eye(rep.n))
    m = sq @ h @ sq
    m = 0.5 * (m + m.conj().T)
    if m.shape[0] <= 900:
        return float(np.max(np.abs(np.linalg.eigvalsh(m))))
    v0 = np.full(m.shape[0], 1.0)
    vals = scipy.sparse.linalg.eigsh(m, k=1, which="LM", v0=v0,
                                     return_eigenvectors=False, tol=1e-10)
    return float(abs(vals[0]))


def inverse_I_plus(K: KernelMatrix, Q, q: ProfileQ, grid: QuadratureGrid):
    """(I + K Q q)^{-1} as a KernelMatrix together with its operator norm.

    Raises SingularError when the condition estimate exceeds 1e12.
    """
    Q = np.asarray(Q, dtype=complex)
    m = np.eye(K.dim, dtype=complex) + K.mat @ multiplication_matrix(grid, q, Q)
    sv = scipy.linalg.svdvals(m)
    if sv[-1] == 0.0 or sv[0] / sv[-1] > 1e12:
        cond = np.inf if sv[-1] == 0.0 else sv[0] / sv[-1]
        raise SingularError(
            f"condition {cond:.3e} exceeds 1e12 "
            "(critical or near-critical coupling)")
    try:
        lu, piv = scipy.linalg.lu_factor(m)
    except scipy.linalg.LinAlgError as exc:
        raise SingularError("I + K Q q is singular") from exc
    inv = scipy.linalg.lu_solve((lu, piv), np.eye(K.dim, dtype=complex))
    return KernelMatrix(mat=inv, nspin=K.nspin), float(1.0 / sv[-1])


def schur_bound(kernel_bound, domain_dim: int) -> float:
    """L^1 norm of a radial dominating kernel |k(x-y)| <= kb(|x-y|):
    an upper bound for the operator norm on L^2(R^dim)."""
    if domain_dim == 1:
        surface = 2.0
    elif domain_dim == 2:
        surface = 2.0 * np.pi
    else:
        raise DomainError("domain_dim must be 1 or 2")

    def integrand(r):
        return kernel_bound(r) * r ** (domain_dim - 1)

    import warnings as _warnings
    total = 0.0
    for a, b in ((0.0, 1.0), (1.0, np.inf)):
        with _warnings.catch_warnings():
            _warnings.simplefilter("error", scipy.integrate.IntegrationWarning)
            try:
                val, err = scipy.integrate.quad(integrand, a, b, limit=400)
            except scipy.integrate.IntegrationWarning as exc:
                raise DivergentBoundError(
                    "dominating kernel integral did not converge") from exc
        if not np.isfinite(val):
            raise DivergentBoundError("dominating kernel is not integrable")
        if err > max(1e-6 * abs(val), 1e-9):
            raise DivergentBoundError(
                f"quadrature failed to converge (err {err:.2e})")
        total += val
    bound = surface * total
    if bound > 1e12:
        raise DivergentBoundError(f"L1 bound {bound:.3e} exceeds 1e12")
    return bound
