"""Dirac matrices, rotated frames, and the 2x2 transfer matrices of the
piecewise-constant fiber problem."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateFiberError, DimensionError, DomainError,
                     FrameError, SquareNotScalarError)
from .special import branch_sqrt, sinc_c

__all__ = [
    "SIGMA1", "SIGMA2", "SIGMA3",
    "DiracRep", "dirac_rep", "alpha_dot", "scalar_square_exp",
    "FiberTransferMatrices", "fiber_transfer",
]

SIGMA1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA2 = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

_FRAME_TOL = 1e-12


def _base_matrices(theta: int):
    if theta == 2:
        return [SIGMA1, SIGMA2], SIGMA3
    if theta == 3:
        zero = np.zeros((2, 2), dtype=complex)
        alphas = [np.block([[zero, s], [s, zero]]) for s in (SIGMA1, SIGMA2, SIGMA3)]
        beta = np.block([[np.eye(2), zero], [zero, -np.eye(2)]]).astype(complex)
        return alphas, beta
    raise DimensionError(f"theta must be 2 or 3, got {theta}")


@dataclass(frozen=True, eq=False)
class DiracRep:
    """Dirac matrices in a rotated frame: alphas[j] = alpha . (frame e_j)."""
    theta: int
    n: int
    alphas: tuple
    beta: np.ndarray
    frame: np.ndarray


def dirac_rep(theta: int, frame=None) -> DiracRep:
    base, beta = _base_matrices(theta)
    if frame is None:
        frame = np.eye(theta)
    frame = np.asarray(frame, dtype=float)
    if frame.shape != (theta, theta):
        raise FrameError(f"frame must be {theta}x{theta}")
    if np.max(np.abs(frame.T @ frame - np.eye(theta))) > _FRAME_TOL:
        raise FrameError("frame is not orthogonal")
    if abs(np.linalg.det(frame) - 1.0) > _FRAME_TOL:
        raise FrameError("frame must have determinant 1")
    alphas = tuple(
        sum(base[l] * frame[l, j] for l in range(theta)) for j in range(theta)
    )
    n = 2 if theta == 2 else 4
    return DiracRep(theta=theta, n=n, alphas=alphas, beta=beta, frame=frame)


def alpha_dot(rep: DiracRep, v) -> np.ndarray:
    """sum_j alphas[j] * v[j] in the representation's frame."""
    v = np.asarray(v)
    if v.shape != (rep.theta,):
        raise DimensionError(f"vector must have length {rep.theta}")
    out = np.zeros((rep.n, rep.n), dtype=complex)
    for j in range(rep.theta):
        out += rep.alphas[j] * v[j]
    return out


def scalar_square_exp(m: np.ndarray, s) -> np.ndarray:
    """exp(M) for a matrix whose square is the scalar s times the identity.

    Uses exp(M) = cosh(sqrt(s)) I + (sinh(sqrt(s))/sqrt(s)) M.
    """
    m = np.asarray(m, dtype=complex)
    s = complex(s)
    nn = m.shape[0]
    if np.linalg.norm(m @ m - s * np.eye(nn)) > 1e-10 * max(1.0, abs(s)):
        raise SquareNotScalarError("matrix square is not the given scalar")
    r = branch_sqrt(s)
    # sinh(r)/r = sinc_c(i r), stable near r = 0
    return np.cosh(r) * np.eye(nn) + sinc_c(1j * r) * m


@dataclass(frozen=True, eq=False)
class FiberTransferMatrices:
    """Free-region matrix A and potential-region matrix B of the fiber ODE
    u' = A u (|x| > eps), u' = B u (|x| < eps)."""
    a: np.ndarray
    b: np.ndarray
    xi: float
    m: float
    eta: float
    tau: float
    eps: float
    upsilon: float
    mu: complex
    a_plus: np.ndarray
    a_minus: np.ndarray


def fiber_transfer(xi: float, m: float, eta: float, tau: float,
                   eps: float) -> FiberTransferMatrices:
    """Transfer matrices for -i s1 d/dx + xi s2 + m s3 + (eta + tau s3) q/eps.

    A = [[xi, im], [-im, -xi]], B = A - i s1 (eta I + tau s3)/(2 eps);
    (2iB eps)^2 = mu^2 I with mu = sqrt(d - 4 eps^2 ups^2 - 4 eps tau m).
    """
    if eps <= 0.0:
        raise DomainError(f"eps must be positive, got {eps}")
    if xi == 0.0 and m == 0.0:
        raise DegenerateFiberError("xi = m = 0 has no eigenbasis")
    a = np.array([[xi, 1j * m], [-1j * m, -xi]], dtype=complex)
    q = eta * np.eye(2) + tau * SIGMA3
    b = a - 1j * SIGMA1 @ q / (2.0 * eps)
    ups = float(np.hypot(xi, m))
    d = eta * eta - tau * tau
    mu = branch_sqrt(d - 4.0 * eps * eps * ups * ups - 4.0 * eps * tau * m)
    a_plus = np.array([-1j * m, xi - ups], dtype=complex)
    a_minus = np.array([xi - ups, -1j * m], dtype=complex)
    return FiberTransferMatrices(a=a, b=b, xi=xi, m=m, eta=eta, tau=tau,
                                 eps=eps, upsilon=ups, mu=mu,
                                 a_plus=a_plus, a_minus=a_minus)
