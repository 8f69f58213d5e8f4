"""Free-Dirac Green functions: the full-space kernel in 2D/3D and its
partial Fourier transform in the direction tangential to a flat interface
(the fiber Green kernel)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dirac import DiracRep, dirac_rep
from .errors import DomainError, OriginError, ZeroDisplacementError
from .special import branch_sqrt, bessel_k01_arr

__all__ = [
    "FiberContext", "make_context", "green_full", "fiber_green",
    "fiber_boundary_matrix",
]


@dataclass(frozen=True, eq=False)
class FiberContext:
    """Everything a fiber (fixed tangential momentum) computation needs.

    rep.alphas[:theta-1] are the tangential matrices, rep.alphas[theta-1]
    the normal one. k = sqrt(z^2 - m^2 - |xi'|^2) has Im k > 0, so fiber
    kernels decay like exp(-Im k |s|).
    """
    theta: int
    m: float
    z: complex
    xi_mag: float
    w_prime: np.ndarray
    rep: DiracRep

    @property
    def k(self) -> complex:
        return branch_sqrt(self.z ** 2 - self.m ** 2 - self.xi_mag ** 2)

    @property
    def xi_vec(self) -> np.ndarray:
        return self.xi_mag * self.w_prime

    def m_matrix(self) -> np.ndarray:
        """alpha'.xi' + m beta + z, the non-jump matrix factor."""
        n = self.rep.n
        out = (self.m * self.rep.beta + self.z * np.eye(n)).astype(complex)
        xi = self.xi_vec
        for j in range(self.theta - 1):
            out += self.rep.alphas[j] * xi[j]
        return out

    @property
    def alpha_normal(self) -> np.ndarray:
        return self.rep.alphas[self.theta - 1]


def make_context(theta: int, m: float, z: complex, xi_mag: float,
                 w_prime=None, rep: DiracRep | None = None) -> FiberContext:
    z = complex(z)
    if z.imag == 0.0:
        raise DomainError("spectral parameter must have Im z != 0")
    if xi_mag < 0.0:
        raise DomainError("xi_mag must be nonnegative")
    if rep is None:
        rep = dirac_rep(theta)
    if w_prime is None:
        w_prime = np.zeros(theta - 1)
        w_prime[0] = 1.0
    w_prime = np.asarray(w_prime, dtype=float)
    if w_prime.shape != (theta - 1,):
        raise DomainError(f"w_prime must have length {theta - 1}")
    if abs(np.linalg.norm(w_prime) - 1.0) > 1e-12:
        raise DomainError("w_prime must be a unit vector")
    return FiberContext(theta=theta, m=m, z=z, xi_mag=float(xi_mag),
                        w_prime=w_prime, rep=rep)


def green_full(theta: int, z: complex, m: float, x) -> np.ndarray:
    """Integral kernel of (H - z)^{-1} for the free Dirac operator at x != 0."""
    x = np.asarray(x, dtype=float)
    z = complex(z)
    if z.imag == 0.0:
        raise DomainError("need Im z != 0")
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise OriginError("Green function is singular at the origin")
    rep = dirac_rep(theta)
    kz = branch_sqrt(z * z - m * m)
    ax = sum(rep.alphas[j] * x[j] for j in range(theta))
    if theta == 2:
        k0, k1 = bessel_k01_arr(np.array([-1j * kz * r]))
        return (kz / (2.0 * np.pi) * complex(k1[0]) * ax / r
                + complex(k0[0]) / (2.0 * np.pi) * (m * rep.beta + z * np.eye(2)))
    if theta == 3:
        phase = np.exp(1j * kz * r) / (4.0 * np.pi * r)
        return (z * np.eye(4) + m * rep.beta
                + 1j * (1.0 - 1j * kz * r) * ax / (r * r)) * phase
    raise DomainError(f"theta must be 2 or 3, got {theta}")


def _fiber_pq(ctx: FiberContext):
    """P = i M_z / (2k) and Q = i alpha_normal / 2 with
    G_fiber(s) = (P + sign(s) Q) exp(i k |s|)."""
    k = ctx.k
    p = 1j * ctx.m_matrix() / (2.0 * k)
    q = 0.5j * ctx.alpha_normal
    return p, q, k


def fiber_kernel_arr(ctx: FiberContext, s: np.ndarray) -> np.ndarray:
    """Vectorized fiber Green kernel; shape s.shape + (N, N). sign(0) = 0."""
    s = np.asarray(s, dtype=float)
    p, q, k = _fiber_pq(ctx)
    phase = np.exp(1j * k * np.abs(s))
    sg = np.sign(s)
    return (phase[..., None, None] * p
            + (sg * phase)[..., None, None] * q)


def fiber_green(ctx: FiberContext, s: float) -> np.ndarray:
    """Fiber Green kernel at signed transverse displacement s != 0.

    Normalization: equals (2 pi)^{(theta-1)/2} times the tangential Fourier
    transform of green_full, i.e. the kernel the fiber operators are built
    from carries no 2-pi factor.
    """
    if s == 0.0:
        raise ZeroDisplacementError("fiber kernel jump point s = 0")
    return fiber_kernel_arr(ctx, np.asarray(float(s)))


def fiber_boundary_matrix(ctx: FiberContext) -> np.ndarray:
    """The N x N fiber boundary operator C_z(xi') = i (alpha'.xi' + m beta + z)/(2k)."""
    p, _, _ = _fiber_pq(ctx)
    return p
