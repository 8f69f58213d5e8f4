"""Zero modes of the squeezed fiber operators above the coupling threshold.

For d = eta^2 - tau^2 > pi^2/4 there is, for every small eps, a momentum
xi_eps at which the fiber operator
    -i s1 d/dx + xi s2 + m s3 + (eta + tau s3) chi_(-eps,eps)/(2 eps)
has an L^2 kernel element.  This module solves the matching condition,
builds the kernel element explicitly from the transfer matrices, and
certifies it (matching residual, pointwise ODE residual, continuity).
The shell operator the squeezed family formally approximates has no zero
energy in its spectrum when m != 0 and (d~ - 4) m tau~ <= 0, which is the
exclusion flag reported here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coupling import Coupling
from .dirac import SIGMA1, SIGMA3, fiber_transfer, scalar_square_exp
from .errors import (ConditionNotMetError, CriticalTargetError, DomainError,
                     EpsTooLargeError, HypothesisError)
from .special import a0, sinc_c, u0

__all__ = [
    "zero_mode_condition", "solve_a_eps", "xi_eps", "build_zero_mode",
    "shell_zero_excluded", "shell_jump_min_sv", "ZeroModeCertificate",
]


def zero_mode_condition(mu: float, d: float, eps: float, tau: float,
                        m: float) -> float:
    """cos(mu) + (d - mu^2 - 2 eps tau m)/sqrt(d - mu^2 - 4 eps tau m) sinc(mu).

    Vanishes exactly when 0 is an eigenvalue of the fiber operator whose
    momentum satisfies mu = mu_{xi, eps}.
    """
    rad = d - mu * mu - 4.0 * eps * tau * m
    num = d - mu * mu - 2.0 * eps * tau * m
    if rad == 0.0 and num == 0.0:
        # boundary case tau m = 0, mu^2 = d: the ratio sqrt(d - mu^2) -> 0
        return float(math.cos(mu))
    if rad <= 0.0:
        raise DomainError(f"nonpositive radicand {rad}")
    return float(math.cos(mu) + num / math.sqrt(rad) * sinc_c(mu).real)


def solve_a_eps(d: float, tau: float, m: float, eps: float,
                trace: list | None = None) -> float:
    """Root of F(a) = a - (d - u0(a)^2 - 2 eps tau m)/sqrt(d - u0(a)^2 - 4 eps tau m)
    on (0, a0(b_eps)), b_eps = sqrt(min(d, pi^2) - 4 eps (|tau m| + 1)).

    Bisection to 1e-12; requires d > pi^2/4 away from the scaling-singular
    set, and eps small enough that the bracket is valid.
    """
    if d <= math.pi ** 2 / 4.0:
        raise HypothesisError(f"need d > pi^2/4, got {d}")
    r = math.sqrt(d) / math.pi
    k = max(0, round((r - 1.0) / 2.0))
    if abs(d - ((2 * k + 1) * math.pi) ** 2) <= 1e-10:
        raise HypothesisError(f"d = {d} is on the excluded set ((2k+1) pi)^2")

    b_sq = min(d, math.pi ** 2) - 4.0 * eps * (abs(tau * m) + 1.0)
    if b_sq <= (math.pi / 2.0) ** 2:
        raise EpsTooLargeError(f"bracket endpoint lost at eps = {eps}")
    b_eps = math.sqrt(b_sq)
    if b_eps >= math.pi:
        b_eps = math.pi - 1e-12
    a_hi = a0(b_eps)

    def f(a: float) -> float:
        if trace is not None:
            trace.append(a)
        u = u0(a)
        rad = d - u * u - 4.0 * eps * tau * m
        if rad <= 0.0:
            raise EpsTooLargeError("radicand closed during bisection")
        return a - (d - u * u - 2.0 * eps * tau * m) / math.sqrt(rad)

    lo, hi = 0.0, a_hi
    flo, fhi = f(lo), f(hi)
    if not (flo < 0.0 < fhi):
        raise EpsTooLargeError(
            f"no sign change on (0, {a_hi:.6f}) at eps = {eps}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14:
            break
    a = 0.5 * (lo + hi)
    assert abs(f(a)) <= 1e-12 * max(1.0, a_hi)
    return a


def xi_eps(d: float, tau: float, m: float, eps: float, a_eps: float) -> float:
    """Momentum (1/2 eps) sqrt(d - u0(a_eps)^2 - 4 eps^2 m^2 - 4 eps tau m)
    pinning mu_{xi, eps} = u0(a_eps)."""
    u = u0(a_eps)
    rad = d - u * u - 4.0 * eps * eps * m * m - 4.0 * eps * tau * m
    if rad <= 0.0:
        raise DomainError(f"momentum radicand {rad} not positive")
    return math.sqrt(rad) / (2.0 * eps)


@dataclass(eq=False)
class ZeroModeCertificate:
    """Explicit kernel element of the fiber operator at (xi_eps, eps).

    w1, w2, w3 are the coefficient vectors of exp(Ax) w1 / exp(Bx) w2 /
    exp(Ax) w3 on the three intervals; the residuals certify the matching
    condition, the interface continuity, and the pointwise ODE.
    """
    a_eps: float
    xi_eps: float
    mu: float
    w1: np.ndarray
    w2: np.ndarray
    w3: np.ndarray
    residual_condition: float
    residual_ode: float
    residual_continuity: float


def _piecewise_mode(a_mat, b_mat, eps, ups_sq, b_sq, w1, w2, w3, x):
    out = np.empty((len(x), 2), dtype=complex)
    for i, xv in enumerate(x):
        if xv < -eps:
            out[i] = scalar_square_exp(a_mat * xv, ups_sq * xv * xv) @ w1
        elif xv <= eps:
            out[i] = scalar_square_exp(b_mat * xv, b_sq * xv * xv) @ w2
        else:
            out[i] = scalar_square_exp(a_mat * xv, ups_sq * xv * xv) @ w3
    return out


def build_zero_mode(xi: float, eps: float, c: Coupling, m: float,
                    n_samples: int = 200) -> ZeroModeCertificate:
    """Construct and certify the kernel element at momentum xi."""
    d = c.d
    tr = fiber_transfer(xi, m, c.eta, c.tau, eps)
    mu2 = d - 4.0 * eps * eps * tr.upsilon ** 2 - 4.0 * eps * c.tau * m
    if mu2 <= 0.0:
        raise DomainError("mu^2 not positive at this momentum")
    mu = math.sqrt(mu2)
    cond = zero_mode_condition(mu, d, eps, c.tau, m)
    if abs(cond) > 1e-8:
        raise ConditionNotMetError(
            f"matching condition {cond:.3e} exceeds 1e-8; momentum off the "
            "zero-mode fiber")

    a_pl, a_mi = tr.a_plus, tr.a_minus
    qmat = c.eta * np.eye(2) + c.tau * SIGMA3
    # first matching equation fixes c1 (c3 = 1)
    rhs = 1j * SIGMA1 @ qmat @ a_mi * sinc_c(mu)
    c1 = np.vdot(a_pl, rhs) / np.vdot(a_pl, a_pl)
    w1 = c1 * a_pl
    w3 = a_mi.copy()

    # scalar squares: (x A)^2 = (x ups)^2 I, (x B)^2 = -(mu x / 2 eps)^2 I
    ups_sq = tr.upsilon ** 2
    b_sq = -mu2 / (4.0 * eps * eps)
    exp_b = scalar_square_exp(tr.b * eps, b_sq * eps * eps)
    exp_am = scalar_square_exp(-tr.a * eps, ups_sq * eps * eps)
    w2 = exp_b @ exp_am @ w1

    exp_bm = scalar_square_exp(-tr.b * eps, b_sq * eps * eps)
    exp_ap = scalar_square_exp(tr.a * eps, ups_sq * eps * eps)
    scale = max(np.linalg.norm(w1), np.linalg.norm(w2), np.linalg.norm(w3))
    res_left = np.linalg.norm(exp_am @ w1 - exp_bm @ w2)
    res_right = np.linalg.norm(exp_ap @ w3 - exp_b @ w2)
    residual_continuity = float(max(res_left, res_right) / scale)

    # pointwise ODE residual by fourth-order finite differences, sampled off
    # 1e-4 neighborhoods of the interface points; the stencil must stay on
    # one side of the kink, so its reach 2h is kept below the exclusion
    span = eps + 5.0 / tr.upsilon
    xs = np.linspace(-span, span, n_samples)
    xs = xs[(np.abs(np.abs(xs) - eps) > 1e-4)]
    h = 2e-5

    def mode(points):
        return _piecewise_mode(tr.a, tr.b, eps, ups_sq, b_sq, w1, w2, w3,
                               points)

    um2, um1 = mode(xs - 2 * h), mode(xs - h)
    up1, up2 = mode(xs + h), mode(xs + 2 * h)
    uval = mode(xs)
    du = (8.0 * (up1 - um1) - (up2 - um2)) / (12.0 * h)
    pot = np.where(np.abs(xs) < eps, 1.0 / (2.0 * eps), 0.0)
    hmat = xi * np.array([[0, -1j], [1j, 0]]) + m * SIGMA3
    hu = (du @ (-1j * SIGMA1).T + uval @ hmat.T
          + pot[:, None] * (uval @ qmat.T))
    residual_ode = float(np.max(np.abs(hu)) / scale)

    return ZeroModeCertificate(
        a_eps=a0(mu), xi_eps=xi, mu=mu, w1=w1, w2=w2, w3=w3,
        residual_condition=abs(cond),
        residual_ode=residual_ode,
        residual_continuity=residual_continuity,
    )


def shell_jump_min_sv(m: float, target: Coupling, xi_values) -> float:
    """Smallest singular value (over momenta) of the 2x2 shell jump system
    whose degeneracy would signal a zero mode of the shell fiber operator.

    Columns are the normalized decaying zero-energy solutions from both
    sides, coupled through i s1 (u+ - u-) + (V~/2)(u+ + u-) = 0.
    """
    vt = (target.eta * np.eye(2) + target.tau * SIGMA3).astype(complex)
    jplus = 1j * SIGMA1 + vt / 2.0
    jminus = -1j * SIGMA1 + vt / 2.0
    best = np.inf
    for xi in np.asarray(xi_values, dtype=float):
        ups = math.hypot(xi, m)
        a_pl = np.array([-1j * m, xi - ups])
        a_mi = np.array([xi - ups, -1j * m])
        a_pl = a_pl / np.linalg.norm(a_pl)
        a_mi = a_mi / np.linalg.norm(a_mi)
        mat = np.column_stack([jplus @ a_pl, jminus @ a_mi])
        sv = np.linalg.svd(mat, compute_uv=False)[-1]
        best = min(best, float(sv))
    return best


def shell_zero_excluded(m: float, target: Coupling) -> bool:
    """True when zero is certainly outside the shell spectrum: m != 0 and
    (d~ - 4) m tau~ <= 0 (a sufficient sign criterion)."""
    dt = target.d
    if abs(dt - 4.0) <= 1e-10:
        raise CriticalTargetError("critical shell coupling")
    if m == 0.0:
        return False
    return (dt - 4.0) * m * target.tau <= 0.0
