"""Scalar special functions.

Branch-fixed complex square root, stabilized tan(w)/w and sin(w)/w,
modified Bessel functions K0/K1 for complex argument, and the pair
a0(u) = -u*cot(u) / its inverse u0 used by the zero-mode solver.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from .errors import DomainError, PoleError

__all__ = [
    "branch_sqrt",
    "tanc",
    "sinc_c",
    "mod_bessel_k",
    "a0",
    "u0",
]

_EULER_GAMMA = float(np.euler_gamma)

# tan(w)/w = sum TANC_COEF[k] * w^(2k), six terms, |w| < 1e-2
_TANC_COEF = (1.0, 1.0 / 3.0, 2.0 / 15.0, 17.0 / 315.0, 62.0 / 2835.0,
              1382.0 / 155925.0)
# sin(w)/w = sum SINC_COEF[k] * w^(2k)
_SINC_COEF = (1.0, -1.0 / 6.0, 1.0 / 120.0, -1.0 / 5040.0, 1.0 / 362880.0,
              -1.0 / 39916800.0)

_SERIES_RADIUS = 1e-2
_POLE_TOL = 1e-12
# series/continued-fraction switch for K0, K1; above ~4 the ascending series
# loses more than 1e-10 relative to cancellation in double precision
_BESSEL_SPLIT = 4.0


def branch_sqrt(w) -> complex:
    """Square root with Im sqrt(w) > 0 off the nonnegative real axis."""
    w = complex(w)
    if w.imag == 0.0 and w.real >= 0.0:
        return complex(math.sqrt(w.real), 0.0)
    r = cmath.sqrt(w)
    if r.imag < 0.0:
        r = -r
    return r


def branch_sqrt_arr(w: np.ndarray) -> np.ndarray:
    """Vectorized branch_sqrt."""
    r = np.sqrt(np.asarray(w, dtype=complex))
    return np.where(r.imag < 0.0, -r, r)


def tanc(w) -> complex:
    """tan(w)/w, equal to 1 at w = 0; tanc(ix) = tanh(x)/x on the real line."""
    w = complex(w)
    k = round((w.real - math.pi / 2.0) / math.pi)
    pole = math.pi / 2.0 + k * math.pi
    if abs(w - pole) <= _POLE_TOL:
        raise PoleError(f"tanc argument within {_POLE_TOL} of pole {pole}")
    if abs(w) < _SERIES_RADIUS:
        w2 = w * w
        acc = 0.0 + 0.0j
        for c in reversed(_TANC_COEF):
            acc = acc * w2 + c
        return acc
    return cmath.tan(w) / w


def sinc_c(w) -> complex:
    """sin(w)/w, equal to 1 at w = 0."""
    w = complex(w)
    if abs(w) < _SERIES_RADIUS:
        w2 = w * w
        acc = 0.0 + 0.0j
        for c in reversed(_SINC_COEF):
            acc = acc * w2 + c
        return acc
    return cmath.sin(w) / w


# ---------------------------------------------------------------------------
# modified Bessel functions of the second kind, orders 0 and 1
# ---------------------------------------------------------------------------

def _i01_series(w: np.ndarray, terms: int = 160):
    """I0(w), I1(w) by the ascending series; cancels for large |Im w|."""
    q = w * w / 4.0
    t0 = np.ones_like(w)
    t1 = np.ones_like(w)
    i0 = t0.copy()
    i1 = t1.copy()
    for k in range(1, terms):
        t0 = t0 * q / (k * k)
        t1 = t1 * q / (k * (k + 1))
        i0 += t0
        i1 += t1
    return i0, (w / 2.0) * i1


def _i01(w: np.ndarray):
    """I0, I1 for Re w > 0: series when small, CF1 + Wronskian when large."""
    w = np.asarray(w, dtype=complex)
    small = np.abs(w) < _BESSEL_SPLIT
    i0 = np.empty_like(w)
    i1 = np.empty_like(w)
    if np.any(small):
        i0[small], i1[small] = _i01_series(w[small])
    big = ~small
    if np.any(big):
        v = w[big]
        k0, k1 = _k01_cf(v)
        # modified Lentz for the ratio r = I1/I0 = 1/(2/v + 1/(4/v + ...))
        tiny = 1e-290
        f = np.full_like(v, tiny)
        c = f.copy()
        d = np.zeros_like(v)
        for n in range(1, 40000):
            b = 2.0 * n / v
            d = b + d
            d = np.where(d == 0, tiny, d)
            c = b + 1.0 / c
            c = np.where(c == 0, tiny, c)
            d = 1.0 / d
            delta = c * d
            f = f * delta
            if np.all(np.abs(delta - 1.0) < 1e-16):
                break
        r = f  # = I1/I0
        # Wronskian: I0*K1 + I1*K0 = 1/v
        i0b = 1.0 / (v * (k1 + r * k0))
        i0[big] = i0b
        i1[big] = r * i0b
    return i0, i1


def _k01_series(w: np.ndarray, terms: int = 60):
    """Ascending series for K0, K1; accurate for |w| <= _BESSEL_SPLIT."""
    q = w * w / 4.0
    lg = np.log(w / 2.0) + _EULER_GAMMA

    t = np.ones_like(w)
    i0 = t.copy()
    s0 = np.zeros_like(w)
    h = 0.0
    for k in range(1, terms):
        t = t * q / (k * k)
        h += 1.0 / k
        i0 += t
        s0 += t * h
    k0 = -lg * i0 + s0

    # K1 = 1/w + (log(w/2) + gamma - ...) parts assembled from
    # K1 = 1/w + log(w/2) I1 - (w/4) sum (H_k + H_{k+1} - 2 gamma)/... ;
    # rewrite with lg to share the stable I1 series:
    t = np.ones_like(w)
    i1 = t.copy()
    s1 = t.copy()          # (H_0 + H_1) term with H_0 = 0, H_1 = 1
    hk = 0.0
    for k in range(1, terms):
        t = t * q / (k * (k + 1))
        hk += 1.0 / k
        i1 += t
        s1 += t * (2.0 * hk + 1.0 / (k + 1.0))
    i1 = (w / 2.0) * i1
    # K1 = 1/w + lg*I1 - (w/4) * sum_k (H_k + H_{k+1}) q^k / (k!(k+1)!)
    k1 = 1.0 / w + lg * i1 - (w / 4.0) * s1
    return k0, k1


def _k01_cf(w: np.ndarray, max_iter: int = 20000, eps: float = 1e-16):
    """Temme/Thompson-Barnett continued fraction for K0, K1, Re w >= 0."""
    shape = w.shape
    w = w.ravel()
    b = 2.0 * (1.0 + w)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(w)
    q2 = np.ones_like(w)
    a1 = 0.25
    q = np.full_like(w, a1)
    c = np.full_like(w, a1)
    a = np.full_like(w, -a1)
    s = 1.0 + q * delh
    done = np.zeros(w.shape, dtype=bool)
    for i in range(2, max_iter):
        a -= 2.0 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        s = s + dels
        done |= np.abs(dels) < eps * np.abs(s)
        if done.all():
            break
    else:
        raise DomainError("continued fraction for K0/K1 did not converge")
    h = a1 * h
    k0 = np.sqrt(np.pi / (2.0 * w)) * np.exp(-w) / s
    k1 = k0 * (w + 0.5 - h) / w
    return k0.reshape(shape), k1.reshape(shape)


def _k01(w: np.ndarray):
    """K0(w), K1(w) on the principal branch, vectorized."""
    w = np.asarray(w, dtype=complex)
    if np.any(w == 0.0):
        raise DomainError("K0/K1 undefined at w = 0")
    on_cut = (w.imag == 0.0) & (w.real < 0.0)
    if np.any(on_cut):
        raise DomainError("K0/K1 evaluated on the branch cut (-inf, 0)")

    k0 = np.empty_like(w)
    k1 = np.empty_like(w)

    left = w.real < 0.0
    right = ~left

    wr = w[right]
    if wr.size:
        small = np.abs(wr) < _BESSEL_SPLIT
        r0 = np.empty_like(wr)
        r1 = np.empty_like(wr)
        if np.any(small):
            r0[small], r1[small] = _k01_series(wr[small])
        if np.any(~small):
            r0[~small], r1[~small] = _k01_cf(wr[~small])
        k0[right] = r0
        k1[right] = r1

    wl = w[left]
    if wl.size:
        # continuation through the left half-plane:
        # K_n(v e^{+i pi}) = (-1)^n K_n(v) - i pi I_n(v)
        # K_n(v e^{-i pi}) = (-1)^n K_n(v) + i pi I_n(v)
        v = -wl
        upper = wl.imag > 0.0
        sgn = np.where(upper, -1.0, 1.0)
        b0, b1 = _k01(v)
        i0v, i1v = _i01(v)
        k0[left] = b0 + sgn * 1j * np.pi * i0v
        k1[left] = -b1 + sgn * 1j * np.pi * i1v
    return k0, k1


def mod_bessel_k(order: int, w) -> complex:
    """K0 or K1 at complex w on the principal branch.

    Relative accuracy better than 1e-10 for |w| in [1e-6, 50] away from
    the branch cut.
    """
    if order not in (0, 1):
        raise DomainError(f"order must be 0 or 1, got {order}")
    k0, k1 = _k01(np.asarray([complex(w)]))
    return complex(k0[0]) if order == 0 else complex(k1[0])


def bessel_k01_arr(w: np.ndarray):
    """Vectorized (K0, K1) used by the planar Green function."""
    return _k01(np.asarray(w, dtype=complex))


# ---------------------------------------------------------------------------
# a0(u) = -u cot(u) on [pi/2, pi) and its inverse
# ---------------------------------------------------------------------------

def a0(u: float) -> float:
    """-u*cot(u); nonnegative and strictly increasing on [pi/2, pi)."""
    u = float(u)
    if not (math.pi / 2.0 - 1e-14 <= u < math.pi):
        raise DomainError(f"a0 requires u in [pi/2, pi), got {u}")
    val = -u * math.cos(u) / math.sin(u)
    # cos(pi/2) does not vanish exactly in floating point
    return 0.0 if -1e-12 < val < 0.0 else val


def _a0_prime(u: float) -> float:
    return (u - 0.5 * math.sin(2.0 * u)) / math.sin(u) ** 2


def u0(a: float) -> float:
    """Inverse of a0: the unique u in [pi/2, pi) with -u*cot(u) = a.

    Bracketed bisection followed by a Newton polish; |a0(u) - a| is driven
    below 1e-12 (relative for large a).
    """
    a = float(a)
    if a < 0.0:
        raise DomainError(f"u0 requires a >= 0, got {a}")
    if a == 0.0:
        return math.pi / 2.0
    lo, hi = math.pi / 2.0, math.pi - 1e-9
    if a0(hi) < a:
        # a0(pi - 1e-9) ~ 3e9; nothing in scope gets near this
        raise DomainError(f"u0 argument {a} beyond supported range")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if a0(mid) < a:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    u = 0.5 * (lo + hi)
    for _ in range(4):
        f = a0(u) - a
        u -= f / _a0_prime(u)
        u = min(max(u, math.pi / 2.0), math.pi - 1e-12)
    return u
