"""Coupling-constant calculus: d = eta^2 - tau^2, criticality classes,
the squeezed/magnetic rescaling maps and their inverses, and the explicit
inverse-norm constant for the auxiliary operator family."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import CriticalTargetError, HypothesisError, ScalingSingularError
from .special import branch_sqrt, tanc

__all__ = [
    "Coupling", "CouplingClass", "classify",
    "SUBCRITICAL", "SUPERCRITICAL_NONCRITICAL", "CRITICAL_SHELL",
    "SCALING_SINGULAR", "HYPERBOLIC",
    "rescale_squeezed", "rescale_magnetic", "inverse_design", "bound_C2",
]

SUBCRITICAL = "Subcritical"
SUPERCRITICAL_NONCRITICAL = "SupercriticalNoncritical"
CRITICAL_SHELL = "CriticalShell"
SCALING_SINGULAR = "ScalingSingular"
HYPERBOLIC = "Hyperbolic"

_TOL = 1e-10


@dataclass(frozen=True)
class Coupling:
    eta: float
    tau: float

    @property
    def d(self) -> float:
        return self.eta * self.eta - self.tau * self.tau


@dataclass(frozen=True)
class CouplingClass:
    variant: str
    d: float
    d_tilde: float | None


def _near_odd_square(d: float, scale: float) -> bool:
    """True when d is within _TOL of ((2k+1)*scale)^2 for some k >= 0."""
    if d < 0.0:
        return False
    r = math.sqrt(d) / scale
    k = round((r - 1.0) / 2.0)
    if k < 0:
        k = 0
    cand = ((2 * k + 1) * scale) ** 2
    return abs(d - cand) <= _TOL


def classify(c: Coupling) -> CouplingClass:
    d = c.d
    if d < 0.0:
        dt = -4.0 * math.tanh(math.sqrt(-d) / 2.0) ** 2
        return CouplingClass(HYPERBOLIC, d, dt)
    if _near_odd_square(d, math.pi):
        return CouplingClass(SCALING_SINGULAR, d, None)
    if _near_odd_square(d, math.pi / 2.0):
        return CouplingClass(CRITICAL_SHELL, d, 4.0)
    dt = 4.0 * math.tan(math.sqrt(d) / 2.0) ** 2
    if d < math.pi ** 2 / 4.0:
        return CouplingClass(SUBCRITICAL, d, dt)
    return CouplingClass(SUPERCRITICAL_NONCRITICAL, d, dt)


def rescale_squeezed(c: Coupling) -> Coupling:
    """(eta, tau) -> tanc(sqrt(d)/2) (eta, tau), the squeezed-limit shell pair."""
    if classify(c).variant == SCALING_SINGULAR:
        raise ScalingSingularError(f"cos(sqrt(d)/2) vanishes at d = {c.d}")
    f = tanc(branch_sqrt(c.d) / 2.0)
    assert abs(f.imag) < 1e-12
    return Coupling(f.real * c.eta, f.real * c.tau)


def rescale_magnetic(c: Coupling) -> Coupling:
    """(eta, tau) -> -2/(sqrt(d) tan(sqrt(d)/2)) (eta, tau); needs 0 < |d|,
    d < pi^2/4. The image satisfies |d_tilde| = 4/tan^2(sqrt(d)/2) > 4."""
    d = c.d
    if abs(d) <= _TOL or d >= math.pi ** 2 / 4.0 - _TOL:
        raise HypothesisError(f"need 0 < |d| and d < pi^2/4, got d = {d}")
    s = branch_sqrt(d)
    f = -2.0 / (s * cmath.tan(s / 2.0))
    assert abs(f.imag) < 1e-12 * max(1.0, abs(f))
    return Coupling(f.real * c.eta, f.real * c.tau)


def inverse_design(target: Coupling):
    """Find (eta, tau) whose squeezed (|d~| < 4) or magnetic (|d~| > 4)
    rescaling reproduces the target shell pair. Returns (coupling, flag)
    with flag = True when the magnetic route is required."""
    dt = target.d
    if abs(abs(dt) - 4.0) <= _TOL:
        raise CriticalTargetError(f"|d_tilde| = 4 is not reachable, d~ = {dt}")
    if dt == 0.0:
        return Coupling(target.eta, target.tau), False
    s = branch_sqrt(dt)
    if abs(dt) < 4.0:
        f = 2.0 * cmath.atan(s / 2.0) / s
        flag = False
    else:
        f = -2.0 * cmath.atan(2.0 / s) / s
        flag = True
    assert abs(f.imag) < 1e-12 * max(1.0, abs(f))
    return Coupling(f.real * target.eta, f.real * target.tau), flag


def bound_C2(c: Coupling, q_sup: float) -> float:
    """Explicit bound for ||(I + H_{rho,w} Q q)^{-1}|| in the subcritical regime."""
    d = c.d
    if d >= math.pi ** 2 / 4.0 - _TOL:
        raise HypothesisError(f"bound requires d < pi^2/4, got {d}")
    cd = 4.0 * d / math.pi ** 2 if d >= 0.0 else 0.0
    strength = abs(c.eta) + abs(c.tau)
    return (4.0 * q_sup * strength * (1.0 + strength * 2.0 / math.pi)
            / ((1.0 - cd) * math.pi) + 1.0)
