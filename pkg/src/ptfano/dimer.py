"""Closed-form stationary states of the isolated dimer.

Symmetric modes ``psi_{A,B} = A exp(+-i delta/2)`` form a family in
``omega``; asymmetric modes ``(A e^{i delta/2}, B e^{-i delta/2})`` exist
only at one frequency and only when the nonlinear terms compete with the
linear gain/loss (gamma2 > 0).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

from .errors import DegenerateEquation
from .model import DimerParams

# relative tolerance on discriminants below which two roots are merged
DOUBLE_ROOT_RTOL = 1e-12
# |omega - E| matching tolerance for the amplitude-free linear dimer
LINEAR_MATCH_TOL = 1e-9


class Regime(str, Enum):
    NONE = "None"
    MONO = "Mono"
    BI = "Bi"


@dataclass(frozen=True)
class SymmetricMode:
    omega: float
    Asq: float
    delta: float
    psiA: complex
    psiB: complex
    amplitude_free: bool = False

    @property
    def kind(self) -> str:
        return "symmetric"


@dataclass(frozen=True)
class AsymmetricMode:
    omega: float
    Asq: float
    Bsq: float
    delta: float
    psiA: complex
    psiB: complex

    @property
    def kind(self) -> str:
        return "asymmetric"


DimerEigenmode = Union[SymmetricMode, AsymmetricMode]


@dataclass(frozen=True)
class RegimeReport:
    omega: float
    symmetric_regime: Regime
    symmetric_count: int
    asymmetric_count: int
    multistable: bool


def _wrap(delta: float) -> float:
    # atan2 may return -pi; the convention here is (-pi, pi]
    return math.pi if delta <= -math.pi else delta


def _intensity_roots(p: DimerParams, omega: float) -> list[float]:
    """Positive roots of (chi x - (omega-E))^2 + (gamma0 - gamma2 x)^2 = V^2."""
    d = omega - p.E
    a = p.chi ** 2 + p.gamma2 ** 2
    h = p.chi * d + p.gamma0 * p.gamma2
    c = d * d + p.gamma0 ** 2 - p.V ** 2
    if abs(c) <= DOUBLE_ROOT_RTOL * (d * d + p.gamma0 ** 2 + p.V ** 2):
        # on the zero-intensity boundary; keep rounding from inventing a tiny root
        c = 0.0
    disc = h * h - a * c
    scale = max(h * h, abs(a * c))
    if abs(disc) <= DOUBLE_ROOT_RTOL * scale:
        roots = [h / a]
    elif disc < 0:
        roots = []
    else:
        q = h + math.copysign(math.sqrt(disc), h)
        roots = [q / a, c / q] if q != 0 else [0.0]
    return sorted(x for x in roots if x > 0)


def _is_linear_eigenfrequency(p: DimerParams, omega: float) -> bool:
    gap = p.V ** 2 - p.gamma0 ** 2
    return gap >= 0 and abs(abs(omega - p.E) - math.sqrt(gap)) <= LINEAR_MATCH_TOL


def symmetric_modes(p: DimerParams, omega: float) -> list[SymmetricMode]:
    """All symmetric eigenstates at ``omega``, ascending in A^2.

    For gamma2 = chi = 0 the intensity is unconstrained: a unit-intensity
    mode flagged ``amplitude_free`` is returned at the linear
    eigenfrequencies and DegenerateEquation is raised elsewhere.
    """
    if p.gamma2 == 0 and p.chi == 0:
        if not _is_linear_eigenfrequency(p, omega):
            raise DegenerateEquation(
                f"linear dimer has no symmetric mode at omega={omega!r}")
        roots, free = [1.0], True
    else:
        roots, free = _intensity_roots(p, omega), False

    modes = []
    for x in roots:
        if p.V != 0:
            delta = math.atan2((p.gamma0 - p.gamma2 * x) / p.V,
                               (omega - p.E - p.chi * x) / p.V)
        else:
            delta = 0.0
        delta = _wrap(delta)
        amp = math.sqrt(x)
        modes.append(SymmetricMode(
            omega=omega, Asq=x, delta=delta,
            psiA=amp * cmath.exp(0.5j * delta),
            psiB=amp * cmath.exp(-0.5j * delta),
            amplitude_free=free,
        ))
    return modes


def symmetric_regime(p: DimerParams, omega: float) -> Regime:
    """Classify by the number of symmetric modes at ``omega``.

    A tangent double root counts as one mode (Mono).
    """
    try:
        n = len(symmetric_modes(p, omega))
    except DegenerateEquation:
        return Regime.NONE
    return (Regime.NONE, Regime.MONO, Regime.BI)[n]


def bistability_inequalities(p: DimerParams, omega: float) -> tuple[bool, bool]:
    """The two closed-form bistability inequalities, evaluated literally.

    They are necessary for two symmetric modes when chi > 0 but not
    sufficient; :func:`symmetric_regime` counts roots instead. The second
    inequality is reported False when chi = 0 or the radicand is negative.
    """
    d = omega - p.E
    first = d * d > p.V ** 2 - p.gamma0 ** 2
    rad = d * d + p.gamma0 ** 2 - p.V ** 2
    if p.chi == 0 or rad < 0:
        return first, False
    second = p.gamma0 * p.gamma2 / p.chi + d > math.sqrt(rad)
    return first, second


def asymmetric_frequency(p: DimerParams) -> float:
    return p.E + p.gamma0 / p.gamma2 * p.chi


def asymmetric_modes(p: DimerParams) -> list[AsymmetricMode]:
    """The two symmetry-broken eigenstates, or [] when they do not exist."""
    if p.gamma2 <= 0 or p.gamma0 <= 0:
        return []
    total = p.gamma0 / p.gamma2
    product = p.V ** 2 / (p.chi ** 2 + p.gamma2 ** 2)
    disc = total * total - 4 * product
    if disc <= DOUBLE_ROOT_RTOL * total * total:
        return []
    big = 0.5 * (total + math.sqrt(disc))
    small = product / big
    omega = asymmetric_frequency(p)
    modes = []
    for asq, bsq in ((small, big), (big, small)):
        a, b = math.sqrt(asq), math.sqrt(bsq)
        scale = a / (p.V * b)
        delta = _wrap(math.atan2((p.gamma0 - p.gamma2 * asq) * scale,
                                 (omega - p.E - p.chi * asq) * scale))
        modes.append(AsymmetricMode(
            omega=omega, Asq=asq, Bsq=bsq, delta=delta,
            psiA=a * cmath.exp(0.5j * delta),
            psiB=b * cmath.exp(-0.5j * delta),
        ))
    return modes


def mode_census(p: DimerParams) -> RegimeReport:
    """Count coexisting eigenstates at the asymmetric-mode frequency.

    When gamma2 = 0 the census is taken at omega = E.
    """
    omega = asymmetric_frequency(p) if p.gamma2 != 0 else p.E
    asym = asymmetric_modes(p)
    try:
        n_sym = len(symmetric_modes(p, omega))
    except DegenerateEquation:
        n_sym = 0
    regime = (Regime.NONE, Regime.MONO, Regime.BI)[n_sym]
    return RegimeReport(
        omega=omega,
        symmetric_regime=regime,
        symmetric_count=n_sym,
        asymmetric_count=len(asym),
        multistable=len(asym) == 2 and regime is Regime.BI,
    )
