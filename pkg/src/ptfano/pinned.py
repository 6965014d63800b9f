"""Nonpropagating modes localized at the dimer, for frequencies outside the band.

The chain is eliminated exactly: with ``psi_n = psi0 * lam^|n|`` every site
n != 0 is stationary when ``omega*lam = C(1 + lam^2)``, and the n = 0 site
gives ``psi0 = V (psiA + psiB) / (omega - 2C lam)``. The dimer then sees an
effective coupling ``Veff = V^2 / (omega - 2C lam)`` and on-site energy
``Eeff = E + Veff``, and the isolated-dimer formulas apply.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .dimer import DimerEigenmode, SymmetricMode, asymmetric_modes, symmetric_modes
from .errors import DegenerateEquation, InsideBand
from .model import DimerParams

LATTICE_TOL = 1e-10


def decay_factor(p: DimerParams, omega: float, below_band: bool = False) -> float:
    """Per-site amplitude ratio lam, |lam| < 1.

    Above the band lam is positive. Below the band (``below_band=True``,
    omega < -2C) lam is negative and the profile alternates in sign.
    """
    if omega > 2 * p.C:
        return 2 * p.C / (omega + math.sqrt(omega * omega - 4 * p.C ** 2))
    if below_band and omega < -2 * p.C:
        return 2 * p.C / (omega - math.sqrt(omega * omega - 4 * p.C ** 2))
    raise InsideBand(f"omega={omega!r} does not lie outside the band of half-width 2C={2 * p.C!r}")


def effective_params(p: DimerParams, omega: float, below_band: bool = False) -> tuple[float, float]:
    """(Eeff, Veff) seen by the dimer once the chain is eliminated."""
    lam = decay_factor(p, omega, below_band)
    veff = p.V ** 2 / (omega - 2 * p.C * lam)
    return p.E + veff, veff


@dataclass(frozen=True)
class PinnedMode:
    omega: float
    lam: float
    Veff: float
    Eeff: float
    dimer: DimerEigenmode
    psi0: complex
    residual: float = float("nan")

    @property
    def psiA(self) -> complex:
        return self.dimer.psiA

    @property
    def psiB(self) -> complex:
        return self.dimer.psiB

    def profile(self, n):
        n = np.asarray(n)
        return self.psi0 * self.lam ** np.abs(n)

    def profile_rows(self, half_width: int = 30):
        for n in range(-half_width, half_width + 1):
            z = complex(self.profile(n))
            yield n, z.real, z.imag


def write_profile_csv(path, mode: PinnedMode, half_width: int = 30):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("n", "psi_re", "psi_im"))
        for n, re, im in mode.profile_rows(half_width):
            w.writerow((n, f"{re:.17g}", f"{im:.17g}"))


def lattice_residual(p: DimerParams, omega: float, psiA: complex, psiB: complex,
                     profile, n_sites: int = 201, truncated: bool = False) -> float:
    """Largest stationary residual over the dimer and the sites |n| <= (n_sites-1)/2.

    ``profile(n)`` gives the chain amplitudes. Neighbours just outside the
    window come from the same profile unless ``truncated``, which treats the
    window as an open finite chain.
    """
    m = (n_sites - 1) // 2
    n = np.arange(-m - 1, m + 2)
    psi = np.asarray(profile(n), dtype=complex)
    if truncated:
        psi[0] = psi[-1] = 0
    inner = psi[1:-1]
    chain = omega * inner - p.C * (psi[:-2] + psi[2:])
    chain[m] -= p.V * (psiA + psiB)
    p0 = inner[m]
    ia, ib = abs(psiA) ** 2, abs(psiB) ** 2
    ra = omega * psiA - ((p.E + p.chi * ia + 1j * (p.gamma0 - p.gamma2 * ia)) * psiA + p.V * p0)
    rb = omega * psiB - ((p.E + p.chi * ib - 1j * (p.gamma0 - p.gamma2 * ib)) * psiB + p.V * p0)
    return float(max(np.max(np.abs(chain)), abs(ra), abs(rb)))


def _build(p: DimerParams, omega: float, lam: float, eeff: float, veff: float, mode,
           n_sites: int) -> PinnedMode:
    psi0 = veff * (mode.psiA + mode.psiB) / p.V
    pm = PinnedMode(omega, lam, veff, eeff, mode, psi0)
    res = lattice_residual(p, omega, mode.psiA, mode.psiB, pm.profile, n_sites)
    if not res < LATTICE_TOL * max(1.0, abs(mode.psiA) + abs(mode.psiB)):
        raise RuntimeError(f"pinned mode at omega={omega} fails the lattice check: {res:.3e}")
    return PinnedMode(omega, lam, veff, eeff, mode, psi0, res)


def pinned_symmetric(p: DimerParams, omega: float, below_band: bool = False,
                     n_sites: int = 201) -> list[PinnedMode]:
    """Symmetric pinned modes at a fixed frequency outside the band."""
    lam = decay_factor(p, omega, below_band)
    if p.V == 0:
        return []
    eeff, veff = effective_params(p, omega, below_band)
    try:
        modes = symmetric_modes(p.replace(E=eeff, V=veff), omega)
    except DegenerateEquation:
        return []
    return [_build(p, omega, lam, eeff, veff, m, n_sites) for m in modes]


def _scan_roots(f, lo: float, hi: float, n: int) -> list[float]:
    grid = np.linspace(lo, hi, n)
    vals = np.array([f(x) for x in grid])
    roots = []
    for i in range(n - 1):
        if vals[i] == 0:
            roots.append(float(grid[i]))
        elif vals[i] * vals[i + 1] < 0:
            x = brentq(f, grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
            roots.append(x)
    return roots


def _polish(f, x: float, h: float = 1e-7) -> float:
    for _ in range(3):
        fx = f(x)
        if fx == 0:
            break
        d = (f(x + h) - f(x - h)) / (2 * h)
        if d == 0:
            break
        nx = x - fx / d
        if abs(f(nx)) >= abs(fx):
            break
        x = nx
    return x


def saturated_symmetric_frequency(p: DimerParams, scan_points: int = 2000,
                                  span: float = 20.0) -> list[float]:
    """Frequencies above the band where the symmetric pinned mode has A^2 = gamma0/gamma2.

    Solves omega = E + chi*gamma0/gamma2 + 2 Veff(omega), the tangency of the
    intensity equation at the saturation intensity.
    """
    if p.gamma2 <= 0 or p.V == 0:
        return []
    target = p.E + p.chi * p.saturation

    def f(w):
        return w - target - 2 * effective_params(p, w)[1]

    lo, hi = 2 * p.C + 1e-6, 2 * p.C + span * p.C
    return [_polish(f, r) for r in _scan_roots(f, lo, hi, scan_points)]


def pinned_saturated_symmetric(p: DimerParams, scan_points: int = 2000, span: float = 20.0,
                               n_sites: int = 201) -> list[PinnedMode]:
    """Symmetric pinned modes with A^2 = gamma0/gamma2 and zero phase lag.

    At these frequencies the intensity equation has a tangent double root
    whose discriminant is lost to rounding (Veff is steep near the band
    edge), so the mode is built directly instead of via
    :func:`pinned_symmetric`.
    """
    out = []
    for w in saturated_symmetric_frequency(p, scan_points, span):
        lam = decay_factor(p, w)
        eeff, veff = effective_params(p, w)
        amp = math.sqrt(p.saturation)
        mode = SymmetricMode(omega=w, Asq=p.saturation, delta=0.0, psiA=complex(amp), psiB=complex(amp))
        out.append(_build(p, w, lam, eeff, veff, mode, n_sites))
    return out


def asymmetric_frequency_equation(p: DimerParams, omega: float) -> float:
    """omega - E - Veff(omega) - chi*gamma0/gamma2; zero at a pinned asymmetric mode."""
    return omega - p.E - effective_params(p, omega)[1] - p.chi * p.saturation


def pinned_asymmetric(p: DimerParams, scan_points: int = 2000, span: float = 20.0,
                      n_sites: int = 201) -> list[PinnedMode]:
    """Asymmetric pinned modes above the band.

    The frequency solves an implicit scalar equation (a quartic after
    squaring); roots are bracketed on a grid over (2C, 2C + span*C],
    refined by bisection and polished by Newton.
    """
    if p.gamma2 <= 0 or p.gamma0 <= 0 or p.V == 0:
        return []

    def f(w):
        return asymmetric_frequency_equation(p, w)

    lo, hi = 2 * p.C + 1e-6, 2 * p.C + span * p.C
    out = []
    for w in _scan_roots(f, lo, hi, scan_points):
        w = _polish(f, w)
        lam = decay_factor(p, w)
        eeff, veff = effective_params(p, w)
        for mode in asymmetric_modes(p.replace(E=eeff, V=veff)):
            # the dimer frequency equals w up to root-finding error; rebuild at w
            out.append(_build(p, w, lam, eeff, veff, mode, n_sites))
    return out
