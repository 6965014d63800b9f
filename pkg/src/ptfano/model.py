"""Parameters, state containers and residual evaluators for the PT dimer.

Element A carries linear gain ``+i*gamma0`` and nonlinear loss, element B
carries linear loss and nonlinear gain. All amplitudes are plain Python
``complex`` values.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple


@dataclass(frozen=True)
class DimerParams:
    """Dimer constants plus the hopping ``C`` of the attached chain.

    ``V = 0`` is accepted and describes a dimer decoupled from everything.
    """

    E: float = 0.1
    gamma0: float = 0.01
    gamma2: float = 1e-4
    chi: float = 0.0
    V: float = 0.2
    C: float = 1.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.gamma0 < 0:
            raise ValueError("gamma0 must be >= 0")
        if self.C <= 0:
            raise ValueError("C must be > 0")

    def replace(self, **changes) -> "DimerParams":
        return DimerParams(**{**asdict(self), **changes})

    def as_dict(self) -> dict:
        return asdict(self)

    @property
    def saturation(self) -> float:
        """Intensity gamma0/gamma2 at which linear and nonlinear gain/loss cancel."""
        return self.gamma0 / self.gamma2


class DimerState(NamedTuple):
    psiA: complex
    psiB: complex

    def rotate(self, theta: float) -> "DimerState":
        ph = complex(math.cos(theta), math.sin(theta))
        return DimerState(self.psiA * ph, self.psiB * ph)

    def pt_conjugate(self) -> "DimerState":
        """Swap gain and loss elements and conjugate."""
        return DimerState(self.psiB.conjugate(), self.psiA.conjugate())


@dataclass(frozen=True)
class Residual2:
    resA: complex
    resB: complex

    @property
    def max_abs(self) -> float:
        return max(abs(self.resA), abs(self.resB))

    def relative(self, s: DimerState) -> float:
        """max_abs scaled by max(1, state norm)."""
        norm = math.hypot(abs(s.psiA), abs(s.psiB))
        return self.max_abs / max(1.0, norm)


def _as_state(s) -> DimerState:
    return s if isinstance(s, DimerState) else DimerState(complex(s[0]), complex(s[1]))


def dimer_rhs(p: DimerParams, s, psi0: complex | None = None) -> tuple[complex, complex]:
    """Time derivatives (dpsiA/dt, dpsiB/dt).

    With ``psi0`` given, each element couples to the chain site amplitude
    ``psi0`` (the side-coupled geometry). With ``psi0=None`` the elements
    couple to each other, which is the isolated dimer.
    """
    a, b = _as_state(s)
    ia, ib = abs(a) ** 2, abs(b) ** 2
    if psi0 is None:
        drive_a, drive_b = p.V * b, p.V * a
    else:
        drive_a = drive_b = p.V * psi0
    da = -1j * ((p.E + p.chi * ia) * a + 1j * (p.gamma0 - p.gamma2 * ia) * a + drive_a)
    db = -1j * ((p.E + p.chi * ib) * b - 1j * (p.gamma0 - p.gamma2 * ib) * b + drive_b)
    return da, db


def stationary_dimer_residual(p: DimerParams, omega: float, s) -> Residual2:
    """Residual of the isolated dimer at real frequency ``omega``."""
    a, b = _as_state(s)
    ia, ib = abs(a) ** 2, abs(b) ** 2
    ra = (p.E + 1j * p.gamma0 - 1j * p.gamma2 * ia + p.chi * ia) * a + p.V * b - omega * a
    rb = (p.E - 1j * p.gamma0 + 1j * p.gamma2 * ib + p.chi * ib) * b + p.V * a - omega * b
    return Residual2(ra, rb)
