"""Stationary scattering of chain waves on the side-coupled PT dimer.

Solutions are reported in the gauge where the incident amplitude ``I`` is
real and non-negative. The stationary system solved here is the one whose
chain closure reads ``psi0 = I + i V (2C sin k)^{-1} (psiA + psiB)`` with
``omega = 2C cos k``; see :mod:`ptfano.lattice` for how these states map onto
a forward-time simulation.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import NoConvergence, NotLinear, OutsideBand
from .model import DimerParams, DimerState, Residual2, _as_state


class Branch(str, Enum):
    EIT_SYMMETRIC = "EitSymmetric"
    FANO_SYMMETRIC = "FanoSymmetric"
    ULTIMATE_LOSS = "UltimateAsymmetricLoss"
    ULTIMATE_GAIN = "UltimateAsymmetricGain"
    NUMERIC_ASYMMETRIC = "NumericAsymmetric"
    NUMERIC_OTHER = "NumericOther"


CLOSED_FORM_BRANCHES = (Branch.EIT_SYMMETRIC, Branch.FANO_SYMMETRIC,
                        Branch.ULTIMATE_LOSS, Branch.ULTIMATE_GAIN)

RESIDUAL_TOL = 1e-11


# ---------------------------------------------------------------- dispersion

def wavenumber(p: DimerParams, omega: float) -> float:
    """k = arccos(omega / 2C), strictly inside (0, pi)."""
    if not abs(omega) < 2 * p.C:
        raise OutsideBand(f"|omega|={abs(omega)!r} is not below 2C={2 * p.C!r}")
    return math.acos(omega / (2 * p.C))


def radiative_coupling(p: DimerParams, omega: float) -> float:
    """V^2 / (2C sin k), the strength of the chain-mediated A-B coupling."""
    k = wavenumber(p, omega)
    return p.V ** 2 / (2 * p.C * math.sin(k))


def close_field(p: DimerParams, omega: float, I: float, psiA: complex, psiB: complex):
    """Chain amplitude at the dimer site and the reflected/transmitted amplitudes."""
    k = wavenumber(p, omega)
    psi0 = I + 1j * p.V / (2 * p.C * math.sin(k)) * (psiA + psiB)
    return psi0, psi0 - I, psi0


def scattering_residual(p: DimerParams, omega: float, I: float, s) -> Residual2:
    a, b = _as_state(s)
    g = radiative_coupling(p, omega)
    d = p.E - omega
    ia, ib = abs(a) ** 2, abs(b) ** 2
    shared = 1j * g * (a + b) + p.V * I
    ra = d * a + shared + 1j * (p.gamma0 - p.gamma2 * ia) * a + p.chi * ia * a
    rb = d * b + shared - 1j * (p.gamma0 - p.gamma2 * ib) * b + p.chi * ib * b
    return Residual2(ra, rb)


# ---------------------------------------------------------------- solutions

@dataclass(frozen=True)
class ScatteringSolution:
    omega: float
    k: float
    I: float
    psiA: complex
    psiB: complex
    psi0: complex
    R: complex
    T: complex
    branch: Branch
    residual: float = 0.0

    @property
    def Pin(self) -> float:
        return self.I ** 2

    @property
    def transmissivity(self) -> float:
        return abs(self.T) ** 2 / self.I ** 2 if self.I > 0 else float("nan")

    @property
    def reflectivity(self) -> float:
        return abs(self.R) ** 2 / self.I ** 2 if self.I > 0 else float("nan")

    @property
    def state(self) -> DimerState:
        return DimerState(self.psiA, self.psiB)

    @property
    def intensities(self) -> tuple[float, float]:
        return abs(self.psiA) ** 2, abs(self.psiB) ** 2

    def to_dict(self) -> dict:
        c = lambda z: [z.real, z.imag]  # noqa: E731
        return {
            "omega": self.omega, "k": self.k, "I": self.I, "Pin": self.Pin,
            "psiA": c(self.psiA), "psiB": c(self.psiB), "psi0": c(self.psi0),
            "R": c(self.R), "T": c(self.T),
            "transmissivity": self.transmissivity,
            "reflectivity": self.reflectivity,
            "branch": self.branch.value, "residual": self.residual,
        }

    @classmethod
    def from_dict(cls, p: DimerParams, d: dict, tol: float = RESIDUAL_TOL) -> "ScatteringSolution":
        """Rebuild from :meth:`to_dict` output, re-checking the residual."""
        z = lambda v: complex(v[0], v[1])  # noqa: E731
        return make_solution(p, d["omega"], d["I"], z(d["psiA"]), z(d["psiB"]),
                             Branch(d["branch"]), tol=tol)


def make_solution(p: DimerParams, omega: float, I: float, psiA: complex, psiB: complex,
                  branch: Branch, tol: float = RESIDUAL_TOL) -> ScatteringSolution:
    """Assemble a solution, refusing states that do not satisfy the stationary system."""
    psiA, psiB = complex(psiA), complex(psiB)
    s = DimerState(psiA, psiB)
    res = scattering_residual(p, omega, I, s).relative(s)
    if not res < tol:
        raise ValueError(f"state is not stationary: residual {res:.3e} >= {tol:.1e}")
    psi0, R, T = close_field(p, omega, I, psiA, psiB)
    return ScatteringSolution(omega=omega, k=wavenumber(p, omega), I=I, psiA=psiA,
                              psiB=psiB, psi0=psi0, R=R, T=T, branch=Branch(branch),
                              residual=res)


# ---------------------------------------------------------------- linear spectrum

def _require_linear(p: DimerParams):
    if p.gamma2 != 0 or p.chi != 0:
        raise NotLinear("linear spectrum needs gamma2 = chi = 0")


def linear_transmissivity(p: DimerParams, omega: float) -> float:
    """Closed-form t(omega) of the linear dimer.

    t = D^2 / (D^2 + 4 L^2 d^2) with d = E - omega, D = d^2 + gamma0^2 and
    L the radiative coupling. At D = 0 the limit omega -> E gives t = 0.
    """
    _require_linear(p)
    lam = radiative_coupling(p, omega)
    d = p.E - omega
    D = d * d + p.gamma0 ** 2
    if D == 0:
        return 0.0
    return D * D / (D * D + 4 * lam * lam * d * d)


def _linear_solve(p: DimerParams, omega: float, I: float = 1.0):
    g = radiative_coupling(p, omega)
    d = p.E - omega
    M = np.array([[d + 1j * p.gamma0 + 1j * g, 1j * g],
                  [1j * g, d - 1j * p.gamma0 + 1j * g]])
    rhs = np.array([-p.V * I, -p.V * I], dtype=complex)
    # lstsq: at gamma0 = 0, omega = E the antisymmetric combination is free
    x = np.linalg.lstsq(M, rhs, rcond=None)[0]
    return complex(x[0]), complex(x[1])


def linear_spectrum(p: DimerParams, omegas: Sequence[float]) -> list[tuple[float, float, float]]:
    """(omega, transmissivity, reflectivity) from a direct 2x2 solve at each frequency."""
    _require_linear(p)
    out = []
    for w in omegas:
        a, b = _linear_solve(p, float(w))
        psi0, R, _ = close_field(p, float(w), 1.0, a, b)
        out.append((float(w), abs(psi0) ** 2, abs(R) ** 2))
    return out


# ---------------------------------------------------------------- closed-form branches

def _require_resonant_cubic(p: DimerParams, need_gamma0: bool = False):
    if p.chi != 0:
        raise ValueError("closed-form scattering branches need chi = 0")
    if p.gamma2 <= 0:
        raise ValueError("closed-form scattering branches need gamma2 > 0")
    if need_gamma0 and p.gamma0 <= 0:
        raise ValueError("this branch needs gamma0 > 0")
    wavenumber(p, p.E)


def tristability_threshold(p: DimerParams) -> float:
    """Incident power below which the EIT cubic has three real roots."""
    return 4.0 / 27.0 * p.gamma0 ** 3 / (p.V ** 2 * p.gamma2)


def _cubic_real_roots(c3: float, c1: float, c0: float, rtol: float = 1e-12) -> list[float]:
    """Distinct real roots of c3 x^3 + c1 x + c0 = 0 (c3 != 0), ascending."""
    pp, qq = c1 / c3, c0 / c3
    disc = -(4 * pp ** 3 + 27 * qq ** 2)
    scale = max(abs(4 * pp ** 3), 27 * qq ** 2)
    if scale == 0:
        roots = [0.0]
    elif abs(disc) <= rtol * scale:
        roots = [3 * qq / pp, -1.5 * qq / pp]
    elif disc > 0:
        m = 2 * math.sqrt(-pp / 3)
        arg = 3 * qq / (pp * m)
        theta = math.acos(max(-1.0, min(1.0, arg))) / 3
        roots = [m * math.cos(theta - 2 * math.pi * j / 3) for j in range(3)]
    else:
        # one real root; Cardano with the sign chosen to avoid cancellation
        if pp == 0:
            roots = [-math.copysign(abs(qq) ** (1 / 3), qq)]
        else:
            sq = math.sqrt(-disc / 108)
            u = -qq / 2 + math.copysign(sq, -qq / 2)
            u = math.copysign(abs(u) ** (1 / 3), u)
            roots = [u - pp / (3 * u)]
    polished = []
    for x in roots:
        for _ in range(3):
            f = x ** 3 + pp * x + qq
            df = 3 * x * x + pp
            if df == 0:
                break
            step = f / df
            if not math.isfinite(step) or abs(step) > 1e-6 * max(1.0, abs(x)):
                break
            x -= step
        polished.append(x)
    return sorted(polished)


def eit_branch(p: DimerParams, I: float) -> list[ScatteringSolution]:
    """Antisymmetric resonant states psiA = -psiB = -i phi at omega = E, all with T = I.

    phi ranges over the real roots of gamma2 phi^3 - gamma0 phi - V I = 0,
    excluding the saturation amplitudes phi^2 = gamma0/gamma2.
    """
    _require_resonant_cubic(p)
    sat = p.saturation
    out = []
    for phi in _cubic_real_roots(p.gamma2, -p.gamma0, -p.V * I):
        if sat > 0 and abs(phi * phi - sat) <= 1e-9 * sat:
            continue
        out.append(make_solution(p, p.E, I, -1j * phi, 1j * phi, Branch.EIT_SYMMETRIC))
    return out


def fano_window(p: DimerParams) -> float:
    """Largest incident power carrying the Fano-zero family."""
    return 4 * p.V ** 2 * p.saturation / (4 * p.C ** 2 - p.E ** 2)


def fano_family(p: DimerParams, Pin: float, dedup_tol: float = 1e-6) -> list[ScatteringSolution]:
    """Symmetric states with psi0 = T = 0 at omega = E; empty outside the window."""
    _require_resonant_cubic(p, need_gamma0=True)
    if p.V == 0:
        return []
    cosd = math.sqrt((4 * p.C ** 2 - p.E ** 2) * Pin / p.saturation) / (2 * p.V)
    if cosd > 1.0 + 1e-12:
        return []
    delta = math.acos(min(cosd, 1.0))
    r = math.sqrt(p.saturation)
    I = math.sqrt(Pin)
    up, down = 1j * r * cmath.exp(1j * delta), 1j * r * cmath.exp(-1j * delta)
    pairs = [(up, down)]
    if math.hypot(abs(up - down), abs(down - up)) > dedup_tol:
        pairs.append((down, up))
    # psi0 = 0 holds by construction; the closure is re-checked in make_solution
    return [replace(make_solution(p, p.E, I, a, b, Branch.FANO_SYMMETRIC),
                    psi0=0j, R=complex(-I), T=0j)
            for a, b in pairs]


def ultimate_power(p: DimerParams) -> float:
    return p.V ** 2 * p.saturation / (4 * p.C ** 2 - p.E ** 2)


def ultimate_asymmetric(p: DimerParams) -> tuple[float, list[ScatteringSolution]]:
    """The two states with one element dark, and the incident power where they exist.

    Returned in order (gain element A excited, loss element B excited).
    """
    _require_resonant_cubic(p, need_gamma0=True)
    Pin = ultimate_power(p)
    I = math.sqrt(Pin)
    lit = 1j * math.sqrt(p.saturation)
    return Pin, [
        make_solution(p, p.E, I, lit, 0j, Branch.ULTIMATE_GAIN),
        make_solution(p, p.E, I, 0j, lit, Branch.ULTIMATE_LOSS),
    ]


def closed_form_solutions(p: DimerParams, omega: float, I: float,
                          power_rtol: float = 1e-12) -> list[ScatteringSolution]:
    """Every closed-form branch member at (omega, I); empty when none applies."""
    if p.chi != 0 or p.gamma2 <= 0 or omega != p.E:
        return []
    out = list(eit_branch(p, I))
    if p.gamma0 > 0:
        out += fano_family(p, I * I)
        Pstar, ult = ultimate_asymmetric(p)
        if abs(I * I - Pstar) <= power_rtol * Pstar:
            # rebuild at the requested I so the gauge matches exactly
            out += [make_solution(p, omega, I, s.psiA, s.psiB, s.branch, tol=1e-9) for s in ult]
    return out


# ---------------------------------------------------------------- Newton multistart

@dataclass(frozen=True)
class SolverOpts:
    n_starts: int = 64
    seed: int = 0
    dedup_tol: float = 1e-6
    residual_tol: float = RESIDUAL_TOL
    newton_tol: float = 1e-12
    step_tol: float = 1e-14
    max_iter: int = 100
    max_halvings: int = 40
    closed_form_seeds: bool = True
    structural_seeds: bool = True
    ball_radius: float | None = None
    extra_seeds: tuple = field(default=(), compare=False)

    def with_seeds(self, seeds) -> "SolverOpts":
        return replace(self, extra_seeds=tuple(complex(a) for s in seeds for a in s))


def default_ball_radius(p: DimerParams, omega: float, I: float) -> float:
    if p.gamma2 > 0:
        return 2 * math.sqrt(max(p.saturation, 1.0))
    if p.V == 0:
        return 2.0
    # linear scale of the driven response, |psi| ~ V I / g
    return 2 * max(1.0, I * p.V / radiative_coupling(p, omega))


def _residual_vec(p, omega, I, g, X):
    a = X[:, 0] + 1j * X[:, 1]
    b = X[:, 2] + 1j * X[:, 3]
    ia, ib = np.abs(a) ** 2, np.abs(b) ** 2
    d = p.E - omega
    shared = 1j * g * (a + b) + p.V * I
    ra = d * a + shared + 1j * (p.gamma0 - p.gamma2 * ia) * a + p.chi * ia * a
    rb = d * b + shared - 1j * (p.gamma0 - p.gamma2 * ib) * b + p.chi * ib * b
    return np.stack([ra.real, ra.imag, rb.real, rb.imag], axis=1)


def _jacobian_vec(p, omega, I, g, X):
    n = X.shape[0]
    a = X[:, 0] + 1j * X[:, 1]
    b = X[:, 2] + 1j * X[:, 3]
    ia, ib = np.abs(a) ** 2, np.abs(b) ** 2
    d = p.E - omega
    ca = d + 1j * g + 1j * (p.gamma0 - p.gamma2 * ia) + p.chi * ia
    cb = d + 1j * g - 1j * (p.gamma0 - p.gamma2 * ib) + p.chi * ib
    dca = p.chi - 1j * p.gamma2
    dcb = p.chi + 1j * p.gamma2
    cols_a = np.empty((n, 4), dtype=complex)
    cols_b = np.empty((n, 4), dtype=complex)
    cols_a[:, 0] = ca + dca * 2 * X[:, 0] * a
    cols_a[:, 1] = 1j * ca + dca * 2 * X[:, 1] * a
    cols_a[:, 2] = 1j * g
    cols_a[:, 3] = -g
    cols_b[:, 0] = 1j * g
    cols_b[:, 1] = -g
    cols_b[:, 2] = cb + dcb * 2 * X[:, 2] * b
    cols_b[:, 3] = 1j * cb + dcb * 2 * X[:, 3] * b
    J = np.empty((n, 4, 4))
    J[:, 0], J[:, 1] = cols_a.real, cols_a.imag
    J[:, 2], J[:, 3] = cols_b.real, cols_b.imag
    return J


def _rel_residual(F, X):
    # max |complex residual| / max(1, |state|)
    ra = np.hypot(F[:, 0], F[:, 1])
    rb = np.hypot(F[:, 2], F[:, 3])
    return np.maximum(ra, rb) / np.maximum(1.0, np.linalg.norm(X, axis=1))


def newton_batch(p: DimerParams, omega: float, I: float, X0: np.ndarray, opts: SolverOpts):
    """Damped Newton from every row of X0 (real 4-vectors).

    Returns (X, relative residual, converged mask).
    """
    g = radiative_coupling(p, omega)
    X = np.array(X0, dtype=float, copy=True)
    n = X.shape[0]
    done = np.zeros(n, dtype=bool)
    failed = np.zeros(n, dtype=bool)
    blowup = 1e6 * max(1.0, float(np.max(np.abs(X0))) if n else 1.0)
    for _ in range(opts.max_iter):
        F = _residual_vec(p, omega, I, g, X)
        res = _rel_residual(F, X)
        done |= res < opts.newton_tol
        act = np.flatnonzero(~done & ~failed)
        if act.size == 0:
            break
        Xa, Fa = X[act], F[act]
        J = _jacobian_vec(p, omega, I, g, Xa)
        step = -np.einsum("nij,nj->ni", np.linalg.pinv(J), Fa)
        norm0 = np.linalg.norm(Fa, axis=1)
        lam = np.ones(act.size)
        accepted = np.zeros(act.size, dtype=bool)
        Xnew = Xa.copy()
        for _h in range(opts.max_halvings + 1):
            todo = ~accepted
            if not todo.any():
                break
            trial = Xa[todo] + lam[todo, None] * step[todo]
            ok = np.linalg.norm(_residual_vec(p, omega, I, g, trial), axis=1) < norm0[todo]
            idx = np.flatnonzero(todo)
            Xnew[idx[ok]] = trial[ok]
            accepted[idx[ok]] = True
            lam[idx[~ok]] *= 0.5
        small = np.linalg.norm(lam[:, None] * step, axis=1) < opts.step_tol * (1 + np.linalg.norm(Xa, axis=1))
        stuck = ~accepted | small
        X[act] = Xnew
        stuck_idx = act[stuck]
        fin = _rel_residual(_residual_vec(p, omega, I, g, X[stuck_idx]), X[stuck_idx])
        done[stuck_idx[fin < opts.residual_tol]] = True
        failed[stuck_idx[fin >= opts.residual_tol]] = True
        failed |= ~np.isfinite(X).all(axis=1) | (np.abs(X).max(axis=1) > blowup)
    F = _residual_vec(p, omega, I, g, X)
    res = _rel_residual(F, X)
    ok = np.isfinite(res) & (res < opts.residual_tol) & ~failed
    return X, res, ok


def _structural_seeds(p: DimerParams, radius: float) -> list[tuple[complex, complex]]:
    amps = [0.0]
    if p.gamma2 > 0 and p.gamma0 > 0:
        amps.append(math.sqrt(p.saturation))
    amps.append(0.5 * radius)
    phases = [cmath.exp(0.5j * math.pi * j) for j in range(4)]
    vals = [0j] + [a * ph for a in amps if a > 0 for ph in phases]
    return [(x, y) for x in vals for y in vals]


def _gauge_fix(a: complex, b: complex, I: float) -> tuple[complex, complex]:
    if I > 0:
        return a, b
    lead = a if abs(a) >= abs(b) else b
    if abs(lead) == 0:
        return a, b
    ph = abs(lead) / lead
    return a * ph, b * ph


def classify(p: DimerParams, a: complex, b: complex, closed: list[ScatteringSolution],
             tol: float) -> Branch:
    for s in closed:
        if math.hypot(abs(a - s.psiA), abs(b - s.psiB)) < tol:
            return s.branch
    if abs(abs(a) ** 2 - abs(b) ** 2) > tol * max(1.0, abs(a) ** 2 + abs(b) ** 2):
        return Branch.NUMERIC_ASYMMETRIC
    return Branch.NUMERIC_OTHER


def _sort_key(s: ScatteringSolution):
    return (round(s.transmissivity, 10), round(abs(s.psiA) ** 2, 8),
            round(abs(s.psiB) ** 2, 8), round(s.psiA.real, 8), round(s.psiB.real, 8))


def solve_scattering(p: DimerParams, omega: float, I: float,
                     opts: SolverOpts | None = None) -> list[ScatteringSolution]:
    """All stationary solutions found from closed-form, structural, supplied and random starts."""
    opts = opts or SolverOpts()
    wavenumber(p, omega)
    if I < 0:
        raise ValueError("incident amplitude must be >= 0 (real gauge)")
    if p.V == 0:
        # a decoupled dimer does not scatter; its own free states are not scattering states
        return [make_solution(p, omega, I, 0j, 0j, Branch.NUMERIC_OTHER)]
    radius = opts.ball_radius or default_ball_radius(p, omega, I)
    closed = closed_form_solutions(p, omega, I) if opts.closed_form_seeds else []

    seeds = [(s.psiA, s.psiB) for s in closed]
    extra = list(opts.extra_seeds)
    seeds += [(extra[i], extra[i + 1]) for i in range(0, len(extra) - 1, 2)]
    if opts.structural_seeds:
        seeds += _structural_seeds(p, radius)
    rng = np.random.default_rng(opts.seed)
    direction = rng.standard_normal((opts.n_starts, 4))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    rnd = direction * (radius * rng.random(opts.n_starts) ** 0.25)[:, None]

    X0 = np.array([[a.real, a.imag, b.real, b.imag] for a, b in seeds]).reshape(-1, 4)
    X0 = np.vstack([X0, rnd])
    X, res, ok = newton_batch(p, omega, I, X0, opts)
    if not ok.any():
        raise NoConvergence(
            f"no start converged at omega={omega}, I={I}",
            diagnostics={"n_starts": int(X0.shape[0]), "best_residual": float(np.nanmin(res))},
        )

    kept: list[tuple[complex, complex]] = []
    for row in X[ok]:
        a, b = _gauge_fix(complex(row[0], row[1]), complex(row[2], row[3]), I)
        if all(math.hypot(abs(a - ka), abs(b - kb)) > opts.dedup_tol for ka, kb in kept):
            kept.append((a, b))

    out = [make_solution(p, omega, I, a, b, classify(p, a, b, closed, opts.dedup_tol),
                         tol=opts.residual_tol) for a, b in kept]
    return sorted(out, key=_sort_key)


# ---------------------------------------------------------------- power sweep

@dataclass
class BranchTrack:
    id: int
    tag: Branch
    points: list = field(default_factory=list)  # (Pin, ScatteringSolution)

    @property
    def last(self) -> ScatteringSolution:
        return self.points[-1][1]


@dataclass
class BranchDiagram:
    omega: float
    axis: list
    branches: list
    gaps: list = field(default_factory=list)  # (Pin, message)
    step_bound: float = 0.0

    def solutions_at(self, i: int) -> list[ScatteringSolution]:
        Pin = self.axis[i]
        return [s for b in self.branches for (x, s) in b.points if x == Pin]

    def rows(self):
        """Flat records: transmissivity and element intensities versus Pin per branch."""
        for b in self.branches:
            for Pin, s in b.points:
                yield {
                    "branch_id": b.id, "branch": b.tag.value, "Pin": Pin,
                    "transmissivity": s.transmissivity, "reflectivity": s.reflectivity,
                    "intensityA": abs(s.psiA) ** 2, "intensityB": abs(s.psiB) ** 2,
                    "psiA_re": s.psiA.real, "psiA_im": s.psiA.imag,
                    "psiB_re": s.psiB.real, "psiB_im": s.psiB.imag,
                }


def _compatible(t1: Branch, t2: Branch) -> bool:
    fixed = (Branch.EIT_SYMMETRIC, Branch.FANO_SYMMETRIC)
    return t1 == t2 or not (t1 in fixed or t2 in fixed)


def power_sweep(p: DimerParams, omega: float, Pin_grid: Sequence[float],
                opts: SolverOpts | None = None, step_bound: float | None = None) -> BranchDiagram:
    """Solve on an ascending Pin grid, seeding each point with the previous solutions.

    Branches are linked by nearest-neighbour matching in (psiA, psiB) space;
    a link is only made when the states are closer than ``step_bound``
    (default: a quarter of the multistart ball radius).
    """
    opts = opts or SolverOpts()
    grid = [float(x) for x in Pin_grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("Pin grid must be ascending")
    if step_bound is None:
        step_bound = 0.25 * default_ball_radius(p, omega, math.sqrt(grid[-1]) if grid else 0.0)

    branches: list[BranchTrack] = []
    gaps = []
    active: list[BranchTrack] = []
    previous: list[ScatteringSolution] = []
    for Pin in grid:
        try:
            sols = solve_scattering(p, omega, math.sqrt(Pin),
                                    opts.with_seeds([(s.psiA, s.psiB) for s in previous]))
        except NoConvergence as exc:
            gaps.append((Pin, str(exc)))
            active, previous = [], []
            continue
        pairs = []
        for i, br in enumerate(active):
            for j, s in enumerate(sols):
                if _compatible(br.tag, s.branch):
                    d = math.hypot(abs(s.psiA - br.last.psiA), abs(s.psiB - br.last.psiB))
                    if d < step_bound:
                        pairs.append((d, i, j))
        used_b, used_s = set(), set()
        next_active = []
        for d, i, j in sorted(pairs):
            if i in used_b or j in used_s:
                continue
            used_b.add(i)
            used_s.add(j)
            active[i].points.append((Pin, sols[j]))
            next_active.append(active[i])
        for j, s in enumerate(sols):
            if j not in used_s:
                br = BranchTrack(id=len(branches), tag=s.branch, points=[(Pin, s)])
                branches.append(br)
                next_active.append(br)
        active = next_active
        previous = sols
    return BranchDiagram(omega=omega, axis=grid, branches=branches, gaps=gaps,
                         step_bound=step_bound)
