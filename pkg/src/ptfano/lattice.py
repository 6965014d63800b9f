"""Time-domain integration of the chain with the side-coupled dimer.

The infinite chain is truncated to ``n_sites`` sites indexed ``n = -M..M``
with the dimer attached at ``n = 0``. Quadratic-ramp absorbers sit at both
ends and a total-field/scattered-field (TF/SF) interface injects the
incident wave just right of the left absorber.

Frame convention. With ``omega = 2C cos k`` a wave ``exp(i(kn - omega t))``
has group velocity ``-2C sin k`` and travels left, so the forward-time wave
incident from the left is ``I exp(-i(kn + omega t))``. Stationary states of
:mod:`ptfano.scattering` are written with the opposite orientation. They
map onto forward-time lattice states by conjugation plus exchange of the
gain and loss elements (:func:`physical_image`), which preserves the
transmissivity and both intensities up to the A/B exchange.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum

import numba
import numpy as np

from .errors import Blowup, NotSteady
from .model import DimerParams, DimerState
from .scattering import ScatteringSolution, wavenumber


@dataclass(frozen=True)
class LatticeConfig:
    n_sites: int = 301
    dt: float = 0.005
    absorber_width: int = 40
    absorber_max: float = 1.0
    source_site: int | None = None
    probe_site: int | None = None
    ramp_time: float = 50.0
    horizon: float = 2000.0
    record_every: int = 20
    blowup_cap: float = 1e8
    # stability classification multipliers on eps * scale
    fixed_factor: float = 10.0
    cycle_factor: float = 100.0

    def __post_init__(self):
        if self.n_sites < 101 or self.n_sites % 2 == 0:
            raise ValueError("n_sites must be odd and >= 101")
        if self.dt <= 0 or self.horizon <= 0 or self.record_every < 1:
            raise ValueError("dt, horizon and record_every must be positive")
        if self.absorber_width < 1 or self.absorber_max < 0:
            raise ValueError("absorber_width must be >= 1 and absorber_max >= 0")
        m, w = self.half, self.absorber_width
        s, pr = self.source, self.probe
        if not -m + w + 1 <= s < 0:
            raise ValueError(f"source site {s} must lie between the left absorber and the dimer")
        if not 0 < pr <= m - w:
            raise ValueError(f"probe site {pr} must lie between the dimer and the right absorber")
        if s - 3 < -m + w:
            raise ValueError("no room for the reflection probe left of the source")

    @property
    def half(self) -> int:
        return (self.n_sites - 1) // 2

    @property
    def source(self) -> int:
        if self.source_site is not None:
            return self.source_site
        return -self.half + self.absorber_width + 5

    @property
    def probe(self) -> int:
        return self.probe_site if self.probe_site is not None else -self.source

    @property
    def reflect_probe(self) -> int:
        return self.source - 3

    def check_step(self, p: DimerParams):
        """Raise if dt is too coarse for the fastest linear frequency."""
        fastest = 2 * p.C + self.absorber_max + abs(p.E) + p.gamma0 + 2 * abs(p.V)
        if self.dt * fastest >= 0.5:
            raise ValueError(f"dt={self.dt} too large: dt*omega_max={self.dt * fastest:.3f} >= 0.5")


def absorber_profile(config: LatticeConfig) -> np.ndarray:
    n, w = config.n_sites, config.absorber_width
    j = np.arange(n)
    depth = np.maximum(np.maximum(w - j, j - (n - 1 - w)), 0)
    return config.absorber_max * (depth / w) ** 2


@dataclass
class LatticeState:
    t: float
    psi: np.ndarray
    psiA: complex
    psiB: complex

    def copy(self) -> "LatticeState":
        return LatticeState(self.t, self.psi.copy(), self.psiA, self.psiB)


@dataclass(frozen=True)
class Drive:
    omega: float
    I: float
    ramp_time: float = 0.0


# ---------------------------------------------------------------- numba kernel

@numba.njit(cache=True)
def _rhs(y, out, t, n, C, V, E, g0, g2, chi, sig, j0, js, src, I, k, omega, ramp, s_n):
    for j in range(n):
        h = 0j
        if j > 0:
            h += y[j - 1]
        if j < n - 1:
            h += y[j + 1]
        out[j] = -1j * C * h - sig[j] * y[j]
    a = y[n]
    b = y[n + 1]
    out[j0] += -1j * V * (a + b)
    if src:
        amp = I
        if ramp > 0.0 and t < ramp:
            amp = I * 0.5 * (1.0 - math.cos(math.pi * t / ramp))
        inc_left = amp * np.exp(-1j * (k * (s_n - 1) + omega * t))
        inc_here = amp * np.exp(-1j * (k * s_n + omega * t))
        out[js] += -1j * C * inc_left
        out[js - 1] += 1j * C * inc_here
    p0 = y[j0]
    ia = a.real * a.real + a.imag * a.imag
    ib = b.real * b.real + b.imag * b.imag
    out[n] = -1j * ((E + chi * ia) * a + 1j * (g0 - g2 * ia) * a + V * p0)
    out[n + 1] = -1j * ((E + chi * ib) * b - 1j * (g0 - g2 * ib) * b + V * p0)


@numba.njit(cache=True)
def _integrate(y, t0, dt, nsteps, rec, cap, n, C, V, E, g0, g2, chi, sig, j0, js,
               src, I, k, omega, ramp, s_n, jp, jr, rec_t, rec_a, rec_b, rec_p, rec_r):
    m = y.size
    k1 = np.empty(m, dtype=np.complex128)
    k2 = np.empty(m, dtype=np.complex128)
    k3 = np.empty(m, dtype=np.complex128)
    k4 = np.empty(m, dtype=np.complex128)
    tmp = np.empty(m, dtype=np.complex128)
    t = t0
    r = 0
    if rec > 0:
        rec_t[0] = t
        rec_a[0] = y[n]
        rec_b[0] = y[n + 1]
        rec_p[0] = y[jp]
        rec_r[0] = y[jr]
        r = 1
    for step in range(nsteps):
        _rhs(y, k1, t, n, C, V, E, g0, g2, chi, sig, j0, js, src, I, k, omega, ramp, s_n)
        for i in range(m):
            tmp[i] = y[i] + 0.5 * dt * k1[i]
        _rhs(tmp, k2, t + 0.5 * dt, n, C, V, E, g0, g2, chi, sig, j0, js, src, I, k, omega, ramp, s_n)
        for i in range(m):
            tmp[i] = y[i] + 0.5 * dt * k2[i]
        _rhs(tmp, k3, t + 0.5 * dt, n, C, V, E, g0, g2, chi, sig, j0, js, src, I, k, omega, ramp, s_n)
        for i in range(m):
            tmp[i] = y[i] + dt * k3[i]
        _rhs(tmp, k4, t + dt, n, C, V, E, g0, g2, chi, sig, j0, js, src, I, k, omega, ramp, s_n)
        big = 0.0
        for i in range(m):
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            v = abs(y[i])
            if not v <= big:
                big = v
        t = t0 + (step + 1) * dt
        if rec > 0 and (step + 1) % rec == 0:
            rec_t[r] = t
            rec_a[r] = y[n]
            rec_b[r] = y[n + 1]
            rec_p[r] = y[jp]
            rec_r[r] = y[jr]
            r += 1
        if not big <= cap:
            return step + 1, r, True
    return nsteps, r, False


@dataclass
class Trajectory:
    t: np.ndarray
    psiA: np.ndarray
    psiB: np.ndarray
    probe: np.ndarray
    reflect: np.ndarray
    final: LatticeState
    blowup: bool

    def rows(self, I: float):
        """CSV records: t, |psiA|^2, |psiB|^2, Re/Im of both, running t estimate."""
        inst = np.abs(self.probe) ** 2 / I ** 2 if I > 0 else np.full(self.t.size, np.nan)
        csum = np.concatenate([[0.0], np.cumsum(inst)])
        for i in range(self.t.size):
            lo = int(0.9 * (i + 1))
            running = (csum[i + 1] - csum[lo]) / (i + 1 - lo)
            yield (self.t[i], abs(self.psiA[i]) ** 2, abs(self.psiB[i]) ** 2,
                   self.psiA[i].real, self.psiA[i].imag, self.psiB[i].real,
                   self.psiB[i].imag, running)


TRAJECTORY_HEADER = ("t", "intensityA", "intensityB", "psiA_re", "psiA_im",
                     "psiB_re", "psiB_im", "t_est_running")


def write_trajectory_csv(path, traj: Trajectory, I: float):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_HEADER)
        for row in traj.rows(I):
            w.writerow([f"{x:.17g}" for x in row])


def integrate(state: LatticeState, config: LatticeConfig, p: DimerParams,
              drive: Drive | None, duration: float, record_every: int | None = None) -> Trajectory:
    """Fixed-step RK4 over ``duration``; stops early (blowup=True) past the amplitude cap."""
    config.check_step(p)
    n = config.n_sites
    m = config.half
    nsteps = int(round(duration / config.dt))
    rec = config.record_every if record_every is None else record_every
    nrec = nsteps // rec + 1
    y = np.empty(n + 2, dtype=np.complex128)
    y[:n] = state.psi
    y[n], y[n + 1] = state.psiA, state.psiB
    bufs = [np.zeros(nrec, dtype=np.complex128) for _ in range(4)]
    rec_t = np.zeros(nrec)
    if drive is not None:
        src, I, omega, ramp = True, float(drive.I), float(drive.omega), float(drive.ramp_time)
        k = wavenumber(p, omega)
    else:
        src, I, omega, ramp, k = False, 0.0, 0.0, 0.0, 0.0
    done, r, blew = _integrate(
        y, float(state.t), float(config.dt), nsteps, rec, float(config.blowup_cap),
        n, float(p.C), float(p.V), float(p.E), float(p.gamma0), float(p.gamma2), float(p.chi),
        absorber_profile(config), m, config.source + m, src, I, k, omega, ramp,
        config.source, config.probe + m, config.reflect_probe + m,
        rec_t, *bufs)
    final = LatticeState(float(state.t) + done * config.dt, y[:n].copy(), complex(y[n]), complex(y[n + 1]))
    return Trajectory(rec_t[:r], bufs[0][:r], bufs[1][:r], bufs[2][:r], bufs[3][:r], final, blew)


def step(state: LatticeState, config: LatticeConfig, p: DimerParams,
         drive: Drive | None = None) -> LatticeState:
    """One RK4 step; raises Blowup past the amplitude cap."""
    traj = integrate(state, config, p, drive, config.dt, record_every=1)
    if traj.blowup:
        raise Blowup(f"amplitude exceeded {config.blowup_cap:g}", t=traj.final.t)
    return traj.final


def zero_state(config: LatticeConfig) -> LatticeState:
    return LatticeState(0.0, np.zeros(config.n_sites, dtype=complex), 0j, 0j)


# ---------------------------------------------------------------- scattering runs

@dataclass
class SimResult:
    trajectory: Trajectory
    t_est: float
    r_est: float
    spread: float
    steady: bool


def _window_estimate(values: np.ndarray, frac: float) -> tuple[float, float]:
    lo = int((1 - frac) * values.size)
    w = values[lo:]
    mean = float(np.mean(w))
    return mean, float(np.std(w)) / max(mean, 1e-2)


def run_scattering_sim(p: DimerParams, config: LatticeConfig, omega: float, I: float,
                       initial: LatticeState | None = None) -> SimResult:
    """Drive the chain from rest with a ramped plane wave and measure t and r.

    Estimates average |psi_probe|^2 / I^2 over the last 10 % of the run.
    A relative spread above 5 % marks the run as not steady and emits a
    NotSteady warning.
    """
    if I <= 0:
        raise ValueError("incident amplitude must be positive")
    wavenumber(p, omega)
    state = initial if initial is not None else zero_state(config)
    traj = integrate(state, config, p, Drive(omega, I, config.ramp_time), config.horizon)
    if traj.blowup:
        raise Blowup(f"amplitude exceeded {config.blowup_cap:g} at t={traj.final.t:.2f}",
                     t=traj.final.t)
    t_series = np.abs(traj.probe) ** 2 / I ** 2
    r_series = np.abs(traj.reflect) ** 2 / I ** 2
    t_est, spread = _window_estimate(t_series, 0.1)
    r_est, _ = _window_estimate(r_series, 0.1)
    steady = spread <= 0.05
    if not steady:
        warnings.warn(NotSteady(f"t estimate spread {spread:.3g} over the final window"),
                      stacklevel=2)
    return SimResult(traj, t_est, r_est, spread, steady)


# ---------------------------------------------------------------- stationary states on the lattice

def physical_image(sol: ScatteringSolution) -> tuple[DimerState, complex, complex]:
    """Forward-time counterpart of a stationary solution: (dimer state, R, T)."""
    return DimerState(sol.psiB.conjugate(), sol.psiA.conjugate()), sol.R.conjugate(), sol.T.conjugate()


def stationary_lattice_state(p: DimerParams, config: LatticeConfig,
                             sol: ScatteringSolution) -> LatticeState:
    """Lattice field of ``sol`` in the TF/SF layout at t = 0.

    Inside the absorbers the outgoing waves are tapered by their WKB decay
    so the start is close to the damped steady state.
    """
    dimer, R, T = physical_image(sol)
    k = wavenumber(p, sol.omega)
    m = config.half
    n = np.arange(-m, m + 1)
    psi = np.where(n < 0, sol.I * np.exp(-1j * k * n) + R * np.exp(1j * k * n),
                   T * np.exp(-1j * k * n)).astype(complex)
    psi[n < config.source] -= sol.I * np.exp(-1j * k * n[n < config.source])
    sig = absorber_profile(config)
    vg = 2 * p.C * math.sin(k)
    w = config.absorber_width
    left = np.cumsum(sig[:w][::-1])[::-1] / vg
    right = np.cumsum(sig[-w:]) / vg
    psi[:w] *= np.exp(-left)
    psi[-w:] *= np.exp(-right)
    return LatticeState(0.0, psi, dimer.psiA, dimer.psiB)


class StabilityClass(str, Enum):
    FIXED_POINT = "FixedPoint"
    LIMIT_CYCLE = "LimitCycle"
    DIVERGENT = "Divergent"


@dataclass
class StabilityVerdict:
    cls: StabilityClass
    final_distance: float
    oscillation_band: tuple
    band_width: float
    mean_transmissivity: float
    asymmetry: float
    returned: bool
    t_end: float
    trajectory: Trajectory | None = field(default=None, repr=False)

    def summary(self) -> dict:
        return {
            "class": self.cls.value, "final_distance": self.final_distance,
            "oscillation_band": list(self.oscillation_band), "band_width": self.band_width,
            "mean_transmissivity": self.mean_transmissivity, "asymmetry": self.asymmetry,
            "returned": self.returned, "t_end": self.t_end,
        }


def probe_stability(p: DimerParams, config: LatticeConfig, sol: ScatteringSolution,
                    eps: float = 1e-4) -> StabilityVerdict:
    """Perturb the dimer of a stationary state by (1 + eps) and classify the evolution.

    Distances are in intensity units scaled by ``scale = max(1, largest
    element intensity)``. Divergent: the run hit the amplitude cap, or the
    distance is still growing over the final quarter while already above
    the cycle threshold. LimitCycle: final-quarter peak-to-peak intensity
    above ``cycle_factor*eps*scale`` and not shrinking. FixedPoint: the
    run settles; ``returned`` tells whether it came back to ``sol``.
    """
    state = stationary_lattice_state(p, config, sol)
    state.psiA *= 1 + eps
    state.psiB *= 1 + eps
    target = np.array([abs(state.psiA) ** 2, abs(state.psiB) ** 2]) / (1 + eps) ** 2
    scale = max(1.0, float(target.max()))
    traj = integrate(state, config, p, Drive(sol.omega, sol.I, 0.0), config.horizon)
    inten = np.stack([np.abs(traj.psiA) ** 2, np.abs(traj.psiB) ** 2], axis=1)
    nan = float("nan")
    if traj.blowup:
        return StabilityVerdict(StabilityClass.DIVERGENT, float("inf"), (nan, nan), nan,
                                nan, nan, False, traj.final.t, traj)

    dist = np.max(np.abs(inten - target), axis=1)
    q = int(0.75 * dist.size)
    tail = inten[q:]
    half = tail.shape[0] // 2
    width = float(np.max(np.ptp(tail, axis=0)))
    width_early = float(np.max(np.ptp(tail[:half], axis=0)))
    width_late = float(np.max(np.ptp(tail[half:], axis=0)))
    total = tail.sum(axis=1)
    t_series = np.abs(traj.probe[q:]) ** 2 / sol.I ** 2 if sol.I > 0 else np.full(tail.shape[0], nan)
    final_distance = float(dist[-1])
    fixed_tol = config.fixed_factor * eps * scale
    cycle_tol = config.cycle_factor * eps * scale

    growing = final_distance > cycle_tol and final_distance > 2 * float(dist[q])
    if growing and width_late > 1.5 * width_early and width_late > cycle_tol:
        cls = StabilityClass.DIVERGENT
    elif width > cycle_tol and width_late >= 0.5 * width_early:
        cls = StabilityClass.LIMIT_CYCLE
    else:
        cls = StabilityClass.FIXED_POINT
    return StabilityVerdict(
        cls=cls,
        final_distance=final_distance,
        oscillation_band=(float(total.min()), float(total.max())),
        band_width=width,
        mean_transmissivity=float(np.mean(t_series)),
        asymmetry=float(np.mean(np.abs(tail[:, 0] - tail[:, 1]))),
        returned=cls is StabilityClass.FIXED_POINT and final_distance < fixed_tol,
        t_end=traj.final.t,
        trajectory=traj,
    )


def with_horizon(config: LatticeConfig, horizon: float) -> LatticeConfig:
    return replace(config, horizon=horizon)
