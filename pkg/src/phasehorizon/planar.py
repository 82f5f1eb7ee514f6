"""Planar pulse models and their Bogoliubov coefficients.

Model I varies the index, n(tau) = n0 + dn(tau), at fixed mass; Model II
varies the mass, m(tau) = m0 + dm(tau), at fixed n0.  For a mode
exp{i kappa rho + i k_x x} each model reduces to

    A'' + Omega^2(T) A = 0

in the oscillator time T of its polarization.  The engine builds the
potential as a function of tau (together with the clock T(tau)), so neither
the quadrature nor the ODE ever has to invert T.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .dispersion import MassiveField, format_float, massive_wavenumber
from .frames import (
    ConstantProfile,
    GaussianProfile,
    Polarization,
    Profile,
    PulseKinematics,
    RegularityError,
    RunningIntegral,
    clock_rate,
    lab_mode,
    oscillator_clock,
)
from .numerics import (
    DEFAULT_TOL,
    ConvergenceError,
    Tolerance,
    integrate_oscillator,
    quad_oscillatory,
)

NOISE_FLOOR = 1e-13
ROUNDOFF_FACTOR = 1e3  # perturbative resolution: max(NOISE_FLOOR, ROUNDOFF_FACTOR * eps * int|envelope|)
PERTURBATIVE_GUARD = 0.1


class PlanarModel(str, Enum):
    INDEX = "I"
    MASS = "II"

    @classmethod
    def parse(cls, text: str) -> "PlanarModel":
        key = str(text).strip().lower()
        if key in ("i", "1", "index"):
            return cls.INDEX
        if key in ("ii", "2", "mass"):
            return cls.MASS
        raise ValueError(f"unknown planar model {text!r} (expected 'index' or 'mass')")


@dataclass(frozen=True)
class PlanarModeLabel:
    kappa: float
    k_x: float
    polarization: Polarization = Polarization.A
    model: PlanarModel = PlanarModel.INDEX

    def __post_init__(self):
        if not (math.isfinite(self.kappa) and math.isfinite(self.k_x)):
            raise ValueError("mode wavenumbers must be finite")


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------


def omega_sq_a(n, kappa, k_x, m_sq, v):
    """Omega^2 for the A polarization at index n and mass^2 m_sq."""
    n2 = np.asarray(n, dtype=float) ** 2
    return n2 * kappa**2 + (k_x**2 + n2 * m_sq) * (n2 * v * v - 1) / (v * v)


def omega_sq_lambda(n, kappa, k_x, m_sq, v):
    """Omega^2 for the Lambda polarization; ``m_sq`` is the Lambda mass squared."""
    n2 = np.asarray(n, dtype=float) ** 2
    return kappa**2 / n2 + (k_x**2 * n2 + m_sq) * (n2 * v * v - 1) / (n2**3 * v * v)


class _IdentityClock:
    """T = tau."""

    rate = 1.0

    def g(self, tau):
        return np.ones_like(np.asarray(tau, dtype=float))

    def excess(self, tau):
        return np.zeros_like(np.asarray(tau, dtype=float))

    def __call__(self, tau):
        return tau

    def inverse(self, value):
        return value


@dataclass
class PotentialTrace:
    """Omega^2 along a pulse transit, parametrised by tau.

    ``clock`` maps tau to the oscillator time T.  ``delta_omega_sq`` gives
    Omega^2 - Omega0^2 without cancellation.  ``clock_scale`` is dT/dT_A at
    infinity: Omega0 * clock_scale is the frequency on the A-polarization
    clock, which is what the lab-frame map expects.
    """

    delta_omega_sq: Callable
    omega0_sq: float
    window: tuple[float, float]
    clock: object = field(default_factory=_IdentityClock)
    clock_scale: float = 1.0

    def __post_init__(self):
        if not self.omega0_sq > 0:
            raise ValueError("asymptotic Omega0^2 must be positive")

    @classmethod
    def closed_form(cls, delta_omega, omega0: float, window: tuple[float, float]) -> "PotentialTrace":
        """Trace with T = tau from a closed-form dOmega(T)."""

        def dsq(t):
            d = np.asarray(delta_omega(t), dtype=float)
            return d * (2 * omega0 + d)

        return cls(dsq, omega0 * omega0, window)

    @property
    def omega0(self) -> float:
        return math.sqrt(self.omega0_sq)

    def omega_sq(self, tau):
        return self.omega0_sq + np.asarray(self.delta_omega_sq(tau))

    def delta_omega(self, tau):
        d = np.asarray(self.delta_omega_sq(tau), dtype=float)
        return d / (np.sqrt(self.omega0_sq + d) + self.omega0)

    def sample(self, points: int = 4001) -> tuple[np.ndarray, np.ndarray]:
        """(T, Omega^2) on a uniform tau grid over the window."""
        tau = np.linspace(*self.window, points)
        return np.asarray(self.clock(tau)), self.omega_sq(tau)

    def peak_delta_omega(self, points: int = 4001) -> float:
        """Signed dOmega of largest magnitude, on this trace's own clock."""
        tau = np.linspace(*self.window, points)
        d = self.delta_omega(tau)
        return float(d[np.argmax(np.abs(d))])

    def is_static(self) -> bool:
        tau = np.linspace(*self.window, 257)
        return not np.any(np.asarray(self.delta_omega_sq(tau)) != 0)

    def check_positive(self):
        tau = np.linspace(*self.window, 4001)
        if np.any(self.omega_sq(tau) <= 0):
            raise ValueError("Omega^2 must stay positive along the trace")
        return self


def potential_model1(
    mode: PlanarModeLabel,
    n_profile: Profile,
    v: float,
    m0_sq: float,
) -> PotentialTrace:
    """Index-varying pulse at fixed mass ``m0_sq`` (the A-polarization mass)."""
    kin = PulseKinematics(v, n_profile).check_regular()
    pol = Polarization(mode.polarization)
    n0 = kin.n0
    kappa, kx = mode.kappa, mode.k_x
    clock = oscillator_clock(kin, pol)
    if pol is Polarization.A:
        w0 = float(omega_sq_a(n0, kappa, kx, m0_sq, v))

        def dsq(tau):
            # exact difference in u = n^2, free of cancellation
            n = np.asarray(n_profile(tau), dtype=float)
            dn = n - n0
            du = dn * (2 * n0 + dn)
            u, u0 = n * n, n0 * n0
            return du * kappa**2 + (kx**2 * v * v * du + m0_sq * (v * v * du * (u + u0) - du)) / (v * v)

        scale = 1.0
    else:
        ml_sq = m0_sq * n0**4
        w0 = float(omega_sq_lambda(n0, kappa, kx, ml_sq, v))

        def dsq(tau):
            return omega_sq_lambda(n_profile(tau), kappa, kx, ml_sq, v) - w0

        scale = n0 * n0
    trace = PotentialTrace(dsq, w0, n_profile.support, clock, scale)
    return trace.check_positive()


def potential_model2(
    mode: PlanarModeLabel,
    m_profile: Profile,
    n0: float,
    v: float,
) -> PotentialTrace:
    """Mass-varying pulse at fixed n0.  ``m_profile`` is the field's own mass m(tau)."""
    if (n0 * v) ** 2 <= 1:
        raise RegularityError(f"n0^2 v^2 = {(n0 * v) ** 2:.6g} is not above 1")
    tau = np.linspace(*m_profile.support, 4001)
    if np.any(np.asarray(m_profile(tau)) <= 0):
        raise ValueError("mass must stay positive along the pulse")
    pol = Polarization(mode.polarization)
    kin = PulseKinematics(v, ConstantProfile(n0))
    kappa, kx = mode.kappa, mode.k_x
    m0 = float(m_profile.asymptote)
    factor = (n0 * n0 * v * v - 1) / (v * v)
    if pol is Polarization.A:
        w0 = float(omega_sq_a(n0, kappa, kx, m0 * m0, v))
        coeff = n0 * n0 * factor
        scale = 1.0
    else:
        w0 = float(omega_sq_lambda(n0, kappa, kx, m0 * m0, v))
        coeff = factor / n0**6
        scale = n0 * n0

    def dsq(t):
        dm = np.asarray(m_profile(t), dtype=float) - m0
        return coeff * dm * (2 * m0 + dm)

    rate = float(clock_rate(n0, v, pol))
    support = m_profile.support
    clock = RunningIntegral(lambda t: np.full_like(np.asarray(t, dtype=float), rate), rate, support, cells=2)
    return PotentialTrace(dsq, w0, support, clock, scale).check_positive()


def delta_m_from_delta_n(
    delta_n: float,
    omega: float,
    model: MassiveField,
    polarization: Polarization = Polarization.A,
) -> float:
    """Mass change producing index change ``delta_n`` at lab frequency ``omega``.

    dn = -(k m / omega^3) dm with k the in-medium wavenumber.  The Lambda
    mass is n0^2 times the A mass, and so is its variation.
    """
    k = massive_wavenumber(model, omega)
    dm = -delta_n * omega**3 / (k * model.m0)
    if Polarization(polarization) is Polarization.LAMBDA:
        dm *= model.n0**2
    return float(dm)


# ---------------------------------------------------------------------------
# Bogoliubov coefficients
# ---------------------------------------------------------------------------


@dataclass
class BogoliubovResult:
    alpha: complex
    beta: complex
    method: str
    error_estimate: float
    flag: str = "ok"
    warnings: list[str] = field(default_factory=list)

    @property
    def beta_abs2(self) -> float:
        return abs(self.beta) ** 2

    @property
    def resolved(self) -> bool:
        return self.flag != "below_resolution" and abs(self.beta) >= NOISE_FLOOR

    @property
    def normalization(self) -> float:
        return abs(self.alpha) ** 2 - abs(self.beta) ** 2


def _flag(beta: complex, base: str = "ok", floor: float = NOISE_FLOOR) -> str:
    if base != "ok":
        return base
    return "ok" if abs(beta) >= max(floor, NOISE_FLOOR) else "below_resolution"


def beta_perturbative(
    trace: PotentialTrace,
    tol: Tolerance = DEFAULT_TOL,
    guard: float = PERTURBATIVE_GUARD,
) -> BogoliubovResult:
    """First-order beta = int dT dOmega(T) exp(2 i Omega0 T).

    Written in tau: T = rate * tau + excess(tau), so the quadrature sees a
    linear carrier 2 Omega0 rate and a slowly varying complex envelope.
    """
    notes = []
    if trace.is_static():
        return BogoliubovResult(1.0, 0.0, "perturbative", 0.0, "ok")
    w0 = trace.omega0
    ratio = abs(trace.peak_delta_omega()) / w0
    if ratio > guard:
        notes.append(f"|dOmega|/Omega0 = {ratio:.3g} exceeds the perturbative guard {guard}")
        warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)
    clock = trace.clock
    rate = clock.rate

    def envelope(tau):
        g = np.asarray(clock.g(tau), dtype=float)
        return g * trace.delta_omega(tau) * np.exp(2j * w0 * np.asarray(clock.excess(tau)))

    beta = quad_oscillatory(envelope, 2 * w0 * rate, trace.window, tol)
    tau = np.linspace(*trace.window, 4001)
    scale = float(np.trapezoid(np.abs(envelope(tau)), tau))
    err = max(tol.atol, tol.rtol * scale)
    floor = ROUNDOFF_FACTOR * np.finfo(float).eps * scale
    return BogoliubovResult(1.0, complex(beta), "perturbative", err, _flag(beta, "warning" if notes else "ok", floor), notes)


def bogoliubov_exact(
    trace: PotentialTrace,
    tol: Tolerance = DEFAULT_TOL,
    retries: int = 2,
) -> BogoliubovResult:
    """Integrate the mode equation through the pulse and project on e^{-/+ i Omega T}.

    In- and out-frequencies are read from the trace ends, so step potentials
    with Omega_in != Omega_out are handled too.
    """
    if trace.is_static():
        return BogoliubovResult(1.0, 0.0, "exact", 0.0, "ok")
    lo, hi = trace.window
    clock = trace.clock
    w_in = math.sqrt(float(trace.omega_sq(lo)))
    w_out = math.sqrt(float(trace.omega_sq(hi)))
    t_in, t_out = float(clock(lo)), float(clock(hi))
    a0 = np.exp(-1j * w_in * t_in)
    init = (a0, -1j * w_in * a0)
    rate = None if isinstance(clock, _IdentityClock) else (lambda s: float(clock.g(s)))

    def omega_sq(s):
        return float(trace.omega_sq(s))

    current = tol
    for attempt in range(retries + 1):
        sol = integrate_oscillator(omega_sq, (lo, hi), init, current, clock_rate=rate)
        a, da = sol.value, sol.derivative
        norm = math.sqrt(w_out / w_in) / (2 * w_out)
        alpha = (w_out * a + 1j * da) * np.exp(1j * w_out * t_out) * norm
        beta = (w_out * a - 1j * da) * np.exp(-1j * w_out * t_out) * norm
        defect = abs(abs(alpha) ** 2 - abs(beta) ** 2 - 1)
        if defect <= 1e-8:
            break
        current = Tolerance(current.rtol / 100, current.atol / 100)
    if defect > 1e-6:
        raise ConvergenceError(f"|alpha|^2 - |beta|^2 deviates from 1 by {defect:.3e}; integration unreliable")
    base = "ok" if defect <= 1e-8 else "normalization_warning"
    # beta carries an absolute error of order the ODE tolerance
    floor = 10 * max(current.rtol, defect)
    return BogoliubovResult(complex(alpha), complex(beta), "exact", defect, _flag(beta, base, floor))


# ---------------------------------------------------------------------------
# Scenarios and sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlanarScenario:
    """Gaussian pulse of width ``width`` (standard deviation in tau).

    ``amplitude`` is the peak index change for Model I and the peak mass
    change of the A field for Model II (the Lambda mass change is n0^2 times
    larger and derived here).
    """

    model: PlanarModel
    medium: MassiveField
    v: float
    amplitude: float
    width: float

    def trace(self, mode: PlanarModeLabel) -> PotentialTrace:
        n0 = self.medium.n0
        if self.model is PlanarModel.INDEX:
            prof = GaussianProfile(n0, self.amplitude, self.width)
            return potential_model1(mode, prof, self.v, self.medium.m0_sq)
        m0, dm = self.medium.m0, self.amplitude
        if Polarization(mode.polarization) is Polarization.LAMBDA:
            m0, dm = m0 * n0 * n0, dm * n0 * n0
        return potential_model2(mode, GaussianProfile(m0, dm, self.width), n0, self.v)

    def label(self, kappa: float, k_x: float, polarization: Polarization) -> PlanarModeLabel:
        return PlanarModeLabel(float(kappa), float(k_x), Polarization(polarization), self.model)


@dataclass
class SpectrumRow:
    mode: PlanarModeLabel
    omega0: float
    omega_lab: float
    k_z_lab: float
    result: BogoliubovResult | None
    error: str | None = None

    @property
    def beta_abs2(self) -> float:
        return math.nan if self.result is None else self.result.beta_abs2

    @property
    def flag(self) -> str:
        return "failed" if self.result is None else self.result.flag

    @property
    def method(self) -> str:
        return "none" if self.result is None else self.result.method


SPECTRUM_COLUMNS = ("model", "polarization", "kappa", "k_x", "Omega0", "omega_lab", "k_z_lab", "beta_abs2", "method", "flag")


@dataclass
class Spectrum:
    rows: list[SpectrumRow]

    def __len__(self):
        return len(self.rows)

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SPECTRUM_COLUMNS)
        for r in self.rows:
            w.writerow([
                r.mode.model.value, r.mode.polarization.value,
                format_float(r.mode.kappa), format_float(r.mode.k_x), format_float(r.omega0),
                format_float(r.omega_lab), format_float(r.k_z_lab), format_float(r.beta_abs2),
                r.method, r.flag,
            ])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, newline="")
        return text


def _solve_mode(scenario: PlanarScenario, mode: PlanarModeLabel, method: str, tol: Tolerance) -> list[SpectrumRow]:
    try:
        trace = scenario.trace(mode)
    except (ValueError, ConvergenceError) as exc:
        return [SpectrumRow(mode, math.nan, math.nan, math.nan, None, str(exc))]
    w0_common = trace.omega0 * trace.clock_scale
    omega, kz = lab_mode(w0_common, mode.kappa, scenario.medium.n0, scenario.v)
    methods = ("perturbative", "exact") if method == "both" else (method,)
    rows = []
    for m in methods:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                res = beta_perturbative(trace, tol) if m == "perturbative" else bogoliubov_exact(trace, tol)
            rows.append(SpectrumRow(mode, trace.omega0, float(omega), float(kz), res))
        except (ValueError, ConvergenceError) as exc:
            rows.append(SpectrumRow(mode, trace.omega0, float(omega), float(kz), None, str(exc)))
    return rows


def spectrum_sweep(
    scenario: PlanarScenario,
    kappas: Sequence[float],
    k_xs: Sequence[float],
    method: str = "perturbative",
    polarization: Polarization = Polarization.A,
    tol: Tolerance = DEFAULT_TOL,
    threads: int = 1,
) -> Spectrum:
    """|beta|^2 on the (kappa, k_x) grid; rows ordered kappa-major regardless of ``threads``."""
    if method not in ("perturbative", "exact", "both"):
        raise ValueError(f"unknown method {method!r}")
    modes = [scenario.label(k, kx, polarization) for k in kappas for kx in k_xs]
    if not modes:
        return Spectrum([])

    def job(mode):
        return _solve_mode(scenario, mode, method, tol)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(job, modes))
    else:
        chunks = [job(m) for m in modes]
    return Spectrum([row for chunk in chunks for row in chunk])
