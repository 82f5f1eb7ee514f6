"""Cylindrical filament pulses.

In the boosted frame

    tau = n0 v (t - z/v) / s,   rho = (n0^2 v z - t) / s,   s = sqrt(n0^2 v^2 - 1),

the unperturbed A field obeys (d_tau^2 - d_rho^2 - n0^-2 r d_r r^-1 d_r + m0^2) A = 0
with phi-independent modes N e^{-i Omega tau + i kappa rho} r J1(k_r r),
Omega^2 = k_r^2 / n0^2 + kappa^2 + m0^2 and N = sqrt(k_r / (8 pi^3 Omega)).

A mass perturbation 2 m0 dm(tau, r) couples pairs of modes.  To first order

    A = -(i m0 / 2) sqrt(k_r k_r' / (Omega Omega')) delta(kappa + kappa')
        * int dtau e^{-i (Omega + Omega') tau} int dr r dm(tau, r) J1(k_r r) J1(k_r' r).

Amplitudes here are the coefficient of the delta function (a density per
unit kappa).  Squared amplitudes carry delta(0) = L_rho / (2 pi), so
probabilities are reported per unit rho-length.

The Lambda field obeys the same equation after dividing by n0^2: its mass
m_Lambda / n0^2 and perturbation dm_Lambda / n0^2 play the roles of m0 and dm.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .dispersion import MassiveField, format_float, lambda_variant
from .frames import Polarization, RegularityError, filament_boost_jacobian
from .numerics import (
    DEFAULT_TOL,
    ConvergenceError,
    Tolerance,
    bessel_j1,
    envelope_halfwidth,
    gauss_legendre,
    gaussian_fourier,
    integrate_coupled_oscillators,
    quad_oscillatory,
)

SMALL_KR_GUARD = 0.05
COVERAGE_RATIO = 1e-6
RADIAL_TAIL = 1e-10


class MomentumSelectionError(ValueError):
    """kappa + kappa' does not match any sector allowed by the pulse."""


class CoverageError(ValueError):
    """Initial-mode grid does not cover the support of the amplitude."""

    def __init__(self, message: str, suggested: tuple[float, float]):
        super().__init__(message)
        self.suggested = suggested


class RadialDomainError(ConvergenceError):
    """Radial overlap not converged by r_max."""

    def __init__(self, message: str, suggested_r_max: float):
        super().__init__(message)
        self.suggested_r_max = suggested_r_max


def boost_factor(n0: float, v: float) -> float:
    """s = sqrt(n0^2 v^2 - 1)."""
    x = (n0 * v) ** 2 - 1
    if x <= 0:
        raise RegularityError(f"n0^2 v^2 = {x + 1:.6g} is not above 1")
    return math.sqrt(x)


def effective_mass_sq(medium: MassiveField, polarization: Polarization) -> float:
    """Mass^2 entering the mode equation after normalising the time derivative."""
    if Polarization(polarization) is Polarization.A:
        return medium.m0_sq
    return lambda_variant(medium).m0_sq / medium.n0**4


# ---------------------------------------------------------------------------
# Modes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CylinderModeLabel:
    omega: float
    kappa: float
    k_r: float
    n0: float
    m0_sq: float
    polarization: Polarization = Polarization.A

    def __post_init__(self):
        if not (self.omega > 0 and self.k_r > 0):
            raise ValueError("Omega and k_r must be positive")
        resid = self.on_shell_residual
        if resid > 1e-12:
            raise ValueError(f"mode is off shell: relative residual {resid:.3e}")

    @property
    def on_shell_residual(self) -> float:
        rhs = self.k_r**2 / self.n0**2 + self.kappa**2 + self.m0_sq
        return abs(self.omega**2 - rhs) / rhs

    @property
    def normalization(self) -> float:
        return math.sqrt(self.k_r / (8 * math.pi**3 * self.omega))

    def field(self, tau, rho, r):
        """N e^{-i Omega tau + i kappa rho} r J1(k_r r)."""
        tau, rho, r = (np.asarray(a, dtype=float) for a in (tau, rho, r))
        phase = np.exp(-1j * self.omega * tau + 1j * self.kappa * rho)
        return self.normalization * phase * r * bessel_j1(self.k_r * r)

    def state(self, tau: float, r, rho=None) -> "FieldState":
        """(Psi, Pi) at time ``tau``; per unit rho-length when ``rho`` is None."""
        r = np.asarray(r, dtype=float)
        if rho is None:
            psi = self.field(tau, 0.0, r)
        else:
            rho = np.asarray(rho, dtype=float)
            psi = self.field(tau, rho[:, None], r[None, :])
        return FieldState(r, psi, -1j * self.omega * psi, rho)


def cylinder_mode(
    medium: MassiveField,
    *,
    omega: float | None = None,
    kappa: float | None = None,
    k_r: float | None = None,
    polarization: Polarization = Polarization.A,
) -> CylinderModeLabel:
    """Mode label from any two of (Omega, kappa, k_r); the third comes from the shell."""
    pol = Polarization(polarization)
    n0, m_sq = medium.n0, effective_mass_sq(medium, pol)
    given = sum(x is not None for x in (omega, kappa, k_r))
    if given != 2:
        raise ValueError("give exactly two of omega, kappa, k_r")
    if omega is None:
        omega = math.sqrt(k_r**2 / n0**2 + kappa**2 + m_sq)
    elif k_r is None:
        arg = omega**2 - kappa**2 - m_sq
        if arg <= 0:
            raise ValueError(f"off shell: Omega^2 - kappa^2 - m^2 = {arg:.6g} leaves no real k_r > 0")
        k_r = n0 * math.sqrt(arg)
    else:
        arg = omega**2 - k_r**2 / n0**2 - m_sq
        if arg < 0:
            raise ValueError(f"off shell: Omega^2 - k_r^2/n0^2 - m^2 = {arg:.6g} < 0")
        kappa = math.sqrt(arg)
    return CylinderModeLabel(float(omega), float(kappa), float(k_r), n0, m_sq, pol)


# ---------------------------------------------------------------------------
# Pseudo inner product
# ---------------------------------------------------------------------------


@dataclass
class FieldState:
    """Field and momentum on a radial grid, optionally also on a rho grid (axis 0).

    ``r_weights`` are quadrature weights for the radial integral; when absent
    the trapezoid rule on ``r`` is used.
    """

    r: np.ndarray
    psi: np.ndarray
    pi: np.ndarray
    rho: np.ndarray | None = None
    r_weights: np.ndarray | None = None
    boundary: np.ndarray | None = None  # Psi at the outer radius, if not the last sample

    def conjugate(self) -> "FieldState":
        b = None if self.boundary is None else np.conj(self.boundary)
        return FieldState(self.r, np.conj(self.psi), np.conj(self.pi), self.rho, self.r_weights, b)

    def edge_value(self) -> float:
        edge = self.psi[..., -1] if self.boundary is None else self.boundary
        return float(np.max(np.abs(edge)))


def _radial_weights(state: FieldState) -> np.ndarray:
    if state.r_weights is not None:
        return np.asarray(state.r_weights, dtype=float)
    r = state.r
    w = np.zeros_like(r)
    d = np.diff(r)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


def pseudo_inner_product(s1: FieldState, s2: FieldState, boundary_ratio: float = 1e-6) -> complex:
    """(i/2) int drho dr (2 pi / r) (Psi1^* Pi2 - Pi1^* Psi2)."""
    if s1.r.shape != s2.r.shape or not np.allclose(s1.r, s2.r, rtol=0, atol=0):
        raise ValueError("states must share the radial grid")
    r = s1.r
    w = _radial_weights(s1)
    with np.errstate(divide="ignore", invalid="ignore"):
        kernel = np.where(r > 0, 2 * math.pi / r, 0.0)
    dens = np.conj(s1.psi) * s2.pi - np.conj(s1.pi) * s2.psi
    for s in (s1, s2):
        peak = float(np.max(np.abs(s.psi)))
        edge = s.edge_value()
        if peak > 0 and edge > boundary_ratio * peak:
            warnings.warn(
                f"field at the radial boundary is {edge / peak:.2e} of its peak; domain may be too small",
                RuntimeWarning,
                stacklevel=2,
            )
    radial = np.sum(dens * kernel * w, axis=-1)
    if s1.rho is not None:
        radial = np.trapezoid(radial, s1.rho)
    return complex(0.5j * radial)


# ---------------------------------------------------------------------------
# Pulses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Substructure:
    """Carrier cos^2(omega_tau tau + omega_rho rho) under the envelope."""

    omega_tau: float
    omega_rho: float


@dataclass(frozen=True)
class FilamentPulse:
    """dm(tau, rho, r) = delta_m0 * env(tau) * g(r) * [carrier].

    ``width_tau`` is the standard deviation of the Gaussian envelope in the
    boosted time tau; ``delta_r`` that of the Gaussian radial profile.  A
    custom ``radial`` profile g(r) replaces the Gaussian.
    """

    delta_m0: float
    width_tau: float
    delta_r: float = 2.0
    substructure: Substructure | None = None
    radial: Callable | None = None

    def __post_init__(self):
        if not (self.width_tau > 0 and self.delta_r > 0):
            raise ValueError("pulse widths must be positive")

    @classmethod
    def from_lab(cls, delta_m0: float, delta_t: float, n0: float, v: float, **kw) -> "FilamentPulse":
        """Envelope width given in lab time; boosted to sigma_tau = n0 v dt / s."""
        return cls(delta_m0, n0 * v * delta_t / boost_factor(n0, v), **kw)

    def envelope(self, tau):
        tau = np.asarray(tau, dtype=float)
        return np.exp(-0.5 * (tau / self.width_tau) ** 2)

    def radial_profile(self, r):
        r = np.asarray(r, dtype=float)
        if self.radial is not None:
            return np.asarray(self.radial(r), dtype=float)
        return np.exp(-0.5 * (r / self.delta_r) ** 2)

    def delta_m(self, tau, rho, r):
        out = self.delta_m0 * self.envelope(tau) * self.radial_profile(r)
        if self.substructure is not None:
            sub = self.substructure
            out = out * np.cos(sub.omega_tau * np.asarray(tau) + sub.omega_rho * np.asarray(rho)) ** 2
        return out

    @property
    def tau_window(self) -> tuple[float, float]:
        h = envelope_halfwidth(self.width_tau)
        return (-h, h)

    def envelope_fourier(self, q: float, method: str = "analytic", tol: Tolerance = DEFAULT_TOL) -> complex:
        """F(q) = int dtau e^{-i q tau} env(tau)."""
        if method == "analytic":
            return complex(gaussian_fourier(self.width_tau, q))
        return quad_oscillatory(self.envelope, -q, self.tau_window, tol)

    def log_envelope_fourier(self, q: float) -> float:
        """ln |F(q)|, finite where F itself underflows."""
        return 0.5 * math.log(2 * math.pi) + math.log(self.width_tau) - 0.5 * (q * self.width_tau) ** 2

    def sectors(self) -> list[tuple[float, float, float]]:
        """(kappa + kappa', weight, tau-frequency shift) for each carrier term."""
        if self.substructure is None:
            return [(0.0, 1.0, 0.0)]
        wt, wr = self.substructure.omega_tau, self.substructure.omega_rho
        # cos^2 x = 1/2 + e^{2ix}/4 + e^{-2ix}/4
        return [(0.0, 0.5, 0.0), (-2 * wr, 0.25, 2 * wt), (2 * wr, 0.25, -2 * wt)]

    def longitudinal_factor(self, s_sum: float, kappa_sum: float, method: str = "analytic", tol: Tolerance = DEFAULT_TOL) -> complex:
        """Carrier-weighted F for the sector selected by ``kappa_sum``."""
        total = 0.0 + 0.0j
        hit = False
        for ksum, weight, shift in self.sectors():
            if abs(kappa_sum - ksum) <= 1e-12 * max(1.0, abs(ksum)):
                total += weight * self.envelope_fourier(s_sum - shift, method, tol)
                hit = True
        if not hit:
            allowed = sorted({k for k, _, _ in self.sectors()})
            raise MomentumSelectionError(
                f"kappa + kappa' = {kappa_sum:.6g} selects no carrier sector (allowed: {allowed})"
            )
        return total


# ---------------------------------------------------------------------------
# Pair amplitude
# ---------------------------------------------------------------------------


def radial_overlap(k1: float, k2: float, pulse: FilamentPulse, panels_per_width: int = 4, order: int = 32) -> float:
    """int_0^r_max dr r g(r) J1(k1 r) J1(k2 r) with r_max = max(8 dr, 40 / max k).

    The profile is negligible beyond 8 dr; 40 / max k adds several
    oscillations of the faster Bessel factor for the tail check.
    """
    if not (k1 > 0 and k2 > 0):
        raise ValueError("radial wavenumbers must be positive")
    r_max = max(8 * pulse.delta_r, 40 / max(k1, k2))
    width = min(pulse.delta_r / panels_per_width, math.pi / (2 * max(k1, k2)))
    n = max(8, int(math.ceil(r_max / width)))
    edges = np.linspace(0.0, r_max, n + 1)
    x, w = gauss_legendre(order)
    a, b = edges[:-1, None], edges[1:, None]
    r = a + 0.5 * (b - a) * (x + 1)
    f = r * pulse.radial_profile(r) * bessel_j1(k1 * r) * bessel_j1(k2 * r)
    panels = np.sum(f * w, axis=1) * 0.5 * (edges[1] - edges[0])
    total = float(np.sum(panels))
    # Scale by int |f| so cancellation between Bessel lobes does not trip the check.
    scale = float(np.sum(np.abs(f) * w)) * 0.5 * (edges[1] - edges[0])
    tail = float(np.max(np.abs(panels[-max(1, n // 16):])))
    if tail > RADIAL_TAIL * max(scale, 1e-300):
        raise RadialDomainError(
            f"radial overlap tail {tail:.3e} exceeds {RADIAL_TAIL:g} of int|f| = {scale:.3e}",
            2 * r_max,
        )
    return total


def radial_moment3(pulse: FilamentPulse) -> float:
    """int_0^inf dr r^3 g(r); 2 dr^4 for the Gaussian profile."""
    if pulse.radial is None:
        return 2 * pulse.delta_r**4
    r_max = 16 * pulse.delta_r
    edges = np.linspace(0.0, r_max, 257)
    x, w = gauss_legendre(32)
    a, b = edges[:-1, None], edges[1:, None]
    r = a + 0.5 * (b - a) * (x + 1)
    return float(np.sum(r**3 * pulse.radial_profile(r) * w) * 0.5 * (edges[1] - edges[0]))


@dataclass(frozen=True)
class PairAmplitude:
    final1: CylinderModeLabel
    final2: CylinderModeLabel
    amplitude: complex

    @property
    def abs2(self) -> float:
        return abs(self.amplitude) ** 2

    @property
    def abs2_per_length(self) -> float:
        """|A|^2 delta(0) / L_rho = |A|^2 / (2 pi)."""
        return self.abs2 / (2 * math.pi)


def _check_pair(final1: CylinderModeLabel, final2: CylinderModeLabel):
    if final1.polarization is not final2.polarization:
        raise ValueError("pair modes must share a polarization")
    if final1.n0 != final2.n0 or final1.m0_sq != final2.m0_sq:
        raise ValueError("pair modes must belong to the same medium")


def pair_amplitude(
    final1: CylinderModeLabel,
    final2: CylinderModeLabel,
    pulse: FilamentPulse,
    longitudinal: str = "analytic",
    tol: Tolerance = DEFAULT_TOL,
) -> PairAmplitude:
    """First-order pair amplitude density (coefficient of the kappa delta function).

    ``longitudinal`` selects the closed-form Gaussian transform or the
    oscillatory quadrature for the tau integral.  Deeply suppressed
    amplitudes (|F| far below 1e-16 of its peak) are only reachable in
    closed form.
    """
    _check_pair(final1, final2)
    m_eff = math.sqrt(final1.m0_sq)
    # For Lambda the mode equation carries m_Lambda/n0^2 = m0 and dm_Lambda/n0^2 = dm,
    # so the A-field pulse applies unchanged.
    s_sum = final1.omega + final2.omega
    long = pulse.longitudinal_factor(s_sum, final1.kappa + final2.kappa, longitudinal, tol)
    if pulse.delta_m0 == 0:
        return PairAmplitude(final1, final2, 0.0 + 0.0j)
    rad = radial_overlap(final1.k_r, final2.k_r, pulse)
    pref = -0.5j * m_eff * math.sqrt(final1.k_r * final2.k_r / (final1.omega * final2.omega))
    return PairAmplitude(final1, final2, complex(pref * pulse.delta_m0 * long * rad))


def small_kr_amplitude(
    final1: CylinderModeLabel,
    final2: CylinderModeLabel,
    pulse: FilamentPulse,
    guard: float = SMALL_KR_GUARD,
) -> PairAmplitude:
    """Pair amplitude with J1(x) ~ x/2: prefactor (k_r k_r'/4) F(Omega + Omega') int r^3 g."""
    _check_pair(final1, final2)
    worst = max(final1.k_r, final2.k_r) * pulse.delta_r
    if worst > guard:
        warnings.warn(f"k_r * dr = {worst:.3g} exceeds the small-k_r guard {guard}", RuntimeWarning, stacklevel=2)
    m_eff = math.sqrt(final1.m0_sq)
    long = pulse.longitudinal_factor(final1.omega + final2.omega, final1.kappa + final2.kappa)
    pref = -0.5j * m_eff * math.sqrt(final1.k_r * final2.k_r / (final1.omega * final2.omega))
    radial = final1.k_r * final2.k_r / 4 * radial_moment3(pulse)
    return PairAmplitude(final1, final2, complex(pref * pulse.delta_m0 * long * radial))


# ---------------------------------------------------------------------------
# Total probability
# ---------------------------------------------------------------------------


@dataclass
class EmissionProbability:
    final: CylinderModeLabel
    probability_per_length: float
    rate_per_lab_time: float
    amplitudes: list[PairAmplitude] = field(default_factory=list)


def lab_wavevector(mode: CylinderModeLabel, v: float) -> tuple[float, float, float]:
    """Lab (omega, k_z, k_perp) of a filament mode; the radial wavenumber is unchanged."""
    (a, b), (c, d) = filament_boost_jacobian(v, mode.n0)
    # phase -Omega tau + kappa rho = -omega t + k_z z
    return float(mode.omega * a - mode.kappa * c), float(mode.kappa * d - mode.omega * b), mode.k_r


def partner_mode(final: CylinderModeLabel, k_r: float, kappa_sum: float = 0.0) -> CylinderModeLabel:
    """Partner with kappa' = kappa_sum - kappa and the given k_r'."""
    kappa = kappa_sum - final.kappa
    omega = math.sqrt(k_r**2 / final.n0**2 + kappa**2 + final.m0_sq)
    return CylinderModeLabel(omega, kappa, float(k_r), final.n0, final.m0_sq, final.polarization)


def total_probability(
    final: CylinderModeLabel,
    k_r_grid: Sequence[float],
    pulse: FilamentPulse,
    v: float,
    threads: int = 1,
) -> EmissionProbability:
    """Sum of |A|^2 over partner modes, per unit rho-length.

    Partners are summed over every carrier sector; within each sector kappa'
    is pinned and the k_r' integral uses the trapezoid rule on ``k_r_grid``.
    ``rate_per_lab_time`` converts with d rho / dt = s along the pulse.
    """
    grid = np.asarray(k_r_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("k_r grid must be positive, strictly increasing, with at least two points")
    if pulse.delta_m0 == 0:
        return EmissionProbability(final, 0.0, 0.0, [])
    sectors = sorted({k for k, _, _ in pulse.sectors()})

    def job(args):
        ksum, kr = args
        return pair_amplitude(final, partner_mode(final, kr, ksum), pulse)

    tasks = [(ksum, kr) for ksum in sectors for kr in grid]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            amps = list(pool.map(job, tasks))
    else:
        amps = [job(t) for t in tasks]
    total = 0.0
    for i, _ in enumerate(sectors):
        block = np.array([a.abs2 for a in amps[i * grid.size:(i + 1) * grid.size]])
        peak = float(np.max(block))
        if peak > 0 and block[-1] > COVERAGE_RATIO * peak:
            raise CoverageError(
                f"|A|^2 at k_r' = {grid[-1]:.4g} is {block[-1] / peak:.2e} of its peak; extend the grid",
                (float(grid[0]), float(2 * grid[-1])),
            )
        total += float(np.trapezoid(block, grid)) / (2 * math.pi)
    s = boost_factor(final.n0, v)
    return EmissionProbability(final, total, total * s, amps)


PAIR_COLUMNS = ("Omega", "kappa", "k_r", "Omega_prime", "k_r_prime", "polarization", "amp_re", "amp_im", "amp_abs2_per_length")


def pairs_to_csv(amps: Sequence[PairAmplitude], path: str | Path | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PAIR_COLUMNS)
    for a in amps:
        w.writerow([
            format_float(a.final1.omega), format_float(a.final1.kappa), format_float(a.final1.k_r),
            format_float(a.final2.omega), format_float(a.final2.k_r), a.final1.polarization.value,
            format_float(a.amplitude.real), format_float(a.amplitude.imag), format_float(a.abs2_per_length),
        ])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, newline="")
    return text


# ---------------------------------------------------------------------------
# Pulse sub-structure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubstructureProfile:
    """dn(tau, rho, r) = dn0 g(r) exp{-tau^2/(2 sigma_tau^2)} cos^2(omega_tau tau + omega_rho rho)."""

    amplitude: float
    sigma_tau: float
    omega_tau: float
    omega_rho: float
    n0: float
    v: float
    omega_in: float
    v_ph: float  # phase velocity after any cone correction
    delta_r: float = 2.0

    def __call__(self, tau, rho, r):
        tau, rho, r = (np.asarray(a, dtype=float) for a in (tau, rho, r))
        env = np.exp(-0.5 * (tau / self.sigma_tau) ** 2) * np.exp(-0.5 * (r / self.delta_r) ** 2)
        return self.amplitude * env * np.cos(self.omega_tau * tau + self.omega_rho * rho) ** 2

    def lab(self, t, z, r):
        """Same perturbation in lab coordinates: cos^2(omega_in (t - z / v_ph))."""
        t, z, r = (np.asarray(a, dtype=float) for a in (t, z, r))
        sigma_t = self.sigma_tau * boost_factor(self.n0, self.v) / (self.n0 * self.v)
        env = np.exp(-0.5 * ((t - z / self.v) / sigma_t) ** 2) * np.exp(-0.5 * (r / self.delta_r) ** 2)
        return self.amplitude * env * np.cos(self.omega_in * (t - z / self.v_ph)) ** 2

    @property
    def substructure(self) -> Substructure:
        return Substructure(self.omega_tau, self.omega_rho)


def substructure_frequencies(omega_in: float, n0: float, v: float, v_ph: float) -> tuple[float, float]:
    """(omega_tau, omega_rho) of the boosted carrier."""
    s = boost_factor(n0, v)
    slip = 1 - v / v_ph
    omega_tau = omega_in * s / (n0 * v) * (1 + slip / s**2)
    omega_rho = omega_in * slip / s
    return omega_tau, omega_rho


def substructure_profile(
    amplitude: float,
    delta_t: float,
    n0: float,
    v: float,
    v_ph: float,
    theta: float,
    omega_in: float,
    delta_r: float = 2.0,
    cone_correction: bool = True,
) -> SubstructureProfile:
    """Carrier-modulated pulse.  With ``cone_correction`` the phase velocity is divided by cos(theta)."""
    if not 0 <= theta < math.pi / 2:
        raise ValueError("cone angle must lie in [0, pi/2)")
    if not (0 < v < 1 and 0 < v_ph < 1):
        raise ValueError("pulse and phase velocities must lie in (0, 1)")
    v_eff = v_ph / math.cos(theta) if cone_correction else v_ph
    wt, wr = substructure_frequencies(omega_in, n0, v, v_eff)
    sigma_tau = n0 * v * delta_t / boost_factor(n0, v)
    return SubstructureProfile(amplitude, sigma_tau, wt, wr, n0, v, omega_in, v_eff, delta_r)


# ---------------------------------------------------------------------------
# Exact evolution of a Fourier-Bessel packet
# ---------------------------------------------------------------------------


def j1_zeros(count: int) -> np.ndarray:
    """First ``count`` positive zeros of J1, bracketed near (j + 1/4) pi."""
    out = []
    for j in range(1, count + 1):
        guess = (j + 0.25) * math.pi
        out.append(brentq(lambda x: float(bessel_j1(x)), guess - 0.6, guess + 0.6, xtol=1e-15))
    return np.array(out)


@dataclass
class BesselBox:
    """phi-independent, rho-independent modes r J1(k_j r) vanishing at r = radius."""

    medium: MassiveField
    radius: float
    count: int
    polarization: Polarization = Polarization.A
    order: int = 64
    panels: int = 64

    def __post_init__(self):
        self.k = j1_zeros(self.count) / self.radius
        self.m_sq = effective_mass_sq(self.medium, self.polarization)
        self.omega = np.sqrt(self.k**2 / self.medium.n0**2 + self.m_sq)
        edges = np.linspace(0.0, self.radius, self.panels + 1)
        x, w = gauss_legendre(self.order)
        a, b = edges[:-1, None], edges[1:, None]
        self.r = (a + 0.5 * (b - a) * (x + 1)).ravel()
        self.w = np.tile(w * 0.5 * (edges[1] - edges[0]), self.panels)
        self.basis = self.r[None, :] * bessel_j1(self.k[:, None] * self.r[None, :])  # r J1(k_j r)
        self.norms = self.basis**2 / self.r @ self.w  # int (1/r) (r J1)^2 dr

    def coupling(self, pulse: FilamentPulse) -> np.ndarray:
        """G_jk = int dr r g(r) J1(k_j r) J1(k_k r), symmetric."""
        g = pulse.radial_profile(self.r)
        return (self.basis * g / self.r * self.w) @ self.basis.T

    def state(self, c: np.ndarray, dc: np.ndarray) -> FieldState:
        edge = c @ (self.radius * bessel_j1(self.k * self.radius))
        return FieldState(self.r, c @ self.basis, dc @ self.basis, None, self.w, np.atleast_1d(edge))

    def evolve(self, pulse: FilamentPulse, c0: np.ndarray, dc0: np.ndarray, tol: Tolerance = Tolerance(1e-12, 1e-14)):
        """Exact evolution of c_j'' + Omega_j^2 c_j + (2 m0 dm0 env / N_j) sum_k G_jk c_k = 0 across the pulse."""
        if pulse.substructure is not None:
            raise ValueError("packet evolution supports rho-independent pulses only")
        lo, hi = pulse.tau_window
        m0 = math.sqrt(self.m_sq)
        couple = 2 * m0 * pulse.delta_m0 * self.coupling(pulse) / self.norms[:, None]
        base = np.diag(self.omega**2)

        def stiffness(t):
            return base + float(pulse.envelope(t)) * couple

        return integrate_coupled_oscillators(stiffness, (lo, hi), (c0, dc0), tol)
