"""Pulse-adapted coordinates and effective metrics.

A refractive-index pulse n(t - z/v) moving at constant speed v turns the
optical metric ds_A^2 = dt^2 - n^2 (dx^2 + dz^2) into a purely time-dependent
one once we use

    tau = t - z/v,       rho = z - int_0^tau v / (v^2 n^2 - 1) dtau'.

The dual polarization sees ds_Lambda^2 = ds_A^2 / n^4 (same light cones).
Each field mode then becomes an oscillator in a reparametrised time T whose
rate dT/dtau differs between the polarizations.

All running integrals are anchored at tau = 0, the pulse centre.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Protocol

import numpy as np

from .numerics import SampledFunction, envelope_halfwidth, gauss_legendre


class RegularityError(ValueError):
    """n^2 v^2 <= 1 somewhere: the comoving coordinates become singular."""

    def __init__(self, message: str, interval: tuple[float, float] | None = None):
        super().__init__(message)
        self.interval = interval


class Polarization(str, Enum):
    A = "A"
    LAMBDA = "Lambda"

    @classmethod
    def parse(cls, text: str) -> "Polarization":
        key = str(text).strip()
        if key in ("A", "a"):
            return cls.A
        if key.lower() in ("lambda", "l", "Λ".lower()):
            return cls.LAMBDA
        raise ValueError(f"unknown polarization {text!r} (expected 'A' or 'Lambda')")


# ---------------------------------------------------------------------------
# Regularity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Regularity:
    value: float
    regime: str  # "subcritical" | "critical" | "supercritical"

    @property
    def regular(self) -> bool:
        return self.regime == "supercritical"


def regularity_factor(n: float, v: float, rtol: float = 1e-12) -> Regularity:
    """n^2 v^2 and whether the pulse is faster than the in-medium light speed."""
    if n <= 0 or v <= 0:
        raise ValueError("n and v must be positive")
    x = (n * v) ** 2
    if abs(x - 1) <= rtol:
        return Regularity(x, "critical")
    return Regularity(x, "supercritical" if x > 1 else "subcritical")


# ---------------------------------------------------------------------------
# Profiles
# ---------------------------------------------------------------------------


class Profile(Protocol):
    """Scalar pulse profile f(tau) that settles to ``asymptote`` outside ``support``."""

    asymptote: float

    def __call__(self, tau): ...

    def derivative(self, tau): ...

    @property
    def support(self) -> tuple[float, float]: ...


@dataclass(frozen=True)
class ConstantProfile:
    asymptote: float

    def __call__(self, tau):
        return np.full_like(np.asarray(tau, dtype=float), self.asymptote)

    def derivative(self, tau):
        return np.zeros_like(np.asarray(tau, dtype=float))

    @property
    def support(self) -> tuple[float, float]:
        return (-1.0, 1.0)


@dataclass(frozen=True)
class GaussianProfile:
    """asymptote + amplitude * exp(-tau^2 / (2 width^2)); ``width`` is the standard deviation."""

    asymptote: float
    amplitude: float
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("Gaussian width must be positive")

    def envelope(self, tau):
        tau = np.asarray(tau, dtype=float)
        return np.exp(-0.5 * (tau / self.width) ** 2)

    def __call__(self, tau):
        return self.asymptote + self.amplitude * self.envelope(tau)

    def derivative(self, tau):
        tau = np.asarray(tau, dtype=float)
        return -self.amplitude * tau / self.width**2 * self.envelope(tau)

    @property
    def support(self) -> tuple[float, float]:
        h = envelope_halfwidth(self.width)
        return (-h, h)


class SampledProfile:
    """Profile from samples; constant continuation beyond the sampled range."""

    def __init__(self, fn: SampledFunction):
        self.fn = fn
        if abs(fn.y[0] - fn.y[-1]) > 1e-12 * max(1.0, abs(fn.y[0])):
            raise ValueError("profile must take the same value at both ends")
        self.asymptote = float(np.real(fn.y[0]))

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        lo, hi = self.fn.domain
        inside = (tau >= lo) & (tau <= hi)
        return np.where(inside, np.real(self.fn(np.clip(tau, lo, hi))), self.asymptote)

    def derivative(self, tau):
        tau = np.asarray(tau, dtype=float)
        lo, hi = self.fn.domain
        inside = (tau >= lo) & (tau <= hi)
        return np.where(inside, np.real(self.fn.derivative(np.clip(tau, lo, hi))), 0.0)

    @property
    def support(self) -> tuple[float, float]:
        return self.fn.domain


@dataclass(frozen=True)
class PulseKinematics:
    """Pulse speed and the index profile n(tau) it drags through the medium."""

    v: float
    n_profile: Profile

    def __post_init__(self):
        if not 0 < self.v < 1:
            raise ValueError(f"pulse speed must lie in (0, 1), got {self.v}")

    @property
    def n0(self) -> float:
        return float(self.n_profile.asymptote)

    def sample_grid(self, points: int = 4097) -> np.ndarray:
        lo, hi = self.n_profile.support
        return np.linspace(lo, hi, points)

    def check_regular(self):
        tau = self.sample_grid()
        x = (np.asarray(self.n_profile(tau)) * self.v) ** 2 - 1
        bad = np.flatnonzero(x <= 0)
        if bad.size:
            raise RegularityError(
                f"n^2 v^2 <= 1 on tau in [{tau[bad[0]]:.6g}, {tau[bad[-1]]:.6g}] um",
                (float(tau[bad[0]]), float(tau[bad[-1]])),
            )
        return self


# ---------------------------------------------------------------------------
# Running integrals
# ---------------------------------------------------------------------------


class RunningIntegral:
    """F(tau) = int_0^tau g(s) ds for a positive rate g that is constant outside a support.

    Stored as ``rate * tau + excess(tau)``; the excess integrates g - rate,
    which vanishes outside the support, so far-field values stay exact.
    """

    def __init__(self, g: Callable, rate: float, support: tuple[float, float], cells: int = 2048, order: int = 16):
        lo, hi = map(float, support)
        half = max(abs(lo), abs(hi))
        self.g = g
        self.rate = float(rate)
        self.order = order
        self.edges = np.linspace(-half, half, 2 * (cells // 2) + 1)
        mid = self.edges.size // 2  # tau = 0 is a node
        x, w = gauss_legendre(order)
        a, b = self.edges[:-1, None], self.edges[1:, None]
        nodes = a + 0.5 * (b - a) * (x + 1)
        panel = np.sum((np.asarray(g(nodes)) - self.rate) * w, axis=1) * 0.5 * (self.edges[1] - self.edges[0])
        cum = np.concatenate([[0.0], np.cumsum(panel)])
        self.cum = cum - cum[mid]
        self._nodes_value = self.rate * self.edges + self.cum

    def excess(self, tau):
        tau = np.asarray(tau, dtype=float)
        e = self.edges
        t = np.clip(tau, e[0], e[-1])
        j = np.clip(np.searchsorted(e, t, side="right") - 1, 0, e.size - 2)
        x, w = gauss_legendre(self.order)
        a = e[j]
        half = 0.5 * (t - a)
        nodes = a[..., None] + half[..., None] * (x + 1)
        part = np.sum((np.asarray(self.g(nodes)) - self.rate) * w, axis=-1) * half
        return self.cum[j] + part

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        out = self.rate * tau + self.excess(tau)
        return float(out) if out.ndim == 0 else out

    def inverse(self, value, iterations: int = 8):
        """tau with F(tau) = value, by Newton from an interpolated start."""
        y = np.asarray(value, dtype=float)
        e, f = self.edges, self._nodes_value
        tau = np.where(
            y < f[0], e[0] + (y - f[0]) / self.rate,
            np.where(y > f[-1], e[-1] + (y - f[-1]) / self.rate, np.interp(y, f, e)),
        )
        for _ in range(iterations):
            step = (np.asarray(self(tau)) - y) / np.asarray(self.g(tau))
            tau = tau - step
            if np.all(np.abs(step) <= 1e-15 * np.maximum(1.0, np.abs(tau))):
                break
        return float(tau) if tau.ndim == 0 else tau


# ---------------------------------------------------------------------------
# Comoving coordinates and oscillator time
# ---------------------------------------------------------------------------


def _rho_integral(kin: PulseKinematics) -> RunningIntegral:
    v = kin.v
    n0 = kin.n0

    def g(tau):
        n = np.asarray(kin.n_profile(tau))
        return v / (v * v * n * n - 1)

    return RunningIntegral(g, v / (v * v * n0 * n0 - 1), kin.n_profile.support)


def comoving_coords(t, z, kin: PulseKinematics):
    """Lab (t, z) -> comoving (tau, rho)."""
    kin.check_regular()
    t = np.asarray(t, dtype=float)
    z = np.asarray(z, dtype=float)
    tau = t - z / kin.v
    rho = z - np.asarray(_rho_integral(kin)(tau))
    return tau, rho


def comoving_to_lab(tau, rho, kin: PulseKinematics):
    """Inverse of :func:`comoving_coords`."""
    kin.check_regular()
    tau = np.asarray(tau, dtype=float)
    z = np.asarray(rho, dtype=float) + np.asarray(_rho_integral(kin)(tau))
    return tau + z / kin.v, z


def clock_rate(n, v: float, polarization: Polarization):
    """dT/dtau for the given polarization."""
    n = np.asarray(n, dtype=float)
    x = n * n * v * v
    if polarization is Polarization.A:
        return v * v / (x - 1)
    return x / (x - 1)


def oscillator_clock(kin: PulseKinematics, polarization: Polarization) -> RunningIntegral:
    kin.check_regular()
    pol = Polarization(polarization)
    return RunningIntegral(
        lambda tau: clock_rate(kin.n_profile(tau), kin.v, pol),
        float(clock_rate(kin.n0, kin.v, pol)),
        kin.n_profile.support,
    )


def oscillator_time(tau, kin: PulseKinematics, polarization: Polarization):
    """T(tau), anchored at T(0) = 0."""
    return oscillator_clock(kin, polarization)(tau)


def hubble_parameters(kin: PulseKinematics, samples: int = 2049) -> tuple[SampledFunction, SampledFunction]:
    """(H_z, H_x) on the profile support; H_x = d ln n / dtau, H_z = H_x n^2 v^2 / (n^2 v^2 - 1)."""
    tau = kin.sample_grid(samples)
    n = np.asarray(kin.n_profile(tau))
    hx = np.asarray(kin.n_profile.derivative(tau)) / n
    x = (n * kin.v) ** 2
    hz = x / (x - 1) * hx
    return SampledFunction(tau, hz), SampledFunction(tau, hx)


# ---------------------------------------------------------------------------
# Lab-frame mode map
# ---------------------------------------------------------------------------


def _denominator(n0: float, v: float) -> float:
    d = n0 * n0 * v * v - 1
    if d <= 0:
        raise RegularityError(f"n0^2 v^2 = {d + 1:.6g} is not above 1")
    return d


def lab_mode(omega0, kappa, n0: float, v: float):
    """Comoving (Omega0, kappa) -> lab (omega, k_z).

    Follows from Omega0 T - kappa rho = omega t - k_z z with the asymptotic
    rates dT/dtau = v^2/d and d rho/dtau = -v/d, d = n0^2 v^2 - 1.
    """
    d = _denominator(n0, v)
    omega0 = np.asarray(omega0, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    omega = (v * v * omega0 + v * kappa) / d
    kz = (v * omega0 + n0 * n0 * v * v * kappa) / d
    return omega, kz


def lab_mode_inverse(omega, kz, n0: float, v: float):
    """Lab (omega, k_z) -> comoving (Omega0, kappa)."""
    _denominator(n0, v)
    omega = np.asarray(omega, dtype=float)
    kz = np.asarray(kz, dtype=float)
    # d * (omega, k_z) = [[v^2, v], [v, n0^2 v^2]] (Omega0, kappa), determinant v^2 d
    omega0 = n0 * n0 * omega - kz / v
    kappa = kz - omega / v
    return omega0, kappa


# ---------------------------------------------------------------------------
# Filament frame
# ---------------------------------------------------------------------------


def filament_boost(t, z, v: float, n0: float):
    """Lab (t, z) -> (tau, rho) with d tau^2 - d rho^2 = dt^2 - n0^2 dz^2."""
    s = math.sqrt(_denominator(n0, v))
    t = np.asarray(t, dtype=float)
    z = np.asarray(z, dtype=float)
    tau = n0 * v * (t - z / v) / s
    rho = (n0 * n0 * v * z - t) / s
    return tau, rho


def filament_boost_inverse(tau, rho, v: float, n0: float):
    s = math.sqrt(_denominator(n0, v))
    tau = np.asarray(tau, dtype=float)
    rho = np.asarray(rho, dtype=float)
    # tau s = n0 v t - n0 z, rho s = n0^2 v z - t
    z = (tau + n0 * v * rho) / (n0 * s)
    t = n0 * n0 * v * z - rho * s
    return t, z


def filament_boost_jacobian(v: float, n0: float) -> np.ndarray:
    s = math.sqrt(_denominator(n0, v))
    return np.array([[n0 * v / s, -n0 / s], [-1 / s, n0 * n0 * v / s]])


# ---------------------------------------------------------------------------
# Light cones
# ---------------------------------------------------------------------------


def line_elements(n: float, direction) -> tuple[float, float]:
    """(ds_A^2, ds_Lambda^2) along (dt, dx, dz)."""
    dt, dx, dz = map(float, direction)
    ds_a = dt * dt - n * n * (dx * dx + dz * dz)
    return ds_a, ds_a / n**4


def null_cone_check(n: float, direction, rtol: float = 1e-12) -> tuple[bool, bool]:
    """Null flags for both polarizations, relative to the size of the terms."""
    if n <= 0:
        raise ValueError("n must be positive")
    dt, dx, dz = map(float, direction)
    scale = dt * dt + n * n * (dx * dx + dz * dz)
    ds_a, ds_l = line_elements(n, direction)
    return abs(ds_a) <= rtol * scale, abs(ds_l) <= rtol * scale / n**4
