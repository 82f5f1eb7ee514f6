"""Shared numerical kernels.

Second-order oscillator integration, Fourier-type quadrature and the Bessel
function J1.  Every engine in the package goes through these three entry
points, so their tolerances are explicit and their failure modes raise
instead of returning silently degraded numbers.

Units follow the rest of the package: lengths and times in micrometres
(c0 = 1), frequencies in 1/um.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline


class NumericsError(ValueError):
    """Input rejected by a numerical kernel."""


class UnderResolvedError(NumericsError):
    """Sampled integrand too coarse for the requested carrier frequency."""

    def __init__(self, message: str, required_spacing: float):
        super().__init__(message)
        self.required_spacing = required_spacing


class ConvergenceError(RuntimeError):
    """Adaptive algorithm failed to reach its tolerance."""


@dataclass(frozen=True)
class Tolerance:
    rtol: float = 1e-10
    atol: float = 1e-12

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise NumericsError(f"tolerances must be positive, got rtol={self.rtol}, atol={self.atol}")

    def halved(self) -> "Tolerance":
        return Tolerance(self.rtol / 2, self.atol / 2)


DEFAULT_TOL = Tolerance()


class SampledFunction:
    """Cubic interpolant through ordered samples (real or complex)."""

    def __init__(self, x: Sequence[float], y: Sequence[complex]):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y)
        if x.ndim != 1 or x.shape != y.shape:
            raise NumericsError("abscissae and values must be 1-d arrays of equal length")
        if x.size < 4:
            raise NumericsError(f"need at least 4 samples, got {x.size}")
        if not np.all(np.diff(x) > 0):
            raise NumericsError("abscissae must be strictly increasing")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise NumericsError("samples must be finite")
        self.x = x
        self.y = y
        self._spline = CubicSpline(x, y)

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.x[0]), float(self.x[-1])

    def __call__(self, t):
        return self._spline(t)

    def derivative(self, t, order: int = 1):
        return self._spline(t, order)

    def __len__(self):
        return self.x.size


RealFunction = Union[SampledFunction, Callable[[float], float]]


# ---------------------------------------------------------------------------
# Oscillator integration
# ---------------------------------------------------------------------------


@dataclass
class OscillatorSolution:
    """Result of integrating A'' + omega_sq(T) A = 0."""

    t_end: float
    value: complex
    derivative: complex
    nfev: int
    _segments: list

    def __call__(self, t):
        """Dense output: returns (A, A') at ``t`` (scalar or array)."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((2, t_arr.size), dtype=complex)
        for i, ti in enumerate(t_arr):
            for seg in self._segments:
                if seg.t_min <= ti <= seg.t_max:
                    out[:, i] = seg(ti)
                    break
            else:
                raise NumericsError(f"T={ti} outside the integrated span")
        if np.ndim(t) == 0:
            return out[0, 0], out[1, 0]
        return out[0], out[1]

    def wronskian(self, other: "OscillatorSolution", t) -> complex:
        a1, d1 = self(t)
        a2, d2 = other(t)
        return a1 * d2 - a2 * d1


def integrate_oscillator(
    omega_sq: RealFunction,
    span: tuple[float, float],
    init: tuple[complex, complex],
    tol: Tolerance = DEFAULT_TOL,
    breakpoints: Sequence[float] = (),
    clock_rate: Callable[[float], float] | None = None,
) -> OscillatorSolution:
    """Integrate ``A'' + omega_sq(T) A = 0`` from ``span[0]`` to ``span[1]``.

    Uses the DOP853 embedded pair with dense output.  ``breakpoints`` are
    known discontinuities of ``omega_sq``; integration restarts there so the
    step-size controller never straddles a jump.

    With ``clock_rate`` the independent variable is a parameter s with
    dT/ds = clock_rate(s) > 0; ``omega_sq`` is then a function of s and the
    reported derivative is still dA/dT.  This avoids inverting T(s).
    """
    t0, t1 = float(span[0]), float(span[1])
    if not (math.isfinite(t0) and math.isfinite(t1)) or t1 <= t0:
        raise NumericsError(f"span must be finite and increasing, got {span}")
    if isinstance(omega_sq, SampledFunction):
        lo, hi = omega_sq.domain
        if t0 < lo - 1e-12 * max(1.0, abs(lo)) or t1 > hi + 1e-12 * max(1.0, abs(hi)):
            raise NumericsError(f"span {span} exceeds the sampled domain {(lo, hi)}")
        if np.iscomplexobj(omega_sq.y):
            raise NumericsError("omega_sq must be real-valued")

    def rhs(t, y):
        w2 = float(omega_sq(t))
        if not math.isfinite(w2):
            raise NumericsError(f"non-finite omega^2 at T={t}")
        if clock_rate is None:
            return np.array([y[1], -w2 * y[0]])
        r = float(clock_rate(t))
        return np.array([r * y[1], -r * w2 * y[0]])

    cuts = sorted(b for b in breakpoints if t0 < b < t1)
    edges = [t0, *cuts, t1]
    y = np.array([complex(init[0]), complex(init[1])])
    segments = []
    nfev = 0
    for a, b in zip(edges[:-1], edges[1:]):
        sol = solve_ivp(rhs, (a, b), y, method="DOP853", rtol=tol.rtol, atol=tol.atol, dense_output=True)
        if sol.status != 0:
            raise ConvergenceError(f"oscillator integration failed on [{a}, {b}]: {sol.message}")
        nfev += sol.nfev
        segments.append(sol.sol)
        y = sol.y[:, -1]
    return OscillatorSolution(t_end=t1, value=complex(y[0]), derivative=complex(y[1]), nfev=nfev, _segments=segments)


def integrate_coupled_oscillators(
    stiffness: Callable[[float], np.ndarray],
    span: tuple[float, float],
    init: tuple[np.ndarray, np.ndarray],
    tol: Tolerance = DEFAULT_TOL,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate ``c'' + K(s) c = 0`` for a vector c; returns (c, c') at span[1]."""
    t0, t1 = float(span[0]), float(span[1])
    if not (math.isfinite(t0) and math.isfinite(t1)) or t1 <= t0:
        raise NumericsError(f"span must be finite and increasing, got {span}")
    c0 = np.asarray(init[0], dtype=complex)
    d0 = np.asarray(init[1], dtype=complex)
    n = c0.size

    def rhs(t, y):
        k = np.asarray(stiffness(t), dtype=float)
        if not np.all(np.isfinite(k)):
            raise NumericsError(f"non-finite stiffness at s={t}")
        return np.concatenate([y[n:], -k @ y[:n]])

    sol = solve_ivp(rhs, (t0, t1), np.concatenate([c0, d0]), method="DOP853", rtol=tol.rtol, atol=tol.atol)
    if sol.status != 0:
        raise ConvergenceError(f"coupled integration failed: {sol.message}")
    y = sol.y[:, -1]
    return y[:n], y[n:]


# ---------------------------------------------------------------------------
# Oscillatory quadrature
# ---------------------------------------------------------------------------

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1], cached."""
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def panel_integrals(f: Callable, edges: np.ndarray, order: int = 16) -> np.ndarray:
    """Gauss-Legendre integral of vectorised ``f`` over each [edges[i], edges[i+1]]."""
    x, w = gauss_legendre(order)
    a = edges[:-1, None]
    b = edges[1:, None]
    half = 0.5 * (b - a)
    nodes = a + half * (x + 1.0)
    vals = f(nodes)
    return np.sum(vals * w, axis=1) * half[:, 0]


NYQUIST_POINTS = 8
ENVELOPE_FLOOR = 1e-30


def _check_nyquist(x: np.ndarray, carrier: float):
    if carrier == 0:
        return
    period = 2 * math.pi / abs(carrier)
    required = period / NYQUIST_POINTS
    worst = float(np.max(np.diff(x)))
    if worst > required * (1 + 1e-9):
        raise UnderResolvedError(
            f"sample spacing {worst:.3e} exceeds {required:.3e} "
            f"({NYQUIST_POINTS} points per carrier period 2*pi/{abs(carrier):.4g})",
            required,
        )


def quad_oscillatory(
    integrand: RealFunction,
    carrier: float,
    interval: tuple[float, float] | None = None,
    tol: Tolerance = DEFAULT_TOL,
    check_decay: bool = True,
    max_panels: int = 200_000,
) -> complex:
    """Integrate ``f(T) * exp(i * carrier * T)`` over ``interval``.

    Three routes, picked from the integrand:

    * :class:`SampledFunction` -- the cubic interpolant is integrated against
      the carrier knot interval by knot interval.  The samples must resolve
      the carrier with at least eight points per period.
    * callable that decays at both ends (``check_decay``) -- trapezoid rule on
      a dyadic grid, halved until two levels agree.  For smooth integrands
      that vanish at the ends this converges geometrically, and with exact
      grid points and a double-double carrier phase the result stays accurate
      far below the scale of ``integral |f|``.
    * any other callable -- adaptive 16/32-point Gauss-Legendre panels.
    """
    carrier = float(carrier)
    if isinstance(integrand, SampledFunction):
        return _quad_sampled(integrand, carrier, interval, check_decay)
    if interval is None:
        raise NumericsError("a closed-form integrand needs an explicit interval")
    a, b = map(float, interval)
    if not (math.isfinite(a) and math.isfinite(b)) or b <= a:
        raise NumericsError(f"interval must be finite and increasing, got {interval}")
    if check_decay:
        ends = np.abs(np.asarray(integrand(np.array([a, b]))))
        probe = np.abs(np.asarray(integrand(np.linspace(a, b, 257))))
        peak = float(np.max(probe))
        if peak > 0 and float(np.max(ends)) > max(tol.atol, tol.rtol * peak):
            raise NumericsError(
                f"integrand does not decay at the interval ends ({float(np.max(ends)):.3e} vs peak {peak:.3e})"
            )
        return _quad_trapezoid(integrand, carrier, a, b, tol)
    return _quad_panels(integrand, carrier, a, b, tol, max_panels)


_TWO_PI_HI = 2 * math.pi
_TWO_PI_LO = 2.4492935982947064e-16  # 2*pi - float(2*pi)
_SPLIT = 134217729.0  # 2**27 + 1


def _two_product(x: np.ndarray, y) -> tuple[np.ndarray, np.ndarray]:
    p = x * y
    cx = _SPLIT * x
    xh = cx - (cx - x)
    xl = x - xh
    cy = _SPLIT * y
    yh = cy - (cy - y)
    yl = y - yh
    err = ((xh * yh - p) + xh * yl + xl * yh) + xl * yl
    return p, err


def carrier_phase(q: float, t: np.ndarray) -> np.ndarray:
    """``exp(i q t)`` with the product and the 2*pi reduction done in double-double."""
    t = np.asarray(t, dtype=float)
    hi, lo = _two_product(t, q)
    turns = np.round(hi / _TWO_PI_HI)
    c_hi, c_lo = _two_product(turns, _TWO_PI_HI)
    reduced = ((hi - c_hi) - c_lo) + (lo - turns * _TWO_PI_LO)
    return np.exp(1j * reduced)


def _quad_trapezoid(f, q, a, b, tol, max_levels: int = 12) -> complex:
    width = b - a
    h = 2.0 ** math.floor(math.log2(width / 16384))
    if q != 0:
        h = min(h, 2.0 ** math.floor(math.log2(2 * math.pi / abs(q) / 64)))
    k = np.arange(math.ceil(a / h), math.floor(b / h) + 1, dtype=float)
    t = k * h
    vals = np.asarray(f(t), dtype=complex) * carrier_phase(q, t)
    total_re = math.fsum(vals.real)
    total_im = math.fsum(vals.imag)
    scale = h * math.fsum(np.abs(vals))
    budget = max(tol.atol, tol.rtol * scale)
    prev = h * complex(total_re, total_im)
    for _ in range(max_levels):
        h *= 0.5
        mids = (2 * np.arange(math.ceil((a / h - 1) / 2), math.floor((b / h - 1) / 2) + 1, dtype=float) + 1) * h
        mvals = np.asarray(f(mids), dtype=complex) * carrier_phase(q, mids)
        total_re = math.fsum([total_re, *mvals.real])
        total_im = math.fsum([total_im, *mvals.imag])
        cur = h * complex(total_re, total_im)
        if abs(cur - prev) <= budget:
            return cur
        prev = cur
    raise ConvergenceError("trapezoid refinement did not converge; integrand may not be smooth")


def _quad_panels(integrand, carrier, a, b, tol, max_panels) -> complex:
    def g(t):
        return np.asarray(integrand(t)) * np.exp(1j * carrier * t)

    width = b - a
    n0 = 16
    if carrier != 0:
        n0 = max(n0, int(math.ceil(width * abs(carrier) / (2 * math.pi))))
    edges = np.linspace(a, b, n0 + 1)
    scale = float(np.sum(np.abs(panel_integrals(lambda t: np.abs(integrand(t)), edges, 16))))
    budget = max(tol.atol, tol.rtol * scale)

    total = 0.0 + 0.0j
    pending = [edges]
    used = 0
    while pending:
        e = pending.pop()
        coarse = panel_integrals(g, e, 16)
        fine = panel_integrals(g, e, 32)
        used += e.size - 1
        if used > max_panels:
            raise ConvergenceError(f"quad_oscillatory exceeded {max_panels} panels")
        err = np.abs(fine - coarse)
        ok = err <= budget * (e[1:] - e[:-1]) / width
        total += np.sum(fine[ok])
        bad = np.flatnonzero(~ok)
        if bad.size:
            if np.min(e[bad + 1] - e[bad]) < 1e-13 * width:
                raise ConvergenceError("panel width underflow in quad_oscillatory")
            mids = 0.5 * (e[bad] + e[bad + 1])
            for row in np.stack([e[bad], mids, e[bad + 1]], axis=1):
                pending.append(row)
    return complex(total)


def _quad_sampled(f: SampledFunction, carrier, interval, check_decay) -> complex:
    lo, hi = f.domain
    a, b = (lo, hi) if interval is None else map(float, interval)
    if a < lo or b > hi or b <= a:
        raise NumericsError(f"interval {(a, b)} outside sampled domain {(lo, hi)}")
    inside = f.x[(f.x > a) & (f.x < b)]
    knots = np.concatenate([[a], inside, [b]])
    _check_nyquist(f.x, carrier)
    if check_decay:
        peak = float(np.max(np.abs(f.y)))
        edge = max(abs(complex(f(a))), abs(complex(f(b))))
        if peak > 0 and edge > 1e-6 * peak:
            raise NumericsError(f"sampled integrand does not decay at the ends ({edge:.3e} vs peak {peak:.3e})")
    return complex(np.sum(panel_integrals(lambda t: f(t) * np.exp(1j * carrier * t), knots, 8)))


def gaussian_fourier(sigma: float, q: float) -> float:
    """Closed form of integral exp(-T^2/(2 sigma^2)) exp(i q T) dT over the real line."""
    return math.sqrt(2 * math.pi) * sigma * math.exp(-0.5 * (q * sigma) ** 2)


def envelope_halfwidth(sigma: float, floor: float = ENVELOPE_FLOOR) -> float:
    """Half-width where a unit Gaussian envelope drops below ``floor``."""
    return sigma * math.sqrt(2 * math.log(1 / floor))


# ---------------------------------------------------------------------------
# Bessel J1
# ---------------------------------------------------------------------------

_SERIES_MAX = 8.0
_MILLER_MAX = 20.0
_MILLER_START = 60
_ASYMPTOTIC_TERMS = 16


def _j1_series(x: np.ndarray) -> np.ndarray:
    h = 0.5 * x
    term = h.copy()
    total = h.copy()
    for k in range(1, 40):
        term = term * (-h * h / (k * (k + 1)))
        total = total + term
    return total


def _j1_miller(x: np.ndarray) -> np.ndarray:
    # backward recurrence normalised by J0 + 2 * sum J_2k = 1
    upper = np.zeros_like(x)
    cur = np.full_like(x, 1e-300)
    norm = np.zeros_like(x)
    j1 = np.zeros_like(x)
    for k in range(_MILLER_START, 0, -1):
        upper, cur = cur, 2.0 * k / x * cur - upper
        order = k - 1
        if order == 1:
            j1 = cur.copy()
        if order > 0 and order % 2 == 0:
            norm = norm + 2.0 * cur
        big = np.abs(cur) > 1e250
        if np.any(big):
            s = np.where(big, 1e-250, 1.0)
            upper, cur, norm, j1 = upper * s, cur * s, norm * s, j1 * s
    return j1 / (norm + cur)


def _j1_asymptotic(x: np.ndarray) -> np.ndarray:
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    a = np.ones_like(x)
    for k in range(_ASYMPTOTIC_TERMS):
        if k > 0:
            a = a * ((4.0 - (2 * k - 1) ** 2) / (k * 8.0 * x))
        sign = (-1) ** (k // 2)
        if k % 2 == 0:
            p = p + sign * a
        else:
            q = q + sign * a
    chi = x - 0.75 * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_j1(x):
    """Bessel function of the first kind, order one, for x >= 0.

    Power series below 8, Miller backward recurrence on [8, 20) and the
    Hankel asymptotic expansion beyond.  Absolute error stays below 1e-12
    on [0, 1e3].  Accepts scalars or arrays.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise NumericsError("bessel_j1 needs finite x >= 0")
    flat = arr.ravel()
    out = np.empty_like(flat)
    low = flat < _SERIES_MAX
    mid = (~low) & (flat < _MILLER_MAX)
    high = flat >= _MILLER_MAX
    if np.any(low):
        out[low] = _j1_series(flat[low])
    if np.any(mid):
        out[mid] = _j1_miller(flat[mid])
    if np.any(high):
        out[high] = _j1_asymptotic(flat[high])
    out = out.reshape(arr.shape)
    return float(out) if np.ndim(x) == 0 else out
