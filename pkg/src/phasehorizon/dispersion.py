"""Refractive-index models.

Two models live here: a three-term Sellmeier fit of fused silica, and the
massive-field surrogate used by the engines,

    omega^2 = k^2 / n0^2 + n0^2 m0^2,

whose phase index n_eff = k/omega = n0 sqrt(1 - n0^2 m0^2 / omega^2) tends to
n0 at short wavelength.  Its group index is n0^2 / n_eff, so phase and group
velocity multiply to the in-medium light speed 1/n0^2.

Wavelengths are free-space values in um; omega = 2 pi / lambda (c0 = 1).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from scipy.optimize import brentq


class DispersionError(ValueError):
    """Input outside a dispersion model's domain."""


class EvanescentError(DispersionError):
    """Frequency below the massive-branch cutoff; no propagating root."""


# ---------------------------------------------------------------------------
# Sellmeier silica
# ---------------------------------------------------------------------------

SELLMEIER_WINDOW = (0.21, 3.7)


@dataclass(frozen=True)
class SellmeierSilica:
    """n^2 = 1 + sum B_i lambda^2 / (lambda^2 - C_i), C_i in um^2."""

    B: tuple[float, float, float] = (0.6961663, 0.4079426, 0.8974794)
    C: tuple[float, float, float] = (0.0684043**2, 0.1162414**2, 9.896161**2)

    def __post_init__(self):
        if len(self.B) != 3 or len(self.C) != 3:
            raise DispersionError("Sellmeier model needs three B and three C coefficients")
        if min(self.B) <= 0 or min(self.C) <= 0:
            raise DispersionError("Sellmeier coefficients must be positive")


FUSED_SILICA = SellmeierSilica()


def _as_wavelengths(lam, window=None) -> np.ndarray:
    arr = np.asarray(lam, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DispersionError("wavelengths must be finite and positive")
    if window is not None:
        lo, hi = window
        if np.any(arr < lo) or np.any(arr > hi):
            raise DispersionError(f"wavelength outside validity window [{lo}, {hi}] um")
    return arr


def _sellmeier_terms(model: SellmeierSilica, lam: np.ndarray):
    l2 = lam * lam
    n2 = np.ones_like(l2)
    dn2 = np.zeros_like(l2)  # d(n^2)/d(lambda)
    for b, c in zip(model.B, model.C):
        den = l2 - c
        if np.any(np.abs(den) < 1e-12 * c):
            raise DispersionError("wavelength sits on a Sellmeier resonance")
        n2 = n2 + b * l2 / den
        dn2 = dn2 - 2 * b * c * lam / den**2
    return n2, dn2


def sellmeier_index(model: SellmeierSilica, lambda_vac):
    """Phase index of the Sellmeier model at free-space wavelength(s)."""
    lam = _as_wavelengths(lambda_vac, SELLMEIER_WINDOW)
    n2, _ = _sellmeier_terms(model, lam)
    if np.any(n2 <= 1):
        raise DispersionError("Sellmeier index not above unity at the requested wavelength")
    n = np.sqrt(n2)
    return float(n) if n.ndim == 0 else n


def sellmeier_group_index(model: SellmeierSilica, lambda_vac):
    """n_g = n - lambda dn/dlambda, analytic."""
    lam = _as_wavelengths(lambda_vac, SELLMEIER_WINDOW)
    n2, dn2 = _sellmeier_terms(model, lam)
    n = np.sqrt(n2)
    ng = n - lam * dn2 / (2 * n)
    return float(ng) if ng.ndim == 0 else ng


# ---------------------------------------------------------------------------
# Massive-field surrogate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MassiveField:
    """Background index ``n0`` and effective mass squared ``m0_sq`` (1/um^2)."""

    n0: float
    m0_sq: float

    def __post_init__(self):
        if not (math.isfinite(self.n0) and self.n0 > 1):
            raise DispersionError(f"n0 must exceed 1, got {self.n0}")
        if not (math.isfinite(self.m0_sq) and self.m0_sq > 0):
            raise DispersionError(f"m0^2 must be positive, got {self.m0_sq}")

    @property
    def m0(self) -> float:
        return math.sqrt(self.m0_sq)

    @property
    def cutoff_frequency(self) -> float:
        """Lowest propagating lab frequency, n0 * m0."""
        return self.n0 * self.m0


DispersionModel = Union[SellmeierSilica, MassiveField]

# Medium parameters quoted for the experiment's fused-silica fibre.
REFERENCE_MEDIUM = MassiveField(n0=1.4595, m0_sq=0.208)
REFERENCE_PULSE_SPEED = 1 / 1.4533


def massive_wavenumber(model: MassiveField, omega):
    """In-medium wavenumber k(omega) on the massive branch."""
    w = np.asarray(omega, dtype=float)
    arg = w * w - model.n0**2 * model.m0_sq
    if np.any(arg < 0):
        raise EvanescentError(
            f"frequency below cutoff n0*m0 = {model.cutoff_frequency:.6g} 1/um; mode is evanescent"
        )
    k = model.n0 * np.sqrt(arg)
    return float(k) if k.ndim == 0 else k


def massive_phase_index(model: MassiveField, lambda_vac):
    """n_eff = k/omega at free-space wavelength ``lambda_vac``."""
    lam = _as_wavelengths(lambda_vac)
    x = model.n0**2 * model.m0_sq * (lam / (2 * math.pi)) ** 2
    if np.any(x >= 1):
        raise EvanescentError(f"wavelength beyond the massive cutoff 2 pi/(n0 m0) = {2 * math.pi / model.cutoff_frequency:.6g} um")
    n = model.n0 * np.sqrt(1 - x)
    return float(n) if n.ndim == 0 else n


def massive_group_index(model: MassiveField, lambda_vac):
    """n_g = dk/domega = n0^2 / n_eff."""
    n = np.asarray(massive_phase_index(model, lambda_vac))
    ng = model.n0**2 / n
    return float(ng) if ng.ndim == 0 else ng


def phase_index(model: DispersionModel, lambda_vac):
    if isinstance(model, SellmeierSilica):
        return sellmeier_index(model, lambda_vac)
    return massive_phase_index(model, lambda_vac)


def group_index(model: DispersionModel, lambda_vac):
    if isinstance(model, SellmeierSilica):
        return sellmeier_group_index(model, lambda_vac)
    return massive_group_index(model, lambda_vac)


def fit_massive_model(silica: SellmeierSilica, knot1: float, knot2: float) -> MassiveField:
    """Massive model reproducing the Sellmeier phase index at two wavelengths.

    n_eff^2 = n0^2 - (n0^4 m0^2) lambda^2 / (4 pi^2) is linear in the pair
    (n0^2, n0^4 m0^2), so two knots determine it exactly.
    """
    l1, l2 = float(knot1), float(knot2)
    if abs(l1 - l2) <= 1e-9 * max(abs(l1), abs(l2)):
        raise DispersionError("fit knots must be distinct")
    n1, n2 = sellmeier_index(silica, np.array([l1, l2]))
    u1, u2 = (l1 / (2 * math.pi)) ** 2, (l2 / (2 * math.pi)) ** 2
    slope = (n1**2 - n2**2) / (u2 - u1)
    n0_sq = n1**2 + slope * u1
    if n0_sq <= 1 or slope <= 0:
        raise DispersionError("no massive model with n0 > 1 and m0^2 > 0 fits these knots")
    fitted = MassiveField(n0=math.sqrt(float(n0_sq)), m0_sq=float(slope / n0_sq**2))
    resid = np.abs(massive_phase_index(fitted, np.array([l1, l2])) - np.array([n1, n2]))
    if np.max(resid) > 1e-10:
        raise DispersionError(f"fit residual {np.max(resid):.3e} above 1e-10")
    return fitted


def lambda_variant(model: MassiveField) -> MassiveField:
    """Effective mass seen by the dual (Lambda) polarization: m^2 n0^4."""
    return MassiveField(model.n0, model.m0_sq * model.n0**4)


def lambda_variant_inverse(model: MassiveField) -> MassiveField:
    return MassiveField(model.n0, model.m0_sq / model.n0**4)


# ---------------------------------------------------------------------------
# Phase horizon
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HorizonBand:
    lower: float
    upper: float
    empty: bool

    @classmethod
    def none(cls) -> "HorizonBand":
        return cls(math.nan, math.nan, True)


def phase_horizon_band(
    outside: DispersionModel,
    delta_n: float,
    v: float,
    search_window: tuple[float, float],
    samples: int = 2001,
) -> HorizonBand:
    """Wavelengths where the pulse outruns the in-pulse phase velocity only.

    Outside the pulse n v < 1; inside, (n + delta_n) v > 1.  Band edges are
    refined with Brent's method on the sign changes of the two conditions.
    """
    if delta_n < 0:
        raise DispersionError("delta_n must be non-negative")
    lo, hi = map(float, search_window)
    if hi <= lo:
        raise DispersionError("search window must be increasing")
    lam = np.linspace(lo, hi, samples)
    n = np.asarray(phase_index(outside, lam))
    inside = (n * v < 1) & ((n + delta_n) * v > 1)
    if not np.any(inside):
        return HorizonBand.none()

    def outer(x):
        return phase_index(outside, x) * v - 1

    def inner(x):
        return (phase_index(outside, x) + delta_n) * v - 1

    idx = np.flatnonzero(inside)
    i0, i1 = idx[0], idx[-1]
    lower = lo if i0 == 0 else _edge(outer, inner, lam[i0 - 1], lam[i0])
    upper = hi if i1 == samples - 1 else _edge(outer, inner, lam[i1], lam[i1 + 1])
    return HorizonBand(float(lower), float(upper), False)


def _edge(outer, inner, a, b):
    for g in (outer, inner):
        ga, gb = g(a), g(b)
        if ga * gb < 0:
            return brentq(g, a, b, xtol=1e-14)
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# Dispersion table
# ---------------------------------------------------------------------------

FIG1_COLUMNS = ("lambda_um", "n_p_silica", "n_g_silica", "n_p_massive", "n_g_massive", "n_c_silica", "n0")


@dataclass
class DispersionTable:
    columns: tuple[str, ...]
    rows: np.ndarray

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def to_csv(self, path: Union[str, Path, None] = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([format_float(x) for x in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, newline="")
        return text


def format_float(x: float) -> str:
    """Full-precision scientific notation (round-trips through float())."""
    return f"{float(x):.17e}"


def emit_fig1_table(
    silica: SellmeierSilica,
    massive: MassiveField,
    wavelength_range: Sequence[float],
    samples: int,
) -> DispersionTable:
    """Phase, group and geometric-mean indices of both models on a wavelength grid."""
    if samples < 2:
        raise DispersionError("need at least two samples")
    lo, hi = map(float, wavelength_range)
    if hi <= lo:
        raise DispersionError("wavelength range must be increasing")
    lam = np.linspace(lo, hi, samples)
    np_s = sellmeier_index(silica, lam)
    ng_s = sellmeier_group_index(silica, lam)
    np_m = massive_phase_index(massive, lam)
    ng_m = massive_group_index(massive, lam)
    rows = np.column_stack([lam, np_s, ng_s, np_m, ng_m, np.sqrt(np_s * ng_s), np.sqrt(np_m * ng_m)])
    return DispersionTable(FIG1_COLUMNS, rows)
