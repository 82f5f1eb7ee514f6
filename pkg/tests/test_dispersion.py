import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from phasehorizon.dispersion import (
    FIG1_COLUMNS,
    FUSED_SILICA,
    DispersionError,
    EvanescentError,
    MassiveField,
    SellmeierSilica,
    emit_fig1_table,
    fit_massive_model,
    group_index,
    lambda_variant,
    lambda_variant_inverse,
    massive_group_index,
    massive_phase_index,
    massive_wavenumber,
    phase_horizon_band,
    phase_index,
    sellmeier_group_index,
    sellmeier_index,
)

V = 1 / 1.4533


def test_sellmeier_reference_values():
    # catalogue values of fused silica at the sodium d line and at 1.0 um
    assert sellmeier_index(FUSED_SILICA, 0.5876) == pytest.approx(1.4585, abs=1e-4)
    assert sellmeier_index(FUSED_SILICA, 1.0) == pytest.approx(1.4504, abs=1e-4)


def test_sellmeier_group_index_matches_finite_difference():
    lam = np.linspace(0.4, 2.5, 15)
    h = 1e-5
    dn = (sellmeier_index(FUSED_SILICA, lam + h) - sellmeier_index(FUSED_SILICA, lam - h)) / (2 * h)
    fd = sellmeier_index(FUSED_SILICA, lam) - lam * dn
    assert np.max(np.abs(sellmeier_group_index(FUSED_SILICA, lam) - fd)) < 1e-8


def test_sellmeier_validation():
    with pytest.raises(DispersionError):
        sellmeier_index(FUSED_SILICA, 5.0)
    with pytest.raises(DispersionError):
        sellmeier_index(FUSED_SILICA, -1.0)
    with pytest.raises(DispersionError):
        SellmeierSilica(B=(1.0, 1.0), C=(1.0, 1.0, 1.0))


def test_massive_model_basics():
    m = MassiveField(1.4595, 0.208)
    assert m.cutoff_frequency == pytest.approx(1.4595 * math.sqrt(0.208))
    # short wavelengths approach n0 from below
    assert massive_phase_index(m, 0.01) == pytest.approx(1.4595, rel=1e-5)
    assert massive_phase_index(m, 1.0) < 1.4595
    w = 2 * math.pi
    assert massive_wavenumber(m, w) == pytest.approx(m.n0 * math.sqrt(w * w - m.n0**2 * m.m0_sq))
    with pytest.raises(EvanescentError):
        massive_wavenumber(m, 0.5 * m.cutoff_frequency)
    with pytest.raises(EvanescentError):
        massive_phase_index(m, 2 * math.pi / m.cutoff_frequency * 1.01)
    with pytest.raises(DispersionError):
        MassiveField(0.9, 0.2)
    with pytest.raises(DispersionError):
        MassiveField(1.4, -0.2)


def test_dispatch():
    m = MassiveField(1.45, 0.2)
    assert phase_index(FUSED_SILICA, 1.0) == sellmeier_index(FUSED_SILICA, 1.0)
    assert group_index(m, 1.0) == massive_group_index(m, 1.0)


@settings(max_examples=200, deadline=None)
@given(
    n0=st.floats(min_value=1.01, max_value=3.0),
    m0_sq=st.floats(min_value=1e-4, max_value=1.0),
    frac=st.floats(min_value=0.01, max_value=0.99),
)
def test_phase_group_product_property(n0, m0_sq, frac):
    m = MassiveField(n0, m0_sq)
    lam = frac * 2 * math.pi / m.cutoff_frequency
    assert massive_phase_index(m, lam) * massive_group_index(m, lam) == pytest.approx(n0 * n0, rel=1e-12)


def test_fit_oracle_and_frozen_values():
    # independent oracle: n_eff^2 = a - b (lambda / 2 pi)^2 solved with numpy
    knots = np.array([0.7, 1.1])
    n = np.array([sellmeier_index(FUSED_SILICA, k) for k in knots])
    u = (knots / (2 * math.pi)) ** 2
    a, b = np.linalg.solve(np.column_stack([np.ones(2), -u]), n**2)
    fit = fit_massive_model(FUSED_SILICA, 0.7, 1.1)
    assert fit.n0 == pytest.approx(math.sqrt(a), rel=1e-13)
    assert fit.m0_sq == pytest.approx(b / a**2, rel=1e-12)
    # frozen [DERIVED] values of that solve
    assert fit.n0 == pytest.approx(1.459422, abs=1e-6)
    assert fit.m0_sq == pytest.approx(0.213752, abs=1e-6)
    assert isinstance(fit.m0_sq, float)


def test_fit_reproduces_knots_and_rejects_bad_input():
    fit = fit_massive_model(FUSED_SILICA, 0.9, 1.5)
    for k in (0.9, 1.5):
        assert massive_phase_index(fit, k) == pytest.approx(sellmeier_index(FUSED_SILICA, k), abs=1e-12)
    with pytest.raises(DispersionError):
        fit_massive_model(FUSED_SILICA, 1.0, 1.0)


def test_lambda_variant_round_trip():
    m = MassiveField(1.459, 0.208)
    lam = lambda_variant(m)
    assert lam.m0_sq == pytest.approx(0.208 * 1.459**4)
    back = lambda_variant_inverse(lam)
    assert back.m0_sq == pytest.approx(m.m0_sq, rel=1e-15)


def test_phase_horizon_band_silica_oracle():
    # independent: the band runs from n(lambda) = 1/v down to n(lambda) = 1/v - dn
    lo = brentq(lambda x: sellmeier_index(FUSED_SILICA, x) - 1 / V, 0.5, 1.5, xtol=1e-14)
    hi = brentq(lambda x: sellmeier_index(FUSED_SILICA, x) + 1e-3 - 1 / V, 0.5, 1.5, xtol=1e-14)
    band = phase_horizon_band(FUSED_SILICA, 1e-3, V, (0.7, 1.1))
    assert not band.empty
    assert band.lower == pytest.approx(lo, abs=1e-10)
    assert band.upper == pytest.approx(hi, abs=1e-10)
    assert (round(band.lower, 3), round(band.upper, 3)) == (0.801, 0.863)


def test_phase_horizon_band_edge_cases():
    assert phase_horizon_band(FUSED_SILICA, 0.0, V, (0.7, 1.1)).empty
    # a band covering the whole window returns the window itself
    band = phase_horizon_band(FUSED_SILICA, 0.5, V, (0.85, 0.9))
    assert (band.lower, band.upper) == (0.85, 0.9)
    with pytest.raises(DispersionError):
        phase_horizon_band(FUSED_SILICA, -1e-3, V, (0.7, 1.1))
    with pytest.raises(DispersionError):
        phase_horizon_band(FUSED_SILICA, 1e-3, V, (1.1, 0.7))


def test_fig1_table_and_csv(tmp_path):
    fit = fit_massive_model(FUSED_SILICA, 0.7, 1.1)
    table = emit_fig1_table(FUSED_SILICA, fit, (0.5, 2.0), 31)
    assert table.columns == FIG1_COLUMNS
    assert table.rows.shape == (31, 7)
    assert np.allclose(table.column("n0"), fit.n0, rtol=1e-13)
    geo = np.sqrt(table.column("n_p_silica") * table.column("n_g_silica"))
    assert np.array_equal(table.column("n_c_silica"), geo)
    path = tmp_path / "fig1.csv"
    text = table.to_csv(path)
    raw = path.read_bytes()
    assert b"\r" not in raw and raw.decode() == text
    lines = text.splitlines()
    assert lines[0] == ",".join(FIG1_COLUMNS)
    first = lines[1].split(",")
    assert all("e" in f for f in first)
    assert float(first[1]) == table.rows[0, 1]
    with pytest.raises(DispersionError):
        emit_fig1_table(FUSED_SILICA, fit, (2.0, 0.5), 31)
    with pytest.raises(DispersionError):
        emit_fig1_table(FUSED_SILICA, fit, (0.5, 2.0), 1)
