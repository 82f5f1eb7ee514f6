import xml.etree.ElementTree as ET

import numpy as np
import pytest

from phasehorizon.dispersion import FUSED_SILICA, REFERENCE_MEDIUM, REFERENCE_PULSE_SPEED, emit_fig1_table, fit_massive_model
from phasehorizon.frames import Polarization
from phasehorizon.planar import PlanarModel, PlanarScenario, Spectrum, spectrum_sweep
from phasehorizon.svg import PlotError, Series, emit_plot

NS = "{http://www.w3.org/2000/svg}"


def curves(doc):
    root = ET.fromstring(doc)
    return [el for el in root.iter(f"{NS}polyline") if el.get("class") == "curve"]


def fig1_table():
    return emit_fig1_table(FUSED_SILICA, fit_massive_model(FUSED_SILICA, 0.7, 1.1), (0.5, 2.0), 41)


def test_fig1_plot_has_six_curves(tmp_path):
    doc = emit_plot(fig1_table(), "dispersion", tmp_path / "f.svg")
    assert len(curves(doc)) == 6
    assert (tmp_path / "f.svg").read_text() == doc
    assert "free-space wavelength (um)" in doc


def test_plot_is_deterministic():
    assert emit_plot(fig1_table(), "dispersion") == emit_plot(fig1_table(), "dispersion")


def test_zero_spectrum_is_valid_svg_on_both_scales():
    sc = PlanarScenario(PlanarModel.INDEX, REFERENCE_MEDIUM, REFERENCE_PULSE_SPEED, 0.0, 1.0)
    spectrum = spectrum_sweep(sc, [0.0, 0.2], [0.0], polarization=Polarization.A)
    for log in (False, True):
        doc = emit_plot(spectrum, "spectrum", log_scale=log)
        assert len(curves(doc)) == 1
        assert "nan" not in doc.lower() and "inf" not in doc.lower()


def test_potential_trace_plot():
    sc = PlanarScenario(PlanarModel.INDEX, REFERENCE_MEDIUM, REFERENCE_PULSE_SPEED, 1e-3, 1.0)
    doc = emit_plot(sc.trace(sc.label(0.0, 0.0, Polarization.A)), "potential")
    (curve,) = curves(doc)
    assert len(curve.get("points").split()) == 801


def test_series_input_and_rejections():
    s = Series("y", np.array([0.0, 1.0]), np.array([1.0, 2.0]))
    assert len(curves(emit_plot([s], "spectrum"))) == 1
    with pytest.raises(PlotError):
        emit_plot([s], "histogram")
    with pytest.raises(PlotError):
        emit_plot(Spectrum([]), "spectrum")
    with pytest.raises(PlotError):
        emit_plot([Series("e", np.array([]), np.array([]))], "spectrum")
    with pytest.raises(PlotError):
        emit_plot(42, "spectrum")
