"""Acceptance criteria, one test per criterion, each at its stated tolerance.

Every test records a single PASS/FAIL line; the lines are repeated in the
terminal summary under "acceptance criteria".
"""

import io
import math
import re
import time

import numpy as np

from wellscatter import cli
from wellscatter.dispersion import (
    CONSTANTS,
    EMWaveguide,
    GuideGeometry,
    Medium,
    energy_mapping,
    get_geometry,
    get_material,
)
from wellscatter.measurement import deembed, fixture_grid, forward_model, measured_phase_time
from wellscatter.packet import PacketSpec, peak_delay, synthesize_and_transmit
from wellscatter.phasetime import (
    FrequencyGrid,
    negative_band_edge,
    negative_condition_scan,
    phase_time_analytic,
    phase_time_numeric,
    region_map,
)
from wellscatter.scattering import WellScatterer, reflection_coefficient, solve_coefficients, transmission_coefficient

from .conftest import record_criterion

XBAND = get_geometry("xband")
TEFLON = EMWaveguide(XBAND, get_material("teflon"))
PERSPEX = EMWaveguide(XBAND, get_material("perspex"))


def _constants(preset):
    buf = io.StringIO()
    cli.run(["constants", "--preset", preset], stream=buf)
    return {
        m.group(1): float(m.group(2))
        for m in re.finditer(r"^(\w+) = ([-\d.e+]+) (?:GHz|ueV)", buf.getvalue(), re.M)
    }


def test_criterion_1_constants():
    start = time.perf_counter()
    teflon = _constants("teflon-xband")
    perspex = _constants("perspex-xband")
    elapsed = time.perf_counter() - start
    expected = [
        (teflon["f0"], 6.56, 0.01),
        (teflon["fn"], 4.58, 0.01),
        (teflon["E0"], 27.1, 0.05),
        (teflon["V0"], 8.2, 0.05),
        (perspex["fn"], 4.10, 0.01),
        (perspex["V0"], 10.2, 0.05),
    ]
    ok = all(abs(got - want) <= tol for got, want, tol in expected) and elapsed < 1.0
    detail = (
        f"teflon f0={teflon['f0']} fn={teflon['fn']} GHz E0={teflon['E0']} V0={teflon['V0']} ueV; "
        f"perspex fn={perspex['fn']} GHz V0={perspex['V0']} ueV; {elapsed:.3f} s"
    )
    record_criterion(1, "constants", ok, detail)
    assert ok, detail


def test_criterion_2_teflon_classification():
    start = time.perf_counter()
    f = np.linspace(6.56e9, 6.9e9, 2001)
    negative = {a: float(phase_time_analytic(TEFLON, f, a * 1e-3).min()) for a in (4.0, 27.0, 47.5, 71.1)}
    positive = {a: float(phase_time_analytic(TEFLON, f, a * 1e-3).min()) for a in (38.7, 62.6, 82.3)}
    elapsed = time.perf_counter() - start
    ok = all(v < 0 for v in negative.values()) and all(v >= 0 for v in positive.values()) and elapsed < 5
    detail = (
        "min tau (ns): "
        + ", ".join(f"{a:g}mm {v * 1e9:.4g}" for a, v in {**negative, **positive}.items())
        + f"; {elapsed:.3f} s"
    )
    record_criterion(2, "Teflon classification", ok, detail)
    assert ok, detail


def test_criterion_3_perspex_classification():
    start = time.perf_counter()
    band = (6.6e9, 8.0e9)
    edge6 = negative_band_edge(PERSPEX, 6e-3, band)
    edge24 = negative_band_edge(PERSPEX, 24e-3, band)
    min18 = float(phase_time_analytic(PERSPEX, np.linspace(*band, 4001), 18e-3).min())
    elapsed = time.perf_counter() - start
    ok = (
        edge6 is not None
        and abs(edge6 - 7.1e9) <= 0.1e9
        and edge24 is not None
        and abs(edge24 - 6.7e9) <= 0.1e9
        and min18 >= 0
        and elapsed < 5
    )
    detail = (
        f"6 mm negative up to {edge6 / 1e9:.3f} GHz, 24 mm up to {edge24 / 1e9:.3f} GHz, "
        f"18 mm min tau {min18 * 1e9:.4g} ns; {elapsed:.3f} s"
    )
    record_criterion(3, "Perspex classification", ok, detail)
    assert ok, detail


def test_criterion_4_magnitude_bound_and_edge():
    rmap = region_map(TEFLON, (0.0, 90e-3), (6.56e9, 6.9e9))
    neg = rmap.tau_value[rmap.negative]
    in_bound = bool(np.all((neg > -1e-9) & (neg < 0)))
    worst = float(neg.min())
    i, j = np.unravel_index(np.argmin(rmap.tau_value), rmap.tau_value.shape)
    outside = int(np.sum(neg <= -1e-9))
    thin = [negative_band_edge(TEFLON, a, (6.56e9, 9.0e9), 24001) for a in (5e-5, 1e-4, 5e-4)]
    edge_ok = all(e is not None and abs(e - 7.6e9) <= 0.1e9 for e in thin)
    ok = in_bound and edge_ok
    detail = (
        f"most negative tau {worst * 1e9:.4g} ns at a={rmap.a_axis[i] * 1e3:.3g} mm, "
        f"f={rmap.f_axis[j] / 1e9:.4f} GHz; {outside} of {neg.size} negative cells at or below -1 ns; "
        f"a->0 edge {', '.join(f'{e / 1e9:.4f}' for e in thin)} GHz ({'ok' if edge_ok else 'off'})"
    )
    record_criterion(4, "magnitude bound and a->0 edge", ok, detail)
    assert edge_ok, detail
    assert in_bound, detail


def test_criterion_5_analytic_numeric_oracle():
    rng = np.random.default_rng(5)
    worst_ratio, count = 0.0, 0
    for _ in range(24):
        n = rng.uniform(1.05, 2.0)
        b = rng.uniform(10e-3, 40e-3)
        a = rng.uniform(1e-3, 100e-3)
        span = rng.uniform(1.01, 1.2)
        model = EMWaveguide(GuideGeometry(b, 0.25), Medium(n))
        f0 = model.omega_min / (2 * math.pi)
        grid = FrequencyGrid(1.001 * f0, span * f0, 4001)
        prof = phase_time_numeric(model, grid, a)
        exact = phase_time_analytic(model, grid.frequencies, a)
        tol = np.maximum(1e-6 * np.abs(exact[1:-1]), 1e-14)
        worst_ratio = max(worst_ratio, float(np.max(np.abs(prof.tau - exact)[1:-1] / tol)))
        count += 1
    ok = worst_ratio <= 1.0
    detail = f"{count} random configurations, worst error / tolerance = {worst_ratio:.3g}"
    record_criterion(5, "analytic-numeric oracle", ok, detail)
    assert ok, detail


def test_criterion_6_unitarity():
    rng = np.random.default_rng(6)
    k = rng.uniform(1.0, 500.0, 1000)
    kp = rng.uniform(1.0, 500.0, 1000)
    a = rng.uniform(0.0, 0.2, 1000)
    s = WellScatterer(k, kp, a)
    F = transmission_coefficient(s)
    B = reflection_coefficient(s)
    unit = float(np.max(np.abs(np.abs(B) ** 2 + np.abs(F) ** 2 - 1)))
    solve = max(
        abs(solve_coefficients(WellScatterer(ki, kpi, ai)).F - Fi) / abs(Fi)
        for ki, kpi, ai, Fi in zip(k, kp, a, F)
    )
    ok = unit <= 1e-12 and solve <= 1e-12
    detail = f"1000 samples, max ||B|^2+|F|^2-1| = {unit:.2e}, max closed-form vs solve = {solve:.2e}"
    record_criterion(6, "unitarity", ok, detail)
    assert ok, detail


def test_criterion_7_packet_oracle():
    start = time.perf_counter()
    a, fc = 27.0e-3, 6.62e9
    tau = float(phase_time_analytic(TEFLON, fc, a))
    errors = {}
    for sigma in (5e6, 2.5e6):
        inc, tr = synthesize_and_transmit(PacketSpec(fc, sigma), TEFLON, a)
        delay = peak_delay(inc, tr)
        errors[sigma] = (delay, abs(delay - tau) / abs(tau))
    elapsed = time.perf_counter() - start
    delay, rel = errors[5e6]
    ok = delay < 0 and rel <= 0.05 and errors[2.5e6][1] < rel and elapsed < 10
    detail = (
        f"tau_phi {tau * 1e9:.5g} ns, peak delay {delay * 1e9:.5g} ns, error {rel:.3%} at 5 MHz, "
        f"{errors[2.5e6][1]:.3%} at 2.5 MHz; {elapsed:.2f} s"
    )
    record_criterion(7, "packet oracle", ok, detail)
    assert ok, detail


def test_criterion_8_pipeline_closure():
    worst_ratio, worst_phase, runs = 0.0, 0.0, 0
    for preset in cli.PRESETS.values():
        medium = get_material(preset["material"])
        grid = fixture_grid(*(x * 1e9 for x in preset["band_ghz"]))
        model = EMWaveguide(XBAND, medium)
        reference = forward_model(XBAND.with_well(0.0), medium, grid)
        for a_mm in preset["wells_mm"]:
            geo = XBAND.with_well(a_mm * 1e-3)
            trace = forward_model(geo, medium, grid)
            ct = deembed(trace, geo)
            prof = measured_phase_time(ct)
            exact = phase_time_analytic(model, prof.freq, geo.well_width_a)
            tol = np.maximum(1e-6 * np.abs(exact[1:-1]), 1e-14)
            worst_ratio = max(worst_ratio, float(np.max(np.abs(prof.tau - exact)[1:-1] / tol)))
            ref_ct = deembed(trace, geo, "reference_trace", reference)
            gap = np.angle(ref_ct.F * np.conj(ct.F))
            worst_phase = max(worst_phase, float(np.max(np.abs(gap))))
            runs += 1
    ok = worst_ratio <= 1.0 and worst_phase <= 1e-9
    detail = (
        f"{runs} preset wells at 801 points, worst error / tolerance = {worst_ratio:.3g}, "
        f"mode disagreement {worst_phase:.2e} rad"
    )
    record_criterion(8, "pipeline closure", ok, detail)
    assert ok, detail


def test_criterion_9_half_well_depth():
    spec = energy_mapping(XBAND, get_material("teflon"))
    fractions = np.arange(1, 51) / 51
    energies = spec.baseline_E0 + fractions * spec.depth_V0
    kp_top = math.sqrt(2 * spec.mass_m * spec.depth_V0) / CONSTANTS.hbar
    a_grid = np.arange(1, 201) / 200 * 2 * math.pi / kp_top
    report = negative_condition_scan(spec, energies, a_grid)
    step = fractions[1] - fractions[0]
    violations = report.violations(0.5, slack=step)
    highest = report.highest_negative_fraction
    ok = highest is not None and violations.size == 0
    detail = (
        f"50 energies x 200 widths, highest negative-capable (E-E0)/V0 = {highest:.4f}, "
        f"violations above 0.5 + one step: {violations.size}"
    )
    record_criterion(9, "half-well-depth condition", ok, detail)
    assert ok, detail
