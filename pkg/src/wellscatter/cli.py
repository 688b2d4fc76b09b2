"""Command-line entry point: ``wellscatter {constants,sweep,regions,packet,deembed}``.

Flags take GHz, mm and ueV; files hold SI values. A TOML file given with
``--config`` supplies defaults that explicit flags override.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import measurement, packet, phasetime
from .dispersion import (
    CONSTANTS,
    ELECTRON_VOLT,
    EMWaveguide,
    GuideGeometry,
    Medium,
    QMParticle,
    QuantumWellSpec,
    cutoffs,
    energy_mapping,
    get_geometry,
    get_material,
)
from .errors import EvanescentRegimeError, UnwrapAmbiguityError
from .fileio import atomic_write
from .scattering import WellScatterer, transmission_coefficient

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

PRESETS = {
    "teflon-xband": {
        "material": "teflon",
        "geometry": "xband",
        "band_ghz": (6.56, 6.9),
        "wells_mm": (4.0, 27.0, 38.7, 47.5, 62.6, 71.1, 82.3),
        "a_max_mm": 90.0,
        "packet": (6.62, 5.0, 27.0),
    },
    "perspex-xband": {
        "material": "perspex",
        "geometry": "xband",
        "band_ghz": (6.6, 8.0),
        "wells_mm": (6.0, 18.0, 24.0),
        "a_max_mm": 30.0,
        "packet": (6.8, 5.0, 6.0),
    },
    "vacuum-xband": {
        "material": "vacuum",
        "geometry": "xband",
        "band_ghz": (6.56, 6.9),
        "wells_mm": (0.0, 50.0, 100.0),
        "a_max_mm": 90.0,
        "packet": (8.0, 20.0, 100.0),
    },
}
DEFAULT_PRESET = "teflon-xband"
DEFAULT_POINTS = 2001
SWEEP_HEADER = "freq_hz,F_re,F_im,mag_sq,phase_rad_unwrapped,tau_analytic_s,tau_numeric_s"
REGION_HEADER = "a_m,f_hz,tau_s,negative_flag"
TRACE_HEADER = "t_seconds,envelope"
PACKET_REPORT_HEADER = "peak_delay_s,tau_phi_s,rel_error"

# option name -> (type, repeatable)
_OPTIONS = {
    "preset": (str, False),
    "n": (float, False),
    "guide_width_mm": (float, False),
    "length_mm": (float, False),
    "well_mm": (float, True),
    "well_nm": (float, True),
    "fmin_ghz": (float, False),
    "fmax_ghz": (float, False),
    "points": (int, False),
    "mode": (str, False),
    "out": (str, False),
    "mass_kg": (float, False),
    "e0_uev": (float, False),
    "v0_uev": (float, False),
    "amin_mm": (float, False),
    "amax_mm": (float, False),
    "a_points": (int, False),
    "fcenter_ghz": (float, False),
    "sigma_mhz": (float, False),
    "time_points": (int, False),
    "smooth": (int, False),
    "ref": (str, False),
    "format": (str, False),
    "correction": (str, False),
}


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


@dataclass
class RunConfig:
    preset: str
    mode: str
    geometry: GuideGeometry
    medium: Medium
    qm_spec: Optional[QuantumWellSpec]
    grid: phasetime.FrequencyGrid
    wells: list
    out: str
    options: dict = field(default_factory=dict)

    def model(self):
        if self.mode == "qm":
            return QMParticle(self.qm_spec)
        return EMWaveguide(self.geometry, self.medium)

    @property
    def preset_data(self):
        return PRESETS[self.preset]


def _shared_options(parser, with_mode=True):
    S = argparse.SUPPRESS
    parser.add_argument("--config", default=S, help="TOML file with default option values")
    parser.add_argument("--preset", default=S, help=f"one of {', '.join(PRESETS)}")
    parser.add_argument("--n", type=float, default=S, help="refractive index of the well")
    parser.add_argument("--guide-width-mm", type=float, default=S)
    parser.add_argument("--length-mm", type=float, default=S)
    parser.add_argument("--well-mm", type=float, action="append", default=S)
    parser.add_argument("--well-nm", type=float, action="append", default=S,
                        help="well widths in nm (convenient in qm mode)")
    parser.add_argument("--fmin-ghz", type=float, default=S)
    parser.add_argument("--fmax-ghz", type=float, default=S)
    parser.add_argument("--points", type=int, default=S)
    if with_mode:
        parser.add_argument("--mode", choices=("em", "qm"), default=S)
    parser.add_argument("--out", default=S, help="output directory")
    parser.add_argument("--mass-kg", type=float, default=S)
    parser.add_argument("--e0-uev", type=float, default=S)
    parser.add_argument("--v0-uev", type=float, default=S)


def build_parser():
    parser = _Parser(prog="wellscatter", description=__doc__.splitlines()[0])
    _shared_options(parser)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    S = argparse.SUPPRESS

    p = sub.add_parser("constants", help="cutoffs and equivalent well energies")
    _shared_options(p)

    p = sub.add_parser("sweep", help="|F|^2, phase and phase time per well width")
    _shared_options(p)

    p = sub.add_parser("regions", help="negative phase time map over (a, f)")
    _shared_options(p)
    p.add_argument("--amin-mm", type=float, default=S)
    p.add_argument("--amax-mm", type=float, default=S)
    p.add_argument("--a-points", type=int, default=S)

    p = sub.add_parser("packet", help="wave-packet delay against the phase time")
    _shared_options(p)
    p.add_argument("--fcenter-ghz", type=float, default=S)
    p.add_argument("--sigma-mhz", type=float, default=S)
    p.add_argument("--time-points", type=int, default=S)

    p = sub.add_parser("deembed", help="phase time from a measured S21 trace")
    _shared_options(p, with_mode=False)
    p.add_argument("input", help="trace file (.csv or Touchstone .s2p)")
    p.add_argument("--mode", dest="correction", choices=("analytic-k", "reference"), default=S)
    p.add_argument("--ref", default=S, help="empty-guide reference trace")
    p.add_argument("--smooth", type=int, default=S, help="moving-average window (odd)")
    p.add_argument("--format", choices=("csv", "touchstone"), default=S)
    return parser


def _flatten(table, prefix=""):
    for key, value in table.items():
        if isinstance(value, dict):
            yield from _flatten(value, f"{prefix}{key}.")
        else:
            yield key.replace("-", "_"), f"{prefix}{key}", value


def load_config(path):
    with open(path, "rb") as fh:
        table = tomllib.load(fh)
    options = {}
    for key, dotted, value in _flatten(table):
        if key not in _OPTIONS:
            raise CliError(f"unknown config key {dotted!r} in {path}")
        kind, repeatable = _OPTIONS[key]
        try:
            if repeatable:
                values = value if isinstance(value, list) else [value]
                options[key] = [kind(v) for v in values]
            else:
                options[key] = kind(value)
        except (TypeError, ValueError):
            raise CliError(f"bad value for {dotted!r} in {path}: {value!r}") from None
    return options


def resolve_config(args) -> RunConfig:
    given = vars(args).copy()
    options = load_config(given.pop("config")) if "config" in given else {}
    options.update({k: v for k, v in given.items() if k in _OPTIONS})

    preset = options.get("preset", DEFAULT_PRESET)
    if preset not in PRESETS:
        raise CliError(f"unknown preset {preset!r}; available: {', '.join(PRESETS)}")
    data = PRESETS[preset]
    base_geo = get_geometry(data["geometry"])
    base_medium = get_material(data["material"])

    mode = options.get("mode", "em")
    width = options.get("guide_width_mm", base_geo.width_b * 1e3) * 1e-3
    length = options.get("length_mm", base_geo.total_length_l * 1e3) * 1e-3
    if "n" in options:
        medium = Medium(options["n"], f"n={options['n']:g}")
    else:
        medium = base_medium
    geometry = GuideGeometry(width, length)

    if "well_mm" in options or "well_nm" in options:
        wells = [w * 1e-3 for w in options.get("well_mm", [])]
        wells += [w * 1e-9 for w in options.get("well_nm", [])]
    else:
        wells = [w * 1e-3 for w in data["wells_mm"]]
    for a in wells:
        if a < 0:
            raise CliError(f"well width must be non-negative, got {a!r} m")

    fmin, fmax = data["band_ghz"]
    grid = phasetime.FrequencyGrid(
        options.get("fmin_ghz", fmin) * 1e9,
        options.get("fmax_ghz", fmax) * 1e9,
        options.get("points", DEFAULT_POINTS),
    )

    qm_spec = None
    if mode == "qm":
        mapped = energy_mapping(geometry, medium)
        qm_spec = QuantumWellSpec(
            baseline_E0=options["e0_uev"] * 1e-6 * ELECTRON_VOLT if "e0_uev" in options else mapped.baseline_E0,
            depth_V0=options["v0_uev"] * 1e-6 * ELECTRON_VOLT if "v0_uev" in options else mapped.depth_V0,
            mass_m=options.get("mass_kg", CONSTANTS.electron_mass),
        )
    return RunConfig(
        preset=preset,
        mode=mode,
        geometry=geometry,
        medium=medium,
        qm_spec=qm_spec,
        grid=grid,
        wells=wells,
        out=options.get("out", "."),
        options=options,
    )


def _f(x) -> str:
    return repr(float(x))


def _csv(header, columns):
    rows = [",".join(_f(v) for v in row) for row in zip(*columns)]
    return "\n".join([header] + rows) + "\n"


def _check_band(cfg: RunConfig, model):
    f0 = model.omega_min / (2 * math.pi)
    if cfg.grid.f_min <= f0:
        raise CliError(
            f"band starts at {cfg.grid.f_min / 1e9:.6g} GHz, at or below the cutoff f0 = {f0 / 1e9:.6g} GHz"
        )


def _well_tag(a):
    if 0 < a < 1e-5:
        return f"{a * 1e9:.3f}".rstrip("0").rstrip(".") + "nm"
    return f"{a * 1e3:.4f}".rstrip("0").rstrip(".") + "mm"


def cmd_constants(cfg: RunConfig, stream=None):
    stream = stream or sys.stdout
    omega0, omega_n = cutoffs(cfg.geometry, cfg.medium)
    spec = energy_mapping(cfg.geometry, cfg.medium)
    if cfg.qm_spec is not None:
        spec = cfg.qm_spec
    to_uev = 1e6 / ELECTRON_VOLT
    lines = [
        f"preset: {cfg.preset}",
        f"n = {cfg.medium.refractive_index_n:.6f}",
        f"b = {cfg.geometry.width_b * 1e3:.2f} mm ({_f(cfg.geometry.width_b)} m)",
        f"l = {cfg.geometry.total_length_l * 1e3:.2f} mm ({_f(cfg.geometry.total_length_l)} m)",
        f"f0 = {omega0 / (2 * math.pi) / 1e9:.3f} GHz (omega0 = {_f(omega0)} rad/s)",
        f"fn = {omega_n / (2 * math.pi) / 1e9:.3f} GHz (omega_n = {_f(omega_n)} rad/s)",
        f"E0 = {spec.baseline_E0 * to_uev:.2f} ueV ({_f(spec.baseline_E0)} J)",
        f"V0 = {spec.depth_V0 * to_uev:.2f} ueV ({_f(spec.depth_V0)} J)",
    ]
    stream.write("\n".join(lines) + "\n")
    return lines


def _sweep_one(model, grid, a):
    try:
        prof = phasetime.phase_time_numeric(model, grid, a)
    except UnwrapAmbiguityError:
        grid = grid.doubled()
        prof = phasetime.phase_time_numeric(model, grid, a)
    f = prof.freq
    k, kp = model.wavenumbers(2 * math.pi * f)
    F = transmission_coefficient(WellScatterer(k, kp, a))
    if isinstance(model, EMWaveguide):
        tau_a = phasetime.phase_time_analytic(model, f, a)
    else:
        tau_a = np.full(f.shape, np.nan)
    return _csv(
        SWEEP_HEADER,
        [f, F.real, F.imag, np.abs(F) ** 2, prof.phase_unwrapped, tau_a, prof.tau],
    )


def _sweep_plot_script(names):
    lines = [
        "# gnuplot script: |F|^2, phase and phase time against frequency",
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set multiplot layout 3,1",
        "set xlabel 'f (GHz)'",
    ]
    for col, label in ((4, "|F|^2"), (5, "phase (rad)"), (7, "tau (ns)")):
        scale = "*1e9" if col == 7 else ""
        lines.append(f"set ylabel '{label}'")
        plots = ", ".join(
            f"'{name}' using ($1/1e9):(${col}{scale}) with lines title '{name[6:-4]}'" for name in names
        )
        lines.append(f"plot {plots}")
    lines.append("unset multiplot")
    return "\n".join(lines) + "\n"


def cmd_sweep(cfg: RunConfig):
    model = cfg.model()
    _check_band(cfg, model)
    names = [f"sweep_{_well_tag(a)}.csv" for a in cfg.wells]
    with ThreadPoolExecutor() as pool:
        texts = list(pool.map(lambda a: _sweep_one(model, cfg.grid, a), cfg.wells))
    written = []
    for name, text in zip(names, texts):
        path = os.path.join(cfg.out, name)
        atomic_write(path, text)
        written.append(path)
    script = os.path.join(cfg.out, "sweep.gp")
    atomic_write(script, _sweep_plot_script(names))
    return written + [script]


def cmd_regions(cfg: RunConfig):
    if cfg.mode != "em":
        raise CliError("regions uses the closed-form phase time and needs --mode em")
    model = cfg.model()
    _check_band(cfg, model)
    opts = cfg.options
    a_range = (opts.get("amin_mm", 0.0) * 1e-3, opts.get("amax_mm", cfg.preset_data["a_max_mm"]) * 1e-3)
    resolution = (opts.get("a_points", 181), opts.get("points", 341))
    rmap = phasetime.region_map(model, a_range, (cfg.grid.f_min, cfg.grid.f_max), resolution)
    A, Fq = np.meshgrid(rmap.a_axis, rmap.f_axis, indexing="ij")
    text = _csv(
        REGION_HEADER,
        [A.ravel(), Fq.ravel(), rmap.tau_value.ravel(), rmap.negative.ravel().astype(int)],
    )
    path = os.path.join(cfg.out, "regions.csv")
    atomic_write(path, text)
    script = os.path.join(cfg.out, "regions.gp")
    atomic_write(
        script,
        "\n".join(
            [
                "# gnuplot script: negative phase time regions over well width and frequency",
                "set datafile separator ','",
                "set xlabel 'f (GHz)'",
                "set ylabel 'a (mm)'",
                "set cblabel 'tau (ns)'",
                "set cbrange [-1:0]",
                "plot 'regions.csv' skip 1 using ($2/1e9):($1*1e3):($4 > 0 ? $3*1e9 : NaN) with image notitle",
            ]
        )
        + "\n",
    )
    return rmap, [path, script]


def cmd_packet(cfg: RunConfig, stream=None):
    stream = stream or sys.stdout
    model = cfg.model()
    opts = cfg.options
    fc_ghz, sigma_mhz, a_mm = cfg.preset_data["packet"]
    f_center = opts.get("fcenter_ghz", fc_ghz) * 1e9
    sigma = opts.get("sigma_mhz", sigma_mhz) * 1e6
    a = cfg.wells[0] if ("well_mm" in opts or "well_nm" in opts) else a_mm * 1e-3
    spec = packet.PacketSpec(f_center, sigma, time_points=opts.get("time_points", 4001))
    incident, transmitted = packet.synthesize_and_transmit(spec, model, a)
    delay = packet.peak_delay(incident, transmitted)
    if isinstance(model, EMWaveguide):
        tau = float(phasetime.phase_time_analytic(model, f_center, a))
    else:
        prof = phasetime.phase_time_numeric(model, spec.grid, a)
        tau = float(np.interp(f_center, prof.freq, prof.tau))
    rel = abs(delay - tau) / abs(tau) if tau != 0 else abs(delay)
    paths = []
    for name, trace in (("packet_incident.csv", incident), ("packet_transmitted.csv", transmitted)):
        path = os.path.join(cfg.out, name)
        atomic_write(path, _csv(TRACE_HEADER, [trace.t, trace.envelope]))
        paths.append(path)
    report = f"{_f(delay)},{_f(tau)},{_f(rel)}"
    path = os.path.join(cfg.out, "packet_report.csv")
    atomic_write(path, PACKET_REPORT_HEADER + "\n" + report + "\n")
    paths.append(path)
    stream.write(f"{PACKET_REPORT_HEADER}\n{report}\n")
    return (delay, tau, rel), paths


def _trace_format(path, requested):
    if requested:
        return "csv" if requested == "csv" else "touchstone_ri"
    return "touchstone_ri" if path.lower().endswith((".s2p", ".ts")) else "csv"


def cmd_deembed(cfg: RunConfig, input_path):
    opts = cfg.options
    if len(cfg.wells) != 1 or not ("well_mm" in opts or "well_nm" in opts):
        raise CliError("deembed needs exactly one --well-mm")
    geometry = cfg.geometry.with_well(cfg.wells[0])
    trace = measurement.load_trace(input_path, _trace_format(input_path, opts.get("format")))
    mode = {"analytic-k": "analytic_k", "reference": "reference_trace"}[opts.get("correction", "analytic-k")]
    reference = None
    if mode == "reference_trace":
        if "ref" not in opts:
            raise CliError("--mode reference needs --ref <path>")
        reference = measurement.load_trace(opts["ref"], _trace_format(opts["ref"], opts.get("format")))
    ct = measurement.deembed(trace, geometry, mode, reference)
    profile = measurement.measured_phase_time(ct, smooth=opts.get("smooth"))
    stem = os.path.splitext(os.path.basename(input_path))[0]
    path = os.path.join(cfg.out, f"{stem}_phasetime.csv")
    atomic_write(path, measurement.profile_to_csv(profile))
    return profile, [path]


def run(argv=None, stream=None):
    stream = stream or sys.stdout
    args = build_parser().parse_args(argv)
    cfg = resolve_config(args)
    if args.command == "constants":
        cmd_constants(cfg, stream)
        return 0
    if args.command == "sweep":
        paths = cmd_sweep(cfg)
    elif args.command == "regions":
        paths = cmd_regions(cfg)[1]
    elif args.command == "packet":
        paths = cmd_packet(cfg, stream)[1]
    else:
        paths = cmd_deembed(cfg, args.input)[1]
    for p in paths:
        stream.write(f"wrote {p}\n")
    return 0


def main(argv=None):
    try:
        return run(argv)
    except (CliError, ValueError, KeyError, OSError, EvanescentRegimeError) as exc:
        message = str(exc.args[0]) if isinstance(exc, KeyError) and exc.args else str(exc)
        sys.stderr.write("error: " + " ".join(message.split()) + "\n")
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
