"""Command-line front end.

Commands
--------
analyze      full pipeline: verdict, margin, sensitivities, oracle cross-check
curves       damping/spring curves over the scan grid as CSV
sweep        re-run the pipeline over a range of one converter's P or Q
sensitivity  per-converter weights and first-order sensitivities as CSV
adjust       before/after comparison for explicit active-power assignments
simulate     state-space oracle: mode table and disturbance time series

Exit codes: 0 Stable (or generic success), 2 Unstable, 3 Marginal/NoCrossing,
1 any error.  Commands that render a verdict (analyze, sensitivity, adjust —
the latter judged on the after-point) use the verdict mapping; curves, sweep,
and simulate return 0 on success.
"""
from __future__ import annotations

import argparse
import io
import os
import sys
import time

import numpy as np

from . import __version__
from .config import PowerSetpoint, SystemSpec, load_system_spec
from .errors import SyncstabError
from .frequency_response import OperatingPoint, per_converter_gamma, write_curves_csv
from .modal import adjustment_compare, modal_weights_from_report, sensitivities, write_sensitivity_csv
from .pipeline import AnalysisResult, run_analysis, run_oracle
from .stability import MARGINAL, NO_CROSSING, STABLE, UNSTABLE
from .statespace import AnglePulse, simulate, write_modes_csv, write_timeseries_csv
from .textio import KVWriter, g12, write_csv

_EXIT = {STABLE: 0, UNSTABLE: 2, MARGINAL: 3, NO_CROSSING: 3}


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="system description file")
    parser.add_argument("--case", default=None,
                        help="operating-point block name (default: first declared)")
    parser.add_argument("--flat-voltage", action=argparse.BooleanOptionalAction,
                        default=None,
                        help="skip the power flow (U = 1, delta = 0); "
                             "--no-flat-voltage forces a solve even when the "
                             "config declares flat_voltage")
    parser.add_argument("--out", default=None, metavar="DIR",
                        help="write outputs (and a run manifest) into DIR")
    parser.add_argument("--dump-b", action="store_true",
                        help="emit the reduced susceptance matrix B as CSV")
    parser.add_argument("--eta-complex", action="store_true",
                        help="add literal complex-square weight diagnostics")
    parser.add_argument("--force-first-pll", action="store_true",
                        help="allow non-identical PLL gains, using converter 1's")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="syncstab",
        description="Net-damping synchronization-stability screening for "
                    "multi-converter grids.")
    parser.add_argument("--version", action="version", version=f"syncstab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="verdict, margin, weights, oracle cross-check")
    _common_flags(p)
    p.add_argument("--curves", default=None, metavar="FILE",
                   help="also write the scan curves CSV to FILE")

    p = sub.add_parser("curves", help="damping/spring curves as CSV")
    _common_flags(p)
    p.add_argument("--per-converter-gamma", action="store_true",
                   help="append per-converter converter-side diagnostics")

    p = sub.add_parser("sweep", help="pipeline over a range of one converter's P or Q")
    _common_flags(p)
    p.add_argument("--converter", required=True, help="converter name to sweep")
    p.add_argument("--quantity", required=True, choices=("p", "q"),
                   help="which injection to sweep")
    p.add_argument("--range", required=True, metavar="START:STOP:STEP",
                   help="swept values (inclusive of STOP within tolerance)")

    p = sub.add_parser("sensitivity", help="per-converter weights as CSV")
    _common_flags(p)

    p = sub.add_parser("adjust", help="before/after active-power comparison")
    _common_flags(p)
    p.add_argument("--set", required=True, action="append", metavar="NAME=P[,NAME=P...]",
                   help="new active-power values; repeatable or comma-separated")

    p = sub.add_parser("simulate", help="oracle modes and disturbance response")
    _common_flags(p)
    p.add_argument("--pulse-start", type=float, default=2.0, metavar="S",
                   help="disturbance onset time (default 2.0 s)")
    p.add_argument("--pulse-width", type=float, default=0.02, metavar="S",
                   help="disturbance width (default 0.02 s)")
    p.add_argument("--pulse-amplitude", type=float, default=0.1, metavar="RAD",
                   help="slack-angle pulse height (default 0.1 rad)")
    return parser


class _Outputs:
    """Collects emitted files for the run manifest."""

    def __init__(self, out_dir: str | None):
        self.out_dir = out_dir
        self.files: list[str] = []
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)

    def write(self, name: str, text: str) -> str:
        assert self.out_dir is not None
        path = os.path.join(self.out_dir, name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        self.files.append(name)
        return path

    def manifest(self, args: argparse.Namespace, spec: SystemSpec, started: float) -> None:
        if not self.out_dir:
            return
        doc = KVWriter()
        doc.section("syncstab run manifest")
        doc.field("command", args.command)
        doc.field("tool_version", __version__)
        doc.field("config", os.path.abspath(args.config))
        doc.field("case", args.case or "(first declared)")
        effective_flat = (spec.options.flat_voltage if args.flat_voltage is None
                          else args.flat_voltage)
        doc.field("flat_voltage", effective_flat)
        doc.field("force_first_pll", args.force_first_pll)
        doc.field("eta_complex", args.eta_complex)
        opt = spec.options
        doc.field("scan_hz", f"{g12(opt.scan_fmin_hz)}..{g12(opt.scan_fmax_hz)} "
                             f"x{opt.scan_points}")
        doc.field("root_tol_hz", opt.root_tol_hz)
        doc.field("sim", f"dt={g12(opt.sim_dt_s)} duration={g12(opt.sim_duration_s)}")
        doc.field("wall_time_s", round(time.monotonic() - started, 3))
        files = ", ".join(self.files + ["manifest.txt"])
        doc.field("outputs", files)
        path = os.path.join(self.out_dir, "manifest.txt")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(doc.render())


def _b_matrix_csv(result: AnalysisResult) -> str:
    names = list(result.net.converter_index)
    buf = io.StringIO()
    write_csv(buf, ["node", *names],
              ([names[i], *result.net.b_matrix[i]] for i in range(result.net.n)))
    return buf.getvalue()


def _report_document(args, result: AnalysisResult) -> tuple[str, str]:
    """Render the full analyze report; returns (text, verdict)."""
    spec, report = result.spec, result.report
    names = spec.converter_names
    doc = KVWriter()
    doc.section("syncstab stability report")
    doc.field("tool_version", __version__)
    doc.field("config", args.config)
    doc.field("case", result.case)
    doc.field("n_converters", spec.n_converters)
    doc.field("rated_frequency_hz", spec.rated_frequency_hz)

    doc.section("steady state")
    doc.field("mode", "flat" if result.steady.flat else "solved")
    doc.field("iterations", result.steady.iterations)
    for i, name in enumerate(names):
        doc.field(f"u_{name}", float(result.steady.u_pu[i]))
        doc.field(f"delta_{name}_rad", float(result.steady.delta0_rad[i]))
    doc.field("slack_p_pu", result.steady.slack_p_pu)
    if np.isfinite(result.steady.slack_q_pu):
        doc.field("slack_q_pu", result.steady.slack_q_pu)

    doc.section("verdict")
    doc.field("verdict", report.verdict)
    if report.critical is not None:
        c = report.critical
        doc.field("margin", c.margin)
        doc.field("D_net1", c.d_net1)
        doc.field("D_con_at_c1", c.d_con_at_c1)
        doc.field("f_c1_hz", c.f_c1)
        doc.field("omega_c1_rad_s", c.omega_c1)
        doc.field("critical_subsystem", c.subsystem + 1)
    for note in report.notes:
        doc.note(note)

    doc.section("crossings")
    count = 0
    for sub in report.per_subsystem:
        for cr in sub.crossings:
            count += 1
            doc.field(f"crossing_{count}",
                      f"subsystem={cr.subsystem + 1} f_hz={g12(cr.f_ci)} "
                      f"D_con={g12(cr.d_con)} D_net={g12(cr.d_neti)} "
                      f"net={g12(cr.net_damping)}")
    doc.field("crossing_count", count)

    if report.critical is not None:
        weights = modal_weights_from_report(result.net, result.op, report, spec.omega0)
        sens = sensitivities(weights)
        doc.section("per-converter weights")
        for i, name in enumerate(names):
            doc.field(f"eta_{name}", float(weights.eta[i]))
        if args.eta_complex:
            for i, name in enumerate(names):
                z = weights.eta_complex[i]
                doc.field(f"eta_complex_{name}", f"{g12(z.real)}{z.imag:+.12g}j")
        doc.field("dominant_converter", names[sens.dominant])

    _ss, modeset, check = run_oracle(result, force_first_pll=args.force_first_pll)
    doc.section("state-space oracle")
    if modeset.dominant is None:
        doc.field("dominant_mode", "none")
        doc.note(modeset.note)
    else:
        doc.field("dominant_sigma_1_per_s", modeset.dominant.sigma)
        doc.field("dominant_f_hz", modeset.dominant.f_hz)
        doc.field("dominant_damping_ratio", modeset.dominant.damping_ratio)
    doc.field("crosscheck", check.status)
    if check.freq_dev_hz is not None:
        doc.field("crosscheck_freq_dev_hz", check.freq_dev_hz)
    if check.reason:
        doc.note(check.reason)

    return doc.render(), report.verdict


def _cmd_analyze(args, out: _Outputs) -> int:
    spec = load_system_spec(args.config)
    result = run_analysis(spec, args.case, flat_voltage=args.flat_voltage,
                          force_first_pll=args.force_first_pll)
    text, verdict = _report_document(args, result)

    if args.curves:
        buf = io.StringIO()
        write_curves_csv(result.curves, buf)
        with open(args.curves, "w", encoding="utf-8") as fh:
            fh.write(buf.getvalue())
        out.files.append(os.path.abspath(args.curves))
    if args.dump_b:
        if out.out_dir:
            out.write("b_matrix.csv", _b_matrix_csv(result))
        else:
            sys.stdout.write(_b_matrix_csv(result))
    if out.out_dir:
        out.write("report.txt", text)
    sys.stdout.write(text)
    return _EXIT[verdict]


def _cmd_curves(args, out: _Outputs) -> int:
    spec = load_system_spec(args.config)
    result = run_analysis(spec, args.case, flat_voltage=args.flat_voltage,
                          force_first_pll=args.force_first_pll)
    extra = None
    if args.per_converter_gamma:
        extra = per_converter_gamma(spec, result.op, result.curves.f_hz)
    buf = io.StringIO()
    write_curves_csv(result.curves, buf, per_converter=extra,
                     names=spec.converter_names if extra is not None else ())
    if out.out_dir:
        out.write("curves.csv", buf.getvalue())
        if args.dump_b:
            out.write("b_matrix.csv", _b_matrix_csv(result))
    else:
        if args.dump_b:
            sys.stdout.write(_b_matrix_csv(result))
        sys.stdout.write(buf.getvalue())
    return 0


def _parse_range(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise SyncstabError(f"range must be START:STOP:STEP, got {text!r}",
                            code="RANGE_INVALID")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise SyncstabError(f"range values must be numbers: {text!r}",
                            code="RANGE_INVALID") from None
    if step <= 0:
        raise SyncstabError("range STEP must be positive", code="RANGE_INVALID")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    if count <= 0:
        return np.empty(0)
    return start + step * np.arange(count)


def _cmd_sweep(args, out: _Outputs) -> int:
    spec = load_system_spec(args.config)
    if args.converter not in spec.converter_names:
        raise SyncstabError(f"unknown converter {args.converter!r}",
                            code="UNKNOWN_CONVERTER")
    idx = spec.converter_names.index(args.converter)
    case = args.case or spec.default_case()
    values = _parse_range(args.range)

    rows: list[list[object]] = []
    for value in values:
        p, q = spec.case_injections(case)
        if args.quantity == "p":
            p[idx] = value
        else:
            q[idx] = value
        swept = spec.with_case("_sweep", {
            name: PowerSetpoint(p[i], q[i])
            for i, name in enumerate(spec.converter_names)})
        try:
            result = run_analysis(swept, "_sweep", flat_voltage=args.flat_voltage,
                                  force_first_pll=args.force_first_pll)
            critical = result.report.critical
            if critical is None:
                rows.append([value, float("nan"), float("nan"), result.report.verdict])
            else:
                rows.append([value, critical.d_net1, critical.f_c1,
                             result.report.verdict])
        except SyncstabError as exc:
            rows.append([value, float("nan"), float("nan"), f"Error[{exc.code}]"])

    buf = io.StringIO()
    write_csv(buf, ["value", "D_net1", "f_c1", "verdict"], rows)
    if out.out_dir:
        out.write("sweep.csv", buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def _cmd_sensitivity(args, out: _Outputs) -> int:
    spec = load_system_spec(args.config)
    result = run_analysis(spec, args.case, flat_voltage=args.flat_voltage,
                          force_first_pll=args.force_first_pll)
    if result.report.critical is None:
        sys.stderr.write("syncstab: no crossing in the scan band; "
                         "no weights to report\n")
        return _EXIT[result.report.verdict]
    weights = modal_weights_from_report(result.net, result.op, result.report,
                                        spec.omega0)
    sens = sensitivities(weights)
    buf = io.StringIO()
    write_sensitivity_csv(weights, sens, spec.converter_names, buf,
                          eta_complex=args.eta_complex)
    if out.out_dir:
        out.write("sensitivity.csv", buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return _EXIT[result.report.verdict]


def _parse_assignments(chunks: list[str], spec: SystemSpec) -> dict[str, float]:
    out: dict[str, float] = {}
    for chunk in chunks:
        for item in chunk.split(","):
            item = item.strip()
            if not item:
                continue
            name, sep, value = item.partition("=")
            name = name.strip()
            if not sep:
                raise SyncstabError(
                    f"assignment must be NAME=VALUE, got {item!r} "
                    "(only active power can be assigned; sweep handles Q)",
                    code="ASSIGN_INVALID")
            if name not in spec.converter_names:
                raise SyncstabError(f"unknown converter {name!r}",
                                    code="UNKNOWN_CONVERTER")
            try:
                out[name] = float(value)
            except ValueError:
                raise SyncstabError(f"assignment value {value!r} is not a number",
                                    code="ASSIGN_INVALID") from None
    return out


def _cmd_adjust(args, out: _Outputs) -> int:
    spec = load_system_spec(args.config)
    assignments = _parse_assignments(args.set, spec)
    result = run_analysis(spec, args.case, flat_voltage=args.flat_voltage,
                          force_first_pll=args.force_first_pll)

    p_after = result.op.p_pu.copy()
    for name, value in assignments.items():
        p_after[spec.converter_names.index(name)] = value
    op_after = OperatingPoint(p_after, result.op.q_pu, result.op.u_pu)
    cmp = adjustment_compare(spec, result.net, result.op, op_after)

    doc = KVWriter()
    doc.section("syncstab adjustment comparison")
    doc.field("config", args.config)
    doc.field("case", result.case)
    doc.field("assignments", ", ".join(f"{k}={g12(v)}" for k, v in assignments.items()))
    doc.field("d_net1_before", cmp.d_net1_before)
    doc.field("d_net1_after", cmp.d_net1_after)
    doc.field("f_c1_before_hz", cmp.omega_c1_before / (2 * np.pi))
    doc.field("f_c1_after_hz", cmp.omega_c1_after / (2 * np.pi))
    doc.field("margin_before", cmp.margin_before)
    doc.field("margin_after", cmp.margin_after)
    doc.field("verdict_before", cmp.verdict_before)
    doc.field("verdict_after", cmp.verdict_after)
    doc.field("positive_inertia_before", cmp.positive_inertia_before)
    doc.field("positive_inertia_after", cmp.positive_inertia_after)
    for i, name in enumerate(spec.converter_names):
        doc.field(f"delta_p_{name}", float(cmp.per_converter_delta_p[i]))
    doc.field("improvement", cmp.improvement)
    text = doc.render()

    if out.out_dir:
        out.write("adjust.txt", text)
    sys.stdout.write(text)
    return _EXIT[cmp.verdict_after]


def _cmd_simulate(args, out: _Outputs) -> int:
    spec = load_system_spec(args.config)
    result = run_analysis(spec, args.case, flat_voltage=args.flat_voltage,
                          force_first_pll=args.force_first_pll)
    ss, modeset, _check = run_oracle(result, force_first_pll=args.force_first_pll)
    pulse = AnglePulse(start_s=args.pulse_start, width_s=args.pulse_width,
                       amplitude_rad=args.pulse_amplitude)
    sim = simulate(ss, pulse, dt=spec.options.sim_dt_s,
                   duration=spec.options.sim_duration_s)

    modes_buf = io.StringIO()
    write_modes_csv(modeset, modes_buf)
    series_buf = io.StringIO()
    write_timeseries_csv(sim, series_buf)

    if modeset.dominant is not None:
        d = modeset.dominant
        sys.stderr.write(
            f"syncstab: dominant mode sigma={g12(d.sigma)} 1/s, "
            f"f={g12(d.f_hz)} Hz, damping_ratio={g12(d.damping_ratio)}\n")
    else:
        sys.stderr.write(f"syncstab: {modeset.note}\n")

    if out.out_dir:
        out.write("modes.csv", modes_buf.getvalue())
        out.write("timeseries.csv", series_buf.getvalue())
    else:
        sys.stdout.write(modes_buf.getvalue())
    return 0


_HANDLERS = {
    "analyze": _cmd_analyze,
    "curves": _cmd_curves,
    "sweep": _cmd_sweep,
    "sensitivity": _cmd_sensitivity,
    "adjust": _cmd_adjust,
    "simulate": _cmd_simulate,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    started = time.monotonic()
    out = _Outputs(args.out)
    try:
        code = _HANDLERS[args.command](args, out)
        if out.out_dir:
            out.manifest(args, load_system_spec(args.config), started)
    except SyncstabError as exc:
        sys.stderr.write(f"syncstab: error [{exc.code}]: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"syncstab: error [IO]: {exc}\n")
        return 1
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
