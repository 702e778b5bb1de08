"""End-to-end orchestration: config → power flow → curves → verdict → oracle."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemSpec
from .frequency_response import OperatingPoint, SubsystemCurves, resolve_pll_gains, trace_curves
from .network import ReducedNetwork, build_reduced_network
from .powerflow import SteadyState, solve_steady_state
from .stability import StabilityReport, assess
from .statespace import CrossCheck, ModeSet, StateSpace, assemble_state_space, crosscheck, modes

__all__ = ["AnalysisResult", "operating_point", "run_analysis", "run_oracle"]


@dataclass(frozen=True)
class AnalysisResult:
    """Everything one pipeline run produced, for reporting and tests."""

    spec: SystemSpec
    case: str
    net: ReducedNetwork
    steady: SteadyState
    op: OperatingPoint
    curves: SubsystemCurves
    report: StabilityReport


def operating_point(spec: SystemSpec, case: str | None = None,
                    steady: SteadyState | None = None,
                    flat_voltage: bool | None = None) -> tuple[str, SteadyState, OperatingPoint]:
    """Resolve a named case into an OperatingPoint with solved (or flat) U."""
    name = spec.default_case() if case is None else case
    p, q = spec.case_injections(name)
    if steady is None:
        steady = solve_steady_state(spec, p, q, flat_voltage=flat_voltage)
    return name, steady, OperatingPoint(p, q, steady.u_pu)


def run_analysis(spec: SystemSpec, case: str | None = None, *,
                 flat_voltage: bool | None = None,
                 force_first_pll: bool = False,
                 grid_hz: np.ndarray | None = None) -> AnalysisResult:
    """Full criterion pipeline for one operating-point case."""
    net = build_reduced_network(spec)
    name, steady, op = operating_point(spec, case, flat_voltage=flat_voltage)
    curves = trace_curves(spec, net, op, grid_hz, force_first_pll=force_first_pll)
    report = assess(spec, net, op, curves, steady)
    return AnalysisResult(spec=spec, case=name, net=net, steady=steady,
                          op=op, curves=curves, report=report)


def run_oracle(result: AnalysisResult, *, force_first_pll: bool = False
               ) -> tuple[StateSpace, ModeSet, CrossCheck]:
    """State-space oracle for an analysis result, plus the agreement record."""
    kp, ki, _ = resolve_pll_gains(result.spec, force_first_pll=force_first_pll)
    ss = assemble_state_space(result.net, result.op, kp, ki, result.spec.omega0)
    modeset = modes(ss)
    return ss, modeset, crosscheck(result.report, modeset)
