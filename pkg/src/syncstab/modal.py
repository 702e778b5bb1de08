"""Per-converter decomposition of the stability indicator.

At the critical crossing the indicator decomposes exactly into

    D_net1 = Re λ1 = −Σ η_i·P_i,      Im λ1 = (ω0/ω_c1)·Σ η_i·Q_i

with η_i = |(B^{-1/2}·φ)_i|²/U_i² ≥ 0 built from the unit eigenvector φ of
G′_net(jω_c1).  This is a Rayleigh-quotient identity (λ1 = φ*G′_netφ holds
exactly for a unit right eigenvector), so η needs no normality assumption.
The η_i act as first-order sensitivities ∂D_net1/∂P_i = −η_i, rank converters
by influence, and explain why flipping generation to consumption at dominant
converters raises the indicator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemSpec
from .errors import AnalysisError
from .frequency_response import OperatingPoint, sym_parts, trace_curves
from .network import ReducedNetwork
from .stability import StabilityReport, assess
from .textio import write_csv

__all__ = [
    "ModalWeights", "Sensitivities", "FDCheck", "AdjustmentResult",
    "modal_weights", "modal_weights_from_report", "sensitivities",
    "finite_difference_check", "adjustment_compare", "write_sensitivity_csv",
]

# tracked-vs-recomputed eigenvalue agreement demanded at the crossing
_EIG_MATCH_TOL = 1e-6


@dataclass(frozen=True)
class ModalWeights:
    """Eigenvector-derived converter weights at the critical crossing."""

    phi: np.ndarray            # unit right eigenvector of G'_net(j omega_c1)
    phi_b1: np.ndarray         # B^{-1/2} phi
    eta: np.ndarray            # |phi_b1|^2 / U^2, entrywise >= 0
    eta_complex: np.ndarray    # literal phi_b1^2 / U^2 (diagnostic only)
    omega_r1: float            # omega0 / omega_c1
    omega_c1: float
    lam1: complex


@dataclass(frozen=True)
class Sensitivities:
    dd_dp: np.ndarray          # -eta
    dd_dq: np.ndarray          # zeros (first-order partial)
    dominant: int              # argmax |eta|, ties -> lowest index


@dataclass(frozen=True)
class FDCheck:
    predicted: float
    measured: float
    rel_err: float


@dataclass(frozen=True)
class AdjustmentResult:
    d_net1_before: float
    d_net1_after: float
    omega_c1_before: float
    omega_c1_after: float
    margin_before: float
    margin_after: float
    verdict_before: str
    verdict_after: str
    positive_inertia_before: int
    positive_inertia_after: int
    per_converter_delta_p: np.ndarray
    improvement: bool          # d_net1_after > d_net1_before


def modal_weights(net: ReducedNetwork, op: OperatingPoint, omega_c1: float,
                  omega0: float, ref_vec: np.ndarray | None = None,
                  ref_lambda: complex | None = None) -> ModalWeights:
    """Weights η at the critical crossing frequency.

    ``ref_vec``/``ref_lambda`` identify the tracked critical branch (from the
    stability report); the matching eigenpair is selected by maximal
    eigenvector overlap and must agree with ``ref_lambda`` to 1e-6, else
    ``AnalysisError`` (EIGPAIR_MISMATCH).  Without a reference the eigenvalue
    with minimal real part is used.
    """
    if omega_c1 <= 0:
        raise AnalysisError("crossing frequency must be positive", code="DEGENERATE_FREQ")
    s_p, s_q = sym_parts(net, op)
    vals, vecs = np.linalg.eig(-s_p + 1j * (omega0 / omega_c1) * s_q)
    if ref_vec is not None:
        j = int(np.argmax(np.abs(np.asarray(ref_vec).conj() @ vecs)))
    else:
        j = int(np.argmin(vals.real))
    lam, phi = vals[j], vecs[:, j]
    if ref_lambda is not None and abs(lam - ref_lambda) > _EIG_MATCH_TOL * max(1.0, abs(ref_lambda)):
        raise AnalysisError(
            f"no eigenvalue within {_EIG_MATCH_TOL} of the tracked critical value "
            f"(tracked {ref_lambda:.6g}, nearest by overlap {lam:.6g})",
            code="EIGPAIR_MISMATCH")

    phi = phi / np.linalg.norm(phi)            # phi* phi = 1
    phi_b1 = net.b_inv_sqrt @ phi
    eta = np.abs(phi_b1) ** 2 / op.u_pu**2
    eta_complex = phi_b1**2 / op.u_pu**2
    return ModalWeights(phi=phi, phi_b1=phi_b1, eta=eta,
                        eta_complex=eta_complex,
                        omega_r1=omega0 / omega_c1, omega_c1=omega_c1, lam1=lam)


def modal_weights_from_report(net: ReducedNetwork, op: OperatingPoint,
                              report: StabilityReport, omega0: float) -> ModalWeights:
    """Convenience wrapper binding the report's critical crossing."""
    if report.critical is None:
        raise AnalysisError("report has no critical crossing (NoCrossing verdict)",
                            code="NO_CROSSING")
    c = report.critical
    return modal_weights(net, op, c.omega_c1, omega0, ref_vec=c.phi,
                         ref_lambda=c.lam1)


def sensitivities(weights: ModalWeights) -> Sensitivities:
    """First-order sensitivities of D_net1 and the dominant converter.

    ∂D_net1/∂P_i = −η_i ≤ 0 by construction; the partial with respect to Q_i
    is zero (reactive power moves the crossing frequency, a second-order
    route quantified by :func:`finite_difference_check`, not by this table).
    """
    eta = weights.eta
    return Sensitivities(dd_dp=-eta, dd_dq=np.zeros_like(eta),
                         dominant=int(np.argmax(eta)))


def _d_net1(spec: SystemSpec, net: ReducedNetwork, op: OperatingPoint,
            grid_hz: np.ndarray | None) -> tuple[float, StabilityReport]:
    curves = trace_curves(spec, net, op, grid_hz)
    report = assess(spec, net, op, curves)
    if report.critical is None:
        raise AnalysisError("no crossing found while evaluating the indicator",
                            code="NO_CROSSING")
    return report.critical.d_net1, report


def finite_difference_check(spec: SystemSpec, net: ReducedNetwork,
                            op: OperatingPoint, i: int, delta_p: float = 1e-4,
                            grid_hz: np.ndarray | None = None) -> FDCheck:
    """Compare −η_i against a finite difference of the full pipeline.

    Voltages are frozen: the perturbed operating point reuses ``op.u_pu``.
    The crossing is re-solved on the perturbed point, so the measured value
    is a total-derivative estimate; the predicted value is the first-order
    partial −η_i.
    """
    base, report = _d_net1(spec, net, op, grid_hz)
    weights = modal_weights_from_report(net, op, report, spec.omega0)
    predicted = -float(weights.eta[i])

    p2 = op.p_pu.copy()
    p2[i] += delta_p
    op2 = OperatingPoint(p2, op.q_pu.copy(), op.u_pu.copy())
    bumped, _ = _d_net1(spec, net, op2, grid_hz)
    measured = (bumped - base) / delta_p
    rel_err = abs(measured - predicted) / max(abs(predicted), 1e-300)
    return FDCheck(predicted=predicted, measured=measured, rel_err=rel_err)


def adjustment_compare(spec: SystemSpec, net: ReducedNetwork,
                       op_before: OperatingPoint, op_after: OperatingPoint,
                       grid_hz: np.ndarray | None = None) -> AdjustmentResult:
    """Full before/after pipeline comparison for an active-power adjustment.

    ``op_after`` may differ from ``op_before`` only in P (Q must be unchanged;
    raises ``AnalysisError`` ADJUST_Q_CHANGED otherwise).  Voltages are frozen
    to the before-point amplitudes, honoring the small-perturbation voltage
    assumption.  Each point is assessed at its own critical frequency.
    """
    if not np.allclose(op_before.q_pu, op_after.q_pu, rtol=0, atol=1e-12):
        raise AnalysisError("adjustment may only change active power",
                            code="ADJUST_Q_CHANGED")
    frozen_after = OperatingPoint(op_after.p_pu, op_before.q_pu, op_before.u_pu)

    curves_b = trace_curves(spec, net, op_before, grid_hz)
    report_b = assess(spec, net, op_before, curves_b)
    curves_a = trace_curves(spec, net, frozen_after, grid_hz)
    report_a = assess(spec, net, frozen_after, curves_a)
    if report_b.critical is None or report_a.critical is None:
        raise AnalysisError("no crossing on one side of the adjustment",
                            code="NO_CROSSING")

    cb, ca = report_b.critical, report_a.critical
    return AdjustmentResult(
        d_net1_before=cb.d_net1, d_net1_after=ca.d_net1,
        omega_c1_before=cb.omega_c1, omega_c1_after=ca.omega_c1,
        margin_before=cb.margin, margin_after=ca.margin,
        verdict_before=report_b.verdict, verdict_after=report_a.verdict,
        positive_inertia_before=int(np.sum(op_before.p_pu > 0)),
        positive_inertia_after=int(np.sum(frozen_after.p_pu > 0)),
        per_converter_delta_p=frozen_after.p_pu - op_before.p_pu,
        improvement=bool(ca.d_net1 > cb.d_net1))


def write_sensitivity_csv(weights: ModalWeights, sens: Sensitivities,
                          names: tuple[str, ...], fh, *,
                          eta_complex: bool = False) -> None:
    """Emit ``converter,eta,dD_dP,dD_dQ,dominant_flag`` rows (12 sig digits).

    With ``eta_complex`` two diagnostic columns carry the literal
    complex-square weights.
    """
    header = ["converter", "eta", "dD_dP", "dD_dQ", "dominant_flag"]
    if eta_complex:
        header += ["eta_c_re", "eta_c_im"]

    def rows():
        for i, name in enumerate(names):
            row: list[object] = [name, weights.eta[i], sens.dd_dp[i],
                                 sens.dd_dq[i], 1 if i == sens.dominant else 0]
            if eta_complex:
                row += [weights.eta_complex[i].real, weights.eta_complex[i].imag]
            yield row

    write_csv(fh, header, rows())
