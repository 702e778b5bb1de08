"""Spring crossings, net damping, critical subsystem, verdict.

Subsystem i is assessed at every frequency where its total spring coefficient
K_con(ω) + K_neti(ω) crosses zero.  The system is stable by the criterion when
D_con(ω_ci) + D_neti(ω_ci) > 0 at every such crossing; the globally minimal
sum defines the critical subsystem, its crossing frequency ω_c1, and the
stability indicator D_net1 = D_neti(ω_c1).

Crossings are bracketed on the scan grid and refined by bisection that
re-evaluates Γ and the exact eigenvalue at each trial frequency, selecting the
eigenpair by overlap with a carried reference eigenvector (no interpolation of
eigenvalues).  Verdicts inside ``MARGINAL_BAND`` of zero are reported Marginal
instead of being coin-flipped by rounding.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemSpec
from .frequency_response import OperatingPoint, SubsystemCurves, gamma, sym_parts
from .network import ReducedNetwork
from .powerflow import SteadyState

__all__ = [
    "MARGINAL_BAND",
    "STABLE", "UNSTABLE", "MARGINAL", "NO_CROSSING",
    "Crossing", "SubsystemAssessment", "CriticalPoint", "StabilityReport",
    "find_crossings", "assess",
]

MARGINAL_BAND = 1e-3   # dimensionless damping; |margin| inside it -> Marginal

STABLE = "Stable"
UNSTABLE = "Unstable"
MARGINAL = "Marginal"
NO_CROSSING = "NoCrossing"


@dataclass(frozen=True)
class Crossing:
    """One zero of K_con + K_neti with the damping sums evaluated there."""

    subsystem: int
    omega_ci: float
    f_ci: float
    d_con: float
    d_neti: float
    k_neti: float
    net_damping: float           # d_con + d_neti
    lam: complex                 # tracked eigenvalue at the crossing
    phi: np.ndarray              # matching unit eigenvector of G'_net


@dataclass(frozen=True)
class SubsystemAssessment:
    index: int
    crossings: tuple[Crossing, ...]

    @property
    def worst(self) -> Crossing | None:
        if not self.crossings:
            return None
        return min(self.crossings, key=lambda c: c.net_damping)


@dataclass(frozen=True)
class CriticalPoint:
    subsystem: int
    omega_c1: float
    f_c1: float
    d_net1: float
    d_con_at_c1: float
    margin: float                # d_net1 + d_con_at_c1
    lam1: complex
    phi: np.ndarray


@dataclass(frozen=True)
class StabilityReport:
    verdict: str
    margin: float | None
    critical: CriticalPoint | None
    per_subsystem: tuple[SubsystemAssessment, ...]
    steady: SteadyState | None
    notes: tuple[str, ...] = ()


def _eig_by_overlap(net: ReducedNetwork, op: OperatingPoint, omega0: float,
                    omega: float, ref_vec: np.ndarray) -> tuple[complex, np.ndarray]:
    """Exact eigenpair of G'_net(jω) closest (by eigenvector overlap) to ref."""
    s_p, s_q = sym_parts(net, op)
    vals, vecs = np.linalg.eig(-s_p + 1j * (omega0 / omega) * s_q)
    scores = np.abs(ref_vec.conj() @ vecs)
    j = int(np.argmax(scores))
    return vals[j], vecs[:, j]


def _k_total(curves: SubsystemCurves, omega: float, ref_vec: np.ndarray
             ) -> tuple[float, complex, np.ndarray]:
    """K_con(ω) + Im λ(ω) with the tracked eigenpair, re-evaluated exactly."""
    lam, vec = _eig_by_overlap(curves.net, curves.op, curves.omega0, omega, ref_vec)
    g = gamma(omega, curves.u_ref, curves.kp, curves.ki, curves.omega0)
    return g.imag + lam.imag, lam, vec


def _refine(curves: SubsystemCurves, i: int, k_lo: int, root_tol_hz: float
            ) -> Crossing:
    """Bisect the sign change of subsystem i inside grid cell [k_lo, k_lo+1]."""
    f_lo, f_hi = curves.f_hz[k_lo], curves.f_hz[k_lo + 1]
    ref = curves.eigvecs[k_lo][:, i]
    g_lo = curves.k_con[k_lo] + curves.k_net[i, k_lo]

    while (f_hi - f_lo) > root_tol_hz:
        f_mid = 0.5 * (f_lo + f_hi)
        g_mid, _lam, vec = _k_total(curves, 2.0 * np.pi * f_mid, ref)
        ref = vec                      # carry the branch identity inward
        if (g_mid < 0.0) == (g_lo < 0.0):
            f_lo, g_lo = f_mid, g_mid
        else:
            f_hi = f_mid

    f_c = 0.5 * (f_lo + f_hi)
    omega_c = 2.0 * np.pi * f_c
    _g, lam, _vec = _k_total(curves, omega_c, ref)
    return _make_crossing(curves, i, omega_c, lam, _vec)


def _make_crossing(curves: SubsystemCurves, i: int, omega_c: float,
                   lam: complex, phi: np.ndarray) -> Crossing:
    g = gamma(omega_c, curves.u_ref, curves.kp, curves.ki, curves.omega0)
    return Crossing(
        subsystem=i, omega_ci=omega_c, f_ci=omega_c / (2.0 * np.pi),
        d_con=g.real, d_neti=lam.real, k_neti=lam.imag,
        net_damping=g.real + lam.real, lam=lam, phi=phi)


def find_crossings(curves: SubsystemCurves, i: int,
                   root_tol_hz: float = 1e-4) -> list[Crossing]:
    """All zeros of K_con + K_neti for subsystem i, ascending in frequency.

    Grid sign changes are refined by bisection to |Δf| ≤ ``root_tol_hz``;
    exact zeros at grid points are taken as crossings directly.
    """
    g = curves.k_con + curves.k_net[i]
    out: list[Crossing] = []
    for k in range(curves.m - 1):
        if g[k] == 0.0:
            lam = curves.d_net[i, k] + 1j * curves.k_net[i, k]
            out.append(_make_crossing(curves, i, curves.omega_rad_s[k], lam,
                                      curves.eigvecs[k][:, i]))
        elif (g[k] < 0.0) != (g[k + 1] < 0.0) and g[k + 1] != 0.0:
            out.append(_refine(curves, i, k, root_tol_hz))
    if curves.m and g[-1] == 0.0:
        k = curves.m - 1
        lam = curves.d_net[i, k] + 1j * curves.k_net[i, k]
        out.append(_make_crossing(curves, i, curves.omega_rad_s[k], lam,
                                  curves.eigvecs[k][:, i]))
    return out


def assess(spec: SystemSpec, net: ReducedNetwork, op: OperatingPoint,
           curves: SubsystemCurves, steady: SteadyState | None = None
           ) -> StabilityReport:
    """Evaluate the positive-net-damping criterion over every subsystem.

    The verdict follows the globally minimal net damping over all crossings:
    Stable above +MARGINAL_BAND, Unstable below −MARGINAL_BAND, Marginal
    inside the band.  With no crossing anywhere in the scan band the verdict
    is NoCrossing (the criterion is only defined at crossings; stability is
    *not* silently asserted).
    """
    tol = spec.options.root_tol_hz
    assessments = tuple(
        SubsystemAssessment(i, tuple(find_crossings(curves, i, tol)))
        for i in range(curves.n))

    notes = [f"branch overlap below threshold at {len(curves.branch_jumps)} "
             f"grid point(s)"] if curves.branch_jumps else []
    notes.extend(curves.warnings)

    all_crossings = [c for a in assessments for c in a.crossings]
    if not all_crossings:
        notes.append("NO_CROSSING: K_con + K_neti has no zero in the scan "
                     "band for any subsystem; criterion not applicable")
        return StabilityReport(NO_CROSSING, None, None, assessments, steady,
                               tuple(notes))

    worst = min(all_crossings, key=lambda c: c.net_damping)
    critical = CriticalPoint(
        subsystem=worst.subsystem, omega_c1=worst.omega_ci, f_c1=worst.f_ci,
        d_net1=worst.d_neti, d_con_at_c1=worst.d_con,
        margin=worst.net_damping, lam1=worst.lam, phi=worst.phi)

    if critical.margin > MARGINAL_BAND:
        verdict = STABLE
    elif critical.margin < -MARGINAL_BAND:
        verdict = UNSTABLE
    else:
        verdict = MARGINAL
    return StabilityReport(verdict, critical.margin, critical, assessments,
                           steady, tuple(notes))
