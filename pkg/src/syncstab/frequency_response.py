"""Frequency responses: converter-side Γ(jω) and network-side G_net(jω).

The converter side collapses (for identical PLL gains) to one complex scalar

    Γ(jω) = ω0 · (jω/G_pll(jω) + U) / (jω·U),     G_pll(jω) = k_p + k_i/(jω)

whose real/imaginary parts are the converter-side damping and spring
coefficients.  The network side is the complex matrix

    G_net(jω) = −B^{-1}·P̃ + j·(ω0/ω)·B^{-1}·Q̃

with P̃ = diag{P_i/U_i²}, Q̃ = diag{Q_i/U_i²}.  Its similar symmetric form
G′_net = −B^{-1/2}·P̃·B^{-1/2} + j·(ω0/ω)·B^{-1/2}·Q̃·B^{-1/2} shares the
eigenvalues and yields the eigenvectors used downstream for modal weights.

:func:`trace_curves` eigendecomposes G′_net over a frequency grid and matches
eigenvalue branches between consecutive points by greedy maximal eigenvector
overlap, so each branch i is a continuous function of ω (subsystem i).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import SystemSpec
from .errors import AnalysisError
from .network import ReducedNetwork
from .textio import write_csv

__all__ = [
    "OperatingPoint",
    "SubsystemCurves",
    "gamma",
    "build_gnet",
    "build_gnet_sym",
    "sym_parts",
    "resolve_pll_gains",
    "trace_curves",
    "per_converter_gamma",
    "write_curves_csv",
]

# tracked-branch continuity alarm: consecutive eigenvector overlap below this
# raises a BRANCH_JUMP flag on the curve set
OVERLAP_THRESHOLD = 0.7


@dataclass(frozen=True)
class OperatingPoint:
    """Converter injections plus the steady-state voltage amplitudes."""

    p_pu: np.ndarray
    q_pu: np.ndarray
    u_pu: np.ndarray

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.p_pu, dtype=float))
        q = np.atleast_1d(np.asarray(self.q_pu, dtype=float))
        u = np.atleast_1d(np.asarray(self.u_pu, dtype=float))
        if not (p.shape == q.shape == u.shape) or p.ndim != 1:
            raise ValueError("p_pu, q_pu, u_pu must be equal-length vectors")
        if np.any(u <= 0):
            raise ValueError("voltage amplitudes must be positive")
        object.__setattr__(self, "p_pu", p)
        object.__setattr__(self, "q_pu", q)
        object.__setattr__(self, "u_pu", u)

    @property
    def n(self) -> int:
        return len(self.p_pu)

    @property
    def p_tilde(self) -> np.ndarray:
        """P_i/U_i² (diagonal entries)."""
        return self.p_pu / self.u_pu**2

    @property
    def q_tilde(self) -> np.ndarray:
        """Q_i/U_i² (diagonal entries)."""
        return self.q_pu / self.u_pu**2


def gamma(omega, u: float, kp: float, ki: float, omega0: float):
    """Converter-side frequency function Γ(jω); vectorized over ``omega``.

    Raises ``AnalysisError`` (code DEGENERATE_FREQ) for any ω ≤ 0.
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0):
        raise AnalysisError("gamma undefined for omega <= 0", code="DEGENERATE_FREQ")
    jw = 1j * w
    g_pll = kp + ki / jw
    value = omega0 * (jw / g_pll + u) / (jw * u)
    return complex(value) if np.isscalar(omega) else value


def sym_parts(net: ReducedNetwork, op: OperatingPoint) -> tuple[np.ndarray, np.ndarray]:
    """Frequency-independent pieces of G′_net: (S_P, S_Q), both real symmetric.

    G′_net(jω) = −S_P + j·(ω0/ω)·S_Q with S_X = B^{-1/2}·diag(X̃)·B^{-1/2}.
    """
    r = net.b_inv_sqrt
    s_p = r @ np.diag(op.p_tilde) @ r
    s_q = r @ np.diag(op.q_tilde) @ r
    return 0.5 * (s_p + s_p.T), 0.5 * (s_q + s_q.T)


def build_gnet(omega: float, net: ReducedNetwork, op: OperatingPoint,
               omega0: float) -> np.ndarray:
    """Network-side matrix −B^{-1}·P̃ + j·(ω0/ω)·B^{-1}·Q̃ at one frequency."""
    if omega <= 0:
        raise AnalysisError("G_net undefined for omega <= 0", code="DEGENERATE_FREQ")
    b_inv_p = np.linalg.solve(net.b_matrix, np.diag(op.p_tilde))
    b_inv_q = np.linalg.solve(net.b_matrix, np.diag(op.q_tilde))
    return -b_inv_p + 1j * (omega0 / omega) * b_inv_q


def build_gnet_sym(omega: float, net: ReducedNetwork, op: OperatingPoint,
                   omega0: float) -> np.ndarray:
    """Symmetric similar form of :func:`build_gnet` (same eigenvalues)."""
    if omega <= 0:
        raise AnalysisError("G_net undefined for omega <= 0", code="DEGENERATE_FREQ")
    s_p, s_q = sym_parts(net, op)
    return -s_p + 1j * (omega0 / omega) * s_q


def resolve_pll_gains(spec: SystemSpec, *, force_first_pll: bool = False
                      ) -> tuple[float, float, list[str]]:
    """Shared (kp, ki) for the aggregate analysis; enforces identical gains.

    The decoupled-subsystem construction requires every converter to run the
    same PLL.  Differing gains raise ``AnalysisError`` (NONIDENTICAL_PLL)
    unless ``force_first_pll`` is set, in which case converter 1's gains are
    used and a warning string is returned.
    """
    first = spec.converters[0]
    warnings: list[str] = []
    identical = all(
        abs(c.pll_kp - first.pll_kp) <= 1e-9 * abs(first.pll_kp)
        and abs(c.pll_ki - first.pll_ki) <= 1e-9 * abs(first.pll_ki)
        for c in spec.converters)
    if not identical:
        if not force_first_pll:
            raise AnalysisError(
                "converters declare different PLL gains; the aggregate "
                "analysis assumes one shared PLL (pass --force-first-pll to "
                "use converter 1's gains)", code="NONIDENTICAL_PLL")
        warnings.append(
            f"non-identical PLL gains; forced to converter {first.name!r}: "
            f"kp={first.pll_kp}, ki={first.pll_ki}")
    return first.pll_kp, first.pll_ki, warnings


@dataclass
class SubsystemCurves:
    """Damping/spring curves for every tracked subsystem over a grid.

    ``d_net[i, k] + 1j*k_net[i, k]`` is tracked eigenvalue branch i at grid
    point k; ``eigvecs[k][:, i]`` the matching unit eigenvector of G′_net.
    """

    f_hz: np.ndarray              # (m,)
    omega_rad_s: np.ndarray       # (m,)
    d_con: np.ndarray             # (m,)
    k_con: np.ndarray             # (m,)
    d_net: np.ndarray             # (n, m)
    k_net: np.ndarray             # (n, m)
    eigvecs: np.ndarray           # (m, n, n) complex
    branch_jumps: list[tuple[int, int]]   # (grid index, branch index)
    u_ref: float
    kp: float
    ki: float
    omega0: float
    net: ReducedNetwork
    op: OperatingPoint
    warnings: list[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.d_net.shape[0]

    @property
    def m(self) -> int:
        return len(self.f_hz)


def _match_branches(prev_vecs: np.ndarray, vals: np.ndarray, vecs: np.ndarray
                    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Greedy assignment of new eigenpairs to previous branches.

    Candidates ranked by descending overlap |<prev_i, new_j>|, ties broken by
    ascending (Re λ_j, Im λ_j, i).  Returns (values, vectors, overlaps) in
    branch order.
    """
    n = len(vals)
    overlap = np.abs(prev_vecs.conj().T @ vecs)   # (branch i, candidate j)
    order = sorted(
        ((i, j) for i in range(n) for j in range(n)),
        key=lambda ij: (-overlap[ij], vals[ij[1]].real, vals[ij[1]].imag, ij[0]))
    taken_i = np.zeros(n, dtype=bool)
    taken_j = np.zeros(n, dtype=bool)
    assign = np.empty(n, dtype=int)
    matched = 0
    for i, j in order:
        if taken_i[i] or taken_j[j]:
            continue
        assign[i] = j
        taken_i[i] = True
        taken_j[j] = True
        matched += 1
        if matched == n:
            break
    return vals[assign], vecs[:, assign], overlap[np.arange(n), assign]


def trace_curves(spec: SystemSpec, net: ReducedNetwork, op: OperatingPoint,
                 grid_hz: np.ndarray | None = None, *,
                 force_first_pll: bool = False) -> SubsystemCurves:
    """Eigendecompose G′_net over a frequency grid with branch tracking.

    ``grid_hz`` defaults to the spec's scan options.  The initial branch
    order (lowest frequency) is ascending (Re λ, Im λ); subsequent points are
    matched by maximal eigenvector overlap.  Overlap below
    ``OVERLAP_THRESHOLD`` records a (grid index, branch) entry in
    ``branch_jumps`` — a warning, not an error.
    """
    if grid_hz is None:
        opt = spec.options
        grid_hz = np.linspace(opt.scan_fmin_hz, opt.scan_fmax_hz, opt.scan_points)
    grid_hz = np.asarray(grid_hz, dtype=float)
    if grid_hz.ndim != 1 or len(grid_hz) < 2:
        raise AnalysisError("frequency grid needs at least 2 points", code="GRID_INVALID")
    if np.any(grid_hz <= 0) or np.any(np.diff(grid_hz) <= 0):
        raise AnalysisError("frequency grid must be positive and ascending",
                            code="GRID_INVALID")

    kp, ki, warnings = resolve_pll_gains(spec, force_first_pll=force_first_pll)
    omega0 = spec.omega0
    omega_grid = 2.0 * np.pi * grid_hz
    u_ref = float(np.mean(op.u_pu))

    gamma_vals = gamma(omega_grid, u_ref, kp, ki, omega0)

    n, m = op.n, len(grid_hz)
    s_p, s_q = sym_parts(net, op)
    lam = np.empty((n, m), dtype=complex)
    vec_store = np.empty((m, n, n), dtype=complex)
    jumps: list[tuple[int, int]] = []

    prev_vecs: np.ndarray | None = None
    for k, w in enumerate(omega_grid):
        vals, vecs = np.linalg.eig(-s_p + 1j * (omega0 / w) * s_q)
        if prev_vecs is None:
            order = np.lexsort((vals.imag, vals.real))
            vals, vecs = vals[order], vecs[:, order]
            overlaps = np.ones(n)
        else:
            vals, vecs, overlaps = _match_branches(prev_vecs, vals, vecs)
        lam[:, k] = vals
        vec_store[k] = vecs
        for i in np.nonzero(overlaps < OVERLAP_THRESHOLD)[0]:
            jumps.append((k, int(i)))
        prev_vecs = vecs

    return SubsystemCurves(
        f_hz=grid_hz, omega_rad_s=omega_grid,
        d_con=gamma_vals.real, k_con=gamma_vals.imag,
        d_net=lam.real, k_net=lam.imag,
        eigvecs=vec_store, branch_jumps=jumps,
        u_ref=u_ref, kp=kp, ki=ki, omega0=omega0,
        net=net, op=op, warnings=warnings)


def per_converter_gamma(spec: SystemSpec, op: OperatingPoint,
                        grid_hz: np.ndarray) -> np.ndarray:
    """Diagnostic Γ_i(jω) per converter with its own U_i and own gains.

    Returns an (n, m) complex array; the aggregate analysis never consumes
    this (it assumes identical PLLs and a common U).
    """
    omega_grid = 2.0 * np.pi * np.asarray(grid_hz, dtype=float)
    out = np.empty((op.n, len(omega_grid)), dtype=complex)
    for i, conv in enumerate(spec.converters):
        out[i] = gamma(omega_grid, float(op.u_pu[i]), conv.pll_kp, conv.pll_ki,
                       spec.omega0)
    return out


def write_curves_csv(curves: SubsystemCurves, fh, *,
                     per_converter: np.ndarray | None = None,
                     names: tuple[str, ...] = ()) -> None:
    """Emit the curve set as CSV (12 significant digits).

    Columns: ``f_hz,D_con,K_con,D_net_1..D_net_n,K_net_1..K_net_n`` plus, when
    ``per_converter`` diagnostics are passed, ``D_con_<name>,K_con_<name>``
    pairs.
    """
    n = curves.n
    header = ["f_hz", "D_con", "K_con"]
    header += [f"D_net_{i + 1}" for i in range(n)]
    header += [f"K_net_{i + 1}" for i in range(n)]
    if per_converter is not None:
        for name in names:
            header += [f"D_con_{name}", f"K_con_{name}"]

    def rows():
        for k in range(curves.m):
            row = [curves.f_hz[k], curves.d_con[k], curves.k_con[k]]
            row += list(curves.d_net[:, k])
            row += list(curves.k_net[:, k])
            if per_converter is not None:
                for i in range(per_converter.shape[0]):
                    row += [per_converter[i, k].real, per_converter[i, k].imag]
            yield row

    write_csv(fh, header, rows())
