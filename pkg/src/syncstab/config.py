"""System description: dataclasses, text format, validation.

A study case is described in a small INI-like text format.  Sections appear in
any order; ``#`` starts a comment anywhere on a line; blank lines are ignored.

::

    [system]
    rated_frequency_hz = 50

    [nodes]
    pcc grid

    [branches]            # from  to  inductance_pu  (one row per branch)
    pcc grid 0.30

    [slack]
    grid

    [converters]          # name  node  pll_kp  pll_ki
    c1 pcc 6.5 15782

    [operating_point base]    # converter  p_pu  q_pu
    c1 0.5 0.0

    [options]
    flat_voltage = false
    scan_fmin_hz = 0.5

``[system]``, ``[nodes]``, ``[branches]``, ``[slack]`` and ``[converters]``
are required.  ``[operating_point NAME]`` may repeat with distinct names; if
none is given a single all-zero case called ``default`` is assumed, and
converters omitted from a block default to p = q = 0.  ``[options]`` keys all
have defaults (see :class:`AnalysisOptions`).

Parsing raises :class:`~syncstab.errors.ConfigSyntaxError` with a line number
for malformed text, and :class:`~syncstab.errors.SpecValidationError` carrying
coded :class:`~syncstab.errors.Violation` entries for a well-formed but
semantically broken system (unknown nodes, non-positive inductance,
disconnected graph, ...).  :func:`validate` can also be called directly on a
programmatically built :class:`SystemSpec`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .errors import ConfigSyntaxError, SpecValidationError, SyncstabError, Violation

__all__ = [
    "Branch",
    "Converter",
    "PowerSetpoint",
    "AnalysisOptions",
    "SystemSpec",
    "parse_system_spec",
    "load_system_spec",
    "validate",
    "serialize",
]


# --------------------------------------------------------------------------
# data model
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Branch:
    """One inductive tie between two nodes, value in per unit."""

    from_node: str
    to_node: str
    inductance_pu: float


@dataclass(frozen=True)
class Converter:
    """A grid-following converter: attachment node and PLL PI gains."""

    name: str
    node: str
    pll_kp: float      # proportional gain, rad/s per pu voltage
    pll_ki: float      # integral gain, rad/s^2 per pu voltage


@dataclass(frozen=True)
class PowerSetpoint:
    """Complex-power injection of one converter (positive = into the grid)."""

    p_pu: float
    q_pu: float


@dataclass(frozen=True)
class AnalysisOptions:
    """Tunables with safe defaults; all overridable from ``[options]``."""

    flat_voltage: bool = False      # skip the power flow, take U = 1, delta = 0
    scan_fmin_hz: float = 0.5
    scan_fmax_hz: float = 60.0
    scan_points: int = 1200
    root_tol_hz: float = 1e-4       # bisection width for crossing refinement
    sim_dt_s: float = 1e-4
    sim_duration_s: float = 3.0


@dataclass(frozen=True)
class SystemSpec:
    """Validated description of one multi-converter system.

    ``operating_points`` maps case name to a complete per-converter setpoint
    map (parsing normalizes omitted converters to zero injection, so every
    case covers every converter).
    """

    rated_frequency_hz: float
    nodes: tuple[str, ...]
    branches: tuple[Branch, ...]
    slack_node: str
    converters: tuple[Converter, ...]
    operating_points: dict[str, dict[str, PowerSetpoint]] = field(default_factory=dict)
    options: AnalysisOptions = AnalysisOptions()

    # -- convenience views ------------------------------------------------

    @property
    def omega0(self) -> float:
        """Rated angular frequency in rad/s."""
        return 2.0 * math.pi * self.rated_frequency_hz

    @property
    def n_converters(self) -> int:
        return len(self.converters)

    @property
    def converter_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.converters)

    @property
    def case_names(self) -> tuple[str, ...]:
        return tuple(self.operating_points)

    def default_case(self) -> str:
        """First declared case name (declaration order is preserved)."""
        if not self.operating_points:
            raise KeyError("system has no operating-point cases")
        return next(iter(self.operating_points))

    def case_injections(self, case: str | None = None) -> tuple[np.ndarray, np.ndarray]:
        """(P, Q) arrays in converter order for ``case`` (default: first)."""
        name = self.default_case() if case is None else case
        try:
            block = self.operating_points[name]
        except KeyError:
            known = ", ".join(self.operating_points) or "<none>"
            raise SyncstabError(f"unknown operating point {name!r} (have: {known})",
                                code="UNKNOWN_CASE") from None
        p = np.array([block[c.name].p_pu for c in self.converters], dtype=float)
        q = np.array([block[c.name].q_pu for c in self.converters], dtype=float)
        return p, q

    def with_case(self, name: str, setpoints: dict[str, PowerSetpoint]) -> "SystemSpec":
        """Copy of this spec with one case added/replaced (normalized)."""
        block = {c.name: setpoints.get(c.name, PowerSetpoint(0.0, 0.0)) for c in self.converters}
        cases = dict(self.operating_points)
        cases[name] = block
        return replace(self, operating_points=cases)


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------

_KNOWN_SECTIONS = {"system", "nodes", "branches", "slack", "converters", "operating_point", "options"}
_SINGLETON_SECTIONS = {"system", "nodes", "branches", "slack", "converters", "options"}

_OPTION_KEYS = {
    "flat_voltage": bool,
    "scan_fmin_hz": float,
    "scan_fmax_hz": float,
    "scan_points": int,
    "root_tol_hz": float,
    "sim_dt_s": float,
    "sim_duration_s": float,
}


def _strip_comment(line: str) -> str:
    cut = line.find("#")
    return line if cut < 0 else line[:cut]


def _parse_float(token: str, what: str, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ConfigSyntaxError(f"{what}: {token!r} is not a number", line=lineno) from None
    if not math.isfinite(value):
        raise ConfigSyntaxError(f"{what}: {token!r} is not finite", line=lineno)
    return value


def _parse_bool(token: str, what: str, lineno: int) -> bool:
    low = token.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigSyntaxError(f"{what}: {token!r} is not a boolean", line=lineno)


def parse_system_spec(text: str) -> SystemSpec:
    """Parse config text into a validated :class:`SystemSpec`.

    Raises
    ------
    ConfigSyntaxError
        On malformed text; the message carries the 1-based line number.
    SpecValidationError
        When the text parses but describes an inconsistent system.
    """
    # sections[name] -> list of (lineno, tokens); operating points keyed separately
    sections: dict[str, list[tuple[int, list[str]]]] = {}
    op_blocks: dict[str, list[tuple[int, list[str]]]] = {}
    current: list[tuple[int, list[str]]] | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigSyntaxError("unterminated section header", line=lineno)
            header = line[1:-1].split()
            if not header:
                raise ConfigSyntaxError("empty section header", line=lineno)
            name = header[0]
            if name not in _KNOWN_SECTIONS:
                raise ConfigSyntaxError(f"unknown section [{name}]", line=lineno)
            if name == "operating_point":
                if len(header) != 2:
                    raise ConfigSyntaxError(
                        "[operating_point] needs exactly one case name", line=lineno)
                case = header[1]
                if case in op_blocks:
                    raise ConfigSyntaxError(
                        f"duplicate operating point {case!r}", line=lineno)
                current = op_blocks.setdefault(case, [])
            else:
                if len(header) != 1:
                    raise ConfigSyntaxError(f"section [{name}] takes no argument", line=lineno)
                if name in sections:
                    raise ConfigSyntaxError(f"duplicate section [{name}]", line=lineno)
                current = sections.setdefault(name, [])
            continue
        if current is None:
            raise ConfigSyntaxError("content before any section header", line=lineno)
        current.append((lineno, line.split()))

    for required in ("system", "nodes", "branches", "slack", "converters"):
        if required not in sections:
            raise ConfigSyntaxError(f"missing required section [{required}]")

    # -- [system] ---------------------------------------------------------
    rated = None
    for lineno, tokens in sections["system"]:
        joined = " ".join(tokens)
        if "=" not in joined:
            raise ConfigSyntaxError("expected key = value", line=lineno)
        key, _, value = (part.strip() for part in joined.partition("="))
        if key != "rated_frequency_hz":
            raise ConfigSyntaxError(f"unknown [system] key {key!r}", line=lineno)
        rated = _parse_float(value, "rated_frequency_hz", lineno)
    if rated is None:
        raise ConfigSyntaxError("[system] must set rated_frequency_hz")

    # -- [nodes] ----------------------------------------------------------
    nodes: list[str] = []
    for _lineno, tokens in sections["nodes"]:
        nodes.extend(tokens)

    # -- [branches] -------------------------------------------------------
    branches: list[Branch] = []
    for lineno, tokens in sections["branches"]:
        if len(tokens) != 3:
            raise ConfigSyntaxError(
                "branch row must be: from_node to_node inductance_pu", line=lineno)
        branches.append(Branch(tokens[0], tokens[1],
                               _parse_float(tokens[2], "inductance_pu", lineno)))

    # -- [slack] ----------------------------------------------------------
    slack_rows = sections["slack"]
    if len(slack_rows) != 1 or len(slack_rows[0][1]) != 1:
        lineno = slack_rows[0][0] if slack_rows else None
        raise ConfigSyntaxError("[slack] must contain exactly one node name", line=lineno)
    slack = slack_rows[0][1][0]

    # -- [converters] -----------------------------------------------------
    converters: list[Converter] = []
    for lineno, tokens in sections["converters"]:
        if len(tokens) != 4:
            raise ConfigSyntaxError(
                "converter row must be: name node pll_kp pll_ki", line=lineno)
        converters.append(Converter(
            tokens[0], tokens[1],
            _parse_float(tokens[2], "pll_kp", lineno),
            _parse_float(tokens[3], "pll_ki", lineno)))

    # -- [operating_point ...] ---------------------------------------------
    operating_points: dict[str, dict[str, PowerSetpoint]] = {}
    declared = {c.name for c in converters}
    pending: list[Violation] = []
    for case, rows in op_blocks.items():
        block: dict[str, PowerSetpoint] = {}
        for lineno, tokens in rows:
            if len(tokens) != 3:
                raise ConfigSyntaxError(
                    "operating point row must be: converter p_pu q_pu", line=lineno)
            name = tokens[0]
            if name not in declared:
                pending.append(Violation(
                    "OP_UNKNOWN_CONVERTER",
                    f"case {case!r} sets power for undeclared converter {name!r}"))
                continue
            block[name] = PowerSetpoint(
                _parse_float(tokens[1], "p_pu", lineno),
                _parse_float(tokens[2], "q_pu", lineno))
        # normalize: every converter present
        operating_points[case] = {
            c.name: block.get(c.name, PowerSetpoint(0.0, 0.0)) for c in converters}
    if not operating_points:
        operating_points["default"] = {
            c.name: PowerSetpoint(0.0, 0.0) for c in converters}

    # -- [options] ----------------------------------------------------------
    overrides: dict[str, object] = {}
    for lineno, tokens in sections.get("options", []):
        joined = " ".join(tokens)
        if "=" not in joined:
            raise ConfigSyntaxError("expected key = value", line=lineno)
        key, _, value = (part.strip() for part in joined.partition("="))
        if key not in _OPTION_KEYS:
            raise ConfigSyntaxError(f"unknown [options] key {key!r}", line=lineno)
        kind = _OPTION_KEYS[key]
        if kind is bool:
            overrides[key] = _parse_bool(value, key, lineno)
        elif kind is int:
            number = _parse_float(value, key, lineno)
            if number != int(number):
                raise ConfigSyntaxError(f"{key}: {value!r} is not an integer", line=lineno)
            overrides[key] = int(number)
        else:
            overrides[key] = _parse_float(value, key, lineno)

    spec = SystemSpec(
        rated_frequency_hz=rated,
        nodes=tuple(nodes),
        branches=tuple(branches),
        slack_node=slack,
        converters=tuple(converters),
        operating_points=operating_points,
        options=AnalysisOptions(**overrides),
    )
    violations = pending + validate(spec)
    if violations:
        raise SpecValidationError(violations)
    return spec


def load_system_spec(path: str) -> SystemSpec:
    """Read and parse a config file."""
    with open(path, "r", encoding="utf-8") as handle:
        return parse_system_spec(handle.read())


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------

def _connected_components(nodes: Iterable[str], branches: Iterable[Branch]) -> list[set[str]]:
    adjacency: dict[str, set[str]] = {n: set() for n in nodes}
    for b in branches:
        if b.from_node in adjacency and b.to_node in adjacency:
            adjacency[b.from_node].add(b.to_node)
            adjacency[b.to_node].add(b.from_node)
    seen: set[str] = set()
    components: list[set[str]] = []
    for start in adjacency:
        if start in seen:
            continue
        stack, comp = [start], set()
        while stack:
            node = stack.pop()
            if node in comp:
                continue
            comp.add(node)
            stack.extend(adjacency[node] - comp)
        seen |= comp
        components.append(comp)
    return components


def validate(spec: SystemSpec) -> list[Violation]:
    """Collect every semantic problem with ``spec`` (empty list = valid)."""
    out: list[Violation] = []
    node_set = set(spec.nodes)

    if len(node_set) != len(spec.nodes):
        dupes = sorted({n for n in spec.nodes if spec.nodes.count(n) > 1})
        out.append(Violation("NODE_DUPLICATE", f"node(s) declared twice: {', '.join(dupes)}"))

    if spec.rated_frequency_hz <= 0:
        out.append(Violation("RATED_FREQ_NONPOSITIVE",
                             f"rated_frequency_hz must be > 0, got {spec.rated_frequency_hz}"))

    for b in spec.branches:
        if b.from_node not in node_set or b.to_node not in node_set:
            out.append(Violation("BRANCH_UNKNOWN_NODE",
                                 f"branch {b.from_node}-{b.to_node} references an undeclared node"))
        if b.from_node == b.to_node:
            out.append(Violation("BRANCH_SELF_LOOP",
                                 f"branch {b.from_node}-{b.to_node} is a self loop"))
        if not (b.inductance_pu > 0):
            out.append(Violation("BRANCH_NONPOSITIVE_L",
                                 f"branch {b.from_node}-{b.to_node} has inductance "
                                 f"{b.inductance_pu} (must be > 0)"))

    if spec.slack_node not in node_set:
        out.append(Violation("SLACK_UNKNOWN", f"slack node {spec.slack_node!r} is not declared"))

    names = [c.name for c in spec.converters]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        out.append(Violation("CONVERTER_NAME_DUPLICATE",
                             f"converter name(s) used twice: {', '.join(dupes)}"))
    if not spec.converters:
        out.append(Violation("NO_CONVERTERS", "at least one converter is required"))

    used_nodes: dict[str, str] = {}
    for c in spec.converters:
        if c.node not in node_set:
            out.append(Violation("CONVERTER_UNKNOWN_NODE",
                                 f"converter {c.name!r} sits on undeclared node {c.node!r}"))
            continue
        if c.node == spec.slack_node:
            out.append(Violation("CONVERTER_ON_SLACK",
                                 f"converter {c.name!r} may not sit on the slack node"))
        if c.node in used_nodes:
            out.append(Violation("CONVERTER_NODE_SHARED",
                                 f"converters {used_nodes[c.node]!r} and {c.name!r} share "
                                 f"node {c.node!r}"))
        used_nodes.setdefault(c.node, c.name)
        if not (c.pll_kp > 0) or not (c.pll_ki > 0):
            out.append(Violation("PLL_GAIN_NONPOSITIVE",
                                 f"converter {c.name!r} has non-positive PLL gain(s) "
                                 f"kp={c.pll_kp}, ki={c.pll_ki}"))

    # connectivity: every declared node must reach the slack through branches
    if spec.slack_node in node_set and node_set:
        positive = [b for b in spec.branches
                    if b.from_node in node_set and b.to_node in node_set]
        components = _connected_components(node_set, positive)
        slack_comp = next((c for c in components if spec.slack_node in c), set())
        stranded = sorted(node_set - slack_comp)
        if stranded:
            out.append(Violation("GRAPH_DISCONNECTED",
                                 f"node(s) not connected to the slack: {', '.join(stranded)}"))

    opt = spec.options
    if not (0 < opt.scan_fmin_hz < opt.scan_fmax_hz):
        out.append(Violation("SCAN_RANGE_INVALID",
                             f"need 0 < scan_fmin_hz < scan_fmax_hz, got "
                             f"[{opt.scan_fmin_hz}, {opt.scan_fmax_hz}]"))
    if opt.scan_points < 2:
        out.append(Violation("SCAN_POINTS_INVALID",
                             f"scan_points must be >= 2, got {opt.scan_points}"))
    if not (opt.root_tol_hz > 0):
        out.append(Violation("ROOT_TOL_INVALID",
                             f"root_tol_hz must be > 0, got {opt.root_tol_hz}"))
    if not (opt.sim_dt_s > 0) or not (opt.sim_duration_s > opt.sim_dt_s):
        out.append(Violation("SIM_PARAMS_INVALID",
                             f"need 0 < sim_dt_s < sim_duration_s, got "
                             f"dt={opt.sim_dt_s}, duration={opt.sim_duration_s}"))

    return out


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

def serialize(spec: SystemSpec) -> str:
    """Render ``spec`` back to config text; round-trips through the parser."""
    out: list[str] = ["[system]", f"rated_frequency_hz = {spec.rated_frequency_hz!r}", ""]

    out.append("[nodes]")
    out.append(" ".join(spec.nodes))
    out.append("")

    out.append("[branches]")
    for b in spec.branches:
        out.append(f"{b.from_node} {b.to_node} {b.inductance_pu!r}")
    out.append("")

    out.append("[slack]")
    out.append(spec.slack_node)
    out.append("")

    out.append("[converters]")
    for c in spec.converters:
        out.append(f"{c.name} {c.node} {c.pll_kp!r} {c.pll_ki!r}")
    out.append("")

    for case, block in spec.operating_points.items():
        out.append(f"[operating_point {case}]")
        for c in spec.converters:
            sp = block[c.name]
            out.append(f"{c.name} {sp.p_pu!r} {sp.q_pu!r}")
        out.append("")

    opt, defaults = spec.options, AnalysisOptions()
    lines = []
    for key in _OPTION_KEYS:
        value = getattr(opt, key)
        if value != getattr(defaults, key):
            rendered = "true" if value is True else "false" if value is False else repr(value)
            lines.append(f"{key} = {rendered}")
    if lines:
        out.append("[options]")
        out.extend(lines)
        out.append("")

    return "\n".join(out)
