"""Deterministic text output helpers (12-significant-digit CSV, reports)."""
from __future__ import annotations

from typing import Iterable, Sequence, TextIO

__all__ = ["g12", "write_csv", "KVWriter"]


def g12(value: float | int) -> str:
    """Render a number at 12 significant digits, '.' decimal, no locale."""
    if isinstance(value, bool):  # guard: bool is an int subclass
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".12g")


def write_csv(fh: TextIO, header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    """Write rows with numbers at 12 significant digits; strings pass through."""
    fh.write(",".join(header) + "\n")
    for row in rows:
        fh.write(",".join(cell if isinstance(cell, str) else g12(cell) for cell in row) + "\n")


class KVWriter:
    """Tiny structured key-value document writer used for reports.

    Produces ``key = value`` lines grouped under ``# section`` headings —
    stable, diffable, and trivially machine-parseable.
    """

    def __init__(self) -> None:
        self._lines: list[str] = []

    def section(self, title: str) -> None:
        if self._lines:
            self._lines.append("")
        self._lines.append(f"# {title}")

    def field(self, key: str, value: object) -> None:
        if isinstance(value, (bool, int, float)):
            rendered = g12(value)
        else:
            rendered = str(value)
        self._lines.append(f"{key} = {rendered}")

    def note(self, text: str) -> None:
        self._lines.append(f"# note: {text}")

    def render(self) -> str:
        return "\n".join(self._lines) + "\n"
