"""Plain-text grid maps.

One character per cell: ``.`` empty, ``A`` apple, ``#`` wall, and digits
``0``-``9`` for agent spawn points (the cell under a spawn is empty).
All rows must have the same width.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import MapFormatError

CELL_EMPTY = 0
CELL_APPLE = 1
CELL_WALL = 2
# observation-only codes: a cell occupied by another agent, and an apple
# whose regrowth neighborhood holds no other apple (harvesting it kills
# the patch)
CELL_AGENT = 3
CELL_APPLE_LONE = 4

_CHAR_TO_CELL = {".": CELL_EMPTY, "A": CELL_APPLE, "#": CELL_WALL}


@dataclass(frozen=True)
class GridMap:
    """Parsed map: cell grid plus ordered spawn coordinates."""

    grid: np.ndarray  # int8, shape (rows, cols)
    spawns: tuple[tuple[int, int], ...]  # spawn index -> (row, col)

    def __post_init__(self) -> None:
        self.grid.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.shape

    @property
    def apple_count(self) -> int:
        return int((self.grid == CELL_APPLE).sum())


def parse_map(text: str, source: str = "<string>") -> GridMap:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise MapFormatError(f"{source}:1:1: map is empty")
    width = len(lines[0])
    rows = []
    spawns: dict[int, tuple[int, int]] = {}
    for r, line in enumerate(lines):
        if len(line) != width:
            raise MapFormatError(
                f"{source}:{r + 1}:{len(line) + 1}: row width {len(line)} != {width}"
            )
        row = np.empty(width, dtype=np.int8)
        for c, ch in enumerate(line):
            if ch in _CHAR_TO_CELL:
                row[c] = _CHAR_TO_CELL[ch]
            elif ch.isdigit():
                idx = int(ch)
                if idx in spawns:
                    raise MapFormatError(
                        f"{source}:{r + 1}:{c + 1}: duplicate spawn point {idx}"
                    )
                spawns[idx] = (r, c)
                row[c] = CELL_EMPTY
            else:
                raise MapFormatError(f"{source}:{r + 1}:{c + 1}: unknown cell {ch!r}")
        rows.append(row)
    indices = sorted(spawns)
    if indices != list(range(len(indices))):
        raise MapFormatError(f"{source}:1:1: spawn indices must be 0..k-1, got {indices}")
    return GridMap(np.array(rows), tuple(spawns[i] for i in indices))


def load_map(path: str | Path) -> GridMap:
    path = Path(path)
    return parse_map(path.read_text(), source=str(path))


def default_harvest_map() -> GridMap:
    text = resources.files("coopshap").joinpath("maps/harvest_default.txt").read_text()
    return parse_map(text, source="maps/harvest_default.txt")
