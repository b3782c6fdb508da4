"""Sample-path container and its CSV serialization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SamplePath:
    """One simulated trajectory on a fixed time grid.

    ``z_values`` holds the subordinator (non-decreasing); ``x_values`` the
    subordinated process and is ``None`` for subordinator-only paths.
    ``seed_info`` records the (seed, stream_id) that produced the draw.
    """

    grid: np.ndarray
    z_values: np.ndarray
    x_values: np.ndarray | None = None
    seed_info: tuple[int, int] = (0, 0)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.z_values = np.asarray(self.z_values, dtype=float)
        if self.x_values is not None:
            self.x_values = np.asarray(self.x_values, dtype=float)
            if len(self.x_values) != len(self.grid):
                raise ValueError("grid and x_values must have equal length")
        if len(self.z_values) != len(self.grid):
            raise ValueError("grid and z_values must have equal length")
        if np.any(np.diff(self.z_values) < 0):
            raise ValueError("subordinator values must be non-decreasing")

    def to_csv(self, path) -> None:
        """Write ``t,z`` (or ``t,z,x``) rows; output is deterministic given the seed."""
        cols = [self.grid, self.z_values]
        header = "t,z"
        if self.x_values is not None:
            cols.append(self.x_values)
            header = "t,z,x"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            for row in zip(*cols):
                fh.write(",".join(format(v, ".17g") for v in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "SamplePath":
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        if header[:2] != ["t", "z"]:
            raise ValueError(f"unrecognized path CSV header: {header}")
        x = data[:, 2] if len(header) > 2 else None
        return cls(grid=data[:, 0], z_values=data[:, 1], x_values=x)


def validate_grid(grid) -> np.ndarray:
    """Check a simulation grid: strictly increasing, starting at 0."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise ValueError("grid must be a one-dimensional, non-empty time vector")
    if grid[0] != 0.0:
        raise ValueError("grid must start at t = 0")
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    return grid
