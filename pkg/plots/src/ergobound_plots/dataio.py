"""Readers for the ergobound file formats (grids, orbit CSVs, traces, tables)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Grid:
    box: list[tuple[float, float]]
    resolution: tuple[int, ...]
    values: np.ndarray            # flat, first-axis-fastest
    M: float
    bound: float
    certificate: str

    def as_array(self) -> np.ndarray:
        return self.values.reshape(self.resolution, order="F")

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(lo, hi, n) for (lo, hi), n in zip(self.box, self.resolution)]


def read_grid(path) -> Grid:
    """Parse the `ergobound-region-grid-v1` text format."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "ergobound-region-grid-v1":
            raise ValueError(f"{path}: unrecognized grid header {header!r}")
        meta = {}
        for _ in range(5):
            key, _, rest = fh.readline().strip().partition(" ")
            meta[key] = rest
        if fh.readline().strip() != "values":
            raise ValueError(f"{path}: missing values sentinel")
        values = np.array(fh.read().split(), dtype=float)
    nums = [float(v) for v in meta["box"].split()]
    box = [(nums[2 * i], nums[2 * i + 1]) for i in range(len(nums) // 2)]
    resolution = tuple(int(v) for v in meta["resolution"].split())
    if values.size != int(np.prod(resolution)):
        raise ValueError(f"{path}: value count does not match the resolution")
    return Grid(box=box, resolution=resolution, values=values,
                M=float(meta["M"]), bound=float(meta["bound"]),
                certificate=meta.get("certificate", ""))


def read_orbit_csv(path) -> np.ndarray:
    """Orbit trajectory CSV `t,x,y,z`; returns the (N, 3) state columns."""
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    if data.ndim != 2 or data.shape[1] < 4:
        raise ValueError(f"{path}: expected columns t,x,y,z")
    return data[:, 1:4]


@dataclass
class Trace:
    t: np.ndarray
    values: np.ndarray
    label: str


def read_trace_csv(path) -> Trace:
    """Residual trace CSV with an optional `# ergobound-trace ...` header."""
    label = str(path)
    skip = 1
    with open(path) as fh:
        first = fh.readline().strip()
    if first.startswith("#"):
        skip = 2
        fields = dict(tok.split("=", 1) for tok in first.lstrip("# ").split()
                      if "=" in tok)
        if "degree" in fields:
            label = f"degree {fields['degree']}"
        elif "symbols" in fields:
            label = fields["symbols"]
    data = np.loadtxt(path, delimiter=",", skiprows=skip)
    if data.ndim != 2 or data.shape[1] < 2:
        raise ValueError(f"{path}: expected columns t,residual")
    return Trace(t=data[:, 0], values=data[:, 1], label=label)


def read_summary_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Bound summary table; returns (degrees, bounds) for rows with a bound."""
    degrees, bounds = [], []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        try:
            i_deg = header.index("degree")
            i_bound = header.index("bound")
        except ValueError as exc:
            raise ValueError(f"{path}: not a bound summary table") from exc
        for line in fh:
            cells = line.strip().split(",")
            if len(cells) <= max(i_deg, i_bound) or not cells[i_bound]:
                continue
            degrees.append(int(cells[i_deg]))
            bounds.append(float(cells[i_bound]))
    return np.array(degrees), np.array(bounds)
