"""Synthetic fixture files in the documented ergobound output formats."""

from __future__ import annotations

import numpy as np
import pytest


def fmt(x: float) -> str:
    return "%.16e" % x


@pytest.fixture()
def grid_file(tmp_path):
    """A 9^3 grid whose sublevel set at M=1 is two separated blobs."""
    n = 9
    axes = [np.linspace(-2.0, 2.0, n)] * 2 + [np.linspace(0.0, 4.0, n)]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    blob1 = (X + 1.0) ** 2 + Y ** 2 + (Z - 2.0) ** 2
    blob2 = (X - 1.0) ** 2 + Y ** 2 + (Z - 2.0) ** 2
    values = np.minimum(blob1, blob2).ravel(order="F")
    path = tmp_path / "grid.txt"
    with open(path, "w") as fh:
        fh.write("ergobound-region-grid-v1\n")
        fh.write("certificate deadbeefdeadbeef\n")
        fh.write("bound " + fmt(10.0) + "\n")
        fh.write("M " + fmt(1.0) + "\n")
        fh.write("box " + " ".join(fmt(v) for v in (-2, 2, -2, 2, 0, 4)) + "\n")
        fh.write(f"resolution {n} {n} {n}\n")
        fh.write("values\n")
        for start in range(0, values.size, n):
            fh.write(" ".join("%.8e" % v for v in values[start:start + n]) + "\n")
    return path


@pytest.fixture()
def orbit_file(tmp_path):
    """A closed loop through both blobs, stored as an orbit CSV."""
    t = np.linspace(0.0, 2 * np.pi, 200)
    x = 1.5 * np.cos(t)
    y = 0.5 * np.sin(t)
    z = 2.0 + 0.3 * np.sin(2 * t)
    path = tmp_path / "orbit.csv"
    with open(path, "w") as fh:
        fh.write("t,x,y,z\n")
        for row in zip(t, x, y, z):
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def write_trace(path, degree: int, n: int = 101, scale: float = 1.0):
    t = np.linspace(0.0, 1.6, n)
    values = scale * (1.5 + np.cos(4 * np.pi * t))
    with open(path, "w") as fh:
        fh.write(f"# ergobound-trace symbols=AB degree={degree} certificate=feed\n")
        fh.write("t,residual\n")
        for ti, vi in zip(t, values):
            fh.write(fmt(ti) + "," + fmt(vi) + "\n")
    return path


@pytest.fixture()
def trace_files(tmp_path):
    return [write_trace(tmp_path / f"trace_deg{d}.csv", d, n=101 if d < 8 else 81,
                        scale=10.0 ** (3 - d / 2))
            for d in (4, 6, 8)]


@pytest.fixture()
def summary_file(tmp_path):
    path = tmp_path / "summary_bounds.csv"
    path.write_text(
        "degree,bound,gap,iterations,status,valid\n"
        "4,635908.6,0.0005,17,converged,yes\n"
        "6,595152.2,0.0004,24,converged,yes\n"
        "8,592938,0.9,34,max-iterations,yes\n")
    return path
