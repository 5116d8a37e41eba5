"""Near-optimality diagnostics built from a bound certificate.

Everything here works with the nonnegative gap function

    g(x) = U - Phi(x) - f(x) . grad V(x),

in the original coordinates. Trajectories whose average of Phi comes within
eps of U can spend at most a fraction eps/M of their time where g > M, so the
sublevel sets {g <= M} localize all nearly maximal trajectories. The grid,
occupancy, and trace utilities below make that statement measurable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .dynamics import PeriodicOrbit, Trajectory
from .jsonio import dumps_json, loads_json
from .polyalg import Polynomial, PolySystem, format_float, lie_derivative
from .sosbuild import BoundCertificate


def gap_polynomial(cert: BoundCertificate, phi: Polynomial | None = None,
                   system: PolySystem | None = None) -> Polynomial:
    """U - Phi - f.grad(V) as a polynomial in the original coordinates."""
    phi = cert.phi if phi is None else phi
    system = cert.system if system is None else system
    return (Polynomial.constant(phi.dimension, cert.bound)
            - phi - lie_derivative(system, cert.v))


def markov_bound(epsilon: float, M: float) -> float:
    """Guaranteed lower bound max(0, 1 - eps/M) on time spent in the M-sublevel set."""
    if M <= 0:
        raise ValueError("M must be positive")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    return max(0.0, 1.0 - epsilon / M)


@dataclass
class RegionGrid:
    """Sampled values of the gap function on an axis-aligned box grid.

    Values are stored flat with the first axis fastest; `as_array()` restores
    the (n1, ..., nd) layout. The membership mask is values <= M.
    """

    box: list[tuple[float, float]]
    resolution: tuple[int, ...]
    values: np.ndarray            # flat, first-axis-fastest
    M: float
    bound: float
    certificate: str              # identity hash binding the grid to its certificate

    def as_array(self) -> np.ndarray:
        return self.values.reshape(self.resolution, order="F")

    @property
    def mask(self) -> np.ndarray:
        return self.values <= self.M

    @property
    def member_fraction(self) -> float:
        return float(np.mean(self.mask))

    @property
    def min_value(self) -> float:
        return float(self.values.min())

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(lo, hi, n) for (lo, hi), n in zip(self.box, self.resolution)]

    def save(self, path) -> None:
        res = self.resolution
        with open(path, "w") as fh:
            fh.write("ergobound-region-grid-v1\n")
            fh.write(f"certificate {self.certificate}\n")
            fh.write("bound " + format_float(self.bound) + "\n")
            fh.write("M " + format_float(self.M) + "\n")
            fh.write("box " + " ".join(format_float(v) for pair in self.box
                                       for v in pair) + "\n")
            fh.write("resolution " + " ".join(str(n) for n in res) + "\n")
            fh.write("values\n")
            vals = self.values
            per_line = res[0]
            for start in range(0, vals.size, per_line):
                fh.write(" ".join("%.8e" % v for v in vals[start:start + per_line]) + "\n")

    @classmethod
    def load(cls, path) -> "RegionGrid":
        with open(path) as fh:
            header = fh.readline().strip()
            if header != "ergobound-region-grid-v1":
                raise ValueError(f"unrecognized grid header {header!r}")
            meta = {}
            for _ in range(5):
                key, _, rest = fh.readline().strip().partition(" ")
                meta[key] = rest
            if fh.readline().strip() != "values":
                raise ValueError("malformed grid file: missing values sentinel")
            values = np.array(fh.read().split(), dtype=float)
        nums = [float(v) for v in meta["box"].split()]
        box = [(nums[2 * i], nums[2 * i + 1]) for i in range(len(nums) // 2)]
        resolution = tuple(int(v) for v in meta["resolution"].split())
        expected = int(np.prod(resolution))
        if values.size != expected:
            raise ValueError(f"grid file has {values.size} values, expected {expected}")
        return cls(box=box, resolution=resolution, values=values,
                   M=float(meta["M"]), bound=float(meta["bound"]),
                   certificate=meta["certificate"])


def region_grid(cert: BoundCertificate, phi: Polynomial | None, system: PolySystem | None,
                box, resolution, M: float, chunk: int = 200_000) -> RegionGrid:
    """Evaluate the gap function on a box grid and record the M-sublevel mask."""
    if M <= 0:
        raise ValueError("M must be positive")
    g = gap_polynomial(cert, phi, system)
    d = g.dimension
    box = [(float(lo), float(hi)) for lo, hi in box]
    if len(box) != d:
        raise ValueError(f"box has {len(box)} axes, expected {d}")
    if isinstance(resolution, int):
        resolution = (resolution,) * d
    resolution = tuple(int(n) for n in resolution)
    if len(resolution) != d or any(n < 2 for n in resolution):
        raise ValueError("resolution must be at least 2 per axis")

    axes = [np.linspace(lo, hi, n) for (lo, hi), n in zip(box, resolution)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.column_stack([m.ravel(order="F") for m in mesh])
    values = np.empty(points.shape[0])
    for start in range(0, points.shape[0], chunk):
        sl = slice(start, start + chunk)
        values[sl] = g.evaluate_many(points[sl])
    if not np.all(np.isfinite(values)):
        raise FloatingPointError("gap function evaluated to a non-finite value")
    return RegionGrid(box=box, resolution=resolution, values=values, M=M,
                      bound=cert.bound, certificate=cert.identity_hash())


def _window(traj_or_orbit, spinup: float) -> tuple[Trajectory, float, float]:
    if isinstance(traj_or_orbit, PeriodicOrbit):
        traj = traj_or_orbit.trajectory
        return traj, traj.t0, traj.t0 + traj_or_orbit.period
    traj = traj_or_orbit
    a, b = traj.t0 + spinup, traj.t_end
    if a >= b:
        raise ValueError("averaging window is empty")
    return traj, a, b


def occupancy_fraction(traj_or_orbit, cert: BoundCertificate,
                       phi: Polynomial | None = None, system: PolySystem | None = None,
                       M: float = 1000.0, spinup: float = 0.0,
                       samples: int = 8192) -> float:
    """Time-weighted fraction of the window where g(x(t)) <= M.

    Sign changes of g - M between samples are refined by root finding on the
    dense output, so the result is limited by sampling only through genuinely
    sub-sample-width excursions.
    """
    traj, a, b = _window(traj_or_orbit, spinup)
    g = gap_polynomial(cert, phi, system)
    times = np.linspace(a, b, samples)
    h = g.evaluate_many(traj(times)) - M

    def hfun(t: float) -> float:
        return float(g.evaluate(traj(t))) - M

    inside = 0.0
    seg_start = times[0]
    seg_inside = h[0] <= 0.0
    for i in range(len(times) - 1):
        if (h[i] <= 0.0) == (h[i + 1] <= 0.0):
            continue
        t_cross = brentq(hfun, times[i], times[i + 1],
                         xtol=1e-12 * (1.0 + abs(times[i + 1])),
                         rtol=4 * np.finfo(float).eps)
        if seg_inside:
            inside += t_cross - seg_start
        seg_start = t_cross
        seg_inside = not seg_inside
    if seg_inside:
        inside += times[-1] - seg_start
    return float(min(1.0, max(0.0, inside / (b - a))))


@dataclass
class ResidualTrace:
    """The gap function sampled along one period of a closed orbit."""

    t: np.ndarray                 # times relative to the orbit anchor
    values: np.ndarray
    symbols: str
    aux_degree: int
    certificate: str
    bound: float

    @property
    def mean(self) -> float:
        # periodic uniform grid: the trapezoid rule reduces to the plain mean
        return float(np.mean(self.values[:-1]))

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# ergobound-trace symbols={self.symbols} degree={self.aux_degree} "
                     f"certificate={self.certificate}\n")
            fh.write("t,residual\n")
            for ti, vi in zip(self.t, self.values):
                fh.write(format_float(ti) + "," + format_float(vi) + "\n")


def residual_trace(orbit: PeriodicOrbit, cert: BoundCertificate,
                   phi: Polynomial | None = None, system: PolySystem | None = None,
                   samples: int = 2001) -> ResidualTrace:
    """Sample g along one orbit period; its mean equals U minus the orbit average."""
    g = gap_polynomial(cert, phi, system)
    traj = orbit.trajectory
    times = np.linspace(traj.t0, traj.t0 + orbit.period, samples)
    values = g.evaluate_many(traj(times))
    return ResidualTrace(t=times - traj.t0, values=values, symbols=orbit.symbols,
                         aux_degree=cert.aux_degree, certificate=cert.identity_hash(),
                         bound=cert.bound)


@dataclass
class GapReport:
    """How close an orbit comes to the bound, with the implied localization."""

    epsilon: float                # U - achieved average
    M: float
    markov_lower_bound: float
    occupancy: float
    average: float
    bound: float
    symbols: str
    certificate: str

    def to_json(self) -> str:
        return dumps_json({
            "format": "ergobound-gap-report-v1",
            "epsilon": self.epsilon,
            "M": self.M,
            "markov_lower_bound": self.markov_lower_bound,
            "occupancy": self.occupancy,
            "average": self.average,
            "bound": self.bound,
            "symbols": self.symbols,
            "certificate": self.certificate,
        })

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "GapReport":
        with open(path) as fh:
            doc = loads_json(fh.read())
        if doc.get("format") != "ergobound-gap-report-v1":
            raise ValueError("not an ergobound gap report")
        return cls(epsilon=doc["epsilon"], M=doc["M"],
                   markov_lower_bound=doc["markov_lower_bound"],
                   occupancy=doc["occupancy"], average=doc["average"],
                   bound=doc["bound"], symbols=doc["symbols"],
                   certificate=doc["certificate"])


def gap_report(orbit: PeriodicOrbit, cert: BoundCertificate, M: float,
               phi: Polynomial | None = None, system: PolySystem | None = None) -> GapReport:
    phi_eff = cert.phi if phi is None else phi
    average = orbit.average(phi_eff)
    epsilon = cert.bound - average
    occ = occupancy_fraction(orbit, cert, phi, system, M)
    return GapReport(epsilon=epsilon, M=M,
                     markov_lower_bound=markov_bound(max(epsilon, 0.0), M),
                     occupancy=occ, average=average, bound=cert.bound,
                     symbols=orbit.symbols, certificate=cert.identity_hash())


def _sphere_points(d: int, n: int) -> np.ndarray:
    """Deterministic unit directions: golden-spiral in 3-d, seeded normals otherwise."""
    if d == 3:
        i = np.arange(n) + 0.5
        z = 1.0 - 2.0 * i / n
        rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        theta = math.pi * (1.0 + math.sqrt(5.0)) * i
        return np.column_stack([rho * np.cos(theta), rho * np.sin(theta), z])
    rng = np.random.default_rng(20230501)
    pts = rng.normal(size=(n, d))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


@dataclass
class TrappingReport:
    """Sampled check that f.grad(V) <= U - Phi forces decay at large radius."""

    radii: list[float]
    max_lie: list[float]          # max of f.grad(V) per sphere
    min_phi: list[float]
    decreasing: bool
    negative_tail: bool
    passed: bool
    inconclusive: bool


def trapping_check(cert: BoundCertificate, phi: Polynomial | None = None,
                   system: PolySystem | None = None, radii=(50.0, 100.0, 200.0),
                   n_points: int = 2000, inconclusive_below: float = 60.0,
                   coercive: bool = True) -> TrappingReport:
    """Probe whether d/dt V becomes strongly negative on growing spheres.

    Diagnostic only: the caller asserts with `coercive` that Phi grows along
    the probed directions; radii entirely inside the attractor region cannot
    decide anything and are reported as inconclusive.
    """
    phi = cert.phi if phi is None else phi
    system = cert.system if system is None else system
    radii = [float(r) for r in radii]
    if not radii or any(r <= 0 for r in radii):
        raise ValueError("radii must be positive")
    lie = lie_derivative(system, cert.v)
    dirs = _sphere_points(phi.dimension, n_points)

    max_lie, min_phi = [], []
    for r in sorted(radii):
        pts = r * dirs
        max_lie.append(float(lie.evaluate_many(pts).max()))
        min_phi.append(float(phi.evaluate_many(pts).min()))
    decreasing = all(b < a for a, b in zip(max_lie, max_lie[1:]))
    if len(radii) == 1:
        decreasing = False
    negative_tail = max_lie[-1] < 0.0
    passed = bool(coercive and decreasing and negative_tail)
    inconclusive = bool(not passed and max(radii) < inconclusive_below)
    return TrappingReport(radii=sorted(radii), max_lie=max_lie, min_phi=min_phi,
                          decreasing=decreasing, negative_tail=negative_tail,
                          passed=passed, inconclusive=inconclusive)
