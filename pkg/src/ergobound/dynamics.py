"""Trajectory integration, Poincare sections, and periodic-orbit shooting.

Integration uses an adaptive Dormand-Prince 5(4) pair with its quartic
interpolant for dense output (scipy's RK45). Time averages are evaluated with
per-step Gauss-Legendre quadrature on the dense output, so their accuracy
tracks the interpolant rather than the stored grid. Periodic orbits are found
by Newton iteration on the k-fold Poincare return map seeded from close
returns of a chaotic run.

Symbol convention for three-dimensional two-winged flows: at each section
crossing the label is 'A' when the first coordinate is negative and 'B' when
it is positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .jsonio import dumps_json, loads_json
from .polyalg import Polynomial, PolySystem, format_float, lie_derivative

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(7)


class IntegrationError(RuntimeError):
    """Integration aborted; carries the partial trajectory when one exists."""

    def __init__(self, message: str, trajectory: "Trajectory | None" = None):
        super().__init__(message)
        self.trajectory = trajectory


class OrbitError(RuntimeError):
    """Periodic-orbit search failed (no convergence or wrong symbol sequence)."""


def compile_rhs(system: PolySystem):
    """Build a fast f(t, x) callback via source generation.

    Coefficients are embedded with repr() so the compiled field evaluates the
    exact same doubles as Polynomial.evaluate.
    """
    d = system.dimension
    args = ", ".join(f"x{i}" for i in range(d))
    comps = []
    for comp in system.components:
        if not comp.terms:
            comps.append("0.0")
            continue
        parts = []
        for mono, coeff in comp.sorted_terms():
            factors = [repr(coeff)]
            for i, e in enumerate(mono):
                if e == 1:
                    factors.append(f"x{i}")
                elif e > 1:
                    factors.append(f"x{i}**{e}")
            parts.append("*".join(factors))
        comps.append(" + ".join(parts))
    src = (f"def _rhs(t, state):\n"
           f"    {args}, = state\n"
           f"    return ({', '.join(comps)}{',' if d == 1 else ''})\n")
    namespace: dict = {}
    exec(compile(src, "<ergobound-rhs>", "exec"), namespace)
    return namespace["_rhs"]


@dataclass
class Trajectory:
    """A dense integrator output on a strictly increasing time grid."""

    system: PolySystem
    t: np.ndarray                 # (N,)
    states: np.ndarray            # (N, d)
    sol: object                   # scipy OdeSolution (dense output)
    metadata: dict = field(default_factory=dict)

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def duration(self) -> float:
        return self.t_end - self.t0

    def __call__(self, times) -> np.ndarray:
        """Dense-output states; shape (d,) for scalar input, else (n, d)."""
        times = np.asarray(times, dtype=float)
        out = self.sol(times)
        return out.T if out.ndim == 2 else out

    def to_csv(self, path) -> None:
        names = self.system.variables or tuple(f"x{i}" for i in range(self.system.dimension))
        with open(path, "w") as fh:
            fh.write("t," + ",".join(names) + "\n")
            for ti, row in zip(self.t, self.states):
                fh.write(format_float(ti) + ","
                         + ",".join(format_float(v) for v in row) + "\n")


def integrate(system: PolySystem, x0, t_end: float, tol: float = 1e-9, *,
              t0: float = 0.0, fixed_step: float | None = None,
              max_step: float = np.inf) -> Trajectory:
    """Integrate dx/dt = f(x) over [t0, t0 + t_end] with dense output.

    `tol` is applied as both relative and absolute local error tolerance per
    step. With `fixed_step` the error control is disabled and the solver walks
    the grid with constant steps (used for convergence-order measurements).
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (system.dimension,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({system.dimension},)")
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 has non-finite entries")
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    if tol <= 0:
        raise ValueError("tol must be positive")

    rhs = compile_rhs(system)
    kwargs = dict(method="RK45", dense_output=True)
    if fixed_step is not None:
        kwargs.update(rtol=1e10, atol=1e10, first_step=min(fixed_step, t_end),
                      max_step=fixed_step)
    else:
        kwargs.update(rtol=tol, atol=tol, max_step=max_step)
    res = solve_ivp(rhs, (t0, t0 + t_end), x0, **kwargs)

    meta = {"method": "rk45", "rtol": kwargs.get("rtol"), "atol": kwargs.get("atol"),
            "nfev": int(res.nfev), "steps": int(res.t.size - 1)}
    if not res.success:
        partial = None
        if res.t.size >= 2:
            partial = Trajectory(system, res.t, res.y.T, res.sol, meta)
        raise IntegrationError(f"integration aborted: {res.message}", partial)
    if not np.all(np.isfinite(res.y)):
        raise IntegrationError("integration produced non-finite states",
                               Trajectory(system, res.t, res.y.T, res.sol, meta))
    return Trajectory(system, res.t, res.y.T, res.sol, meta)


def _quadrature_times(traj: Trajectory, a: float, b: float, subdivisions: int = 1):
    """Gauss-Legendre nodes and weights over each step segment inside [a, b]."""
    knots = traj.t[(traj.t > a) & (traj.t < b)]
    edges = np.concatenate([[a], knots, [b]])
    if subdivisions > 1:
        fractions = np.arange(1, subdivisions) / subdivisions
        inner = edges[:-1, None] + np.diff(edges)[:, None] * fractions[None, :]
        edges = np.sort(np.concatenate([edges, inner.ravel()]))
    left = edges[:-1]
    width = np.diff(edges)
    nodes = (left[:, None] + 0.5 * width[:, None] * (_GAUSS_NODES[None, :] + 1.0)).ravel()
    weights = (0.5 * width[:, None] * _GAUSS_WEIGHTS[None, :]).ravel()
    return nodes, weights


def time_average(traj: Trajectory, phi: Polynomial, spinup: float = 0.0,
                 subdivisions: int = 1) -> float:
    """Mean of phi along the trajectory over [t0 + spinup, t_end].

    `subdivisions` splits every integrator step before quadrature; the default
    already matches the dense-output accuracy, so refining it is only useful
    as a convergence check.
    """
    a = traj.t0 + spinup
    b = traj.t_end
    if a >= b:
        raise ValueError("averaging window is empty: spinup exceeds the duration")
    nodes, weights = _quadrature_times(traj, a, b, subdivisions)
    values = phi.evaluate_many(traj(nodes))
    return float(weights @ values) / (b - a)


@dataclass(frozen=True)
class SectionSpec:
    """Oriented hyperplane {x : normal . x = offset} with a crossing direction."""

    normal: tuple[float, ...]
    offset: float
    direction: int = -1

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        if not np.any(n):
            raise ValueError("section normal must be nonzero")
        if self.direction not in (-1, 1):
            raise ValueError("crossing direction must be -1 or +1")

    def unit_normal(self) -> np.ndarray:
        n = np.asarray(self.normal, dtype=float)
        return n / np.linalg.norm(n)

    def signed_distance(self, states: np.ndarray) -> np.ndarray:
        n = np.asarray(self.normal, dtype=float)
        scale = np.linalg.norm(n)
        return (np.asarray(states, dtype=float) @ n - self.offset) / scale

    def plane_point(self) -> np.ndarray:
        n = self.unit_normal()
        return (self.offset / np.linalg.norm(np.asarray(self.normal, dtype=float))) * n

    def tangent_basis(self) -> np.ndarray:
        """(d, d-1) orthonormal basis of the plane's tangent directions."""
        n = self.unit_normal()
        q, _ = np.linalg.qr(np.column_stack([n, np.eye(n.size)]))
        return q[:, 1:n.size]


def lorenz_section(r: float = 28.0) -> SectionSpec:
    """Default Lorenz section: plane z = r - 1, downward crossings."""
    return SectionSpec((0.0, 0.0, 1.0), r - 1.0, -1)


def section_crossings(traj: Trajectory, section: SectionSpec) -> list[tuple[float, np.ndarray]]:
    """All transversal crossings in the declared direction, root-refined in time."""
    g = section.signed_distance(traj.states)
    if traj.t.size < 2:
        return []
    if section.direction == -1:
        brackets = np.flatnonzero((g[:-1] > 0.0) & (g[1:] <= 0.0) & (g[1:] < g[:-1]))
    else:
        brackets = np.flatnonzero((g[:-1] < 0.0) & (g[1:] >= 0.0) & (g[1:] > g[:-1]))

    def gfun(t: float) -> float:
        return float(section.signed_distance(traj(t)[None, :])[0])

    out = []
    for i in brackets:
        t_lo, t_hi = traj.t[i], traj.t[i + 1]
        if gfun(t_hi) == 0.0 and gfun(t_lo) != 0.0:
            t_star = t_hi
        else:
            t_star = brentq(gfun, t_lo, t_hi, xtol=1e-12 * (1.0 + abs(t_hi)),
                            rtol=4 * np.finfo(float).eps)
        state = traj(t_star)
        velocity = float(section.unit_normal() @ traj.system(state))
        if velocity * section.direction > 0.0:
            out.append((float(t_star), state))
    return out


def crossing_symbol(state: np.ndarray) -> str:
    return "A" if state[0] < 0.0 else "B"


def _cyclic_rotations(s: str) -> set[str]:
    return {s[i:] + s[:i] for i in range(len(s))}


def primitive_symbols(symbols: str) -> str:
    """Shortest word w with symbols = w repeated; 'ABAB' collapses to 'AB'."""
    n = len(symbols)
    for length in range(1, n + 1):
        if n % length == 0 and symbols == symbols[:length] * (n // length):
            return symbols[:length]
    return symbols


@dataclass
class CloseReturnSeed:
    state: np.ndarray
    distance: float
    symbols: str
    time: float
    low_confidence: bool


def close_return_seeds(system: PolySystem, section: SectionSpec, symbols: str,
                       run_length: float, *, x0=None, spinup: float = 20.0,
                       tol: float = 1e-9, max_seeds: int = 10,
                       confidence_distance: float = 1.0) -> list[CloseReturnSeed]:
    """Scan a chaotic run for section-crossing windows that nearly repeat.

    Windows whose symbols match the requested sequence up to cyclic rotation
    are ranked by the gap between first and (k+1)-th crossing; small gaps make
    good Newton seeds for the k-fold return map.
    """
    if run_length <= 0:
        raise ValueError("run_length must be positive")
    k = len(symbols)
    if k == 0:
        raise ValueError("symbols must be nonempty")
    x0 = np.ones(system.dimension) if x0 is None else np.asarray(x0, dtype=float)

    try:
        warmup = integrate(system, x0, spinup, tol)
        traj = integrate(system, warmup.states[-1], run_length, tol)
    except IntegrationError as exc:
        raise OrbitError(f"seeding run failed: {exc}") from exc

    crossings = section_crossings(traj, section)
    if len(crossings) <= k:
        return []
    labels = "".join(crossing_symbol(s) for _, s in crossings)
    wanted = _cyclic_rotations(symbols)

    seeds = []
    for i in range(len(crossings) - k):
        if labels[i:i + k] not in wanted:
            continue
        t_i, s_i = crossings[i]
        _, s_next = crossings[i + k]
        dist = float(np.linalg.norm(s_next - s_i))
        seeds.append(CloseReturnSeed(state=s_i, distance=dist, symbols=labels[i:i + k],
                                     time=t_i, low_confidence=dist > confidence_distance))
    seeds.sort(key=lambda s: s.distance)
    return seeds[:max_seeds]


@dataclass
class PeriodicOrbit:
    """A shooting-refined closed orbit with one stored period of dense output."""

    anchor: np.ndarray
    period: float
    symbols: str
    residual: float
    trajectory: Trajectory
    section: SectionSpec

    def average(self, phi: Polynomial) -> float:
        return time_average(self.trajectory, phi)

    def sample(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """n states at uniform times over one period (endpoint excluded)."""
        times = self.trajectory.t0 + self.period * np.arange(n) / n
        return times, self.trajectory(times)

    def to_json(self) -> str:
        return dumps_json({
            "format": "ergobound-orbit-v1",
            "symbols": self.symbols,
            "period": self.period,
            "anchor": [float(v) for v in self.anchor],
            "residual": self.residual,
            "section": {
                "normal": list(self.section.normal),
                "offset": self.section.offset,
                "direction": self.section.direction,
            },
        })

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path, system: PolySystem, tol: float = 1e-12) -> "PeriodicOrbit":
        """Rebuild the orbit from metadata by re-integrating one period."""
        with open(path) as fh:
            doc = loads_json(fh.read())
        if doc.get("format") != "ergobound-orbit-v1":
            raise ValueError("not an ergobound orbit document")
        sec = SectionSpec(tuple(doc["section"]["normal"]), float(doc["section"]["offset"]),
                          int(doc["section"]["direction"]))
        anchor = np.asarray(doc["anchor"], dtype=float)
        period = float(doc["period"])
        traj = integrate(system, anchor, period, tol)
        return cls(anchor=anchor, period=period, symbols=doc["symbols"],
                   residual=float(doc["residual"]), trajectory=traj, section=sec)


def _kth_crossing(system: PolySystem, section: SectionSpec, point: np.ndarray,
                  k: int, tol: float) -> tuple[float, np.ndarray, str, Trajectory]:
    """Flow from a section point until the k-th directional crossing."""
    horizon = 3.0 + 1.5 * k
    for _ in range(4):
        traj = integrate(system, point, horizon, tol)
        crossings = section_crossings(traj, section)
        # discard an immediate re-detection of the departure point
        crossings = [(t, s) for t, s in crossings if t > traj.t0 + 1e-7]
        if len(crossings) >= k:
            t_k, s_k = crossings[k - 1]
            labels = "".join(crossing_symbol(s) for _, s in crossings[:k])
            return t_k - traj.t0, s_k, labels, traj
        horizon *= 2.0
    raise OrbitError(f"no {k} section crossings within time {horizon:g}")


def find_periodic_orbit(system: PolySystem, section: SectionSpec, symbols: str,
                        guess, tol: float = 1e-11, *, max_iterations: int = 30,
                        integrator_tol: float = 1e-12) -> PeriodicOrbit:
    """Newton shooting on the k-fold return map, k = len(symbols).

    The guess must lie near the section; it is projected onto the plane. The
    refined orbit's crossing symbols must equal the requested sequence up to
    cyclic rotation, otherwise the search is rejected.
    """
    symbols = symbols.upper()
    if not symbols or set(symbols) - {"A", "B"}:
        raise ValueError("symbols must be a nonempty word over {A, B}")
    k = len(symbols)
    guess = np.asarray(guess, dtype=float)

    p_ref = section.plane_point()
    Z = section.tangent_basis()

    def to_plane(x: np.ndarray) -> np.ndarray:
        return Z.T @ (x - p_ref)

    def from_plane(xi: np.ndarray) -> np.ndarray:
        return p_ref + Z @ xi

    def return_map(xi: np.ndarray) -> tuple[np.ndarray, float]:
        t_k, s_k, _, _ = _kth_crossing(system, section, from_plane(xi), k, integrator_tol)
        return to_plane(s_k) - xi, t_k

    xi = to_plane(guess)
    f_val, period = return_map(xi)
    f_norm = float(np.linalg.norm(f_val))
    converged = f_norm <= tol * (1.0 + np.linalg.norm(xi))

    for _ in range(max_iterations):
        if converged:
            break
        n_xi = xi.size
        jac = np.zeros((n_xi, n_xi))
        for j in range(n_xi):
            h = 1e-7 * (1.0 + abs(xi[j]))
            e = np.zeros(n_xi)
            e[j] = h
            fp, _ = return_map(xi + e)
            fm, _ = return_map(xi - e)
            jac[:, j] = (fp - fm) / (2.0 * h)
        try:
            step = np.linalg.solve(jac, -f_val)
        except np.linalg.LinAlgError as exc:
            raise OrbitError("singular shooting Jacobian") from exc

        # damped update: halve until the residual decreases
        lam = 1.0
        for _ in range(8):
            trial = xi + lam * step
            f_trial, period_trial = return_map(trial)
            if np.linalg.norm(f_trial) < f_norm:
                xi, f_val, period = trial, f_trial, period_trial
                f_norm = float(np.linalg.norm(f_val))
                break
            lam *= 0.5
        else:
            raise OrbitError(
                f"shooting stalled at residual {f_norm:.3e} for symbols {symbols!r}")
        converged = f_norm <= tol * (1.0 + np.linalg.norm(xi))

    if not converged:
        raise OrbitError(
            f"no convergence after {max_iterations} Newton iterations "
            f"(residual {f_norm:.3e}) for symbols {symbols!r}")

    anchor = from_plane(xi)
    period, endpoint, labels, _ = _kth_crossing(system, section, anchor, k, integrator_tol)
    if labels not in _cyclic_rotations(symbols):
        raise OrbitError(
            f"converged orbit has symbols {labels!r}, not a rotation of {symbols!r}")
    orbit_traj = integrate(system, anchor, period, integrator_tol)
    residual = float(np.linalg.norm(endpoint - anchor))
    return PeriodicOrbit(anchor=anchor, period=period, symbols=labels,
                         residual=residual, trajectory=orbit_traj, section=section)


def lorenz_equilibria(beta: float = 8.0 / 3.0, sigma: float = 10.0,
                      r: float = 28.0) -> list[np.ndarray]:
    """Equilibria of the Lorenz system: the origin, plus the symmetric pair for r > 1."""
    if beta <= 0 or sigma <= 0 or r <= 0:
        raise ValueError("parameters must be positive")
    points = [np.zeros(3)]
    if r > 1.0:
        w = math.sqrt(beta * (r - 1.0))
        points.append(np.array([w, w, r - 1.0]))
        points.append(np.array([-w, -w, r - 1.0]))
    return points
