"""Experiment configuration: a single TOML file driving all commands.

Systems are either the built-in `lorenz` (parameters configurable) or inline
polynomial components written as expressions over the declared variables and
parameters, e.g. "sigma*(y - x)". Expressions support +, -, *, integer powers
via ^ (or **), parentheses, numbers, and names; no division or functions.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dynamics import SectionSpec, lorenz_section
from .polyalg import Polynomial, PolySystem, lorenz_system


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
                    r"|\d+(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
                    r"|(?P<op>\*\*|[-+*^()]))")


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ConfigError(f"cannot parse expression at: {text[pos:]!r}")
        pos = m.end()
        if m.lastgroup == "op" and m.group("op") == "**":
            tokens.append(("op", "^"))
        else:
            tokens.append((m.lastgroup, m.group(m.lastgroup)))
    return tokens


class _ExprParser:
    """Recursive-descent parser producing a Polynomial directly."""

    def __init__(self, tokens, variables: tuple[str, ...], parameters: dict[str, float]):
        self.tokens = tokens
        self.pos = 0
        self.variables = variables
        self.parameters = parameters
        self.d = len(variables)

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self, op=None):
        kind, val = self.peek()
        if kind is None:
            raise ConfigError("unexpected end of expression")
        if op is not None and (kind != "op" or val != op):
            raise ConfigError(f"expected {op!r}, found {val!r}")
        self.pos += 1
        return kind, val

    def parse(self) -> Polynomial:
        out = self.expr()
        if self.pos != len(self.tokens):
            raise ConfigError(f"trailing input after expression: {self.tokens[self.pos:]}")
        return out

    def expr(self) -> Polynomial:
        kind, val = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            left = -self.term() if val == "-" else self.term()
        else:
            left = self.term()
        while True:
            kind, val = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                right = self.term()
                left = left + right if val == "+" else left - right
            else:
                return left

    def term(self) -> Polynomial:
        left = self.power()
        while True:
            kind, val = self.peek()
            if kind == "op" and val == "*":
                self.take()
                left = left * self.power()
            else:
                return left

    def power(self) -> Polynomial:
        base = self.atom()
        kind, val = self.peek()
        if kind == "op" and val == "^":
            self.take()
            kind, val = self.take()
            if kind != "num" or not re.fullmatch(r"\d+", val):
                raise ConfigError(f"exponent must be a nonnegative integer, got {val!r}")
            return base ** int(val)
        return base

    def atom(self) -> Polynomial:
        kind, val = self.take()
        if kind == "num":
            return Polynomial.constant(self.d, float(val))
        if kind == "name":
            if val in self.variables:
                return Polynomial.variable(self.d, self.variables.index(val))
            if val in self.parameters:
                return Polynomial.constant(self.d, float(self.parameters[val]))
            raise ConfigError(f"unknown name {val!r} (not a variable or parameter)")
        if kind == "op" and val == "(":
            inner = self.expr()
            self.take(")")
            return inner
        if kind == "op" and val == "-":
            return -self.atom()
        raise ConfigError(f"unexpected token {val!r}")


def parse_polynomial(text: str, variables: tuple[str, ...],
                     parameters: dict[str, float] | None = None) -> Polynomial:
    return _ExprParser(_tokenize(text), variables, parameters or {}).parse()


@dataclass
class OrbitRequest:
    symbols: str
    run_length: float = 500.0
    tol: float = 1e-11
    seed_tol: float = 1e-9
    max_seeds: int = 5


@dataclass
class RegionRequest:
    certificate: str
    box: list[tuple[float, float]]
    resolution: tuple[int, ...]
    thresholds: list[float]


@dataclass
class TraceRequest:
    orbit: str
    certificate: str
    threshold: float = 3000.0


@dataclass
class ExperimentConfig:
    system: PolySystem
    phi: Polynomial
    section: SectionSpec
    out_dir: str = "out"
    degrees: list[int] = field(default_factory=list)
    gap_tol: float = 1e-9
    feas_tol: float = 1e-9
    max_iterations: int = 200
    ball_radius: float | None = None
    jobs: int = 1
    orbits: list[OrbitRequest] = field(default_factory=list)
    regions: list[RegionRequest] = field(default_factory=list)
    traces: list[TraceRequest] = field(default_factory=list)


def _build_system(doc: dict) -> PolySystem:
    spec = doc.get("system")
    if not isinstance(spec, dict):
        raise ConfigError("missing [system] table")
    builtin = spec.get("builtin")
    if builtin is not None:
        if builtin != "lorenz":
            raise ConfigError(f"unknown builtin system {builtin!r}")
        return lorenz_system(beta=float(spec.get("beta", 8.0 / 3.0)),
                             sigma=float(spec.get("sigma", 10.0)),
                             r=float(spec.get("r", 28.0)))
    variables = tuple(spec.get("variables", ()))
    components = spec.get("components")
    if not variables or not components:
        raise ConfigError("inline systems need 'variables' and 'components'")
    if len(components) != len(variables):
        raise ConfigError("one component per variable is required")
    parameters = {k: float(v) for k, v in spec.get("parameters", {}).items()}
    comps = tuple(parse_polynomial(c, variables, parameters) for c in components)
    return PolySystem(len(variables), comps, parameters, variables)


def _build_section(doc: dict, system: PolySystem) -> SectionSpec:
    spec = doc.get("section")
    if spec is None:
        if system.parameters.get("r") is not None and system.dimension == 3:
            return lorenz_section(system.parameters["r"])
        return SectionSpec((0.0,) * (system.dimension - 1) + (1.0,), 0.0, -1)
    normal = tuple(float(v) for v in spec["normal"])
    if len(normal) != system.dimension:
        raise ConfigError("section normal dimension mismatch")
    return SectionSpec(normal, float(spec.get("offset", 0.0)),
                       int(spec.get("direction", -1)))


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    system = _build_system(doc)
    phi_spec = doc.get("phi")
    if not isinstance(phi_spec, dict) or "expression" not in phi_spec:
        raise ConfigError("missing [phi] table with an 'expression' key")
    phi = parse_polynomial(phi_spec["expression"], system.variables, system.parameters)
    section = _build_section(doc, system)

    bound = doc.get("bound", {})
    degrees = [int(v) for v in bound.get("degrees", [])]
    for deg in degrees:
        if deg < 2 or deg % 2:
            raise ConfigError(f"auxiliary degrees must be even and >= 2, got {deg}")
    ball = bound.get("ball_radius")
    ball_radius = None if ball in (None, 0, 0.0) else float(ball)

    orbits = [OrbitRequest(symbols=str(o["symbols"]),
                           run_length=float(o.get("run_length", 500.0)),
                           tol=float(o.get("tol", 1e-11)),
                           seed_tol=float(o.get("seed_tol", 1e-9)),
                           max_seeds=int(o.get("max_seeds", 5)))
              for o in doc.get("orbit", [])]
    for o in orbits:
        if not o.symbols or set(o.symbols.upper()) - {"A", "B"}:
            raise ConfigError(f"orbit symbols must be over A/B, got {o.symbols!r}")

    regions = []
    for r in doc.get("region", []):
        box = [(float(lo), float(hi)) for lo, hi in r["box"]]
        res = r["resolution"]
        res = (int(res),) * system.dimension if isinstance(res, int) \
            else tuple(int(v) for v in res)
        thresholds = [float(v) for v in (r["M"] if isinstance(r["M"], list) else [r["M"]])]
        if any(m <= 0 for m in thresholds):
            raise ConfigError("region thresholds M must be positive")
        regions.append(RegionRequest(certificate=str(r["certificate"]), box=box,
                                     resolution=res, thresholds=thresholds))

    traces = [TraceRequest(orbit=str(t["orbit"]), certificate=str(t["certificate"]),
                           threshold=float(t.get("M", 3000.0)))
              for t in doc.get("trace", [])]

    return ExperimentConfig(
        system=system, phi=phi, section=section,
        out_dir=str(doc.get("out_dir", "out")),
        degrees=degrees,
        gap_tol=float(bound.get("gap_tol", 1e-9)),
        feas_tol=float(bound.get("feas_tol", 1e-9)),
        max_iterations=int(bound.get("max_iterations", 200)),
        ball_radius=ball_radius,
        jobs=int(bound.get("jobs", 1)),
        orbits=orbits, regions=regions, traces=traces,
    )
