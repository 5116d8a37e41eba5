"""Sparse multivariate polynomial arithmetic over double-precision coefficients.

Monomials are exponent tuples, polynomials map monomials to coefficients, and
a PolySystem bundles the component polynomials of an autonomous vector field.
All operations are pure; results never alias their inputs.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass, field

import numpy as np

# Exponent vector of a monomial, one nonnegative integer per variable.
Monomial = tuple[int, ...]

# Decimal format that round-trips IEEE doubles exactly (17 significant digits).
FLOAT_FMT = "%.16e"


def format_float(x: float) -> str:
    return FLOAT_FMT % x


def grlex_key(mono: Monomial) -> tuple:
    """Sort key for graded lexicographic order (degree first, then x1 > x2 > ...)."""
    return (sum(mono), tuple(-e for e in mono))


def monomial_degree(mono: Monomial) -> int:
    return sum(mono)


def monomial_mul(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


def monomial_basis(d: int, max_degree: int) -> list[Monomial]:
    """All monomials in d variables of total degree <= max_degree, grlex-ordered.

    The count is C(d + max_degree, d).
    """
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if max_degree < 0:
        raise ValueError(f"max_degree must be >= 0, got {max_degree}")

    out: list[Monomial] = []

    def extend(prefix: list[int], remaining: int, slots: int) -> None:
        if slots == 1:
            out.append(tuple(prefix + [remaining]))
            return
        for e in range(remaining, -1, -1):
            extend(prefix + [e], remaining - e, slots - 1)

    for deg in range(max_degree + 1):
        extend([], deg, d)
    return out


class Polynomial:
    """Sparse polynomial in d variables with float coefficients.

    Terms below the prune threshold (default: exact zeros only) are dropped on
    construction, so stored coefficient maps never carry zero entries.
    """

    __slots__ = ("dimension", "terms")

    def __init__(self, dimension: int, terms: dict[Monomial, float] | None = None,
                 prune: float = 0.0):
        if dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {dimension}")
        self.dimension = dimension
        clean: dict[Monomial, float] = {}
        if terms:
            for mono, coeff in terms.items():
                mono = tuple(int(e) for e in mono)
                if len(mono) != dimension:
                    raise ValueError(
                        f"monomial {mono} has {len(mono)} exponents, expected {dimension}")
                if any(e < 0 for e in mono):
                    raise ValueError(f"negative exponent in monomial {mono}")
                c = float(coeff)
                if abs(c) > prune:
                    clean[mono] = clean.get(mono, 0.0) + c
        self.terms = clean

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, dimension: int) -> "Polynomial":
        return cls(dimension, {})

    @classmethod
    def constant(cls, dimension: int, value: float) -> "Polynomial":
        return cls(dimension, {(0,) * dimension: value})

    @classmethod
    def variable(cls, dimension: int, index: int) -> "Polynomial":
        if not 0 <= index < dimension:
            raise ValueError(f"variable index {index} out of range for dimension {dimension}")
        mono = tuple(1 if i == index else 0 for i in range(dimension))
        return cls(dimension, {mono: 1.0})

    @classmethod
    def monomial(cls, exponents: Monomial, coeff: float = 1.0) -> "Polynomial":
        return cls(len(exponents), {tuple(exponents): coeff})

    # -- basic queries -----------------------------------------------------

    @property
    def degree(self) -> int:
        """Total degree; zero polynomial reports 0."""
        if not self.terms:
            return 0
        return max(sum(m) for m in self.terms)

    def coefficient(self, mono: Monomial) -> float:
        return self.terms.get(tuple(mono), 0.0)

    def infnorm(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def sorted_terms(self) -> list[tuple[Monomial, float]]:
        return sorted(self.terms.items(), key=lambda kv: grlex_key(kv[0]))

    def pruned(self, threshold: float) -> "Polynomial":
        return Polynomial(self.dimension,
                          {m: c for m, c in self.terms.items() if abs(c) > threshold})

    # -- arithmetic --------------------------------------------------------

    def _check_dim(self, other: "Polynomial") -> None:
        if self.dimension != other.dimension:
            raise ValueError(
                f"dimension mismatch: {self.dimension} vs {other.dimension}")

    def __add__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.dimension, other)
        self._check_dim(other)
        terms = dict(self.terms)
        for mono, c in other.terms.items():
            s = terms.get(mono, 0.0) + c
            if s == 0.0:
                terms.pop(mono, None)
            else:
                terms[mono] = s
        return Polynomial(self.dimension, terms)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.dimension, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.dimension, other)
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        return (-self) + other

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            c = float(other)
            if c == 0.0:
                return Polynomial.zero(self.dimension)
            return Polynomial(self.dimension, {m: c * v for m, v in self.terms.items()})
        self._check_dim(other)
        terms: dict[Monomial, float] = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                mono = monomial_mul(ma, mb)
                s = terms.get(mono, 0.0) + ca * cb
                if s == 0.0:
                    terms.pop(mono, None)
                else:
                    terms[mono] = s
        return Polynomial(self.dimension, terms)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Polynomial":
        try:
            n = int(operator.index(n))
        except TypeError:
            raise ValueError(f"exponent must be a nonnegative integer, got {n!r}") from None
        if n < 0:
            raise ValueError(f"exponent must be a nonnegative integer, got {n}")
        result = Polynomial.constant(self.dimension, 1.0)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def __eq__(self, other) -> bool:
        return (isinstance(other, Polynomial)
                and self.dimension == other.dimension
                and self.terms == other.terms)

    def __hash__(self):
        return hash((self.dimension, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        if not self.terms:
            return "Polynomial(0)"
        parts = [f"{c:g}*x^{list(m)}" for m, c in self.sorted_terms()]
        return "Polynomial(" + " + ".join(parts) + ")"

    # -- evaluation --------------------------------------------------------

    def evaluate(self, point) -> float:
        """Evaluate at a single point, summing terms in grlex order."""
        x = np.asarray(point, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(f"point has shape {x.shape}, expected ({self.dimension},)")
        if not np.all(np.isfinite(x)):
            raise ValueError("point has non-finite entries")
        total = 0.0
        for mono, coeff in self.sorted_terms():
            term = coeff
            for xi, e in zip(x, mono):
                if e:
                    term *= xi ** e
            total += term
        return total

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Vectorized evaluation at an (N, d) array of points."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.dimension:
            raise ValueError(f"points have shape {pts.shape}, expected (N, {self.dimension})")
        if not self.terms:
            return np.zeros(pts.shape[0])
        items = self.sorted_terms()
        max_exp = [max(m[i] for m, _ in items) for i in range(self.dimension)]
        # power tables per variable: powers[i][e] = column i raised to e
        powers = [np.vander(pts[:, i], max_exp[i] + 1, increasing=True).T
                  for i in range(self.dimension)]
        total = np.zeros(pts.shape[0])
        for mono, coeff in items:
            term = np.full(pts.shape[0], coeff)
            for i, e in enumerate(mono):
                if e:
                    term = term * powers[i][e]
            total += term
        return total

    # -- text form ---------------------------------------------------------

    def to_text(self) -> str:
        """Serialize as a header line `dim d` plus one `coeff e1 ... ed` line per term."""
        lines = [f"dim {self.dimension}"]
        for mono, coeff in self.sorted_terms():
            lines.append(format_float(coeff) + " " + " ".join(str(e) for e in mono))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Polynomial":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("dim "):
            raise ValueError("polynomial text must start with a 'dim d' header")
        d = int(lines[0].split()[1])
        terms: dict[Monomial, float] = {}
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) != d + 1:
                raise ValueError(f"bad term line {ln!r}: expected coefficient plus {d} exponents")
            coeff = float(parts[0])
            mono = tuple(int(p) for p in parts[1:])
            if any(e < 0 for e in mono):
                raise ValueError(f"negative exponent in {ln!r}")
            terms[mono] = terms.get(mono, 0.0) + coeff
        return cls(d, terms)


def gradient(p: Polynomial) -> list[Polynomial]:
    """Partial derivatives of p with respect to each variable."""
    grads = []
    for i in range(p.dimension):
        terms: dict[Monomial, float] = {}
        for mono, coeff in p.terms.items():
            e = mono[i]
            if e:
                lowered = mono[:i] + (e - 1,) + mono[i + 1:]
                terms[lowered] = terms.get(lowered, 0.0) + coeff * e
        grads.append(Polynomial(p.dimension, terms))
    return grads


def affine_rescale(p: Polynomial, scales, shifts=None) -> Polynomial:
    """Compose p with the substitution x_i -> scale_i * x_i + shift_i, expanded exactly."""
    d = p.dimension
    scales = [float(s) for s in scales]
    shifts = [0.0] * d if shifts is None else [float(t) for t in shifts]
    if len(scales) != d or len(shifts) != d:
        raise ValueError("scales and shifts must match the polynomial dimension")
    if any(s <= 0.0 for s in scales):
        raise ValueError("scales must be positive")

    if all(t == 0.0 for t in shifts):
        # pure scaling keeps the monomial support
        terms = {}
        for mono, coeff in p.terms.items():
            factor = 1.0
            for s, e in zip(scales, mono):
                if e:
                    factor *= s ** e
            terms[mono] = coeff * factor
        return Polynomial(d, terms)

    result = Polynomial.zero(d)
    for mono, coeff in p.sorted_terms():
        term = Polynomial.constant(d, coeff)
        for i, e in enumerate(mono):
            if e:
                lin = Polynomial(d, {tuple(1 if j == i else 0 for j in range(d)): scales[i]})
                if shifts[i] != 0.0:
                    lin = lin + shifts[i]
                term = term * lin ** e
        result = result + term
    return result


@dataclass(frozen=True)
class PolySystem:
    """Autonomous polynomial vector field dx/dt = f(x) with named parameters."""

    dimension: int
    components: tuple[Polynomial, ...]
    parameters: dict[str, float] = field(default_factory=dict)
    variables: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.components) != self.dimension:
            raise ValueError("component count must equal the system dimension")
        for comp in self.components:
            if comp.dimension != self.dimension:
                raise ValueError("component dimension mismatch")
        if self.variables and len(self.variables) != self.dimension:
            raise ValueError("variable name count must equal the system dimension")

    @property
    def degree(self) -> int:
        return max(c.degree for c in self.components)

    def __call__(self, point) -> np.ndarray:
        x = np.asarray(point, dtype=float)
        return np.array([c.evaluate(x) for c in self.components])

    def rescaled(self, scales) -> "PolySystem":
        """Vector field for the substituted state x_i = scale_i * u_i.

        du_i/dt = f_i(scale * u) / scale_i, so bounded-orbit structure is preserved.
        """
        scales = [float(s) for s in scales]
        comps = tuple(affine_rescale(c, scales) * (1.0 / s)
                      for c, s in zip(self.components, scales))
        return PolySystem(self.dimension, comps, dict(self.parameters), self.variables)


def lie_derivative(system: PolySystem, v: Polynomial) -> Polynomial:
    """Derivative of v along the flow of the system: sum_i f_i * dv/dx_i."""
    if system.dimension != v.dimension:
        raise ValueError(
            f"dimension mismatch: system {system.dimension} vs polynomial {v.dimension}")
    out = Polynomial.zero(v.dimension)
    for f_i, dv_i in zip(system.components, gradient(v)):
        out = out + f_i * dv_i
    return out


def lorenz_system(beta: float = 8.0 / 3.0, sigma: float = 10.0, r: float = 28.0) -> PolySystem:
    """The Lorenz equations (sigma*(y-x), x*(r-z)-y, x*y-beta*z)."""
    d = 3
    x = Polynomial.variable(d, 0)
    y = Polynomial.variable(d, 1)
    z = Polynomial.variable(d, 2)
    comps = (
        sigma * (y - x),
        x * r - x * z - y,
        x * y - beta * z,
    )
    return PolySystem(d, comps, {"beta": beta, "sigma": sigma, "r": r}, ("x", "y", "z"))
