"""Translate the time-average bound problem into a semidefinite program.

For a polynomial vector field f and quantity of interest Phi, any polynomial V
with

    U - Phi - f . grad V  =  (sum of squares)

certifies that every long-time average of Phi along bounded trajectories is at
most U. Writing the sum of squares as b^T Q b over a monomial basis b with
Q >= 0 and matching coefficients monomial by monomial yields a linear SDP in
(U, coefficients of V, Q), minimized over U.

Numerical conditioning: variables are rescaled before assembly (by default
x, y / 10 and z / 30 in three dimensions) and the objective is normalized by
the largest scaled coefficient of Phi. Both transformations are exact on
polynomials and are undone, and recorded, in the extracted certificate.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigvalsh

from .jsonio import dumps_json, loads_json
from .polyalg import (
    Monomial,
    Polynomial,
    PolySystem,
    affine_rescale,
    format_float,
    lie_derivative,
    monomial_basis,
)
from .sdpsolve import SdpProblem, SdpSolution, SolveOptions, solve

DEFAULT_TOL_PSD = 1e-8
DEFAULT_TOL_FIT = 1e-6
# near-converged solves are still allowed to produce a certificate; the
# a-posteriori validation decides whether it is usable
NEAR_CONVERGED_TOL = 1e-5


class CertificateUnavailable(RuntimeError):
    """Raised when the SDP solve did not get close enough to extract a certificate."""


def default_scales(dimension: int) -> tuple[float, ...]:
    """Pre-assembly variable scaling: (10, 10, 30) in 3-d, identity otherwise."""
    if dimension == 3:
        return (10.0, 10.0, 30.0)
    return (1.0,) * dimension


@dataclass
class SosBoundProgram:
    """Assembly data for one bound problem at a fixed auxiliary degree.

    All polynomial data with a `scaled_` prefix lives in the rescaled
    coordinates u = x / scales; `phi_hat` is additionally divided by
    `objective_scale`. Immutable after construction.
    """

    system: PolySystem
    phi: Polynomial
    aux_degree: int
    scales: tuple[float, ...]
    objective_scale: float
    scaled_system: PolySystem
    phi_hat: Polynomial
    ansatz: list[Monomial]                 # V monomials, constant omitted
    gram_basis: list[Monomial]
    constraint_monomials: list[Monomial]
    lie_matrix: np.ndarray                 # (n_constraints, len(ansatz))
    residual_degree: int
    ball_radius: float | None = None
    ball_basis: list[Monomial] = field(default_factory=list)

    @property
    def n_free(self) -> int:
        return 1 + len(self.ansatz)

    @property
    def n_constraints(self) -> int:
        return len(self.constraint_monomials)


def build_bound_program(system: PolySystem, phi: Polynomial, aux_degree: int,
                        ball_radius: float | None = None,
                        scales=None) -> SosBoundProgram:
    """Set up coefficient matching for U - Phi - f.grad(V) = b^T Q b.

    The V ansatz holds every monomial of degree 1..aux_degree; the constant is
    omitted because it does not change f.grad(V). With an optional ball radius
    R the right-hand side gains a multiplier term sigma(x) * (R^2 - |x|^2)
    with sigma itself a sum of squares, restricting the certificate to the
    ball instead of all of R^d.
    """
    if aux_degree < 2 or aux_degree % 2 != 0:
        raise ValueError(f"aux_degree must be an even integer >= 2, got {aux_degree}")
    if system.dimension != phi.dimension:
        raise ValueError(
            f"dimension mismatch: system {system.dimension} vs phi {phi.dimension}")
    d = system.dimension
    scales = tuple(default_scales(d) if scales is None else (float(s) for s in scales))
    if len(scales) != d or any(s <= 0 for s in scales):
        raise ValueError("scales must be positive and match the dimension")

    scaled_system = system.rescaled(scales)
    phi_tilde = affine_rescale(phi, scales)
    objective_scale = max(1.0, phi_tilde.infnorm())
    phi_hat = phi_tilde * (1.0 / objective_scale)

    ansatz = monomial_basis(d, aux_degree)[1:]
    lie_images = [lie_derivative(scaled_system, Polynomial.monomial(mono))
                  for mono in ansatz]
    residual_degree = max([phi_hat.degree]
                          + [p.degree for p in lie_images if p.terms])
    constraint_monomials = monomial_basis(d, residual_degree)
    index = {mono: i for i, mono in enumerate(constraint_monomials)}
    gram_basis = monomial_basis(d, residual_degree // 2)

    lie_matrix = np.zeros((len(constraint_monomials), len(ansatz)))
    for j, image in enumerate(lie_images):
        for mono, coeff in image.terms.items():
            lie_matrix[index[mono], j] = coeff

    ball_basis: list[Monomial] = []
    if ball_radius is not None:
        if ball_radius <= 0:
            raise ValueError("ball_radius must be positive")
        ball_basis = monomial_basis(d, max(0, residual_degree // 2 - 1))

    return SosBoundProgram(
        system=system, phi=phi, aux_degree=aux_degree, scales=scales,
        objective_scale=objective_scale, scaled_system=scaled_system,
        phi_hat=phi_hat, ansatz=ansatz, gram_basis=gram_basis,
        constraint_monomials=constraint_monomials, lie_matrix=lie_matrix,
        residual_degree=residual_degree, ball_radius=ball_radius,
        ball_basis=ball_basis,
    )


def _ball_polynomial(program: SosBoundProgram) -> Polynomial:
    """R^2 - |x|^2 expressed in the scaled coordinates."""
    d = program.system.dimension
    terms: dict[Monomial, float] = {(0,) * d: program.ball_radius ** 2}
    for i, s in enumerate(program.scales):
        mono = tuple(2 if j == i else 0 for j in range(d))
        terms[mono] = -(s ** 2)
    return Polynomial(d, terms)


def assemble_sdp(program: SosBoundProgram) -> SdpProblem:
    """Emit the standard-form SDP: minimize U subject to coefficient matching.

    Free scalars are (U, V coefficients); one PSD block carries the Gram
    matrix, plus one more for the ball multiplier when present. Ordering of
    constraints and basis elements is graded lexicographic throughout, so
    rebuilding the same program gives bit-identical data.
    """
    m = program.n_constraints
    index = {mono: i for i, mono in enumerate(program.constraint_monomials)}

    nb = len(program.gram_basis)
    A_gram = np.zeros((m, nb, nb))
    for i in range(nb):
        for j in range(i, nb):
            mono = tuple(a + b for a, b in zip(program.gram_basis[i], program.gram_basis[j]))
            ci = index[mono]
            A_gram[ci, i, j] -= 1.0
            if i != j:
                A_gram[ci, j, i] -= 1.0

    F = np.zeros((m, program.n_free))
    const_index = index[(0,) * program.system.dimension]
    F[const_index, 0] = 1.0
    F[:, 1:] = -program.lie_matrix

    b = np.zeros(m)
    for mono, coeff in program.phi_hat.terms.items():
        b[index[mono]] = coeff

    block_dims = [nb]
    C = [np.zeros((nb, nb))]
    A = [A_gram]

    if program.ball_radius is not None:
        ball = _ball_polynomial(program)
        nbb = len(program.ball_basis)
        A_ball = np.zeros((m, nbb, nbb))
        for i in range(nbb):
            for j in range(i, nbb):
                pair = Polynomial.monomial(
                    tuple(a + b for a, b in zip(program.ball_basis[i], program.ball_basis[j])))
                prod = pair * ball
                for mono, coeff in prod.terms.items():
                    ci = index[mono]
                    A_ball[ci, i, j] -= 0.5 * coeff
                    A_ball[ci, j, i] -= 0.5 * coeff
                    if i == j:
                        A_ball[ci, i, j] -= 0.5 * coeff
                        A_ball[ci, j, i] -= 0.5 * coeff
        # entries were accumulated symmetrically: <A_ball, Sigma> reproduces
        # the coefficient of sigma * ball at each constraint monomial
        block_dims.append(nbb)
        C.append(np.zeros((nbb, nbb)))
        A.append(A_ball)

    c_free = np.zeros(program.n_free)
    c_free[0] = 1.0
    return SdpProblem(block_dims, program.n_free, c_free, C, A, F, b)


def gram_expansion(gram: np.ndarray, basis: list[Monomial]) -> Polynomial:
    """The polynomial b^T Q b for a symmetric matrix Q over a monomial basis."""
    d = len(basis[0])
    terms: dict[Monomial, float] = {}
    n = len(basis)
    for i in range(n):
        for j in range(n):
            mono = tuple(a + b for a, b in zip(basis[i], basis[j]))
            terms[mono] = terms.get(mono, 0.0) + gram[i, j]
    return Polynomial(d, terms)


@dataclass
class BoundCertificate:
    """A bound U with its auxiliary polynomial and Gram-matrix witness.

    `v` lives in the original coordinates; `gram` and `gram_basis` live in the
    rescaled coordinates recorded in `scales`. The defining identity, checked
    by `validate_certificate`, is

        U - Phi~ - f~ . grad V~  =  b^T gram b   (+ multiplier * ball term)

    in the rescaled frame, where ~ marks rescaled quantities.
    """

    bound: float
    aux_degree: int
    v: Polynomial
    gram: np.ndarray
    gram_basis: list[Monomial]
    scales: tuple[float, ...]
    phi: Polynomial
    system: PolySystem
    residual_infnorm: float
    gram_min_eigenvalue: float
    valid: bool
    solver: dict
    ball_radius: float | None = None
    ball_gram: np.ndarray | None = None
    ball_basis: list[Monomial] = field(default_factory=list)

    def identity_hash(self) -> str:
        """Stable identifier binding derived artifacts to this certificate."""
        blob = self.v.to_text() + format_float(self.bound)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    # -- json ----------------------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "format": "ergobound-certificate-v1",
            "bound": self.bound,
            "aux_degree": self.aux_degree,
            "v": self.v.to_text(),
            "gram_basis": [list(m) for m in self.gram_basis],
            "gram": [float(x) for x in self.gram.ravel()],
            "scaling": list(self.scales),
            "phi": self.phi.to_text(),
            "system": {
                "dimension": self.system.dimension,
                "components": [c.to_text() for c in self.system.components],
                "parameters": dict(self.system.parameters),
                "variables": list(self.system.variables),
            },
            "residual_infnorm": self.residual_infnorm,
            "gram_min_eigenvalue": self.gram_min_eigenvalue,
            "valid": self.valid,
            "solver": self.solver,
            "ball_radius": self.ball_radius,
            "ball_basis": [list(m) for m in self.ball_basis],
            "ball_gram": ([float(x) for x in self.ball_gram.ravel()]
                          if self.ball_gram is not None else None),
        }
        return dumps_json(doc)

    @classmethod
    def from_json(cls, text: str) -> "BoundCertificate":
        doc = loads_json(text)
        if doc.get("format") != "ergobound-certificate-v1":
            raise ValueError("not an ergobound certificate document")
        gram_basis = [tuple(m) for m in doc["gram_basis"]]
        n = len(gram_basis)
        gram = np.array(doc["gram"], dtype=float).reshape(n, n)
        sysdoc = doc["system"]
        system = PolySystem(
            sysdoc["dimension"],
            tuple(Polynomial.from_text(t) for t in sysdoc["components"]),
            dict(sysdoc["parameters"]),
            tuple(sysdoc["variables"]),
        )
        ball_basis = [tuple(m) for m in doc.get("ball_basis", [])]
        ball_gram = doc.get("ball_gram")
        if ball_gram is not None:
            nb = len(ball_basis)
            ball_gram = np.array(ball_gram, dtype=float).reshape(nb, nb)
        return cls(
            bound=float(doc["bound"]),
            aux_degree=int(doc["aux_degree"]),
            v=Polynomial.from_text(doc["v"]),
            gram=gram,
            gram_basis=gram_basis,
            scales=tuple(float(s) for s in doc["scaling"]),
            phi=Polynomial.from_text(doc["phi"]),
            system=system,
            residual_infnorm=float(doc["residual_infnorm"]),
            gram_min_eigenvalue=float(doc["gram_min_eigenvalue"]),
            valid=bool(doc["valid"]),
            solver=dict(doc["solver"]),
            ball_radius=doc.get("ball_radius"),
            ball_gram=ball_gram,
            ball_basis=ball_basis,
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "BoundCertificate":
        with open(path) as fh:
            return cls.from_json(fh.read())


def _reconstruction_residual(cert: BoundCertificate) -> Polynomial:
    """U - Phi~ - f~.grad(V~) - b^T Q b (- ball term), in rescaled coordinates."""
    scaled_system = cert.system.rescaled(cert.scales)
    phi_tilde = affine_rescale(cert.phi, cert.scales)
    v_tilde = affine_rescale(cert.v, cert.scales)
    resid = (Polynomial.constant(cert.phi.dimension, cert.bound)
             - phi_tilde - lie_derivative(scaled_system, v_tilde)
             - gram_expansion(cert.gram, cert.gram_basis))
    if cert.ball_radius is not None and cert.ball_gram is not None:
        d = cert.phi.dimension
        terms: dict[Monomial, float] = {(0,) * d: cert.ball_radius ** 2}
        for i, s in enumerate(cert.scales):
            mono = tuple(2 if j == i else 0 for j in range(d))
            terms[mono] = -(s ** 2)
        ball = Polynomial(d, terms)
        resid = resid - gram_expansion(cert.ball_gram, cert.ball_basis) * ball
    return resid


def extract_certificate(program: SosBoundProgram, solution: SdpSolution,
                        tol_psd: float = DEFAULT_TOL_PSD,
                        tol_fit: float = DEFAULT_TOL_FIT) -> BoundCertificate:
    """Recover (U, V, Gram) from a solved SDP and re-derive the validation scalars.

    The residual and eigenvalue checks are reconstructed directly from the
    extracted polynomials, not taken from solver state.
    """
    scale_rel = max(solution.gap, solution.primal_infeasibility,
                    solution.dual_infeasibility) / (1.0 + abs(solution.primal_objective))
    if not solution.converged and scale_rel > NEAR_CONVERGED_TOL:
        raise CertificateUnavailable(
            f"solver status {solution.status!r} with residual scale {scale_rel:.2e}; "
            "no certificate extracted")

    c = program.objective_scale
    bound = c * float(solution.u[0])
    v_hat = Polynomial(program.system.dimension,
                       dict(zip(program.ansatz, solution.u[1:])))
    v_tilde = v_hat * c
    v = affine_rescale(v_tilde, tuple(1.0 / s for s in program.scales))
    gram = c * 0.5 * (solution.X[0] + solution.X[0].T)
    ball_gram = None
    if program.ball_radius is not None:
        ball_gram = c * 0.5 * (solution.X[1] + solution.X[1].T)

    cert = BoundCertificate(
        bound=bound, aux_degree=program.aux_degree, v=v, gram=gram,
        gram_basis=list(program.gram_basis), scales=program.scales,
        phi=program.phi, system=program.system,
        residual_infnorm=0.0, gram_min_eigenvalue=0.0, valid=False,
        solver={
            "status": solution.status,
            "iterations": solution.iterations,
            "gap": c * solution.gap,
            "primal_infeasibility": solution.primal_infeasibility,
            "dual_infeasibility": solution.dual_infeasibility,
        },
        ball_radius=program.ball_radius,
        ball_gram=ball_gram,
        ball_basis=list(program.ball_basis),
    )
    report = validate_certificate(cert, program, tol_psd=tol_psd, tol_fit=tol_fit)
    cert.residual_infnorm = report.residual_infnorm
    cert.gram_min_eigenvalue = report.gram_min_eigenvalue
    cert.valid = report.valid
    return cert


@dataclass
class ValidityReport:
    valid: bool
    residual_infnorm: float
    gram_min_eigenvalue: float
    gram_norm: float
    tol_psd: float
    tol_fit: float
    pointwise_slack_bound: float | None = None

    def to_json(self) -> str:
        return dumps_json({
            "valid": self.valid,
            "residual_infnorm": self.residual_infnorm,
            "gram_min_eigenvalue": self.gram_min_eigenvalue,
            "gram_norm": self.gram_norm,
            "tol_psd": self.tol_psd,
            "tol_fit": self.tol_fit,
            "pointwise_slack_bound": self.pointwise_slack_bound,
        })


def validate_certificate(cert: BoundCertificate, program: SosBoundProgram | None = None,
                         tol_psd: float = DEFAULT_TOL_PSD,
                         tol_fit: float = DEFAULT_TOL_FIT,
                         box=None) -> ValidityReport:
    """Recheck the certificate identity coefficient-wise and the Gram spectrum.

    VALID requires the smallest Gram eigenvalue to be above -tol_psd relative
    to the Gram norm and the reconstruction residual below tol_fit relative to
    1 + |U|. If a box is given, also reports an explicit bound on the
    pointwise slack of Phi + f.grad(V) <= U over that box, obtained by summing
    |residual coefficient| * max |monomial| there.
    """
    if program is not None:
        if program.aux_degree != cert.aux_degree or program.scales != cert.scales:
            raise ValueError("certificate does not match the given program")
    resid = _reconstruction_residual(cert)
    residual_infnorm = resid.infnorm()
    eigs = eigvalsh(cert.gram)
    gram_min = float(eigs[0])
    gram_norm = float(max(abs(eigs[0]), abs(eigs[-1])))
    if cert.ball_gram is not None and cert.ball_gram.size:
        ball_eigs = eigvalsh(cert.ball_gram)
        gram_min = min(gram_min, float(ball_eigs[0]))
        gram_norm = max(gram_norm, float(max(abs(ball_eigs[0]), abs(ball_eigs[-1]))))
    valid = (gram_min >= -tol_psd * (1.0 + gram_norm)
             and residual_infnorm <= tol_fit * (1.0 + abs(cert.bound)))

    slack = None
    if box is not None:
        # scale the box into the certificate frame, then bound each monomial
        hi = [max(abs(lo / s), abs(hi_ / s))
              for (lo, hi_), s in zip(box, cert.scales)]
        slack = 0.0
        for mono, coeff in resid.terms.items():
            val = abs(coeff)
            for h, e in zip(hi, mono):
                val *= h ** e
            slack += val
    return ValidityReport(valid=valid, residual_infnorm=residual_infnorm,
                          gram_min_eigenvalue=gram_min, gram_norm=gram_norm,
                          tol_psd=tol_psd, tol_fit=tol_fit,
                          pointwise_slack_bound=slack)


def solve_bound(system: PolySystem, phi: Polynomial, aux_degree: int,
                options: SolveOptions | None = None,
                ball_radius: float | None = None,
                scales=None) -> tuple[SosBoundProgram, SdpSolution, BoundCertificate]:
    """Full pipeline: build, assemble, solve, extract, validate."""
    program = build_bound_program(system, phi, aux_degree,
                                  ball_radius=ball_radius, scales=scales)
    problem = assemble_sdp(program)
    solution = solve(problem, options)
    cert = extract_certificate(program, solution)
    return program, solution, cert
