"""Dense primal-dual interior-point solver for semidefinite programs.

Problem form (primal):

    minimize    c_free . u  +  sum_k <C_k, X_k>
    subject to  F u  +  A(X) = b,       X_k >= 0 (PSD),  u free,

where A(X)_i = sum_k <A_ik, X_k>. The dual is

    maximize    b . y
    subject to  F^T y = c_free,   A*(y) + S = C,   S_k >= 0.

The solver is an infeasible-start path-following method with Mehrotra
predictor-corrector steps and the HKM symmetrized search direction. Free
scalar variables are kept in the (quasi-definite) augmented Schur system
rather than split into PSD pairs. All linear algebra is dense; target block
sizes are a few hundred at most. Runs are deterministic: identical inputs
produce bit-identical iterate sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, eigvalsh, get_lapack_funcs, solve_triangular

STATUS_CONVERGED = "converged"
STATUS_MAX_ITERATIONS = "max-iterations"
STATUS_NUMERICAL_FAILURE = "numerical-failure"


@dataclass
class SdpProblem:
    """Standard-form SDP data. Constraint matrices must be symmetric per block."""

    block_dims: list[int]
    n_free: int
    c_free: np.ndarray            # (n_free,)
    C: list[np.ndarray]           # per block, (n, n) symmetric
    A: list[np.ndarray]           # per block, (m, n, n), A[k][i] symmetric
    F: np.ndarray                 # (m, n_free) free-variable coefficients
    b: np.ndarray                 # (m,)

    def __post_init__(self):
        self.c_free = np.asarray(self.c_free, dtype=float).reshape(self.n_free)
        self.b = np.asarray(self.b, dtype=float)
        m = self.b.shape[0]
        self.F = np.asarray(self.F, dtype=float).reshape(m, self.n_free)
        if len(self.block_dims) != len(self.C) or len(self.block_dims) != len(self.A):
            raise ValueError("block count mismatch between dims, C, and A")
        for k, n in enumerate(self.block_dims):
            self.C[k] = np.asarray(self.C[k], dtype=float)
            self.A[k] = np.asarray(self.A[k], dtype=float)
            if self.C[k].shape != (n, n):
                raise ValueError(f"C[{k}] has shape {self.C[k].shape}, expected ({n},{n})")
            if self.A[k].shape != (m, n, n):
                raise ValueError(f"A[{k}] has shape {self.A[k].shape}, expected ({m},{n},{n})")
            if not np.allclose(self.C[k], self.C[k].T, atol=1e-12):
                raise ValueError(f"C[{k}] is not symmetric")
            if not np.allclose(self.A[k], self.A[k].transpose(0, 2, 1), atol=1e-12):
                raise ValueError(f"A[{k}] constraint matrices are not symmetric")
        if not np.all(np.isfinite(self.b)) or not np.all(np.isfinite(self.c_free)):
            raise ValueError("problem data must be finite")

    @property
    def n_constraints(self) -> int:
        return self.b.shape[0]

    def apply_A(self, X: list[np.ndarray]) -> np.ndarray:
        m = self.n_constraints
        out = np.zeros(m)
        for k in range(len(self.block_dims)):
            out += self.A[k].reshape(m, -1) @ X[k].ravel()
        return out

    def apply_At(self, y: np.ndarray, k: int) -> np.ndarray:
        return np.tensordot(y, self.A[k], axes=(0, 0))

    def primal_objective(self, u: np.ndarray, X: list[np.ndarray]) -> float:
        val = float(self.c_free @ u) if self.n_free else 0.0
        for k in range(len(self.block_dims)):
            val += float(np.sum(self.C[k] * X[k]))
        return val

    def dual_objective(self, y: np.ndarray) -> float:
        return float(self.b @ y)


@dataclass
class SdpSolution:
    status: str
    u: np.ndarray
    X: list[np.ndarray]
    y: np.ndarray
    S: list[np.ndarray]
    iterations: int
    gap: float                    # final complementarity <X, S>
    primal_infeasibility: float   # ||b - F u - A(X)||_2
    dual_infeasibility: float     # Frobenius norm of all dual residuals
    primal_objective: float
    dual_objective: float
    mu_history: list[float] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == STATUS_CONVERGED


@dataclass
class SolveOptions:
    gap_tol: float = 1e-9
    feas_tol: float = 1e-9
    max_iterations: int = 200
    step_fraction: float = 0.98
    debug: bool = False           # assert weak duality at every iterate
    verbose: bool = False


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def _sym_stack(T: np.ndarray) -> np.ndarray:
    return 0.5 * (T + T.transpose(0, 2, 1))


def _boundary_step(P_chol: np.ndarray, D: np.ndarray) -> float:
    """Largest a with P + a*D still PSD, given the Cholesky factor of P."""
    W = solve_triangular(P_chol, D, lower=True)
    W = solve_triangular(P_chol, W.T, lower=True)
    lam_min = eigvalsh(_sym(W))[0]
    if lam_min >= -1e-14:
        return np.inf
    return -1.0 / lam_min


def residuals(problem: SdpProblem, u, X, y, S) -> tuple[float, float, float]:
    """Primal infeasibility, dual infeasibility, and complementarity gap.

    Recomputed from scratch; independent of any solver internals.
    """
    u = np.asarray(u, dtype=float).reshape(problem.n_free)
    y = np.asarray(y, dtype=float).reshape(problem.n_constraints)
    rp = problem.b - problem.apply_A(X)
    if problem.n_free:
        rp = rp - problem.F @ u
    dual_sq = 0.0
    gap = 0.0
    for k in range(len(problem.block_dims)):
        rd = problem.C[k] - problem.apply_At(y, k) - S[k]
        dual_sq += float(np.sum(rd * rd))
        gap += float(np.sum(X[k] * S[k]))
    rf = problem.c_free - problem.F.T @ y
    dual_sq += float(rf @ rf)
    return float(np.linalg.norm(rp)), float(np.sqrt(dual_sq)), gap


def split_free_variables(problem: SdpProblem) -> SdpProblem:
    """Rewrite free scalars as differences of two 1x1 PSD blocks.

    Used for SDPA-format export and as a cross-check against the native
    free-variable path; the split form is worse conditioned and is not the
    default anywhere else.
    """
    if problem.n_free == 0:
        return problem
    m = problem.n_constraints
    dims = list(problem.block_dims)
    C = [c.copy() for c in problem.C]
    A = [a.copy() for a in problem.A]
    for j in range(problem.n_free):
        for sign in (1.0, -1.0):
            dims.append(1)
            C.append(np.array([[sign * problem.c_free[j]]]))
            A.append((sign * problem.F[:, j]).reshape(m, 1, 1))
    return SdpProblem(dims, 0, np.zeros(0), C, A, np.zeros((m, 0)), problem.b.copy())


class _Workspace:
    """Reduced problem data for one solve: trivial 0 = 0 rows are removed.

    Such rows arise from coefficient-matching programs at monomials that no
    term can produce; their multipliers are fixed at zero and restored on
    output.
    """

    def __init__(self, problem: SdpProblem):
        m = problem.n_constraints
        sq = np.zeros(m)
        for k in range(len(problem.block_dims)):
            sq += (problem.A[k].reshape(m, -1) ** 2).sum(axis=1)
        if problem.n_free:
            sq += (problem.F ** 2).sum(axis=1)
        keep = sq > 0.0
        bad = (~keep) & (np.abs(problem.b) > 1e-12 * (1.0 + np.abs(problem.b).max(initial=0.0)))
        if np.any(bad):
            raise ValueError(
                f"constraint rows {np.flatnonzero(bad).tolist()} have empty left-hand side "
                "but nonzero right-hand side; the problem is structurally infeasible")
        self.keep = np.flatnonzero(keep)
        self.m_full = m
        self.A = [problem.A[k][self.keep] for k in range(len(problem.block_dims))]
        self.F = problem.F[self.keep]
        self.b = problem.b[self.keep]
        self.c_free = problem.c_free

    def expand_y(self, y_red: np.ndarray) -> np.ndarray:
        y = np.zeros(self.m_full)
        y[self.keep] = y_red
        return y


def solve(problem: SdpProblem, options: SolveOptions | None = None) -> SdpSolution:
    """Solve the SDP; returns the final iterate with a status flag."""
    opts = options or SolveOptions()
    ws = _Workspace(problem)
    nb = len(problem.block_dims)
    dims = problem.block_dims
    m = ws.b.shape[0]
    nf = problem.n_free
    if m == 0:
        raise ValueError("problem has no effective constraints")
    n_total = sum(dims)

    A = ws.A
    F = ws.F
    b = ws.b
    C = problem.C
    c_free = ws.c_free
    A_flat = [A[k].reshape(m, -1) for k in range(nb)]

    # SDPT3-style initial point: scaled identities sized from the data.
    norm_b = np.abs(b).max(initial=0.0)
    X, S = [], []
    for k in range(nb):
        n = dims[k]
        normsA = np.sqrt((A[k] ** 2).sum(axis=(1, 2)))
        xi = max(10.0, np.sqrt(n),
                 n * float(np.max((1.0 + np.abs(b)) / (1.0 + normsA))) if m else 10.0)
        eta = max(10.0, np.sqrt(n), float(np.linalg.norm(C[k])),
                  float(normsA.max(initial=0.0)), float(np.abs(c_free).max(initial=0.0)))
        X.append(xi * np.eye(n))
        S.append(eta * np.eye(n))
    u = np.zeros(nf)
    y = np.zeros(m)

    sytrf, sytrs = get_lapack_funcs(("sytrf", "sytrs"), (np.empty((2, 2)),))

    def kkt_factor(M: np.ndarray):
        """Factor the Jacobi-scaled augmented matrix [[M, F], [F^T, 0]]."""
        K = np.zeros((m + nf, m + nf))
        K[:m, :m] = M
        if nf:
            K[:m, m:] = F
            K[m:, :m] = F.T
        dscale = np.sqrt(np.maximum(np.abs(np.diag(K)), 1e-300))
        if nf:
            # free-variable rows have zero diagonal; scale them by column size
            fmax = np.abs(F).max(axis=0)
            dscale[m:] = np.sqrt(np.maximum(fmax, 1e-150))
        dinv = 1.0 / dscale
        Ks = K * dinv[:, None] * dinv[None, :]
        ldu, ipiv, info = sytrf(Ks, lower=1)
        if info != 0:
            # one retry with quasi-definite diagonal regularization
            reg = 1e-12 * (1.0 + float(np.abs(np.diag(Ks)).max(initial=0.0)))
            Ks = Ks.copy()
            Ks[np.arange(m), np.arange(m)] += reg
            Ks[np.arange(m, m + nf), np.arange(m, m + nf)] -= reg
            ldu, ipiv, info = sytrf(Ks, lower=1)
            if info != 0:
                return None
        return K, ldu, ipiv, dinv

    def kkt_solve(fact, rhs_y: np.ndarray, rhs_u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        K, ldu, ipiv, dinv = fact
        rhs = np.concatenate([rhs_y, rhs_u])
        sol, info = sytrs(ldu, ipiv, rhs * dinv, lower=1)
        sol = sol * dinv
        # one round of refinement on the unscaled system
        r = rhs - K @ sol
        corr, info2 = sytrs(ldu, ipiv, r * dinv, lower=1)
        if info == 0 and info2 == 0:
            sol = sol + corr * dinv
        return sol[:m], sol[m:]

    status = STATUS_MAX_ITERATIONS
    mu_history: list[float] = []
    iterations = 0
    best_merit = np.inf
    best_state = None
    stall_count = 0

    for it in range(opts.max_iterations):
        iterations = it
        rp = b - sum(A_flat[k] @ X[k].ravel() for k in range(nb))
        if nf:
            rp = rp - F @ u
        Rd = [C[k] - np.tensordot(y, A[k], axes=(0, 0)) - S[k] for k in range(nb)]
        rf = c_free - F.T @ y
        mu = sum(float(np.sum(X[k] * S[k])) for k in range(nb)) / n_total
        mu_history.append(mu)

        pobj = float(c_free @ u) if nf else 0.0
        pobj += sum(float(np.sum(C[k] * X[k])) for k in range(nb))
        dobj = float(b @ y)
        pinf = float(np.linalg.norm(rp)) / (1.0 + float(np.linalg.norm(b)))
        dnum = np.sqrt(sum(float(np.sum(r * r)) for r in Rd) + float(rf @ rf))
        dden = 1.0 + np.sqrt(sum(float(np.sum(c * c)) for c in C) + float(c_free @ c_free))
        dinf = float(dnum / dden)
        gap_rel = mu * n_total / (1.0 + abs(pobj) + abs(dobj))

        if opts.debug:
            slack = abs(float(rf @ u)) if nf else 0.0
            slack += sum(abs(float(np.sum(Rd[k] * X[k]))) for k in range(nb))
            slack += abs(float(rp @ y))
            assert pobj >= dobj - slack - 1e-7 * (1.0 + abs(pobj) + abs(dobj)), \
                "weak duality violated beyond the infeasibility slack"
        if opts.verbose:
            print(f"  it {it:3d}  mu={mu:9.2e}  gap={gap_rel:9.2e} "
                  f"pinf={pinf:9.2e}  dinf={dinf:9.2e}  pobj={pobj:+.9e}")

        merit = max(gap_rel, pinf, dinf)
        if merit < best_merit * 0.98:
            stall_count = 0
        else:
            stall_count += 1
        if merit < best_merit:
            best_merit = merit
            best_state = (u.copy(), [x.copy() for x in X], y.copy(), [s.copy() for s in S])

        if merit <= max(opts.gap_tol, opts.feas_tol):
            status = STATUS_CONVERGED
            break
        if stall_count >= 15:
            # rounding floor reached: no productive progress in 15 iterations
            break

        try:
            cholX = [cholesky(X[k], lower=True) for k in range(nb)]
            cholS = [cholesky(S[k], lower=True) for k in range(nb)]
        except np.linalg.LinAlgError:
            # an iterate left the cone at rounding level; keep the best point
            break
        Sinv = []
        for k in range(nb):
            Li = solve_triangular(cholS[k], np.eye(dims[k]), lower=True)
            Sinv.append(Li.T @ Li)

        # HKM Schur complement M_ij = tr(A_i X A_j S^-1), assembled as a Gram
        # matrix of W_i = Lx^T A_i Ls^-T so that M is symmetric PSD by
        # construction and keeps full accuracy late in the run
        M = np.zeros((m, m))
        G = []
        for k in range(nb):
            LsinvT = solve_triangular(cholS[k], np.eye(dims[k]), lower=True).T
            W = cholX[k].T @ A[k] @ LsinvT
            Wf = W.reshape(m, -1)
            M += Wf @ Wf.T
            G.append(_sym(X[k] @ Rd[k] @ Sinv[k]))
        M = _sym(M)
        fact = kkt_factor(M)
        if fact is None:
            status = STATUS_NUMERICAL_FAILURE
            break

        def newton_solve(rp_eq, rf_eq, Rd_eq, K_eq):
            """One pass of the reduced augmented solve for the Newton system

                F du + A(dX) = rp_eq,      F^T dy = rf_eq,
                A*(dy) + dS = Rd_eq,       dX + sym(X dS S^-1) = K_eq.
            """
            rhs_y = rp_eq.copy()
            for k in range(nb):
                GG = _sym(X[k] @ Rd_eq[k] @ Sinv[k])
                rhs_y += A_flat[k] @ (GG - K_eq[k]).ravel()
            dy, du = kkt_solve(fact, rhs_y, rf_eq)
            dS = [Rd_eq[k] - np.tensordot(dy, A[k], axes=(0, 0)) for k in range(nb)]
            dX = [K_eq[k] - _sym(X[k] @ dS[k] @ Sinv[k]) for k in range(nb)]
            return du, dX, dy, dS

        def direction(K_target: list[np.ndarray]):
            """Newton direction with full-system iterative refinement.

            The reduced solve loses digits when the Schur complement is nearly
            singular close to the optimum; refining against the full Newton
            equations restores the linear residual contraction of the steps.
            """
            du, dX, dy, dS = newton_solve(rp, rf, Rd, K_target)
            prev_err = np.inf
            for _ in range(6):
                e1 = rp - sum(A_flat[k] @ dX[k].ravel() for k in range(nb))
                if nf:
                    e1 = e1 - F @ du
                e2 = rf - F.T @ dy
                e3 = [Rd[k] - np.tensordot(dy, A[k], axes=(0, 0)) - dS[k] for k in range(nb)]
                e4 = [K_target[k] - dX[k] - _sym(X[k] @ dS[k] @ Sinv[k]) for k in range(nb)]
                err = max(float(np.abs(e1).max(initial=0.0)), float(np.abs(e2).max(initial=0.0)),
                          max(float(np.abs(e).max(initial=0.0)) for e in e3),
                          max(float(np.abs(e).max(initial=0.0)) for e in e4))
                if err < 1e-13 or err > 0.5 * prev_err:
                    break
                prev_err = err
                cu, cX, cy, cS = newton_solve(e1, e2, e3, e4)
                du = du + cu
                dy = dy + cy
                for k in range(nb):
                    dX[k] = dX[k] + cX[k]
                    dS[k] = dS[k] + cS[k]
            return du, dX, dy, dS

        # predictor (affine scaling)
        K_aff = [-X[k] for k in range(nb)]
        du_a, dX_a, dy_a, dS_a = direction(K_aff)
        ap = min(1.0, min((_boundary_step(cholX[k], dX_a[k]) for k in range(nb)), default=np.inf))
        ad = min(1.0, min((_boundary_step(cholS[k], dS_a[k]) for k in range(nb)), default=np.inf))
        mu_aff = sum(float(np.sum((X[k] + ap * dX_a[k]) * (S[k] + ad * dS_a[k])))
                     for k in range(nb)) / n_total
        sigma = min(1.0, max(0.0, (max(mu_aff, 0.0) / mu) ** 3))

        # corrector with Mehrotra second-order term
        tau = sigma * mu
        K_cor = [tau * Sinv[k] - X[k] - _sym(dX_a[k] @ dS_a[k] @ Sinv[k]) for k in range(nb)]
        du, dX, dy, dS = direction(K_cor)

        gamma = opts.step_fraction
        ap = min(1.0, gamma * min((_boundary_step(cholX[k], dX[k]) for k in range(nb)),
                                  default=np.inf))
        ad = min(1.0, gamma * min((_boundary_step(cholS[k], dS[k]) for k in range(nb)),
                                  default=np.inf))

        # retreat if rounding pushed an updated block off the PSD cone
        cone_ok = False
        for _ in range(6):
            X_new = [_sym(X[k] + ap * dX[k]) for k in range(nb)]
            S_new = [_sym(S[k] + ad * dS[k]) for k in range(nb)]
            try:
                for k in range(nb):
                    cholesky(X_new[k], lower=True)
                    cholesky(S_new[k], lower=True)
                cone_ok = True
                break
            except np.linalg.LinAlgError:
                ap *= 0.5
                ad *= 0.5
        if not cone_ok:
            break

        X, S = X_new, S_new
        if nf:
            u = u + ap * du
        y = y + ad * dy
        iterations = it + 1

    if status != STATUS_CONVERGED and best_state is not None:
        u, X, y, S = best_state
    u_out = u
    y_full = ws.expand_y(y)
    pinf_raw, dinf_raw, gap_raw = residuals(problem, u_out, X, y_full, S)
    return SdpSolution(
        status=status,
        u=u_out,
        X=X,
        y=y_full,
        S=S,
        iterations=iterations,
        gap=gap_raw,
        primal_infeasibility=pinf_raw,
        dual_infeasibility=dinf_raw,
        primal_objective=problem.primal_objective(u_out, X),
        dual_objective=problem.dual_objective(y_full),
        mu_history=mu_history,
    )
