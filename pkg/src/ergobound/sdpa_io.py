"""Sparse SDPA text format (.dat-s) reading and writing.

The file encodes
    min  c . x   s.t.   X = sum_i x_i F_i - F_0  >= 0,
whose dual  max <F_0, Y> s.t. <F_i, Y> = c_i, Y >= 0  is our standard form
with A_i = F_i, b_i = c_i, and objective C = -F_0 (minimization). Problems
with free scalars are written in split form; reading always yields a problem
without free variables. Values use 17 significant digits, so a write/read
round trip reproduces every matrix entry bit-exactly.
"""

from __future__ import annotations

import numpy as np

from .polyalg import format_float
from .sdpsolve import SdpProblem, split_free_variables


def _is_diagonal_block(C: np.ndarray, A: np.ndarray) -> bool:
    n = C.shape[0]
    if n == 1:
        return True
    off = ~np.eye(n, dtype=bool)
    return not (np.any(C[off]) or np.any(A[:, off]))


def write_sdpa(problem: SdpProblem, path) -> None:
    prob = split_free_variables(problem)
    m = prob.n_constraints
    nblocks = len(prob.block_dims)
    diag = [_is_diagonal_block(prob.C[k], prob.A[k]) for k in range(nblocks)]

    lines = [f"{m}", f"{nblocks}"]
    lines.append(" ".join(str(-n if diag[k] and n > 1 else n)
                          for k, n in enumerate(prob.block_dims)))
    lines.append(" ".join(format_float(v) for v in prob.b))

    def emit(mat_no: int, blk: int, M: np.ndarray) -> None:
        n = M.shape[0]
        for i in range(n):
            for j in range(i, n):
                if M[i, j] != 0.0:
                    lines.append(f"{mat_no} {blk + 1} {i + 1} {j + 1} "
                                 + format_float(M[i, j]))

    for k in range(nblocks):
        emit(0, k, -prob.C[k])
    for ci in range(m):
        for k in range(nblocks):
            emit(ci + 1, k, prob.A[k][ci])

    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_sdpa(path) -> SdpProblem:
    with open(path) as fh:
        raw = fh.readlines()
    lines = []
    for ln in raw:
        ln = ln.strip()
        if not ln or ln.startswith("*") or ln.startswith('"'):
            continue
        lines.append(ln)

    m = int(lines[0].split()[0])
    nblocks = int(lines[1].split()[0])
    dims_signed = [int(tok.strip("{},()")) for tok in lines[2].replace(",", " ").split()]
    if len(dims_signed) != nblocks:
        raise ValueError(f"expected {nblocks} block dimensions, got {len(dims_signed)}")
    dims = [abs(n) for n in dims_signed]
    b = np.array([float(tok) for tok in lines[3].replace(",", " ").split()])
    if b.shape[0] != m:
        raise ValueError(f"expected {m} right-hand side values, got {b.shape[0]}")

    C = [np.zeros((n, n)) for n in dims]
    A = [np.zeros((m, n, n)) for n in dims]
    for ln in lines[4:]:
        toks = ln.split()
        if len(toks) != 5:
            raise ValueError(f"bad entry line: {ln!r}")
        mat_no, blk, i, j = (int(t) for t in toks[:4])
        val = float(toks[4])
        blk -= 1
        i -= 1
        j -= 1
        if not (0 <= blk < nblocks and 0 <= i < dims[blk] and 0 <= j < dims[blk]):
            raise ValueError(f"entry indices out of range: {ln!r}")
        if mat_no == 0:
            C[blk][i, j] = -val
            C[blk][j, i] = -val
        elif 1 <= mat_no <= m:
            A[blk][mat_no - 1, i, j] = val
            A[blk][mat_no - 1, j, i] = val
        else:
            raise ValueError(f"matrix number {mat_no} out of range in {ln!r}")

    return SdpProblem(dims, 0, np.zeros(0), C, A, np.zeros((m, 0)), b)
