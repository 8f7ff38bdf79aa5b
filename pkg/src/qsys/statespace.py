"""State-space realizations (A, B, C, D) and their connection algebra.

Conventions: continuous time, transfer function C (sI - A)^-1 B + D.
The state dimension may be zero (pure feed-through).  All operations
return new values; arrays inside a StateSpace are frozen.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import (AlgebraicLoop, BadParam, NonSquare, ShapeMismatch,
                     SingularD, SingularT)
from .polyrat import Poly, RatFun, RatMat

RANK_TOL = 1e-9      # relative singular-value threshold for rank decisions
ROOT_TOL = 1e-7      # pole/zero matching tolerance
INF_ZERO = 1e12      # generalized eigenvalues beyond this count as infinite


def _as_matrix(x, rows=None, cols=None) -> np.ndarray:
    a = np.atleast_2d(np.asarray(x, dtype=complex))
    if rows is not None and cols is not None and a.size == 0:
        a = a.reshape(rows, cols)
    return a


class StateSpace:
    """Realization of a rational transfer matrix."""

    __slots__ = ("A", "B", "C", "D")

    def __init__(self, A, B, C, D):
        A = _as_matrix(A)
        if A.size == 0:
            A = A.reshape(0, 0)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ShapeMismatch("A must be square")
        D = _as_matrix(D)
        p, m = D.shape
        B = _as_matrix(B, n, m)
        C = _as_matrix(C, p, n)
        if B.shape != (n, m):
            raise ShapeMismatch(f"B must be {n}x{m}, got {B.shape}")
        if C.shape != (p, n):
            raise ShapeMismatch(f"C must be {p}x{n}, got {C.shape}")
        for name, mat in (("A", A), ("B", B), ("C", C), ("D", D)):
            mat = mat.copy()
            mat.flags.writeable = False
            object.__setattr__(self, name, mat)

    def __setattr__(self, *args):
        raise AttributeError("StateSpace is immutable")

    @staticmethod
    def pure_gain(D) -> "StateSpace":
        D = _as_matrix(D)
        p, m = D.shape
        return StateSpace(np.zeros((0, 0)), np.zeros((0, m)),
                          np.zeros((p, 0)), D)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def outputs(self) -> int:
        return self.D.shape[0]

    @property
    def inputs(self) -> int:
        return self.D.shape[1]

    def __repr__(self):
        return f"StateSpace(n={self.n}, outputs={self.outputs}, inputs={self.inputs})"

    def transfer_function(self) -> RatMat:
        """C (sI - A)^-1 B + D via the Leverrier-Faddeev recursion."""
        n, p, m = self.n, self.outputs, self.inputs
        if n == 0:
            return RatMat.from_const(self.D)
        # adj(sI - A) = sum_k s^(n-1-k) M_k, char(s) = s^n + sum c_k s^k
        M = np.eye(n, dtype=complex)
        adj_coeffs = [M]                 # descending powers of s
        char = [1.0 + 0j]                # descending: s^n coefficient first
        for k in range(1, n + 1):
            AM = self.A @ M
            c = -np.trace(AM) / k
            char.append(c)
            if k < n:
                M = AM + c * np.eye(n)
                adj_coeffs.append(M)
        den = Poly(list(reversed(char)))
        # numerators: C adj B, stored descending then flipped
        num_mats = [self.C @ Mk @ self.B for Mk in adj_coeffs]
        entries = []
        for i in range(p):
            row = []
            for j in range(m):
                coeffs = [num_mats[k][i, j] for k in range(n)]
                num = Poly(list(reversed(coeffs)))
                entry = RatFun(num, den) + RatFun.const(self.D[i, j])
                row.append(entry)
            entries.append(row)
        return RatMat(entries)

    def eval(self, s: complex) -> np.ndarray:
        """Dense-solve evaluation C (sI - A)^-1 B + D at one point."""
        if self.n == 0:
            return self.D.copy()
        x = np.linalg.solve(s * np.eye(self.n) - self.A, self.B)
        return self.C @ x + self.D


def transfer_function(ss: StateSpace) -> RatMat:
    return ss.transfer_function()


def parallel(s1: StateSpace, s2: StateSpace) -> StateSpace:
    if (s1.inputs, s1.outputs) != (s2.inputs, s2.outputs):
        raise ShapeMismatch("parallel connection needs matching port sizes")
    A = scipy.linalg.block_diag(s1.A, s2.A)
    B = np.vstack([s1.B, s2.B])
    C = np.hstack([s1.C, s2.C])
    return StateSpace(A, B, C, s1.D + s2.D)


def cascade(s1: StateSpace, s2: StateSpace) -> StateSpace:
    """Series connection with transfer function P1(s) P2(s)."""
    if s1.inputs != s2.outputs:
        raise ShapeMismatch("cascade connection needs s1.inputs == s2.outputs")
    A = np.block([
        [s1.A, s1.B @ s2.C],
        [np.zeros((s2.n, s1.n)), s2.A],
    ]) if s1.n + s2.n else np.zeros((0, 0))
    B = np.vstack([s1.B @ s2.D, s2.B])
    C = np.hstack([s1.C, s1.D @ s2.C])
    return StateSpace(A, B, C, s1.D @ s2.D)


def negate(ss: StateSpace) -> StateSpace:
    return StateSpace(ss.A, ss.B, -ss.C, -ss.D)


def inverse(ss: StateSpace) -> StateSpace:
    if ss.outputs != ss.inputs:
        raise NonSquare("inverse needs a square transfer matrix")
    try:
        Dinv = np.linalg.inv(ss.D)
    except np.linalg.LinAlgError as e:
        raise SingularD("D is not invertible") from e
    if np.linalg.cond(ss.D) > 1 / RANK_TOL:
        raise SingularD("D is numerically singular")
    return StateSpace(ss.A - ss.B @ Dinv @ ss.C, ss.B @ Dinv,
                      -Dinv @ ss.C, Dinv)


def ss_tilde(ss: StateSpace) -> StateSpace:
    """Realization of P~(s) = P^T(-s)."""
    return StateSpace(-ss.A.T, ss.C.T, -ss.B.T, ss.D.T)


def feedback_lft(s1: StateSpace, s2: StateSpace) -> StateSpace:
    """Closed loop [I - P1 P2]^-1 P1."""
    if s1.outputs != s2.inputs or s2.outputs != s1.inputs:
        raise ShapeMismatch("feedback loop needs complementary port sizes")
    I1 = np.eye(s1.outputs)
    I2 = np.eye(s1.inputs)
    M1 = I1 - s1.D @ s2.D
    M2 = I2 - s2.D @ s1.D
    if min(np.linalg.cond(M1), np.linalg.cond(M2)) > 1 / RANK_TOL:
        raise AlgebraicLoop("I - D1 D2 is singular")
    V = np.linalg.inv(M1)
    W = np.linalg.inv(M2)
    A = np.block([
        [s1.A + s1.B @ s2.D @ V @ s1.C, s1.B @ W @ s2.C],
        [s2.B @ V @ s1.C, s2.A + s2.B @ V @ s1.D @ s2.C],
    ]) if s1.n + s2.n else np.zeros((0, 0))
    B = np.vstack([s1.B @ W, s2.B @ V @ s1.D])
    C = np.hstack([V @ s1.C, V @ s1.D @ s2.C])
    return StateSpace(A, B, C, V @ s1.D)


def similarity(ss: StateSpace, T) -> StateSpace:
    T = _as_matrix(T)
    if T.shape != (ss.n, ss.n):
        raise ShapeMismatch("T must match the state dimension")
    if ss.n and np.linalg.cond(T) > 1 / RANK_TOL:
        raise SingularT("similarity transformation must be invertible")
    Tinv = np.linalg.inv(T) if ss.n else T
    return StateSpace(T @ ss.A @ Tinv, T @ ss.B, ss.C @ Tinv, ss.D)


def _rank(mat: np.ndarray, tol: float) -> int:
    if mat.size == 0:
        return 0
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


def is_controllable(ss: StateSpace, tol: float = RANK_TOL) -> bool:
    """PBH test: rank [lambda I - A, B] = n at every eigenvalue of A."""
    if ss.n == 0:
        return True
    for lam in np.linalg.eigvals(ss.A):
        M = np.hstack([lam * np.eye(ss.n) - ss.A, ss.B])
        if _rank(M, tol) < ss.n:
            return False
    return True


def is_observable(ss: StateSpace, tol: float = RANK_TOL) -> bool:
    """PBH test on the stacked [lambda I - A; C]."""
    if ss.n == 0:
        return True
    for lam in np.linalg.eigvals(ss.A):
        M = np.vstack([lam * np.eye(ss.n) - ss.A, ss.C])
        if _rank(M, tol) < ss.n:
            return False
    return True


def _orth(mat: np.ndarray, tol: float) -> np.ndarray:
    if mat.size == 0:
        return np.zeros((mat.shape[0], 0))
    u, sv, _ = np.linalg.svd(mat, full_matrices=False)
    if sv.size == 0 or sv[0] == 0.0:
        return np.zeros((mat.shape[0], 0))
    r = int(np.sum(sv > tol * sv[0]))
    return u[:, :r]


def _reachable_basis(A: np.ndarray, B: np.ndarray, tol: float) -> np.ndarray:
    n = A.shape[0]
    V = _orth(B, tol)
    for _ in range(n):
        if V.shape[1] >= n:
            break
        W = _orth(np.hstack([V, A @ V]), tol)
        if W.shape[1] == V.shape[1]:
            break
        V = W
    return V


def minimal_realization(ss: StateSpace, tol: float = RANK_TOL) -> StateSpace:
    """Controllable and observable realization with the same transfer function.

    Kalman staircase: project onto the reachable subspace, then onto the
    observable subspace of the result.
    """
    if ss.n == 0:
        return ss
    V = _reachable_basis(ss.A, ss.B, tol)
    A1 = V.conj().T @ ss.A @ V
    B1 = V.conj().T @ ss.B
    C1 = ss.C @ V
    W = _reachable_basis(A1.conj().T, C1.conj().T, tol)
    A2 = W.conj().T @ A1 @ W
    B2 = W.conj().T @ B1
    C2 = C1 @ W
    return StateSpace(A2, B2, C2, ss.D)


def poles(ss: StateSpace, tol: float = RANK_TOL) -> list[complex]:
    """Eigenvalues of the A-matrix of a minimal realization."""
    mr = minimal_realization(ss, tol)
    if mr.n == 0:
        return []
    return [complex(x) for x in np.linalg.eigvals(mr.A)]


def _poly_det(mat: list[list[Poly]]) -> Poly:
    """Determinant of a polynomial matrix by memoized Laplace expansion."""
    n = len(mat)
    cache: dict[tuple[int, ...], Poly] = {}

    def rec(cols: tuple[int, ...]) -> Poly:
        if not cols:
            return Poly.one()
        if cols in cache:
            return cache[cols]
        row = n - len(cols)
        acc = Poly()
        for k, j in enumerate(cols):
            entry = mat[row][j]
            if entry.is_zero:
                continue
            sub = rec(cols[:k] + cols[k + 1:])
            term = entry * sub
            acc = acc + (term if k % 2 == 0 else -term)
        cache[cols] = acc
        return acc

    return rec(tuple(range(n)))


def transmission_zeros(ss: StateSpace, tol: float = RANK_TOL) -> list[complex]:
    """Finite transmission zeros of a square system.

    Computed as the finite generalized eigenvalues of the system pencil
    ([A B; C D], diag(I, 0)); for small sizes the result is cross-checked
    against the roots of the symbolically expanded pencil determinant.
    """
    if ss.outputs != ss.inputs:
        raise NonSquare("transmission zeros need a square transfer matrix")
    mr = minimal_realization(ss, tol)
    n, m = mr.n, mr.inputs
    M = np.block([[mr.A, mr.B], [mr.C, mr.D]])
    N = scipy.linalg.block_diag(np.eye(n), np.zeros((m, m)))
    w = scipy.linalg.eig(M, N, right=False)
    zs = [complex(z) for z in w if np.isfinite(z) and abs(z) <= INF_ZERO]
    if n + m <= 8:
        svar = Poly.variable()
        pm: list[list[Poly]] = []
        for i in range(n + m):
            row = []
            for j in range(n + m):
                if i < n and j < n:
                    p = (svar if i == j else Poly()) - Poly((mr.A[i, j],))
                elif i < n:
                    p = Poly((-mr.B[i, j - n],))
                elif j < n:
                    p = Poly((-mr.C[i - n, j],))
                else:
                    p = Poly((-mr.D[i - n, j - n],))
                row.append(p)
            pm.append(row)
        det = _poly_det(pm)
        if not det.is_zero and det.degree > 0:
            sym = det.roots()
            if not _multiset_close(zs, sym, ROOT_TOL):
                raise AssertionError(
                    "pencil eigenvalues disagree with symbolic determinant roots")
        elif not det.is_zero:
            # constant nonzero determinant: no finite zeros
            if zs:
                raise AssertionError("pencil reported zeros but determinant is constant")
    return zs


def _multiset_close(a: Sequence[complex], b: Sequence[complex],
                    tol: float = ROOT_TOL) -> bool:
    """Greedy nearest-neighbor multiset comparison with relative tolerance."""
    if len(a) != len(b):
        return False
    remaining = list(b)
    for x in a:
        if not remaining:
            return False
        j = min(range(len(remaining)), key=lambda k: abs(remaining[k] - x))
        if abs(remaining[j] - x) > tol * (1 + abs(x)):
            return False
        remaining.pop(j)
    return True


def _poly_divmod(a: Poly, b: Poly) -> tuple[Poly, Poly]:
    if b.is_zero:
        raise ZeroDivisionError("polynomial division by zero")
    if a.is_zero or a.degree < b.degree:
        return Poly(), a
    rem = list(a.coeffs)
    div = list(b.coeffs)
    dq = len(rem) - len(div)
    quot = [0j] * (dq + 1)
    for k in range(dq, -1, -1):
        coef = rem[k + len(div) - 1] / div[-1]
        quot[k] = coef
        for j, d in enumerate(div):
            rem[k + j] -= coef * d
    return Poly(quot), Poly(rem[:len(div) - 1])


def from_ratfun(r: RatFun) -> StateSpace:
    """Controllable canonical realization of a proper rational function."""
    q, rem = _poly_divmod(r.num, r.den)
    if q.degree > 0:
        raise BadParam("rational function is improper; no state-space form")
    d = q.coeffs[0] if q.coeffs else 0j
    n = r.den.degree
    if n == 0:
        return StateSpace.pure_gain([[d]])
    den = r.den  # monic by construction
    A = np.zeros((n, n), dtype=complex)
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = [-c for c in den.coeffs[:-1]]
    B = np.zeros((n, 1), dtype=complex)
    B[-1, 0] = 1.0
    C = np.zeros((1, n), dtype=complex)
    for k, c in enumerate(rem.coeffs):
        C[0, k] = c
    return StateSpace(A, B, C, [[d]])


def from_ratmat(R: RatMat, tol: float = RANK_TOL) -> StateSpace:
    """Minimal realization of a proper rational matrix, entry by entry."""
    p, m = R.shape
    pieces = []
    D = np.zeros((p, m), dtype=complex)
    for i in range(p):
        for j in range(m):
            ssij = from_ratfun(R.rows[i][j])
            D[i, j] += ssij.D[0, 0]
            if ssij.n:
                pieces.append((i, j, ssij))
    ntot = sum(x[2].n for x in pieces)
    A = np.zeros((ntot, ntot), dtype=complex)
    B = np.zeros((ntot, m), dtype=complex)
    C = np.zeros((p, ntot), dtype=complex)
    at = 0
    for i, j, ssij in pieces:
        k = ssij.n
        A[at:at + k, at:at + k] = ssij.A
        B[at:at + k, j] = ssij.B[:, 0]
        C[i, at:at + k] = ssij.C[0, :]
        at += k
    return minimal_realization(StateSpace(A, B, C, D), tol)
