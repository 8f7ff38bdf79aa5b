"""Pi-orthogonality and pole-zero symmetry checks.

A square system P is Pi-orthogonal when P Pi P~ = Pi, with Pi the Gram
matrix of the canonical (anti)commutation relations in the canonical
ordering u = (u1; u1^ddag).  For such systems poles and transmission
zeros mirror through the imaginary axis: P = -Z.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import statespace as ssm
from .errors import (NonMinimal, NonSquare, ShapeMismatch, SylvesterSingular)
from .polyrat import RatFun, RatMat, rat_equal
from .smatrix import SelfEnergy
from .statespace import StateSpace

BOSON = "boson"
FERMION = "fermion"

PAIR_TOL = 1e-7


@dataclass(frozen=True)
class PiForm:
    """Canonical Gram matrix [[0, I], [sigma I, 0]]: sigma=+1 fermion, -1 boson."""

    k: int
    statistics: str = BOSON

    def __post_init__(self):
        if self.statistics not in (BOSON, FERMION):
            raise ValueError(f"unknown statistics {self.statistics!r}")

    @property
    def sign(self) -> int:
        return 1 if self.statistics == FERMION else -1

    @property
    def matrix(self) -> np.ndarray:
        k = self.k
        out = np.zeros((2 * k, 2 * k), dtype=complex)
        out[:k, k:] = np.eye(k)
        out[k:, :k] = self.sign * np.eye(k)
        return out


def _pi_matrix(pi) -> np.ndarray:
    return pi.matrix if isinstance(pi, PiForm) else np.asarray(pi, dtype=complex)


def interleaved_to_canonical(k: int) -> np.ndarray:
    """Map the interleaved doubled vector (a1, a1^dag, ...) to (a1..ak, a1^dag..)."""
    out = np.zeros((2 * k, 2 * k), dtype=complex)
    for i in range(k):
        out[i, 2 * i] = 1.0
        out[k + i, 2 * i + 1] = 1.0
    return out


def quadrature_to_canonical(k: int) -> np.ndarray:
    """Map interleaved quadratures (xi1, eta1, ...) to (xi1..xik, -i eta1..)."""
    out = np.zeros((2 * k, 2 * k), dtype=complex)
    for i in range(k):
        out[i, 2 * i] = 1.0
        out[k + i, 2 * i + 1] = -1j
    return out


def is_pi_orthogonal(P, pi, tol: float = 1e-9) -> bool:
    """Check P Pi P~ = Pi for a rational or constant square matrix."""
    pim = _pi_matrix(pi)
    P = P if isinstance(P, RatMat) else RatMat.from_const(P)
    n = P.shape[0]
    if P.shape != (n, n) or pim.shape != (n, n):
        raise ShapeMismatch("P and Pi must be square of equal size")
    lhs = P @ RatMat.from_const(pim) @ P.tilde()
    return rat_equal(lhs, RatMat.from_const(pim), tol)


@dataclass(frozen=True)
class PiCertificate:
    ok: bool
    V: np.ndarray | None
    failed: str | None
    residual: float


def pi_certificate(ss: StateSpace, pi, tol: float = 1e-8) -> PiCertificate:
    """Solve A V + V A^T + B Pi B^T = 0 and verify the output conditions.

    Requires a minimal realization; a shared spectrum of A and -A^T makes
    the certificate equation degenerate and is reported, not regularized.
    """
    pim = _pi_matrix(pi)
    sign = pi.sign if isinstance(pi, PiForm) else None
    if not (ssm.is_controllable(ss) and ssm.is_observable(ss)):
        raise NonMinimal("certificate requires a minimal realization")
    n = ss.n
    A, B, C, D = ss.A, ss.B, ss.C, ss.D
    scale = 1 + np.linalg.norm(D)
    dcond = np.linalg.norm(D @ pim @ D.T - pim)
    if dcond > tol * scale:
        return PiCertificate(False, None, "D Pi D^T = Pi", float(dcond))
    if n == 0:
        return PiCertificate(True, np.zeros((0, 0)), None, float(dcond))
    eigs = np.linalg.eigvals(A)
    min_sum = min(abs(li + lj) for li in eigs for lj in eigs)
    if min_sum < 1e-10 * (1 + max(abs(eigs))):
        raise SylvesterSingular("A and -A^T share eigenvalues")
    lhs = np.kron(np.eye(n), A) + np.kron(A, np.eye(n))
    rhs = -(B @ pim @ B.T).reshape(n * n, order="F")
    V = np.linalg.solve(lhs, rhs).reshape((n, n), order="F")
    sylv = np.linalg.norm(A @ V + V @ A.T + B @ pim @ B.T)
    outc = np.linalg.norm(C @ V + D @ pim @ B.T)
    scale = 1 + np.linalg.norm(B) ** 2 + np.linalg.norm(V)
    if outc > tol * scale:
        return PiCertificate(False, V, "C V + D Pi B^T = 0", float(outc))
    if sign is not None:
        symm = np.linalg.norm(V.T - sign * V)
        if symm > tol * scale:
            return PiCertificate(False, V, "V^T = sigma V", float(symm))
    return PiCertificate(True, V, None, float(max(sylv, outc)))


@dataclass(frozen=True)
class PzReport:
    ok: bool
    pairs: tuple[tuple[complex, complex], ...]
    residuals: tuple[float, ...]
    unpaired: tuple[complex, ...]


def pole_zero_symmetry(ss: StateSpace, tol: float = PAIR_TOL) -> PzReport:
    """Check P = -Z by greedy nearest pairing of poles against mirrored zeros."""
    ps = ssm.poles(ss)
    zs = ssm.transmission_zeros(ss)
    mirror = [-z for z in zs]
    pairs, residuals = [], []
    remaining = list(mirror)
    unpaired = []
    for p in ps:
        if not remaining:
            unpaired.append(p)
            continue
        j = min(range(len(remaining)), key=lambda i: abs(remaining[i] - p))
        r = abs(remaining[j] - p)
        if r <= tol * (1 + abs(p)):
            pairs.append((p, -remaining[j]))
            residuals.append(float(r))
            remaining.pop(j)
        else:
            unpaired.append(p)
    ok = not unpaired and not remaining and len(ps) == len(zs)
    return PzReport(ok, tuple(pairs), tuple(residuals),
                    tuple(unpaired + remaining))


def _se_ratmat(K) -> RatMat:
    if isinstance(K, SelfEnergy):
        return K.as_ratmat()
    if isinstance(K, RatMat):
        return K
    if isinstance(K, RatFun):
        return RatMat([[K]])
    return RatMat.from_const(np.atleast_2d(np.asarray(K, dtype=complex)))


def self_energy_symmetry_conditions(K, tol: float = 1e-12) -> bool:
    """Conditions under which a dressed cavity keeps pole-zero symmetry.

    2x2 kernels: K11(s) = -K22(-s) and even off-diagonal entries.  Scalar
    kernels enter as pair vertices and must be even.  Larger kernels are
    checked through K Pi + Pi K~ = 0 with the bosonic Pi.
    """
    Km = _se_ratmat(K)
    n = Km.shape[0]
    if n == 1:
        e = Km[0, 0]
        return rat_equal(e, e.tilde(), tol)
    if n == 2:
        k11, k12 = Km[0, 0], Km[0, 1]
        k21, k22 = Km[1, 0], Km[1, 1]
        return (rat_equal(k11, -k22.tilde(), tol)
                and rat_equal(k12, k12.tilde(), tol)
                and rat_equal(k21, k21.tilde(), tol))
    if n % 2:
        raise ShapeMismatch("self-energy must act on a doubled space")
    pim = RatMat.from_const(PiForm(n // 2, BOSON).matrix)
    lhs = Km @ pim + pim @ Km.tilde()
    return rat_equal(lhs, RatMat.from_const(np.zeros((n, n))), tol)


def self_energy_state_conditions(Kss: StateSpace, pi, tol: float = 1e-9) -> bool:
    """State-space conditions A Pi + Pi A^T = 0, B Pi - Pi C^T = 0,
    D Pi + Pi D^T = 0 for a self-energy realization whose state dimension
    matches its port count."""
    pim = _pi_matrix(pi)
    n = Kss.n
    if Kss.outputs != Kss.inputs:
        raise NonSquare("self-energy must be square")
    ok = np.linalg.norm(Kss.D @ pim + pim @ Kss.D.T) <= tol * (1 + np.linalg.norm(Kss.D))
    if n == 0:
        return bool(ok)
    if n != pim.shape[0]:
        raise ShapeMismatch("state dimension must match the port count")
    ok = ok and np.linalg.norm(Kss.A @ pim + pim @ Kss.A.T) <= tol * (1 + np.linalg.norm(Kss.A))
    ok = ok and np.linalg.norm(Kss.B @ pim - pim @ Kss.C.T) <= tol * (1 + np.linalg.norm(Kss.B))
    return bool(ok)


def embed_self_energy(g: complex, Kss: StateSpace) -> StateSpace:
    """Realization of a cavity dressed by a self-energy with realization Kss.

    Composite: A = [[-D_K - 2|g|^2, C_K], [-B_K, A_K]], B = [-2g*; 0],
    C = [2g, 0], D = I on the cavity's doubled ports.
    """
    p = Kss.outputs
    if Kss.inputs != p:
        raise ShapeMismatch("self-energy realization must be square")
    a = 2 * abs(g) ** 2
    n = Kss.n
    A = np.block([
        [-Kss.D - a * np.eye(p), Kss.C],
        [-Kss.B, Kss.A],
    ]) if n else (-Kss.D - a * np.eye(p))
    B = np.vstack([-2 * np.conj(g) * np.eye(p), np.zeros((n, p))])
    C = np.hstack([2 * g * np.eye(p), np.zeros((p, n))])
    return StateSpace(A, B, C, np.eye(p))
