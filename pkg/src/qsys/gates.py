"""Gate catalog: reactance matrices, Cayley transforms, gauge checks.

A gate is specified by a square reactance matrix G through the boundary
relation (in - out) + G (in + out) = 0, i.e. its transfer matrix is the
Cayley transform (I + G)(I - G)^-1.

Bases
-----
``annihilation``
    one slot per field (phi_1, phi_2, ...); used by number-conserving gates.
``doubled``
    two slots per field, interleaved (phi_1, phi_1^dag, phi_2, ...); used by
    gates that mix a field with its conjugate.
``quadrature``
    two slots per field (xi_1, eta_1, xi_2, ...), reached from the doubled
    basis by the per-field rotation QUAD_ROT.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import (BadParam, BasisMismatch, CayleySingular,
                     CompositionSingular, DanglingInternalPort,
                     FeedbackSingular, MixedBasis, ShapeMismatch,
                     UnknownCatalogName)
from .polyrat import RatFun, RatMat

ANNIHILATION = "annihilation"
DOUBLED = "doubled"
QUADRATURE = "quadrature"

GAUGE_TOL = 1e-10

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
Q_PLUS = np.eye(2) + SIGMA_X
Q_MINUS = np.eye(2) - SIGMA_X
Q_NIL = SIGMA_Z + 1j * SIGMA_Y     # squares to zero; the XX gate generator

#: per-field rotation from (phi, phi^dag) to (xi, eta)
QUAD_ROT = np.array([[1, 1], [-1j, 1j]], dtype=complex) / np.sqrt(2)

_UNITARY_KINDS = {"su2", "controlled_unitary"}
_NONUNITARY_KINDS = {"squeeze", "cross_squeeze", "qnd", "xx"}

MatrixLike = Union[np.ndarray, RatMat]


def sigma_z_blocks(n_slots: int) -> np.ndarray:
    """blockdiag(sigma_z, ...) for a doubled basis with n_slots slots."""
    if n_slots % 2:
        raise ShapeMismatch("doubled basis needs an even number of slots")
    return np.diag([1.0 if i % 2 == 0 else -1.0 for i in range(n_slots)]).astype(complex)


@dataclass(frozen=True)
class Reactance:
    """Square gate generator with basis and port bookkeeping."""

    matrix: MatrixLike
    basis: str
    partition: tuple[int, ...]
    kind: str = "custom"

    def __post_init__(self):
        m = self.matrix
        shape = m.shape
        if shape[0] != shape[1]:
            raise ShapeMismatch("reactance must be square")
        if sum(self.partition) != shape[0]:
            raise ShapeMismatch("partition does not cover the matrix")
        if isinstance(m, np.ndarray):
            mat = np.asarray(m, dtype=complex)
            if self.kind in _UNITARY_KINDS:
                if np.linalg.norm(mat.conj().T + mat) > GAUGE_TOL * (1 + np.linalg.norm(mat)):
                    raise BadParam(f"{self.kind}: generator must be anti-Hermitian")
            if self.kind in _NONUNITARY_KINDS:
                sz = sigma_z_blocks(shape[0])
                resid = np.linalg.norm(sz @ mat + mat.conj().T @ sz)
                if resid > GAUGE_TOL * (1 + np.linalg.norm(mat)):
                    raise BadParam(f"{self.kind}: non-unitary gauge condition violated")
            frozen = mat.copy()
            frozen.flags.writeable = False
            object.__setattr__(self, "matrix", frozen)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_constant(self) -> bool:
        return isinstance(self.matrix, np.ndarray)


@dataclass(frozen=True)
class AffineMap:
    """Input-output relation out = linear @ in + offset."""

    linear: MatrixLike
    offset: np.ndarray
    basis: str

    def __post_init__(self):
        off = np.asarray(self.offset, dtype=complex).reshape(-1)
        if len(off) != self.linear.shape[0]:
            raise ShapeMismatch("offset length must match the output dimension")
        off = off.copy()
        off.flags.writeable = False
        object.__setattr__(self, "offset", off)

    def __call__(self, vec):
        lin = self.linear
        if isinstance(lin, RatMat):
            raise BasisMismatch("cannot apply a rational map to a numeric vector")
        return lin @ np.asarray(vec, dtype=complex) + self.offset


def make_gate(kind: str, **params):
    """Catalog constructor; returns a Reactance or, for displacement, an AffineMap."""
    if kind == "su2":
        g = complex(params["g"])
        m = np.array([[0, g], [-np.conj(g), 0]], dtype=complex)
        return Reactance(m, ANNIHILATION, (1, 1), "su2")
    if kind == "squeeze":
        g = params["g"]
        if abs(abs(g) - 1.0) < 1e-12:
            raise BadParam("squeeze with |g| = 1 means infinite squeezing")
        return Reactance(float(g) * SIGMA_X, DOUBLED, (2,), "squeeze")
    if kind == "cross_squeeze":
        g = float(params["g"])
        z = np.zeros((2, 2))
        m = np.block([[z, g * SIGMA_X], [g * SIGMA_X, z]])
        return Reactance(m, DOUBLED, (2, 2), "cross_squeeze")
    if kind == "qnd":
        g = float(params["g"])
        z = np.zeros((2, 2))
        m = (g / 4) * np.block([[z, Q_MINUS], [-Q_PLUS, z]])
        return Reactance(m, DOUBLED, (2, 2), "qnd")
    if kind == "xx":
        g = float(params["g"])
        z = np.zeros((2, 2))
        m = (1j * g / 4) * np.block([[z, Q_NIL], [Q_NIL, z]])
        return Reactance(m, DOUBLED, (2, 2), "xx")
    if kind == "displacement":
        d = complex(params["d"])
        return AffineMap(np.eye(2, dtype=complex), [d, np.conj(d)], DOUBLED)
    if kind in ("controlled_unitary", "cu"):
        target = np.asarray(params["target"], dtype=complex)
        k = target.shape[0]
        proj_up = np.array([[1, 0], [0, 0]], dtype=complex)
        m = np.kron(proj_up, target)
        return Reactance(m, ANNIHILATION, (2 * k,), "controlled_unitary")
    if kind in ("tv_su2", "time_varying_su2"):
        g = params["g"]
        g = g if isinstance(g, RatFun) else RatFun.const(g)
        g_rev = g.conj_coeffs().tilde()    # g*(-s)
        m = RatMat([[RatFun.const(0), g], [-g_rev, RatFun.const(0)]])
        return Reactance(m, ANNIHILATION, (1, 1), "tv_su2")
    raise UnknownCatalogName(f"unknown gate kind {kind!r}")


def cayley(G) -> MatrixLike:
    """Transfer matrix (I + G)(I - G)^-1 of a reactance."""
    m = G.matrix if isinstance(G, Reactance) else G
    if isinstance(m, RatMat):
        n = m.shape[0]
        eye = RatMat.eye(n)
        return (eye + m) @ (eye - m).inv()
    m = np.asarray(m, dtype=complex)
    n = m.shape[0]
    denom = np.eye(n) - m
    if np.linalg.cond(denom) > 1e13:
        raise CayleySingular("I - G is singular")
    return (np.eye(n) + m) @ np.linalg.inv(denom)


def inverse_cayley(P, basis: str = ANNIHILATION,
                   partition: tuple[int, ...] | None = None,
                   kind: str = "custom") -> Reactance:
    """Reactance (P + I)^-1 (P - I) whose Cayley transform is P."""
    if isinstance(P, RatMat):
        n = P.shape[0]
        eye = RatMat.eye(n)
        m = (P + eye).inv() @ (P - eye)
    else:
        P = np.asarray(P, dtype=complex)
        n = P.shape[0]
        denom = P + np.eye(n)
        if np.linalg.cond(denom) > 1e13:
            raise CayleySingular("P + I is singular")
        m = np.linalg.solve(denom, P - np.eye(n))
    return Reactance(m, basis, partition or (n,), kind)


def doubled_transfer_blocks(G: Reactance) -> RatMat:
    """Transfer matrix on the grouped doubled basis (fields; conjugates).

    Block diagonal: (I+G)(I-G)^-1 on the fields and (I-G~)(I+G~)^-1 on the
    conjugates, where G acts on the plain field slots.
    """
    m = G.matrix
    if not isinstance(m, RatMat):
        m = RatMat.from_const(m)
    n = m.shape[0]
    eye = RatMat.eye(n)
    upper = (eye + m) @ (eye - m).inv()
    mt = m.tilde()
    lower = (eye - mt) @ (eye + mt).inv()
    zero = RatMat([[RatFun.const(0)] * n for _ in range(n)])
    return RatMat.block([[upper, zero], [zero, lower]])


def check_gauge(G) -> str:
    """Classify a constant generator: 'unitary', 'non_unitary' or 'neither'."""
    m = G.matrix if isinstance(G, Reactance) else np.asarray(G, dtype=complex)
    scale = 1 + np.linalg.norm(m)
    if np.linalg.norm(m.conj().T + m) <= GAUGE_TOL * scale:
        return "unitary"
    if m.shape[0] % 2 == 0:
        sz = sigma_z_blocks(m.shape[0])
        if np.linalg.norm(sz @ m + m.conj().T @ sz) <= GAUGE_TOL * scale:
            return "non_unitary"
    return "neither"


def _quad_rotation(n_slots: int) -> np.ndarray:
    if n_slots % 2:
        raise BasisMismatch("quadrature conversion needs even port blocks")
    blocks = [QUAD_ROT] * (n_slots // 2)
    out = np.zeros((n_slots, n_slots), dtype=complex)
    for k, b in enumerate(blocks):
        out[2 * k:2 * k + 2, 2 * k:2 * k + 2] = b
    return out


def to_quadrature(P: MatrixLike) -> MatrixLike:
    """Conjugate a doubled-basis matrix into the quadrature basis."""
    n = P.shape[0]
    rot = _quad_rotation(n)
    if isinstance(P, RatMat):
        return RatMat.from_const(rot) @ P @ RatMat.from_const(np.linalg.inv(rot))
    return rot @ P @ np.linalg.inv(rot)


def from_quadrature(P: MatrixLike) -> MatrixLike:
    n = P.shape[0]
    rot = _quad_rotation(n)
    if isinstance(P, RatMat):
        return RatMat.from_const(np.linalg.inv(rot)) @ P @ RatMat.from_const(rot)
    return np.linalg.inv(rot) @ P @ rot


def compose_bch(G1: Reactance, G2: Reactance) -> Reactance:
    """Second-order product formula G1 + G2 + [G1, G2].

    G2 is the gate the fields meet first; G1 follows it.
    """
    if G1.matrix.shape != G2.matrix.shape:
        raise ShapeMismatch("generators must have equal shape")
    if G1.basis != G2.basis:
        raise MixedBasis("cannot compose generators in different bases")
    a, b = G1.matrix, G2.matrix
    m = a + b + (a @ b - b @ a)
    return Reactance(m, G1.basis, G1.partition, "composite")


def compose_cayley(G_in: Reactance | np.ndarray,
                   G_out: Reactance | np.ndarray,
                   basis: str = ANNIHILATION) -> Reactance:
    """Single reactance for a relation (in-out) + (G_in in + G_out out) = 0."""
    a = G_in.matrix if isinstance(G_in, Reactance) else np.asarray(G_in, dtype=complex)
    b = G_out.matrix if isinstance(G_out, Reactance) else np.asarray(G_out, dtype=complex)
    if isinstance(G_in, Reactance):
        basis = G_in.basis
    n = a.shape[0]
    denom = 2 * np.eye(n) + a - b
    if np.linalg.cond(denom) > 1e13:
        raise CompositionSingular("2 + G_in - G_out is singular")
    m = np.linalg.solve(denom, a + b)
    part = G_in.partition if isinstance(G_in, Reactance) else (n,)
    return Reactance(m, basis, part, "composite")


def eliminate_internal(gates: Sequence[tuple[Reactance, Sequence[str]]]) -> tuple[Reactance, tuple[str, ...]]:
    """Concatenate gates that share fields; returns (reactance, field order).

    Each entry is (gate, field names in port order); gates apply in list
    order.  Shared fields are eliminated in the zero-separation limit, i.e.
    the total transfer matrix is the ordered product of the embedded gate
    transfer matrices, pulled back through the Cayley transform.
    """
    if not gates:
        raise DanglingInternalPort("no gates to wire")
    basis = gates[0][0].basis
    slot = 1 if basis == ANNIHILATION else 2
    order: list[str] = []
    for g, ports in gates:
        if g.basis != basis:
            raise MixedBasis("all gates must share one basis")
        if len(set(ports)) != len(ports):
            raise DanglingInternalPort("a field cannot enter one gate twice")
        if len(ports) != len(g.partition):
            raise ShapeMismatch("port list must match the gate partition")
        for name in ports:
            if name not in order:
                order.append(name)
    total = len(order) * slot
    P = np.eye(total, dtype=complex)
    for g, ports in gates:
        if not g.is_constant:
            raise BadParam("only constant gates can be wired")
        emb = np.eye(total, dtype=complex)
        pg = cayley(g)
        idx = []
        for name in ports:
            base = order.index(name) * slot
            idx.extend(range(base, base + slot))
        emb[np.ix_(idx, idx)] = pg
        P = emb @ P
    part = tuple(slot for _ in order)
    return inverse_cayley(P, basis, part, "composite"), tuple(order)


def displacement_feedforward(g0: float, k: float) -> AffineMap:
    """Quadrature map of a QND gate followed by a displacement driven by
    the QND output: rows (xi_1,out; eta_1,out) against (xi_1, eta_1, xi_2, eta_2)_in."""
    lin = np.array([[1 - g0 * k, 0, k, 0],
                    [0, 1, 0, g0]], dtype=complex)
    return AffineMap(lin, np.zeros(2), QUADRATURE)


def displacement_feedback(g_l: float, k: float) -> AffineMap:
    """Same wiring with the displacement first; the loop resums to 1/(1+g*k)."""
    denom = 1 + g_l * k
    if abs(denom) < 1e-12:
        raise FeedbackSingular("1 + g*k = 0")
    lin = np.array([[1 / denom, 0, k / denom, 0],
                    [0, 1, 0, g_l]], dtype=complex)
    return AffineMap(lin, np.zeros(2), QUADRATURE)


def interaction_coefficient(G: Reactance) -> np.ndarray:
    """Bilinear interaction coefficient: 2G in the plain basis, Sigma_z G doubled."""
    if not G.is_constant:
        raise BadParam("only constant generators have a numeric coefficient")
    if G.basis == ANNIHILATION:
        return 2 * np.asarray(G.matrix)
    if G.basis == DOUBLED:
        return sigma_z_blocks(G.size) @ np.asarray(G.matrix)
    raise BasisMismatch("no interaction coefficient in the quadrature basis")


def conjugate_coefficients(R):
    """Entrywise conjugation of coefficients, leaving s untouched.

    Together with tilde this produces g*(-s)-type factors.
    """
    if isinstance(R, (RatFun, RatMat)):
        return R.conj_coeffs()
    return np.conj(np.asarray(R, dtype=complex))


def lift_to_doubled(G: Reactance) -> Reactance:
    """Embed an annihilation-basis generator into the interleaved doubled basis.

    The conjugate slots carry -G^T, so that the lifted gate acts as
    diag((I+G)(I-G)^-1, (I-G~)(I+G~)^-1) after regrouping.
    """
    if G.basis != ANNIHILATION:
        raise BasisMismatch("gate is not in the annihilation basis")
    if not G.is_constant:
        raise BadParam("only constant gates lift")
    m = np.asarray(G.matrix)
    k = m.shape[0]
    out = np.zeros((2 * k, 2 * k), dtype=complex)
    out[0::2, 0::2] = m
    out[1::2, 1::2] = -m.T
    return Reactance(out, DOUBLED, tuple(2 * p for p in G.partition), G.kind)
