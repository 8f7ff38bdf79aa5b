"""Close feedback loops across gates to produce dynamical systems.

A loop turns one field of a gate into a confined mode; the remaining
fields keep their input/output pairs.  Rational loops produce StateSpace
realizations; the infinite-mode loop is transcendental and produces a
pointwise evaluator.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.linalg

from . import statespace as ssm
from .errors import (BadLoopSpec, BadParam, BasisMismatch, EvalAtPole,
                     MixedBasis, SingularD, SingularResummation,
                     UnknownCatalogName)
from .gates import (ANNIHILATION, DOUBLED, QUADRATURE, Reactance, SIGMA_X,
                    SIGMA_Z, make_gate)
from .polyrat import RatFun, RatMat, s
from .statespace import StateSpace

SINGLE = "single"
SINGLE_DETUNED = "single_detuned"
FINITE = "finite"
INFINITE = "infinite"


@dataclass(frozen=True)
class LoopSpec:
    """Description of one closed loop.

    ``omega0`` overrides the mode frequency directly; otherwise it is
    2*pi*n0/l for the detuned single mode.  ``modes`` lists mode indices
    of a finite multimode loop.
    """

    kind: str = SINGLE
    l: float | None = None
    n0: int = 0
    omega0: float | None = None
    modes: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in (SINGLE, SINGLE_DETUNED, FINITE, INFINITE):
            raise BadLoopSpec(f"unknown loop kind {self.kind!r}")
        if self.kind in (FINITE, INFINITE) and not (self.l and self.l > 0):
            raise BadLoopSpec(f"{self.kind} loop needs a length l > 0")
        if self.kind == SINGLE_DETUNED and self.omega0 is None:
            if self.n0 and not (self.l and self.l > 0):
                raise BadLoopSpec("detuned loop needs omega0, or n0 with l > 0")
        if self.kind == FINITE and not self.modes:
            raise BadLoopSpec("finite multimode loop needs a mode list")

    def detuning(self) -> float:
        if self.omega0 is not None:
            return float(self.omega0)
        if self.n0 == 0:
            return 0.0
        return 2 * np.pi * self.n0 / self.l


def loop_propagator(spec: LoopSpec):
    """Propagator of a closed loop: a RatFun, or a callable when infinite.

    Single-mode loops absorb the loop length into the couplings, so the
    single mode is exactly 1/s; the infinite-mode evaluator keeps l.
    """
    if spec.kind == SINGLE:
        return 1 / s
    if spec.kind == SINGLE_DETUNED:
        return 1 / (s + 1j * spec.detuning())
    if spec.kind == FINITE:
        acc = RatFun.const(0)
        for n in spec.modes:
            acc = acc + 1 / (s + 2j * np.pi * n / spec.l)
        return RatFun.const(1 / spec.l) * acc
    if spec.kind == INFINITE:
        l = spec.l

        def evaluator(z: complex) -> complex:
            e = cmath.exp(-z * l)
            if abs(1 - e) < 1e-10:
                raise EvalAtPole(f"s={z} is a loop resonance")
            return 0.5 * (1 + e) / (1 - e)

        return evaluator
    raise BadLoopSpec(spec.kind)


def _loop_realization(spec: LoopSpec) -> StateSpace:
    if spec.kind == SINGLE:
        return StateSpace([[0]], [[1]], [[1]], [[0]])
    if spec.kind == SINGLE_DETUNED:
        return StateSpace([[-1j * spec.detuning()]], [[1]], [[1]], [[0]])
    if spec.kind == FINITE:
        freqs = [2 * np.pi * n / spec.l for n in spec.modes]
        A = np.diag([-1j * w for w in freqs])
        B = np.ones((len(freqs), 1))
        C = np.full((1, len(freqs)), 1 / spec.l)
        return StateSpace(A, B, C, [[0]])
    raise BadLoopSpec(f"loop kind {spec.kind!r} has no rational realization")


@dataclass(frozen=True)
class ClosedSystem:
    """A closed dynamical system: a realization or a pointwise evaluator."""

    ports: tuple[str, ...]
    basis: str
    realization: StateSpace | None = None
    evaluator: Callable[[complex], np.ndarray] | None = None

    def __post_init__(self):
        if (self.realization is None) == (self.evaluator is None):
            raise BadParam("exactly one of realization/evaluator must be set")

    @property
    def is_rational(self) -> bool:
        return self.realization is not None

    def transfer(self) -> RatMat:
        if not self.is_rational:
            raise BadLoopSpec("transcendental closure has no rational transfer")
        return self.realization.transfer_function()

    def eval(self, z: complex) -> np.ndarray:
        if self.is_rational:
            return self.realization.eval(z)
        out = self.evaluator(z)
        return np.atleast_2d(np.asarray(out, dtype=complex))


def _vertex(G: Reactance) -> np.ndarray:
    """Vertex matrix consumed by the resummation: 2G, with the off-diagonal
    doubling applied in the doubled basis."""
    m = np.asarray(G.matrix, dtype=complex)
    if G.basis == ANNIHILATION:
        return 2 * m
    if G.basis == DOUBLED:
        d = np.diag(np.diag(m))
        return d + 2 * (m - d)
    raise BasisMismatch("closure supports annihilation and doubled bases only")


def _slot_layout(G: Reactance) -> tuple[int, list[tuple[int, int]]]:
    slot = 1 if G.basis == ANNIHILATION else 2
    layout = []
    at = 0
    for size in G.partition:
        layout.append((at, size))
        at += size
    return slot, layout


def close(G: Reactance, loops: Mapping[int, LoopSpec],
          port_names: Sequence[str] | None = None) -> ClosedSystem:
    """Close the listed fields of a gate into loops.

    ``loops`` maps field indices (positions in the gate partition) to loop
    specifications.  External transfer:
    P(s) = I + W_out X (I - Delta(s) X)^-1 W_in, with X the vertex matrix
    and Delta carrying weight 1/2 on external mean fields and the loop
    propagator on loop slots.
    """
    if not G.is_constant:
        return _close_rational_gate(G, loops, port_names)
    X = _vertex(G)
    slot, layout = _slot_layout(G)
    nfields = len(G.partition)
    for idx in loops:
        if not 0 <= idx < nfields:
            raise BadLoopSpec(f"loop field index {idx} out of range")
    external = [i for i in range(nfields) if i not in loops]
    if port_names is None:
        port_names = [f"phi{i + 1}" for i in range(nfields)]
    ext_labels = []
    for i in external:
        base = [port_names[i]] if slot == 1 else [port_names[i], port_names[i] + ".dag"]
        ext_labels.extend(base)

    transcendental = any(sp.kind == INFINITE for sp in loops.values())
    ext_slots = [layout[i][0] + k for i in external for k in range(layout[i][1])]
    Wout = np.zeros((len(ext_slots), G.size), dtype=complex)
    for r, c in enumerate(ext_slots):
        Wout[r, c] = 1.0
    Win = Wout.T.copy()

    if transcendental:
        specs = dict(loops)
        evals = {i: loop_propagator(sp) for i, sp in specs.items()}

        def evaluator(z: complex) -> np.ndarray:
            delta = np.zeros((G.size, G.size), dtype=complex)
            for i in range(nfields):
                start, size = layout[i]
                if i in specs:
                    val = evals[i](z)
                    for k in range(size):
                        delta[start + k, start + k] = val
                else:
                    for k in range(size):
                        delta[start + k, start + k] = 0.5
            M = np.eye(G.size) - delta @ X
            if np.linalg.cond(M) > 1e13:
                raise SingularResummation(f"I - Delta X singular at s={z}")
            core = X @ np.linalg.solve(M, Win)
            return np.eye(len(ext_slots)) + Wout @ core

        return ClosedSystem(tuple(ext_labels), G.basis, evaluator=evaluator)

    # rational path: assemble Delta as a state-space system, one slot at a time
    blocks = []
    for i in range(nfields):
        start, size = layout[i]
        for _ in range(size):
            if i in loops:
                blocks.append(_loop_realization(loops[i]))
            else:
                blocks.append(StateSpace.pure_gain([[0.5]]))
    A = scipy.linalg.block_diag(*[b.A for b in blocks]) if blocks else np.zeros((0, 0))
    B = scipy.linalg.block_diag(*[b.B for b in blocks])
    C = scipy.linalg.block_diag(*[b.C for b in blocks])
    D = scipy.linalg.block_diag(*[b.D for b in blocks])
    delta_ss = StateSpace(A, B, C, D)
    delta_x = ssm.cascade(delta_ss, StateSpace.pure_gain(X))
    m_ss = ssm.parallel(StateSpace.pure_gain(np.eye(G.size)), ssm.negate(delta_x))
    try:
        m_inv = ssm.inverse(m_ss)
    except SingularD as e:
        raise SingularResummation("I - Delta X is identically singular") from e
    core = ssm.cascade(StateSpace.pure_gain(Wout @ X),
                       ssm.cascade(m_inv, StateSpace.pure_gain(Win)))
    closed = ssm.parallel(StateSpace.pure_gain(np.eye(len(ext_slots))), core)
    closed = ssm.minimal_realization(closed)
    return ClosedSystem(tuple(ext_labels), G.basis, realization=closed)


def _close_rational_gate(G: Reactance, loops: Mapping[int, LoopSpec],
                         port_names: Sequence[str] | None) -> ClosedSystem:
    """Closure of a gate whose reactance is rational (time-varying gates)."""
    if G.basis != ANNIHILATION:
        raise MixedBasis("rational closure supports the annihilation basis")
    m: RatMat = G.matrix
    n = m.shape[0]
    X = m * RatFun.const(2)
    nfields = len(G.partition)
    external = [i for i in range(nfields) if i not in loops]
    entries = []
    for i in range(nfields):
        if i in loops:
            prop = loop_propagator(loops[i])
            if not isinstance(prop, RatFun):
                raise BadLoopSpec("infinite loops need a constant gate")
            entries.append(prop)
        else:
            entries.append(RatFun.const(0.5))
    delta = RatMat.diag(entries)
    eye = RatMat.eye(n)
    M = (eye - delta @ X).inv()
    core = X @ M
    sel = RatMat([[RatFun.const(1.0 if j == e else 0.0) for j in range(n)]
                  for e in external])
    tf = RatMat.eye(len(external)) + sel @ core @ sel.transpose()
    if port_names is None:
        port_names = [f"phi{i + 1}" for i in range(nfields)]
    labels = tuple(port_names[i] for i in external)
    real = ssm.from_ratmat(tf)
    return ClosedSystem(labels, G.basis, realization=real)


def catalog_system(name: str, **params) -> ClosedSystem:
    """Closed systems with their printed realizations."""
    if name == "su2":
        g = complex(params["g"])
        a = -2 * abs(g) ** 2
        A = np.diag([a, a])
        B = np.diag([-2 * np.conj(g), -2 * g])
        C = np.diag([2 * g, 2 * np.conj(g)])
        return ClosedSystem(("phi1", "phi1.dag"), DOUBLED,
                            realization=StateSpace(A, B, C, np.eye(2)))
    if name == "detuned_su2":
        g = complex(params["g"])
        omega = float(params["omega"])
        A = -2 * abs(g) ** 2 * np.eye(2) - 1j * omega * SIGMA_Z
        B = -2 * np.conj(g) * np.eye(2)
        C = 2 * g * np.eye(2)
        return ClosedSystem(("phi1", "phi1.dag"), DOUBLED,
                            realization=StateSpace(A, B, C, np.eye(2)))
    if name == "cross_squeeze":
        g = float(params["g"])
        A = 2 * g ** 2 * np.eye(2)
        B = 2 * g * SIGMA_X
        C = 2 * g * SIGMA_X
        return ClosedSystem(("phi1", "phi1.dag"), DOUBLED,
                            realization=StateSpace(A, B, C, np.eye(2)))
    if name == "qnd":
        g = float(params["g"])
        B = np.array([[0, 0], [0, g]], dtype=complex)
        C = np.array([[-g, 0], [0, 0]], dtype=complex)
        return ClosedSystem(("xi1", "eta1"), QUADRATURE,
                            realization=StateSpace(np.zeros((2, 2)), B, C, np.eye(2)))
    if name == "xx":
        g = float(params["g"])
        B = np.array([[0, 0], [g, 0]], dtype=complex)
        C = np.array([[0, 0], [g, 0]], dtype=complex)
        return ClosedSystem(("xi1", "eta1"), QUADRATURE,
                            realization=StateSpace(np.zeros((2, 2)), B, C, np.eye(2)))
    if name in ("tv_su2", "time_varying_su2"):
        g = params["g"]
        g = g if isinstance(g, RatFun) else RatFun.const(g)
        grev = g.conj_coeffs().tilde()          # g*(-s)
        prod = RatFun.const(2) * g * grev
        upper = (s - prod) / (s + prod)
        prod2 = RatFun.const(2) * g.conj_coeffs() * g.tilde()
        lower = (s - prod2) / (s + prod2)
        tf = RatMat.diag([upper, lower])
        return ClosedSystem(("phi1", "phi1.dag"), DOUBLED,
                            realization=ssm.from_ratmat(tf))
    if name == "dirac":
        g = complex(params["g"])
        mass = float(params.get("m", 0.0))
        rep = params.get("rep", "weyl")
        if rep == "weyl":
            alpha_z = np.kron(np.diag([-1.0, 1.0]), SIGMA_Z)
            beta = np.kron(np.array([[0, 1], [1, 0]]), np.eye(2))
        elif rep == "dirac":
            alpha_z = np.kron(np.array([[0, 1], [1, 0]]), SIGMA_Z)
            beta = np.kron(np.diag([1.0, -1.0]), np.eye(2))
        else:
            raise UnknownCatalogName(f"unknown Dirac representation {rep!r}")
        A = -2 * abs(g) ** 2 * alpha_z - 1j * mass * beta
        B = -2 * np.conj(g) * alpha_z
        C = 2 * g * np.eye(4)
        ports = tuple(f"psi{i + 1}" for i in range(4))
        return ClosedSystem(ports, ANNIHILATION,
                            realization=StateSpace(A, B, C, np.eye(4)))
    raise UnknownCatalogName(f"no catalog system named {name!r}")


def feedback_connection(g0: complex, g1: complex) -> ClosedSystem:
    """Two gates sharing one loop: a 2-input/2-output system."""
    A = [[-2 * abs(g0) ** 2 - 2 * abs(g1) ** 2]]
    B = [[-2 * np.conj(g0), 2 * g1]]
    C = [[2 * g0], [-2 * np.conj(g1)]]
    return ClosedSystem(("phi1", "phi4"), ANNIHILATION,
                        realization=StateSpace(A, B, C, np.eye(2)))


def with_termination(g0: complex, g1: complex,
                     spec: LoopSpec = LoopSpec(SINGLE)) -> ClosedSystem:
    """Feedback connection whose second external port is itself a loop."""
    term = _loop_realization(spec)
    n = term.n
    A = np.zeros((1 + n, 1 + n), dtype=complex)
    A[0, 0] = -2 * abs(g0) ** 2
    A[0, 1:] = 2 * g1 * term.C[0, :]
    A[1:, 0] = -2 * np.conj(g1) * term.B[:, 0]
    A[1:, 1:] = term.A
    B = np.zeros((1 + n, 1), dtype=complex)
    B[0, 0] = -2 * np.conj(g0)
    C = np.zeros((1, 1 + n), dtype=complex)
    C[0, 0] = 2 * g0
    return ClosedSystem(("phi1",), ANNIHILATION,
                        realization=StateSpace(A, B, C, [[1]]))


def toeplitz_chain(gs: Sequence[float]) -> ClosedSystem:
    """Chain of loops coupled in sequence; one external field on the first gate.

    ``gs[0]`` couples the external field to the first loop; ``gs[k]`` for
    k >= 1 couples loop k to loop k+1 through the antisymmetric tridiagonal
    Toeplitz structure.  N = len(gs) loops.
    """
    if not gs:
        raise BadParam("need at least one coupling")
    n = len(gs)
    T = np.zeros((n, n), dtype=complex)
    for k in range(1, n):
        T[k - 1, k] = gs[k]
        T[k, k - 1] = -gs[k]
    A = -2 * T
    A[0, 0] += -2 * abs(gs[0]) ** 2
    B = np.zeros((n, 1), dtype=complex)
    B[0, 0] = -2 * np.conj(gs[0])
    C = np.zeros((1, n), dtype=complex)
    C[0, 0] = 2 * gs[0]
    return ClosedSystem(("phi1",), ANNIHILATION,
                        realization=StateSpace(A, B, C, [[1]]))


def internal_coupling(gs: Sequence[float]) -> np.ndarray:
    """The antisymmetric Toeplitz matrix T of a loop chain."""
    n = len(gs)
    T = np.zeros((n, n), dtype=complex)
    for k in range(1, n):
        T[k - 1, k] = gs[k]
        T[k, k - 1] = -gs[k]
    return T


def u1_dynamic_propagator(g: float, k_phi: float, l: float) -> RatFun:
    """Dressed propagator of a field coupled to a dynamical U(1) gauge field
    on a short interval: 1/(s + i*k_phi + 2 g^2 / l)."""
    if l <= 0:
        raise BadParam("interval length must be positive")
    return 1 / (s + 1j * k_phi + 2 * g ** 2 / l)
