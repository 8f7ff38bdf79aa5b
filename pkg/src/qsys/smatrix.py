"""S-matrix perturbation engine: contraction tables, geometric resummation,
the Dyson equation, and linear self-energies.

The engine works on role-indexed contraction tables rather than diagram
graphs; at the scale of quadratic vertices the diagrams are bookkeeping
for exactly these table products.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

from . import statespace as ssm
from .closure import ClosedSystem, LoopSpec, loop_propagator
from .errors import (DivergentSeries, FeedbackSingular, ShapeMismatch,
                     SingularDyson, SingularResummation, UnknownSetting)
from .gates import DOUBLED, SIGMA_X, SIGMA_Z, cayley, make_gate
from .polyrat import RatFun, RatMat, rat_equal, s
from .statespace import StateSpace

Value = Union[complex, RatFun, np.ndarray]


def off_diagonal_doubling(G) -> np.ndarray:
    """Vertex weight for doubled-basis quadratic Lagrangians:
    diagonal entries once, off-diagonal entries twice."""
    m = np.asarray(G, dtype=complex)
    d = np.diag(np.diag(m))
    return d + 2 * (m - d)


def _conj_value(v: Value):
    if isinstance(v, RatFun):
        return v.conj_coeffs()
    if isinstance(v, np.ndarray):
        return np.conj(v)
    return np.conj(complex(v))


@dataclass(frozen=True)
class ContractionTable:
    """Map (role_a, role_b) -> <a b^dag> over field roles.

    The reversed-dagger entries <a^dag b> follow from the conjugate rule
    <A^dag, B> = -<A, B^dag>*.
    """

    setting: str
    entries: Mapping[tuple[str, str], Value]

    def forward(self, a: str, b: str) -> Value:
        key = (a, b)
        if key not in self.entries:
            raise UnknownSetting(f"{self.setting}: no entry <{a}, {b}^dag>")
        return self.entries[key]

    def backward(self, a: str, b: str) -> Value:
        """<a^dag b> via the conjugate rule."""
        v = self.forward(a, b)
        return -_conj_value(v)


def contraction_table(setting: str, **params) -> ContractionTable:
    """Free-field or closed-system contraction tables.

    Settings: ``empty_gate``, ``su2_gate``, ``qnd_gate``, ``xx_gate``,
    ``su2_system`` (takes g).
    """
    if setting == "empty_gate":
        e = {
            ("out", "in"): 1.0, ("in", "in"): 1.0, ("out", "out"): 1.0,
            ("in", "out"): -1.0,
            ("mean", "in"): 1.0, ("out", "mean"): 1.0,
            ("mean", "mean"): 0.5, ("mean", "out"): 0.0, ("in", "mean"): 0.0,
        }
        return ContractionTable(setting, e)
    if setting == "su2_gate":
        g = complex(params["g"])
        P = cayley(make_gate("su2", g=g))
        eye = np.eye(2)
        e = {
            ("out", "in"): P, ("in", "in"): eye, ("out", "out"): eye,
            ("in", "out"): -eye,
            ("mean", "in"): eye, ("out", "mean"): eye,
            ("mean", "mean"): 0.5 * eye, ("mean", "out"): np.zeros((2, 2)),
            ("in", "mean"): np.zeros((2, 2)),
        }
        return ContractionTable(setting, e)
    if setting in ("qnd_gate", "xx_gate"):
        g = float(params["g"])
        sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
        free = np.kron(np.eye(2), -sy)
        if setting == "qnd_gate":
            hop = np.array([[0, 0], [-1j * g, 0]], dtype=complex)
            coupling = np.block([[np.zeros((2, 2)), hop],
                                 [hop.T, np.zeros((2, 2))]])
        else:
            hop = np.array([[0, 0], [0, 1j * g]], dtype=complex)
            coupling = np.block([[np.zeros((2, 2)), hop],
                                 [hop, np.zeros((2, 2))]])
        e = {
            ("in", "in"): free,
            ("out", "in"): free + coupling,
            ("out", "mean"): free + coupling / 2,
            ("mean", "in"): free + coupling / 2,
            ("in", "out"): -free,
            ("out", "out"): free,
        }
        return ContractionTable(setting, e)
    if setting == "su2_system":
        g = complex(params["g"])
        a = 2 * abs(g) ** 2
        e = {
            ("out", "in"): (s - a) / (s + a),
            ("loop", "in"): RatFun.const(-2 * np.conj(g)) / (s + a),
            ("out", "loop"): RatFun.const(2 * g) / (s + a),
            ("loop", "loop"): 1 / (s + a),
            ("in", "in"): RatFun.const(1.0),
            ("in", "out"): RatFun.const(-1.0),
            ("in", "loop"): RatFun.const(0.0),
            ("loop", "out"): RatFun.const(0.0),
        }
        return ContractionTable(setting, e)
    raise UnknownSetting(f"no contraction table for {setting!r}")


@dataclass(frozen=True)
class ResumResult:
    value: Union[np.ndarray, RatMat]
    mode: str
    spectral_radius: float | None = None
    bound: float | None = None


def resum(X, delta, wout=None, win=None, direct=None,
          mode: str | int = "closed") -> ResumResult:
    """Geometric resummation direct + Wout X (I - Delta X)^-1 Win.

    ``mode`` is "closed" or an integer truncation order N; truncation is
    available for constant matrices and reports the geometric tail bound
    rho^(N+1) / (1 - rho).
    """
    rational = isinstance(X, RatMat) or isinstance(delta, RatMat)
    if rational:
        X = X if isinstance(X, RatMat) else RatMat.from_const(X)
        delta = delta if isinstance(delta, RatMat) else RatMat.from_const(delta)
        n = X.shape[0]
        wout = RatMat.from_const(np.eye(n)) if wout is None else (
            wout if isinstance(wout, RatMat) else RatMat.from_const(wout))
        win = RatMat.from_const(np.eye(n)) if win is None else (
            win if isinstance(win, RatMat) else RatMat.from_const(win))
        if mode != "closed":
            raise UnknownSetting("truncated mode needs constant matrices")
        core = (RatMat.eye(n) - delta @ X).inv()
        value = wout @ X @ core @ win
        if direct is not None:
            direct = direct if isinstance(direct, RatMat) else RatMat.from_const(direct)
            value = direct + value
        return ResumResult(value, "closed")

    X = np.asarray(X, dtype=complex)
    delta = np.asarray(delta, dtype=complex)
    n = X.shape[0]
    wout = np.eye(n) if wout is None else np.asarray(wout, dtype=complex)
    win = np.eye(n) if win is None else np.asarray(win, dtype=complex)
    loop = delta @ X
    rho = max(abs(np.linalg.eigvals(loop))) if n else 0.0
    if mode == "closed":
        M = np.eye(n) - loop
        if np.linalg.cond(M) > 1e13:
            raise SingularResummation("I - Delta X is singular")
        value = wout @ X @ np.linalg.solve(M, win)
        if direct is not None:
            value = np.asarray(direct, dtype=complex) + value
        return ResumResult(value, "closed", spectral_radius=rho)
    N = int(mode)
    if rho >= 1.0:
        raise DivergentSeries(f"spectral radius {rho:.3f} >= 1")
    acc = np.eye(n, dtype=complex)
    power = np.eye(n, dtype=complex)
    for _ in range(N):
        power = power @ loop
        acc = acc + power
    value = wout @ X @ acc @ win
    if direct is not None:
        value = np.asarray(direct, dtype=complex) + value
    # remainder = Wout X (loop)^(N+1) (I - loop)^-1 Win; bound it by norms,
    # with a floor for the floating-point noise of the partial sums
    tail = np.linalg.norm(power @ loop, 2)
    resolvent = np.linalg.norm(np.linalg.inv(np.eye(n) - loop), 2)
    prefactor = np.linalg.norm(wout @ X, 2) * np.linalg.norm(win, 2)
    noise = 100 * n * N * np.finfo(float).eps * (1 + np.linalg.norm(value))
    bound = prefactor * tail * resolvent + noise
    return ResumResult(value, f"truncated({N})", spectral_radius=rho, bound=bound)


@dataclass(frozen=True)
class SelfEnergy:
    """Per-pass vertex weight K of the Dyson loop."""

    kernel: Union[np.ndarray, RatFun, RatMat]
    provenance: str = "custom"

    def __post_init__(self):
        k = self.kernel
        if isinstance(k, np.ndarray):
            k = np.asarray(k, dtype=complex)
            if k.ndim != 2 or k.shape[0] != k.shape[1]:
                raise ShapeMismatch("self-energy must be square")
            k = k.copy()
            k.flags.writeable = False
            object.__setattr__(self, "kernel", k)
        elif isinstance(k, RatMat):
            if k.shape[0] != k.shape[1]:
                raise ShapeMismatch("self-energy must be square")

    @property
    def is_scalar(self) -> bool:
        return isinstance(self.kernel, RatFun)

    def as_ratmat(self) -> RatMat:
        k = self.kernel
        if isinstance(k, RatFun):
            return RatMat([[k]])
        if isinstance(k, np.ndarray):
            return RatMat.from_const(k)
        return k


def linear_self_energy(kind: str, **params) -> SelfEnergy:
    """Constant self-energies of the linear in-cavity interactions."""
    if kind == "detuning":
        omega = float(params["omega"])
        return SelfEnergy(1j * omega * SIGMA_Z, "detuning")
    if kind == "squeezing":
        r = float(params["r"])
        g = complex(params["g"])
        if g == 0:
            raise SingularDyson("squeezing self-energy needs g != 0")
        m = -(r / abs(g) ** 2) * np.array([[0, g ** 2],
                                           [np.conj(g) ** 2, 0]])
        return SelfEnergy(m, "squeezing")
    raise UnknownSetting(f"no linear self-energy of kind {kind!r}")


def _as_ratmat(x) -> RatMat:
    if isinstance(x, RatMat):
        return x
    if isinstance(x, RatFun):
        return RatMat([[x]])
    if isinstance(x, SelfEnergy):
        return x.as_ratmat()
    return RatMat.from_const(np.atleast_2d(np.asarray(x, dtype=complex)))


def dyson(bare, K) -> RatMat:
    """Dressed propagator (I + bare K)^-1 bare.

    K enters as negative feedback: the result is the unique solution of
    dressed = bare - bare K dressed, so K = a > 0 moves a marginal pole
    at the origin to a stable one at -a.
    """
    bare = _as_ratmat(bare)
    K = _as_ratmat(K)
    n = bare.shape[0]
    if bare.shape != (n, n) or K.shape != (n, n):
        raise ShapeMismatch("bare and K must be square and conformable")
    try:
        return (RatMat.eye(n) + bare @ K).inv() @ bare
    except Exception as e:
        raise SingularDyson("I + bare K is identically singular") from e


def dressed_external(g: complex, K,
                     loop: LoopSpec = LoopSpec("single")) -> ClosedSystem:
    """External transfer function of a cavity dressed by a self-energy K.

    Single-mode loop: (s + 2|g|^2 + K)^-1 (s - 2|g|^2 + K); constant K
    gives the realization (-2|g|^2 - K, -2 g* I, 2 g I, I).  The
    infinite-mode loop gives a pointwise evaluator.
    """
    Kmat = K.as_ratmat() if isinstance(K, SelfEnergy) else _as_ratmat(K)
    n = Kmat.shape[0]
    a = 2 * abs(g) ** 2
    ports = tuple(f"phi1{suffix}" for suffix in ([""] if n == 1 else ["", ".dag"]))
    basis = DOUBLED if n == 2 else "annihilation"
    if loop.kind == "infinite":
        l = loop.l
        Kc = Kmat

        def evaluator(z: complex) -> np.ndarray:
            import cmath
            e = cmath.exp(-z * l)
            kv = Kc(z)
            num = (1 + e) * kv - (2 * (abs(g) ** 2 - 1) + 2 * e * (abs(g) ** 2 + 1)) * np.eye(n)
            den = (1 + e) * kv + (2 * (abs(g) ** 2 + 1) + 2 * e * (abs(g) ** 2 - 1)) * np.eye(n)
            if np.linalg.cond(den) > 1e13:
                raise SingularResummation(f"dressed denominator singular at s={z}")
            return np.linalg.solve(den, num)

        return ClosedSystem(ports, basis, evaluator=evaluator)
    prop = loop_propagator(loop)
    if not isinstance(prop, RatFun):
        raise UnknownSetting(f"unsupported loop kind {loop.kind!r}")
    if loop.kind == "single" and Kmat.is_constant():
        Kc = Kmat.constant_value()
        A = -a * np.eye(n) - Kc
        B = -2 * np.conj(g) * np.eye(n)
        C = 2 * g * np.eye(n)
        return ClosedSystem(ports, basis,
                            realization=StateSpace(A, B, C, np.eye(n)))
    svar = RatMat.const_like(1 / prop, (n, n))
    den = svar + RatMat.const_like(a, (n, n)) + Kmat
    num = svar - RatMat.const_like(a, (n, n)) + Kmat
    tf = den.inv() @ num
    return ClosedSystem(ports, basis, realization=ssm.from_ratmat(tf))


@dataclass(frozen=True)
class FeedbackSeries:
    """Order-by-order expansion of the displacement feedforward/feedback
    circuits, together with the resummed quadrature rows."""

    setting: str
    vertex: float                      # per-pass self-energy K; 0 for dff
    orders_xi1_xi1: tuple[float, ...]  # series of <xi1_out | xi1_in>
    rows: np.ndarray                   # (xi1, eta1) rows against 4 inputs


def feedback_vertex_series(setting: str, g: float, k: float,
                           orders: int = 6) -> FeedbackSeries:
    """Expand the S-matrix of the QND + displacement circuits.

    Elementary contractions (quadrature basis of the QND gate):
    <xi1_out, 2 mean(eta1)> = 2i, <xi2_out, -i eta1_in> = -g,
    <xi2_out, -i eta2_in> = 1, and the per-pass loop factor
    <xi2_out, 2 mean(eta1) -/+ g mean(eta2)>(-ik/2), which is -g*k for
    feedback and exactly 0 for feedforward.
    """
    if setting not in ("dff", "dfb"):
        raise UnknownSetting(f"setting must be dff or dfb, got {setting!r}")
    end = 2j          # <xi1_out, 2 mean(eta1)>
    to_xi1 = -g       # <xi2_out, -i eta1_in>
    to_xi2 = 1.0      # <xi2_out, -i eta2_in>
    hop = -1j * k / 2
    if setting == "dfb":
        # mean-field loop: 2*(-i g/2) - g*(i) = -2 i g, times (-i k / 2)
        vertex = complex(hop * (-2j * g)).real      # = -g*k
    else:
        # feedforward: 2*(-i g/2) + g*(i) = 0
        vertex = 0.0
    if setting == "dfb" and abs(1 + g * k) < 1e-12:
        raise FeedbackSingular("1 + g*k = 0")
    series = [1.0]
    for order in range(1, orders + 1):
        term = complex(end * hop * vertex ** (order - 1) * to_xi1)
        series.append(term.real)
    geom = 1.0 / (1.0 - vertex)
    xi1_xi1 = 1.0 + complex(end * hop * geom * to_xi1).real
    xi1_xi2 = complex(end * hop * geom * to_xi2).real
    rows = np.array([[xi1_xi1, 0.0, xi1_xi2, 0.0],
                     [0.0, 1.0, 0.0, g]], dtype=complex)
    return FeedbackSeries(setting, vertex, tuple(series), rows)
