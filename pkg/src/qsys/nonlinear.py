"""Closed-form self-energies and multi-point amplitudes beyond quadratic order:
third-order nonlinearity, spin-1/2 decay in a cavity, gravitational-wave
sensitivity, and feedback-coupled gate amplitudes.

Everything here encodes printed closed forms; the frequency integrals
behind them are guarded by numeric contour oracles in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import statespace as ssm
from .errors import (BadParam, DivergentFusion, NonDiagonalH, NotHermitian,
                     ShapeMismatch)
from .polyrat import Poly, RatFun, RatMat, rat_equal, s
from .smatrix import SelfEnergy
from .statespace import StateSpace

SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)


@dataclass(frozen=True)
class NonlinearParams:
    """Third-order nonlinearity in a cavity: coupling, vacuum expectation,
    cavity coupling, detuning."""

    lam: float
    v: complex
    g: complex
    omega: float = 0.0


@dataclass(frozen=True)
class SpinParams:
    """Spin levels and couplings for the cavity-spin interaction."""

    e1: float = 0.0
    e2: float = 0.0
    g: float = 0.0
    kappa: float = 0.0
    kappa_a: float = 0.0
    kappa_b: float = 0.0


def first_order_self_energy(p: NonlinearParams) -> SelfEnergy:
    """Constant tadpole-level self-energy of the third-order interaction."""
    lam, v = p.lam, complex(p.v)
    n = abs(v) ** 2 + 0.5
    m = np.array([
        [-2j * lam * n, -1j * lam * v ** 2],
        [1j * lam * np.conj(v) ** 2, 2j * lam * n],
    ])
    return SelfEnergy(m, "nonlinear-order-1")


def second_order_self_energy(p: NonlinearParams) -> SelfEnergy:
    """One-loop self-energy; rational in s with poles at -2g^2, +2g^2, -4g^2.

    Computed for zero detuning and real cavity coupling.  The unstable
    pole at +2g^2 is structural: it is what makes the dressed system keep
    its pole-zero symmetry.
    """
    lam, v = p.lam, complex(p.v)
    g = p.g
    if g == 0:
        raise BadParam("second order self-energy needs g != 0")
    if p.omega != 0:
        raise BadParam("second order form is computed at zero detuning")
    if abs(complex(g).imag) > 1e-14:
        raise BadParam("second order form needs a real cavity coupling")
    g = float(np.real(g))
    vsq = abs(v) ** 2
    four = (2j * lam) ** 2           # = -4 lam^2
    k11_a = -four * (vsq + 0.5) * vsq / g ** 2
    k11_b = -(four * (2 * vsq ** 2 / (s + 2 * g ** 2)
                      - vsq ** 2 / (s - 2 * g ** 2)
                      + vsq / (s + 4 * g ** 2)))
    k12_a = -((1j * lam * v) ** 2) * (vsq / g ** 2 + 1 / (4 * g ** 2))
    k12_b = -(((2j * lam * v) ** 2) * (vsq / (s + 2 * g ** 2)
                                       - vsq / (s - 2 * g ** 2)))
    k11 = k11_b + k11_a
    k12 = k12_b + k12_a
    if v == 0:
        ratio = 0j   # every numerator carries v^2; define the limit as zero
    else:
        ratio = np.conj(v) ** 2 / v ** 2
    k22 = -(k11_b.tilde() + k11_a)
    k21 = -(ratio * (k12_b + k12_a))
    return SelfEnergy(RatMat([[k11, k12], [k21, k22]]), "nonlinear-order-2")


def correlation_self_energy(p: NonlinearParams) -> SelfEnergy:
    """Pair-vertex self-energy of the four-point correlation function."""
    lam, v, g = p.lam, complex(p.v), p.g
    if g == 0:
        raise BadParam("correlation self-energy needs g != 0")
    g = float(np.real(g))
    vsq = abs(v) ** 2
    k1 = RatFun.const(2j * lam * vsq ** 2)
    k2 = (2j * lam) ** 2 * vsq ** 3 * (1 / (s + 2 * g ** 2)
                                       - 1 / (s - 2 * g ** 2)
                                       + RatFun.const(1 / g ** 2))
    return SelfEnergy(k1 + k2, "correlation")


def _total_self_energy(p: NonlinearParams, order: int) -> RatMat:
    from .gates import SIGMA_Z
    K = RatMat.from_const(1j * p.omega * SIGMA_Z
                          + np.asarray(first_order_self_energy(p).kernel))
    if order >= 2:
        K = K + second_order_self_energy(p).kernel
    return K


def nonlinear_transfer(p: NonlinearParams, order: int = 1) -> RatMat:
    """Dressed cavity transfer (s + 2g^2 + K)^-1 (s - 2g^2 + K)."""
    if order not in (1, 2):
        raise BadParam("order must be 1 or 2")
    a = 2 * abs(p.g) ** 2
    K = _total_self_energy(p, order)
    den = RatMat.const_like(s + a, (2, 2)) + K
    num = RatMat.const_like(s - a, (2, 2)) + K
    return den.inv() @ num


def nonlinear_poles(p: NonlinearParams, order: int = 1):
    """Poles of the dressed cavity; at first order these are
    -2|g|^2 +/- sqrt(-(3 lam |v|^2 + lam - Omega)(lam |v|^2 + lam - Omega))."""
    from .gates import SIGMA_Z
    if order != 1:
        raise BadParam("closed-form poles are first order only")
    K1 = np.asarray(first_order_self_energy(p).kernel)
    A = -2 * abs(p.g) ** 2 * np.eye(2) - 1j * p.omega * SIGMA_Z - K1
    vals = np.linalg.eigvals(A)
    return [complex(x) for x in vals]


def nonlinear_pole_formula(p: NonlinearParams) -> tuple[complex, complex]:
    """The printed radical form of the first-order poles."""
    lam, vsq, om = p.lam, abs(complex(p.v)) ** 2, p.omega
    rad = np.sqrt(complex(-(3 * lam * vsq + lam - om) * (lam * vsq + lam - om)))
    a = -2 * abs(p.g) ** 2
    return (a + rad, a - rad)


def spin_transfer(H) -> RatMat:
    """Free spin transfer function 1/(s + iH) for a Hermitian Hamiltonian."""
    H = np.asarray(H, dtype=complex)
    if np.linalg.norm(H - H.conj().T) > 1e-10 * (1 + np.linalg.norm(H)):
        raise NotHermitian("spin Hamiltonian must be Hermitian")
    n = H.shape[0]
    return StateSpace(-1j * H, np.eye(n), np.eye(n), np.zeros((n, n))).transfer_function()


def spin_in_cavity_transfer(sp: SpinParams) -> RatMat:
    """Spin propagator dressed by emission into the cavity (diagonal H)."""
    e1, e2, g, kap = sp.e1, sp.e2, sp.g, sp.kappa
    a = 2 * g ** 2
    upper = (s + a + 1j * e2) / ((s + a + 1j * e2) * (s + 1j * e1)
                                 + RatFun.const(kap ** 2))
    lower = 1 / (s + 1j * e2)
    return RatMat.diag([upper, lower])


def spin_decay_amplitude(sp: SpinParams) -> RatFun:
    """Amplitude of the one-quantum decay |+, vacuum> -> |-, one photon>."""
    e1, e2, g, kap = sp.e1, sp.e2, sp.g, sp.kappa
    a = 2 * g ** 2
    return RatFun.const(1j * kap) / ((s + 1j * e1) * (s + a + 1j * e2)
                                     + RatFun.const(kap ** 2))


def n_quantum_decay_vertex(sp: SpinParams, n: int) -> RatMat:
    """Recursion kernel of the n-quantum decay; vanishes for n >= 2 when the
    spin Hamiltonian is diagonal (the lowering matrix squares to zero)."""
    if n < 0:
        raise BadParam("n must be nonnegative")
    if n == 0:
        return RatMat.eye(2)
    if n == 1:
        a = 2 * sp.g ** 2
        diag = RatMat.diag([1 / (s + a + 1j * sp.e1), 1 / (s + a + 1j * sp.e2)])
        return diag @ RatMat.from_const(1j * sp.kappa * SIGMA_MINUS)
    zero = RatFun.const(0)
    return RatMat([[zero, zero], [zero, zero]])


def spin_spin_exchange_amplitude(sp: SpinParams) -> RatFun:
    """Four-point amplitude taking |+-> into the symmetric combination."""
    e1, e2, g = sp.e1, sp.e2, sp.g
    ka, kb = sp.kappa_a, sp.kappa_b
    a = 2 * g ** 2
    free = 1 / (s + 1j * (e1 + e2))
    return (1 / math.sqrt(2)) * free * (1 - free * ka * kb / (s + a + 2j * e2))


def final_value(f: RatFun) -> complex:
    """lim_{t -> inf} via the final value theorem: lim_{s -> 0} s f(s)."""
    return (s * f)(0)


def kraus_unital(kraus, tol: float = 1e-10) -> bool:
    """Check the unitality condition sum V^dag V = I."""
    mats = [np.asarray(v, dtype=complex) for v in kraus]
    n = mats[0].shape[0]
    acc = sum(v.conj().T @ v for v in mats)
    return bool(np.linalg.norm(acc - np.eye(n)) <= tol * n)


def flip_channel(kind: str, p1: float) -> list[np.ndarray]:
    """Kraus pair of the bit or phase flip with no-flip probability p1."""
    if not 0 <= p1 <= 1:
        raise BadParam("p1 must lie in [0, 1]")
    from .gates import SIGMA_X, SIGMA_Z
    if kind == "bit":
        flip = SIGMA_X
    elif kind == "phase":
        flip = SIGMA_Z
    else:
        raise BadParam(f"unknown flip kind {kind!r}")
    return [math.sqrt(p1) * np.eye(2, dtype=complex),
            math.sqrt(1 - p1) * flip.astype(complex)]


def damped_oscillator(omega: float, h: float) -> RatFun:
    """Second-order mirror model -1/((s + 2h^2)^2 + omega^2)."""
    if omega == 0:
        raise BadParam("oscillator frequency must be nonzero")
    if h < 0:
        raise BadParam("noise coupling must be nonnegative")
    return RatFun.const(-1.0) / ((s + 2 * h ** 2) ** 2 + RatFun.const(omega ** 2))


def oscillator_shape(omega: float, h: float) -> tuple[float, float]:
    """Natural frequency and damping ratio (omega_n, zeta)."""
    omega_n = math.sqrt(4 * h ** 4 + omega ** 2)
    zeta = 2 * h ** 2 / omega_n
    return omega_n, zeta


def gw_sensitivity(kappa: float, lam: float, g: float, omega: float,
                   h: float, order: int = 2) -> RatFun:
    """First-order coefficient of the external force in the dressed cavity.

    Order 2 is the static kappa*lam/omega_n^2; order 4 divides it by
    1 + i Xi(s), the dynamic back-action of the thermal mirror.
    """
    omega_n, zeta = oscillator_shape(omega, h)
    static = kappa * lam / omega_n ** 2
    if order == 2:
        return RatFun.const(static)
    if order != 4:
        raise BadParam("order must be 2 or 4")
    u = s + 2 * g ** 2
    q = u * u + 2 * zeta * omega_n * u + RatFun.const(omega_n ** 2)
    xi = kappa ** 2 * (2 * zeta * omega_n * u + RatFun.const(omega_n ** 2)) / (q * q * u)
    return RatFun.const(static) / (1 + xi)


def xx_su2_pair_amplitudes(g: float, k: float) -> tuple[complex, complex]:
    """Three-point pair-emission amplitudes of the feedback-coupled
    XX + SU(2) gate: (out1^2 <- in1, out1^2 <- in2)."""
    d = (1 + g ** 2) ** 3
    first = 1j * k * g ** 2 * (g ** 2 - 2) / d
    second = 0.5j * k * g * (1 - g ** 2) ** 2 / d
    return first, second


def qnd_fusion_amplitude(g0: float, k: float, n: int) -> complex:
    """(1+n)-point fusion amplitude of the feedback-coupled QND system."""
    if n < 1:
        raise BadParam("fusion needs n >= 1")
    return (-1) ** n * math.factorial(n) * g0 * k ** (n - 1)


def qnd_exponential_fusion(g0: float, k: float, mu: float) -> complex:
    """Fusion against exp(mu M): resums to -mu g0 / (1 + mu k)."""
    if abs(mu * k) >= 1:
        raise DivergentFusion("|mu k| must be < 1")
    return -mu * g0 / (1 + mu * k)
