import numpy as np
import pytest

from qsys.polyrat import RatFun, RatMat, s
from qsys.statespace import StateSpace


def rand_complex(rng, scale=1.0):
    return complex(rng.normal(scale=scale), rng.normal(scale=scale))


def rand_stable_ss(rng, n=3, p=2, m=2, shift=2.5):
    """Random stable system with a well-conditioned D."""
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    A = A - (shift + max(0, np.max(np.linalg.eigvals(A).real))) * np.eye(n)
    B = rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))
    C = rng.normal(size=(p, n)) + 1j * rng.normal(size=(p, n))
    D = rng.normal(size=(p, m)) + 0.8 * np.eye(p, m)
    return StateSpace(A, B, C, D)


def rand_ratmat(rng, p, m, order=1):
    """Random proper rational matrix with real stable poles."""
    rows = []
    for _ in range(p):
        row = []
        for _ in range(m):
            entry = RatFun.const(rand_complex(rng, 0.5))
            for _ in range(order):
                a = rand_complex(rng, 0.8)
                c = 1.0 + abs(rng.normal()) + abs(rng.normal())
                entry = entry + a / (s + c)
            row.append(entry)
        rows.append(row)
    return RatMat(rows)


def pi_orthogonal_2var(rng, stable=True):
    """Random two-variable bosonic Pi-orthogonal system.

    A = diag(a1, a2), D = diag(d, 1/d), C = (a1+a2)/(-det B) D Pi B^T Pi.
    """
    pim = np.array([[0, 1], [-1, 0]], dtype=complex)
    while True:
        a1 = -abs(rng.normal()) - 0.4 + 1j * rng.normal() if stable else rand_complex(rng)
        a2 = -abs(rng.normal()) - 0.4 + 1j * rng.normal() if stable else rand_complex(rng)
        if abs(a1 + a2) > 0.3:
            break
    A = np.diag([a1, a2])
    while True:
        B = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        if abs(np.linalg.det(B)) > 0.3:
            break
    d = rng.normal() + 1.2 + abs(rng.normal())
    D = np.diag([d, 1 / d]).astype(complex)
    C = (a1 + a2) / (-np.linalg.det(B)) * (D @ pim @ B.T @ pim)
    return StateSpace(A, B, C, D)


def sample_points():
    return [0.31 + 0.77j, -0.42 + 1.3j, 1.1 - 0.6j, 2.3 + 0.05j, 0.9j + 0.13]


def max_sample_err(a, b, pts=None):
    """Max relative deviation of two rational matrices at sample points."""
    pts = pts or sample_points()
    worst = 0.0
    for z in pts:
        va = a(z) if not isinstance(a, np.ndarray) else a
        vb = b(z) if not isinstance(b, np.ndarray) else b
        va, vb = np.atleast_2d(va), np.atleast_2d(vb)
        scale = 1 + np.linalg.norm(va) + np.linalg.norm(vb)
        worst = max(worst, np.linalg.norm(va - vb) / scale)
    return worst


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
