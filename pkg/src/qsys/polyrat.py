"""Complex polynomials, reduced rational functions, and rational matrices.

Everything here is immutable and pure: values can be shared freely across
threads.  Coefficients are stored in ascending degree.  The tilde operation
implemented by :func:`tilde` is transpose plus s -> -s; it deliberately does
NOT conjugate coefficients (see :func:`qsys.gates.conjugate_coefficients`
for the coefficient conjugation used alongside it).
"""

from __future__ import annotations

import cmath
from typing import Iterable, Sequence

import numpy as np

from .errors import EvalAtPole, ShapeMismatch, SingularRational, ZeroPolynomial

#: relative magnitude below which leading coefficients are trimmed
TRIM_TOL = 1e-12

#: roots of numerator and denominator closer than CANCEL_TOL*(1+|root|) cancel
CANCEL_TOL = 1e-8

#: default tolerance for rational equality
EQ_TOL = 1e-9


def _trim(coeffs) -> tuple[complex, ...]:
    c = [complex(x) for x in coeffs]
    top = max((abs(x) for x in c), default=0.0)
    if top == 0.0:
        return ()
    while c and abs(c[-1]) <= TRIM_TOL * top:
        c.pop()
    return tuple(c)


class Poly:
    """Polynomial with complex coefficients, ascending degree.

    The zero polynomial has an empty coefficient tuple and degree -1.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[complex] = ()):
        object.__setattr__(self, "coeffs", _trim(coeffs))

    def __setattr__(self, *args):
        raise AttributeError("Poly is immutable")

    # construction helpers

    @staticmethod
    def one() -> "Poly":
        return Poly((1.0,))

    @staticmethod
    def variable() -> "Poly":
        return Poly((0.0, 1.0))

    @staticmethod
    def from_roots(roots: Sequence[complex], lead: complex = 1.0) -> "Poly":
        p = Poly((lead,))
        for r in roots:
            p = p * Poly((-r, 1.0))
        return p

    # basic queries

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def __repr__(self):
        return f"Poly({list(self.coeffs)!r})"

    def __eq__(self, other):
        return isinstance(other, Poly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    # arithmetic

    def __add__(self, other: "Poly") -> "Poly":
        a, b = self.coeffs, other.coeffs
        n = max(len(a), len(b))
        return Poly([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0)
                     for i in range(n)])

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __neg__(self) -> "Poly":
        return Poly([-c for c in self.coeffs])

    def __mul__(self, other) -> "Poly":
        if isinstance(other, (int, float, complex)):
            return Poly([c * other for c in self.coeffs])
        if self.is_zero or other.is_zero:
            return Poly()
        return Poly(np.convolve(np.array(self.coeffs), np.array(other.coeffs)))

    __rmul__ = __mul__

    def __call__(self, x: complex) -> complex:
        out = 0j
        for c in reversed(self.coeffs):
            out = out * x + c
        return out

    def derivative(self) -> "Poly":
        return Poly([k * c for k, c in enumerate(self.coeffs)][1:])

    def scale_to_monic(self) -> tuple["Poly", complex]:
        """Return (monic polynomial, leading coefficient)."""
        if self.is_zero:
            raise ZeroPolynomial("zero polynomial has no monic form")
        lead = self.coeffs[-1]
        return Poly([c / lead for c in self.coeffs]), lead

    def flip_sign_of_s(self) -> "Poly":
        """Exact substitution s -> -s: alternate coefficient signs."""
        return Poly([c * (-1) ** k for k, c in enumerate(self.coeffs)])

    def conj_coeffs(self) -> "Poly":
        return Poly([c.conjugate() for c in self.coeffs])

    def deflate(self, root: complex) -> "Poly":
        """Synthetic division by (s - root); remainder is discarded."""
        c = list(self.coeffs)
        out = []
        acc = 0j
        for coeff in reversed(c):
            acc = acc * root + coeff if out else coeff
            out.append(acc)
        # out holds Horner partials; quotient coefficients are all but last
        quot = out[:-1]
        quot.reverse()
        return Poly(quot)

    def roots(self) -> list[complex]:
        """All roots with multiplicity via companion-matrix eigenvalues."""
        if self.is_zero:
            raise ZeroPolynomial("roots of the zero polynomial are undefined")
        monic, _ = self.scale_to_monic()
        n = monic.degree
        if n == 0:
            return []
        if n == 1:
            return [-monic.coeffs[0]]
        comp = np.zeros((n, n), dtype=complex)
        comp[1:, :-1] = np.eye(n - 1)
        comp[:, -1] = [-c for c in monic.coeffs[:-1]]
        rts = [complex(r) for r in np.linalg.eigvals(comp)]
        return [self._polish(r) for r in rts]

    def _polish(self, r: complex) -> complex:
        """A few Newton steps; cheap insurance on clustered roots."""
        dp = self.derivative()
        for _ in range(3):
            d = dp(r)
            if abs(d) < 1e-300:
                break
            step = self(r) / d
            if abs(step) > 0.1 * (1 + abs(r)):
                break
            r = r - step
        return r


def poly_roots(p: Poly) -> list[complex]:
    return p.roots()


def _newton_polish(p: Poly, r: complex, steps: int = 8) -> complex:
    dp = p.derivative()
    best, bestval = r, abs(p(r))
    for _ in range(steps):
        d = dp(r)
        if abs(d) < 1e-300:
            break
        step = p(r) / d
        r = r - step
        v = abs(p(r))
        if v < bestval:
            best, bestval = r, v
        if abs(step) < 1e-16 * (1 + abs(r)):
            break
    return best


def _pair_and_cancel(num: Poly, den: Poly, tol: float = CANCEL_TOL):
    """Cancel numerator/denominator roots that coincide within tolerance.

    Both polynomials are deflated at one shared point per cancelled pair;
    the point is chosen to minimize the joint residual, which keeps
    clustered (multiple) roots from smearing coefficients.
    """
    if num.is_zero or num.degree < 1 or den.degree < 1:
        return num, den
    nroots = num.roots()
    droots = den.roots()
    used = [False] * len(droots)
    nscale = max(abs(c) for c in num.coeffs)
    dscale = max(abs(c) for c in den.coeffs)
    for rn in nroots:
        best, bestdist = -1, None
        for j, rd in enumerate(droots):
            if used[j]:
                continue
            dist = abs(rn - rd)
            if bestdist is None or dist < bestdist:
                best, bestdist = j, dist
        if best < 0 or bestdist > tol * (1 + abs(rn)):
            continue
        rd = droots[best]
        candidates = {rn, rd, 0.5 * (rn + rd),
                      _newton_polish(num, rn), _newton_polish(den, rd)}

        def joint_residual(r: complex) -> float:
            w = 1 + abs(r)
            return (abs(num(r)) / (nscale * w ** max(num.degree, 1))
                    + abs(den(r)) / (dscale * w ** den.degree))

        rstar = min(candidates, key=joint_residual)
        used[best] = True
        num = num.deflate(rstar)
        den = den.deflate(rstar)
    return num, den


def _deflate_common(p: Poly, q: Poly, tol: float = CANCEL_TOL) -> Poly:
    """Remove from p the roots it shares with q (within tolerance)."""
    if p.degree < 1 or q.degree < 1:
        return p
    qroots = q.roots()
    used = [False] * len(qroots)
    for r in p.roots():
        for j, rq in enumerate(qroots):
            if not used[j] and abs(r - rq) <= tol * (1 + abs(r)):
                used[j] = True
                p = p.deflate(r)
                break
        if p.degree < 1:
            break
    return p


class RatFun:
    """Reduced rational function num/den with monic denominator.

    The zero function is represented as 0/1, never 0/0.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly, reduce: bool = True):
        if den.is_zero:
            raise ZeroPolynomial("denominator must be nonzero")
        if num.is_zero:
            num, den = Poly(), Poly.one()
        elif reduce:
            num, den = _pair_and_cancel(num, den)
        den, lead = den.scale_to_monic() if not den.is_zero else (den, 1.0)
        num = num * (1.0 / lead)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __setattr__(self, *args):
        raise AttributeError("RatFun is immutable")

    @staticmethod
    def const(c: complex) -> "RatFun":
        return RatFun(Poly((c,)), Poly.one(), reduce=False)

    @staticmethod
    def variable() -> "RatFun":
        return RatFun(Poly.variable(), Poly.one(), reduce=False)

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    @property
    def is_constant(self) -> bool:
        return self.num.degree <= 0 and self.den.degree == 0

    def constant_value(self) -> complex:
        if not self.is_constant:
            raise ValueError("not a constant rational function")
        return self.num.coeffs[0] if self.num.coeffs else 0j

    def __repr__(self):
        return f"RatFun({list(self.num.coeffs)!r}, {list(self.den.coeffs)!r})"

    @staticmethod
    def _coerce(x) -> "RatFun":
        if isinstance(x, RatFun):
            return x
        if isinstance(x, (int, float, complex)):
            return RatFun.const(x)
        return NotImplemented

    def __add__(self, other):
        other = RatFun._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        if self.den.coeffs == other.den.coeffs:
            return RatFun(self.num + other.num, self.den)
        # least-common-denominator addition: deflate the shared factor out
        # of one denominator instead of squaring it into the product
        e2 = _deflate_common(other.den, self.den)
        e1 = _deflate_common(self.den, other.den)
        return RatFun(self.num * e2 + other.num * e1, self.den * e2)

    __radd__ = __add__

    def __sub__(self, other):
        other = RatFun._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return RatFun(-self.num, self.den, reduce=False)

    def __mul__(self, other):
        other = RatFun._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.is_zero or other.is_zero:
            return RatFun.const(0)
        # cross-cancel at input degree, where roots are still accurate
        n1, d2 = _pair_and_cancel(self.num, other.den)
        n2, d1 = _pair_and_cancel(other.num, self.den)
        return RatFun(n1 * n2, d1 * d2, reduce=False)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = RatFun._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inv()

    def __rtruediv__(self, other):
        return self.inv() * other

    def __pow__(self, k: int):
        if k < 0:
            return self.inv() ** (-k)
        out = RatFun.const(1.0)
        for _ in range(k):
            out = out * self
        return out

    def inv(self) -> "RatFun":
        if self.is_zero:
            raise SingularRational("cannot invert the zero function")
        return RatFun(self.den, self.num)

    def tilde(self) -> "RatFun":
        """s -> -s on both numerator and denominator (no conjugation)."""
        return RatFun(self.num.flip_sign_of_s(), self.den.flip_sign_of_s(),
                      reduce=False)

    def conj_coeffs(self) -> "RatFun":
        return RatFun(self.num.conj_coeffs(), self.den.conj_coeffs(),
                      reduce=False)

    def __call__(self, s: complex) -> complex:
        d = self.den(s)
        scale = max(abs(c) for c in self.den.coeffs) * (1 + abs(s)) ** self.den.degree
        if abs(d) <= 1e-12 * scale:
            raise EvalAtPole(f"evaluation at s={s} hits a pole")
        return self.num(s) / d

    def poles(self) -> list[complex]:
        return self.den.roots() if self.den.degree > 0 else []

    def zeros(self) -> list[complex]:
        if self.is_zero or self.num.degree <= 0:
            return []
        return self.num.roots()


def _sample_points(n: int) -> list[complex]:
    """Deterministic sample points off the real and imaginary axes."""
    return [1.7 * cmath.exp(2j * cmath.pi * (k + 0.27) / n) + 0.13 + 0.41j
            for k in range(n)]


def rat_equal(a, b, tol: float = EQ_TOL) -> bool:
    """True iff two rational objects agree as functions within tol.

    Scalars compare by cross-multiplied coefficients, falling back to
    evaluation at 2*(max degree)+1 sample points.  Matrices compare
    entrywise and require equal shapes.
    """
    if isinstance(a, RatMat) or isinstance(b, RatMat):
        a = a if isinstance(a, RatMat) else RatMat.const_like(a, b.shape)
        b = b if isinstance(b, RatMat) else RatMat.const_like(b, a.shape)
        if a.shape != b.shape:
            raise ShapeMismatch(f"shapes {a.shape} != {b.shape}")
        return all(rat_equal(x, y, tol)
                   for ra, rb in zip(a.rows, b.rows) for x, y in zip(ra, rb))
    a = RatFun._coerce(a)
    b = RatFun._coerce(b)
    diff = a.num * b.den - b.num * a.den
    scale = max(
        max((abs(c) for c in (a.num * b.den).coeffs), default=0.0),
        max((abs(c) for c in (b.num * a.den).coeffs), default=0.0),
        1.0,
    )
    if all(abs(c) <= tol * scale for c in diff.coeffs):
        return True
    npts = 2 * max(a.num.degree, a.den.degree, b.num.degree, b.den.degree, 0) + 1
    hits = 0
    for s in _sample_points(npts):
        try:
            va, vb = a(s), b(s)
        except EvalAtPole:
            continue
        hits += 1
        if abs(va - vb) > tol * (1 + abs(va) + abs(vb)):
            return False
    return hits > 0


class RatMat:
    """Rectangular matrix of rational functions."""

    __slots__ = ("rows",)

    def __init__(self, rows: Sequence[Sequence]):
        grid = tuple(tuple(RatFun._coerce(x) for x in row) for row in rows)
        if grid and any(len(r) != len(grid[0]) for r in grid):
            raise ShapeMismatch("rows have unequal lengths")
        object.__setattr__(self, "rows", grid)

    def __setattr__(self, *args):
        raise AttributeError("RatMat is immutable")

    @staticmethod
    def from_const(mat) -> "RatMat":
        arr = np.atleast_2d(np.asarray(mat, dtype=complex))
        return RatMat([[RatFun.const(x) for x in row] for row in arr])

    @staticmethod
    def const_like(value, shape) -> "RatMat":
        p, m = shape
        if p != m:
            raise ShapeMismatch("scalar broadcast requires a square shape")
        v = RatFun._coerce(value)
        return RatMat([[v if i == j else RatFun.const(0) for j in range(m)]
                       for i in range(p)])

    @staticmethod
    def eye(n: int) -> "RatMat":
        return RatMat.from_const(np.eye(n))

    @staticmethod
    def diag(entries) -> "RatMat":
        entries = [RatFun._coerce(e) for e in entries]
        n = len(entries)
        return RatMat([[entries[i] if i == j else RatFun.const(0)
                        for j in range(n)] for i in range(n)])

    @staticmethod
    def block(blocks) -> "RatMat":
        """Assemble from a 2D grid of RatMat blocks."""
        rows = []
        for brow in blocks:
            mats = [b if isinstance(b, RatMat) else RatMat.from_const(b)
                    for b in brow]
            h = mats[0].shape[0]
            if any(m.shape[0] != h for m in mats):
                raise ShapeMismatch("block row heights differ")
            for i in range(h):
                rows.append([x for m in mats for x in m.rows[i]])
        return RatMat(rows)

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rows), len(self.rows[0]) if self.rows else 0)

    def __getitem__(self, idx):
        i, j = idx
        return self.rows[i][j]

    def __repr__(self):
        return f"RatMat(shape={self.shape})"

    def submatrix(self, row_idx, col_idx) -> "RatMat":
        return RatMat([[self.rows[i][j] for j in col_idx] for i in row_idx])

    def transpose(self) -> "RatMat":
        p, m = self.shape
        return RatMat([[self.rows[i][j] for i in range(p)] for j in range(m)])

    def map_entries(self, f) -> "RatMat":
        return RatMat([[f(x) for x in row] for row in self.rows])

    def __add__(self, other):
        other = other if isinstance(other, RatMat) else RatMat.const_like(other, self.shape)
        if self.shape != other.shape:
            raise ShapeMismatch(f"shapes {self.shape} != {other.shape}")
        return RatMat([[x + y for x, y in zip(ra, rb)]
                       for ra, rb in zip(self.rows, other.rows)])

    def __sub__(self, other):
        other = other if isinstance(other, RatMat) else RatMat.const_like(other, self.shape)
        return self + (-other)

    def __neg__(self):
        return self.map_entries(lambda x: -x)

    def __mul__(self, scalar):
        s = RatFun._coerce(scalar)
        return self.map_entries(lambda x: x * s)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if not isinstance(other, RatMat):
            other = RatMat.from_const(other)
        p, k = self.shape
        k2, m = other.shape
        if k != k2:
            raise ShapeMismatch(f"cannot multiply {self.shape} by {other.shape}")
        out = []
        for i in range(p):
            row = []
            for j in range(m):
                acc = RatFun.const(0)
                for l in range(k):
                    acc = acc + self.rows[i][l] * other.rows[l][j]
                row.append(acc)
            out.append(row)
        return RatMat(out)

    def __rmatmul__(self, other):
        return RatMat.from_const(other) @ self

    def inv(self) -> "RatMat":
        """Inverse by Gaussian elimination over the rational-function field."""
        p, m = self.shape
        if p != m:
            raise ShapeMismatch("only square matrices invert")
        work = [list(row) for row in self.rows]
        ident = [[RatFun.const(1.0 if i == j else 0.0) for j in range(m)]
                 for i in range(m)]
        probe = 0.83 + 0.59j  # generic point used only to rank pivots
        for col in range(m):
            pivot, best = -1, 0.0
            for r in range(col, m):
                entry = work[r][col]
                if entry.is_zero:
                    continue
                try:
                    mag = abs(entry(probe))
                except EvalAtPole:
                    mag = 1.0
                if mag > best:
                    pivot, best = r, mag
            if pivot < 0:
                raise SingularRational("matrix of rational functions is singular")
            work[col], work[pivot] = work[pivot], work[col]
            ident[col], ident[pivot] = ident[pivot], ident[col]
            inv_piv = work[col][col].inv()
            work[col] = [x * inv_piv for x in work[col]]
            ident[col] = [x * inv_piv for x in ident[col]]
            for r in range(m):
                if r == col or work[r][col].is_zero:
                    continue
                factor = work[r][col]
                work[r] = [x - factor * y for x, y in zip(work[r], work[col])]
                ident[r] = [x - factor * y for x, y in zip(ident[r], ident[col])]
        return RatMat(ident)

    def tilde(self) -> "RatMat":
        """Transpose with s -> -s (no coefficient conjugation)."""
        return self.transpose().map_entries(lambda x: x.tilde())

    def conj_coeffs(self) -> "RatMat":
        return self.map_entries(lambda x: x.conj_coeffs())

    def __call__(self, s: complex) -> np.ndarray:
        p, m = self.shape
        out = np.empty((p, m), dtype=complex)
        for i in range(p):
            for j in range(m):
                out[i, j] = self.rows[i][j](s)
        return out

    def is_constant(self) -> bool:
        return all(x.is_constant for row in self.rows for x in row)

    def constant_value(self) -> np.ndarray:
        p, m = self.shape
        out = np.empty((p, m), dtype=complex)
        for i in range(p):
            for j in range(m):
                out[i, j] = self.rows[i][j].constant_value()
        return out


def tilde(x):
    """Time-reversal operation R~(s) = R^T(-s) for RatFun or RatMat."""
    return x.tilde()


#: the complex frequency as a rational function, for building transfer
#: functions in the natural notation, e.g. (s - 2) / (s + 2)
s = RatFun.variable()
