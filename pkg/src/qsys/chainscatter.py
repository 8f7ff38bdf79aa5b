"""Chain-scattering and dual chain-scattering representations.

Rearranging the ports of a partitioned two-block system turns feedback
interconnection into cascade multiplication; closing a chain against a
load is the homographic transformation, equivalent to the LFT feedback
formula P11 + P12 S (I - P22 S)^-1 P21.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (NotInvertibleBlock, ShapeMismatch, SingularClosure,
                     SingularD, SingularRational)
from .polyrat import RatMat
from .statespace import StateSpace

CHAIN = "chain"
DUAL = "dual"


def _as_ratmat(P) -> RatMat:
    return P if isinstance(P, RatMat) else RatMat.from_const(P)


def _split(P: RatMat, row_split: int, col_split: int):
    p, m = P.shape
    return (P.submatrix(range(row_split), range(col_split)),
            P.submatrix(range(row_split), range(col_split, m)),
            P.submatrix(range(row_split, p), range(col_split)),
            P.submatrix(range(row_split, p), range(col_split, m)))


@dataclass(frozen=True)
class ChainRep:
    """Chain (or dual chain) scattering matrix with its block split."""

    lam: RatMat
    flavor: str
    row_split: int
    col_split: int

    def blocks(self):
        return _split(self.lam, self.row_split, self.col_split)


def _invert_block(block: RatMat, which: str) -> RatMat:
    if block.shape[0] != block.shape[1]:
        raise NotInvertibleBlock(f"{which} is not square")
    try:
        return block.inv()
    except SingularRational as e:
        raise NotInvertibleBlock(
            f"{which} is not invertible; augmentation with virtual ports "
            "would be required and is not performed") from e


def chain(P, row_split: int | None = None, col_split: int | None = None) -> ChainRep:
    """Chain representation: (out1; in1) = Lambda (in2; out2).  Needs P21
    invertible."""
    P = _as_ratmat(P)
    p, m = P.shape
    row_split = p // 2 if row_split is None else row_split
    col_split = m // 2 if col_split is None else col_split
    P11, P12, P21, P22 = _split(P, row_split, col_split)
    P21i = _invert_block(P21, "P21")
    lam = RatMat.block([
        [P12 - P11 @ P21i @ P22, P11 @ P21i],
        [-(P21i @ P22), P21i],
    ])
    return ChainRep(lam, CHAIN, row_split, P22.shape[1])


def dual_chain(P, row_split: int | None = None, col_split: int | None = None) -> ChainRep:
    """Dual representation: (in2; out2) = Lambda~ (out1; in1).  Needs P12
    invertible."""
    P = _as_ratmat(P)
    p, m = P.shape
    row_split = p // 2 if row_split is None else row_split
    col_split = m // 2 if col_split is None else col_split
    P11, P12, P21, P22 = _split(P, row_split, col_split)
    P12i = _invert_block(P12, "P12")
    lam = RatMat.block([
        [P12i, -(P12i @ P11)],
        [P22 @ P12i, P21 - P22 @ P12i @ P11],
    ])
    return ChainRep(lam, DUAL, P12i.shape[0], row_split)


def chain_inverse(rep: ChainRep) -> RatMat:
    """Recover the partitioned input-output system from a representation."""
    L11, L12, L21, L22 = rep.blocks()
    if rep.flavor == CHAIN:
        L22i = _invert_block(L22, "Lambda22")
        return RatMat.block([
            [L12 @ L22i, L11 - L12 @ L22i @ L21],
            [L22i, -(L22i @ L21)],
        ])
    L11i = _invert_block(L11, "dual Lambda11")
    return RatMat.block([
        [-(L11i @ L12), L11i],
        [L22 - L21 @ L11i @ L12, L21 @ L11i],
    ])


def homographic(rep: ChainRep, S) -> RatMat:
    """Close a chain against a load S: F(Lambda; S) = Q R^-1 with
    (Q; R) = Lambda (S; I)."""
    S = _as_ratmat(S)
    L11, L12, L21, L22 = rep.blocks()
    Q = L11 @ S + L12
    R = L21 @ S + L22
    try:
        Rinv = R.inv()
    except SingularRational as e:
        raise SingularClosure("homographic denominator R is singular") from e
    return Q @ Rinv


def dual_homographic(rep: ChainRep, S) -> RatMat:
    """Dual closure: F~(Lambda~; S) = -Q^-1 R with (Q, R) = (I, -S) Lambda~."""
    S = _as_ratmat(S)
    L11, L12, L21, L22 = rep.blocks()
    Q = L11 - S @ L21
    R = L12 - S @ L22
    try:
        Qinv = Q.inv()
    except SingularRational as e:
        raise SingularClosure("dual homographic denominator Q is singular") from e
    return -(Qinv @ R)


def _split_ss(ss: StateSpace, out_split: int, in_split: int):
    B1 = ss.B[:, :in_split]
    B2 = ss.B[:, in_split:]
    C1 = ss.C[:out_split, :]
    C2 = ss.C[out_split:, :]
    D11 = ss.D[:out_split, :in_split]
    D12 = ss.D[:out_split, in_split:]
    D21 = ss.D[out_split:, :in_split]
    D22 = ss.D[out_split:, in_split:]
    return B1, B2, C1, C2, D11, D12, D21, D22


def _inv_or_raise(M: np.ndarray, which: str) -> np.ndarray:
    if M.shape[0] != M.shape[1] or (M.size and np.linalg.cond(M) > 1e12):
        raise SingularD(f"{which} must be invertible")
    return np.linalg.inv(M)


def chain_statespace(ss: StateSpace, out_split: int | None = None,
                     in_split: int | None = None) -> StateSpace:
    """State-space form of the chain representation (needs invertible D21)."""
    out_split = ss.outputs // 2 if out_split is None else out_split
    in_split = ss.inputs // 2 if in_split is None else in_split
    B1, B2, C1, C2, D11, D12, D21, D22 = _split_ss(ss, out_split, in_split)
    D21i = _inv_or_raise(D21, "D21")
    A = ss.A - B1 @ D21i @ C2
    B = np.hstack([B2 - B1 @ D21i @ D22, B1 @ D21i])
    C = np.vstack([C1 - D11 @ D21i @ C2, -D21i @ C2])
    D = np.block([[D12 - D11 @ D21i @ D22, D11 @ D21i],
                  [-D21i @ D22, D21i]])
    return StateSpace(A, B, C, D)


def dual_chain_statespace(ss: StateSpace, out_split: int | None = None,
                          in_split: int | None = None) -> StateSpace:
    """State-space form of the dual chain representation (needs invertible D12)."""
    out_split = ss.outputs // 2 if out_split is None else out_split
    in_split = ss.inputs // 2 if in_split is None else in_split
    B1, B2, C1, C2, D11, D12, D21, D22 = _split_ss(ss, out_split, in_split)
    D12i = _inv_or_raise(D12, "D12")
    A = ss.A - B2 @ D12i @ C1
    B = np.hstack([B2 @ D12i, B1 - B2 @ D12i @ D11])
    C = np.vstack([-D12i @ C1, C2 - D22 @ D12i @ C1])
    D = np.block([[D12i, -D12i @ D11],
                  [D22 @ D12i, D21 - D22 @ D12i @ D11]])
    return StateSpace(A, B, C, D)


def homographic_statespace(lam_ss: StateSpace, s_ss: StateSpace,
                           out_split: int | None = None,
                           in_split: int | None = None) -> StateSpace:
    """State-space form of the homographic closure of a chain realization
    against a load realization (needs invertible D2 = D21 Ds + D22)."""
    out_split = lam_ss.outputs // 2 if out_split is None else out_split
    in_split = lam_ss.inputs // 2 if in_split is None else in_split
    B1, B2, C1, C2, D11, D12, D21, D22 = _split_ss(lam_ss, out_split, in_split)
    As, Bs, Cs, Ds = s_ss.A, s_ss.B, s_ss.C, s_ss.D
    Bhat = B1 @ Ds + B2
    D1 = D11 @ Ds + D12
    D2 = D21 @ Ds + D22
    D2i = _inv_or_raise(D2, "D2 = D21 Ds + D22")
    n, ns = lam_ss.n, s_ss.n
    Acl = np.block([
        [lam_ss.A, B1 @ Cs],
        [np.zeros((ns, n)), As],
    ]) if n + ns else np.zeros((0, 0))
    gain = np.vstack([Bhat, Bs]) @ D2i
    Acl = Acl - gain @ np.hstack([C2, D21 @ Cs])
    Bcl = gain
    Dc = D1 @ D2i
    Ccl = np.hstack([C1 - Dc @ C2, (D11 - Dc @ D21) @ Cs])
    return StateSpace(Acl, Bcl, Ccl, Dc)
