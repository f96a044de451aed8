"""Closed-form per-resource-element average sum rates.

For a Kronecker chain G = F (x) P^{(x) r} detected by recursive combining,
each of the m_p^r length-m_f final equation sets is reached through a path
(j_1, ..., j_r) of combining branches and sees the SNR boosted by the product
of per-branch gains gamma_{j_t}.  Grouping paths by how many times each
branch occurs gives the exact average rate

    C = (1 / 2M) * sum over compositions r_1+...+r_{m_p} = r of
        multinomial(r; r_1..r_{m_p}) *
        log2 det( I_{m_f} + snr * gamma_1^{r_1} ... gamma_{m_p}^{r_{m_p}} * F F^T )

with M = m_f * m_p^r.  Baselines: regular PDMA detection of a full matrix A
(joint log-det over all M resources) and single-user OMA.  All SNRs here are
linear; dB conversion happens at the CLI boundary only.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from .pattern import FactorChain, PatternMatrix

LOG2 = math.log(2.0)


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All tuples of `parts` nonnegative integers summing to `total`, in
    colexicographic order (fixed for reproducible summation order)."""
    if parts < 1:
        raise ValueError("parts must be >= 1")
    if parts == 1:
        yield (total,)
        return
    for last in range(total + 1):
        for head in compositions(total - last, parts - 1):
            yield head + (last,)


def multinomial(counts: Sequence[int]) -> int:
    """multinomial(r; r_1..r_m) = r! / (r_1! ... r_m!), exact."""
    total = sum(counts)
    out = 1
    acc = 0
    for c in counts:
        acc += c
        out *= math.comb(acc, c)
    assert acc == total
    return out


def multinomial_weight_check(m_p: int, r: int) -> int:
    """Sum of multinomial weights over all compositions of r into m_p parts.

    Equals m_p**r exactly (each recursion multiplies the number of equation
    sets by m_p); exposed so the bookkeeping can be audited directly."""
    return sum(multinomial(c) for c in compositions(r, m_p))


def _log2_det_posdef(A: np.ndarray) -> float:
    """log2 det of a symmetric positive definite matrix via a stable
    factorization (LU with pivoting under the hood)."""
    sign, logdet = np.linalg.slogdet(A)
    if sign <= 0:
        raise ValueError("matrix is not positive definite")
    return logdet / LOG2


def sum_rate_recursive(chain: FactorChain, gains: Iterable, snr: float) -> float:
    """Average per-RE sum rate of recursive detection over `chain` with
    per-branch combining gains `gains` (exact rationals preferred)."""
    if snr < 0:
        raise ValueError("snr must be nonnegative")
    gains = tuple(Fraction(g) for g in gains)
    if len(gains) != chain.m_p:
        raise ValueError("need one gain per combining branch")
    if any(g <= 0 for g in gains):
        raise ValueError("gains must be positive")
    F = chain.F.entries.astype(float)
    gram = F @ F.T
    eye = np.eye(chain.m_f)
    total = 0.0
    for comp in compositions(chain.r, chain.m_p):
        boost = Fraction(1)
        for g, e in zip(gains, comp):
            boost *= g**e
        coeff = snr * float(boost)
        total += multinomial(comp) * _log2_det_posdef(eye + coeff * gram)
    return total / (2 * chain.M)


def sum_rate_pdma(A: PatternMatrix, snr: float) -> float:
    """Average per-RE sum rate of regular (joint) detection of matrix A:
    (1/2M) log2 det(I_M + snr * A A^T)."""
    if snr < 0:
        raise ValueError("snr must be nonnegative")
    M = A.rows
    gram = A.entries.astype(float) @ A.entries.astype(float).T
    return _log2_det_posdef(np.eye(M) + snr * gram) / (2 * M)


def sum_rate_oma(snr: float) -> float:
    """Single-user AWGN baseline: each RE serves one user at full power."""
    if snr < 0:
        raise ValueError("snr must be nonnegative")
    return 0.5 * math.log2(1.0 + snr)


def sum_rate_sic_reference(snr: float) -> float:
    """Rate of the fixed 18-user / 9-RE reference configuration (seed [1 1],
    optimal 3x3 square factor, two recursions) when the third combining
    branch is detected by cancelling the already-decided branches instead of
    linear combining, which lifts that branch's per-level gain from 4/3 to 2:

        (4/18) log2(1 + 2*(4/3)^2 snr)   paths boosted (4/3)*(4/3)
      + (4/18) log2(1 + 2*(8/3)  snr)    paths boosted (4/3)*2
      + (1/18) log2(1 + 2* 4     snr)    the doubly-cancelled path

    Dedicated closed form for this one configuration; not a general
    SIC-rate engine.
    """
    if snr < 0:
        raise ValueError("snr must be nonnegative")
    g = Fraction(4, 3)
    return (
        4 / 18 * math.log2(1.0 + 2.0 * float(g * g) * snr)
        + 4 / 18 * math.log2(1.0 + 2.0 * float(2 * g) * snr)
        + 1 / 18 * math.log2(1.0 + 2.0 * 4.0 * snr)
    )
