"""Constellations, seeded signal synthesis, and Monte Carlo measurement.

Randomness policy: everything is driven by a counter-based generator
(numpy Philox) keyed with an explicit 64-bit seed.  Monte Carlo trials draw
from per-trial streams derived with Philox.jumped(trial_index), so results
are bit-reproducible and independent of batching or parallel scheduling.
SNR is linear throughout and means P_x / sigma^2 with P_x the mean squared
symbol magnitude of the constellation; dB conversion is a CLI-boundary
concern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING

import numpy as np

from .pattern import FactorChain, PatternMatrix, build_chain, pattern_groups

if TYPE_CHECKING:  # imported lazily at runtime to keep the module graph acyclic
    from .combiner import CombinerDesign
    from .detector import DetectionConfig


@dataclass(frozen=True, eq=False)
class Constellation:
    """Finite symbol alphabet with per-symbol priors (uniform by default)."""

    symbols: np.ndarray
    priors: np.ndarray | None = None

    def __post_init__(self):
        sym = np.asarray(self.symbols)
        if sym.ndim != 1 or sym.size < 2:
            raise ValueError("constellation needs at least two symbols")
        sym = sym.copy()
        sym.setflags(write=False)
        object.__setattr__(self, "symbols", sym)
        if self.priors is not None:
            pri = np.asarray(self.priors, dtype=float)
            if pri.shape != sym.shape or np.any(pri < 0) or not math.isclose(pri.sum(), 1.0):
                raise ValueError("priors must be a distribution over the symbols")
            pri = pri.copy()
            pri.setflags(write=False)
            object.__setattr__(self, "priors", pri)

    @property
    def size(self) -> int:
        return int(self.symbols.size)

    @property
    def uniform_priors(self) -> bool:
        return self.priors is None

    @property
    def average_power(self) -> float:
        """Mean squared symbol magnitude P_x (prior-weighted if non-uniform)."""
        p = np.full(self.size, 1.0 / self.size) if self.priors is None else self.priors
        return float(p @ (np.abs(self.symbols) ** 2))

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.symbols)


BPSK = Constellation(np.array([-1.0, 1.0]))
QPSK = Constellation(np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / math.sqrt(2.0))


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """Independent per-trial stream: Philox keyed by `seed`, jumped by index."""
    return np.random.Generator(np.random.Philox(key=seed).jumped(index))


def _noise(rng: np.random.Generator, n: int, variance: float, complex_valued: bool):
    if variance == 0.0:
        return np.zeros(n, dtype=complex if complex_valued else float)
    if complex_valued:
        scale = math.sqrt(variance / 2.0)
        return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return math.sqrt(variance) * rng.standard_normal(n)


def synthesize_rx(
    x,
    G: PatternMatrix,
    noise_variance: float,
    seed: int | None = None,
    *,
    rng: np.random.Generator | None = None,
):
    """Received vector y = G x + n with i.i.d. Gaussian noise of the given
    variance per resource element (circularly symmetric when x is complex).

    Deterministic under `seed`; pass `rng` instead to draw from an existing
    per-trial stream.  noise_variance = 0 gives the noiseless model."""
    x = np.asarray(x)
    if x.shape != (G.cols,):
        raise ValueError("x must have one symbol per user")
    if noise_variance < 0:
        raise ValueError("noise variance must be nonnegative")
    if rng is None:
        rng = trial_rng(0 if seed is None else seed, 0)
    y = G.entries @ x
    return y + _noise(rng, G.rows, noise_variance, np.iscomplexobj(x))


@dataclass(frozen=True)
class TrialRecord:
    """One Monte Carlo trial, fully determined by (seed, index, config)."""

    seed: int
    index: int
    snr: float
    transmitted: np.ndarray
    received: np.ndarray
    decisions: dict[str, np.ndarray]
    symbol_correct: dict[str, np.ndarray]
    coupled_correct: dict[str, np.ndarray]
    ambiguous: dict[str, bool]


@dataclass(frozen=True)
class PathGain:
    """Empirical combining gain along one branch path versus the exact value."""

    path: tuple[int, ...]
    expected: Fraction
    measured: float
    n_samples: int

    @property
    def rel_se(self) -> float:
        # relative standard error of a Gaussian sample-variance estimate,
        # propagated to the gain (first order)
        return math.sqrt(2.0 / (self.n_samples - 1))

    @property
    def within(self) -> float:
        """|measured - expected| in units of the standard error."""
        return abs(self.measured / float(self.expected) - 1.0) / self.rel_se


def estimate_gain(
    design: "CombinerDesign",
    chain: FactorChain,
    noise_variance: float,
    trials: int,
    seed: int = 0,
) -> list[PathGain]:
    """Measure per-path combining SNR gains on pure noise.

    Runs the recursive combining map on noise-only inputs and compares
    (weight product)^2 * sigma^2 / measured variance against the exact
    rational gain product along each branch path.  Uses one seeded bulk
    stream (single pass, no per-trial parallelism to preserve)."""
    from .detector import combining_matrix  # deferred: detector imports simkit

    if trials < 3:
        raise ValueError("need at least 3 trials to estimate a variance")
    if not noise_variance > 0:
        raise ValueError("noise variance must be positive")
    L = combining_matrix(chain, design)
    rng = trial_rng(seed, 0)
    noise = math.sqrt(noise_variance) * rng.standard_normal((trials, chain.M))
    combined = noise @ L.T.astype(float)  # (trials, m_p^r * m_f)
    m_f = chain.m_f
    out = []
    paths = [()] if chain.r == 0 else list(_iter_paths(chain.m_p, chain.r))
    for pi, path in enumerate(paths):
        weight = 1
        gain = Fraction(1)
        for j in path:
            weight *= design.weights[j]
            gain *= design.gains[j]
        # the m_f equations of one path share the same combining row norm
        samples = combined[:, pi * m_f : (pi + 1) * m_f].reshape(-1)
        var = float(samples.var(ddof=1))
        measured = weight * weight * noise_variance / var
        out.append(PathGain(path, gain, measured, samples.size))
    return out


def _iter_paths(m_p: int, r: int):
    import itertools

    return itertools.product(range(m_p), repeat=r)


def wilson_interval(successes: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass(frozen=True)
class MonteCarloPoint:
    """Aggregated error statistics at one SNR point."""

    snr: float
    trials: int
    ser: float
    coupled_ser: float
    ambiguity_rate: float
    coupled_ser_interval: tuple[float, float]
    oracle_agreement: float | None  # None when the oracle is unavailable
    measured_adds: int
    measured_muls: int
    bound_adds: int
    bound_muls: int
    records: tuple[TrialRecord, ...] = field(default=(), repr=False)


def run_monte_carlo(
    cfg: "DetectionConfig",
    snr_grid,
    trials: int,
    seed: int,
    *,
    detector: str = "recursive",
    with_oracle: bool = False,
    oracle_hypothesis_cap: int | None = None,
    keep_records: bool = False,
) -> list[MonteCarloPoint]:
    """Seeded Monte Carlo over an SNR grid (linear SNRs).

    detector = "recursive" runs the configured recursive detector (plain or
    SIC final stage per cfg); "oracle" uses the brute-force MAP detector as
    the primary.  with_oracle additionally scores agreement of the primary's
    coupled-sum decisions against the oracle; if the hypothesis count exceeds
    the oracle cap the run proceeds with agreement marked unavailable."""
    from . import detector as det  # deferred: detector imports simkit

    if detector not in ("recursive", "oracle"):
        raise ValueError("detector must be 'recursive' or 'oracle'")
    if trials < 0:
        raise ValueError("trial count must be nonnegative")
    snr_grid = [float(s) for s in snr_grid]
    if any(s <= 0 for s in snr_grid):
        raise ValueError("linear SNRs must be positive")

    G = build_chain(cfg.chain)
    groups = pattern_groups(G)
    con = cfg.constellation
    q = con.size
    cap = det.DEFAULT_ORACLE_CAP if oracle_hypothesis_cap is None else oracle_hypothesis_cap
    oracle_feasible = q**G.cols <= cap
    need_oracle = detector == "oracle" or with_oracle
    if detector == "oracle" and not oracle_feasible:
        raise det.HypothesisCapExceeded(
            f"oracle needs {q}^{G.cols} hypotheses, above the cap ({cap})"
        )

    bounds = det.op_count_bounds(
        cfg.chain,
        *det.final_stage_costs(
            cfg.chain.F,
            q,
            uniform_priors=con.uniform_priors,
            cancel_classes=(cfg.chain.m_p - 1) if cfg.sic_symbols else 0,
        ),
    )

    points = []
    if trials == 0:
        return points
    for si, snr in enumerate(snr_grid):
        noise_variance = con.average_power / snr
        sym_err = 0
        coup_err = 0
        ambiguous = 0
        agree = 0
        measured = None
        records = []
        for t in range(trials):
            rng = trial_rng(seed, si * trials + t)
            idx = rng.integers(0, q, size=G.cols)
            x = con.symbols[idx]
            tx = cfg.power_offsets * x
            y = synthesize_rx(tx, G, noise_variance, rng=rng)

            decisions: dict[str, np.ndarray] = {}
            amb: dict[str, bool] = {}
            if detector == "recursive":
                res = det.recursive_detect(y, cfg, noise_variance)
                decisions["recursive"] = res.symbols
                amb["recursive"] = res.ambiguous
                measured = (res.report.measured_adds, res.report.measured_muls)
                primary = "recursive"
            if need_oracle and oracle_feasible:
                osym, oties = det.brute_force_map_oracle(
                    y,
                    G,
                    con,
                    power_offsets=cfg.power_offsets,
                    noise_variance=noise_variance,
                    hypothesis_cap=cap,
                )
                decisions["oracle"] = osym
                amb["oracle"] = oties > 1
            if detector == "oracle":
                primary = "oracle"
                measured = (0, 0)  # the oracle is not part of the op budget

            got = decisions[primary]
            true_coupled = det.coupled_sums(x, groups, cfg.power_offsets)
            got_coupled = det.coupled_sums(got, groups, cfg.power_offsets)
            sym_ok = got == x
            coup_ok = got_coupled == true_coupled
            sym_err += int((~sym_ok).sum())
            coup_err += int((~coup_ok).sum())
            ambiguous += int(amb[primary])
            if with_oracle and oracle_feasible and primary != "oracle":
                oc = det.coupled_sums(decisions["oracle"], groups, cfg.power_offsets)
                agree += int(bool((got_coupled == oc).all()))
            if keep_records:
                records.append(
                    TrialRecord(
                        seed=seed,
                        index=si * trials + t,
                        snr=snr,
                        transmitted=x,
                        received=y,
                        decisions=decisions,
                        symbol_correct={primary: sym_ok},
                        coupled_correct={primary: coup_ok},
                        ambiguous=amb,
                    )
                )
        n_coup = trials * len(groups)
        agreement = None
        if with_oracle and oracle_feasible and detector != "oracle":
            agreement = agree / trials
        points.append(
            MonteCarloPoint(
                snr=snr,
                trials=trials,
                ser=sym_err / (trials * G.cols),
                coupled_ser=coup_err / n_coup,
                ambiguity_rate=ambiguous / trials,
                coupled_ser_interval=wilson_interval(coup_err, n_coup),
                oracle_agreement=agreement,
                measured_adds=measured[0],
                measured_muls=measured[1],
                bound_adds=bounds.total_adds,
                bound_muls=bounds.total_muls,
                records=tuple(records),
            )
        )
    return points
