"""Low-complexity recursive multiuser detection on factorized pattern chains.

The receiver never inverts the full pattern matrix.  Each recursion level
reshapes the current equation sets into consecutive groups matching the last
remaining inner factor, applies the per-class combining vectors, and routes
each combined equation into its own super-group.  After r recursions only
small regular sets over the outer factor remain; those are solved by an
exhaustive MAP sweep.  Every arithmetic operation of the combining cascade
and the final stage is counted and checked against closed-form bounds on
every run.

Scalar-operation accounting model (documented contract):

* combining an m_p-equation group with a vector of nnz nonzero entries in
  {-1, 0, +1} costs nnz - 1 additions and no multiplications;
* one exhaustive final-stage invocation over the outer factor F (m_f rows,
  k_f columns, nnz(F) ones) with alphabet size Q enumerates H = Q^k_f
  hypotheses and costs
      N_add = H * (nnz(F) + m_f - 1)      (+ H if priors are non-uniform)
      N_mul = H * (k_f + 2 * m_f)
  per invocation (per-row synthesis, residuals, squares, accumulation);
* a successive-cancellation final stage additionally reconstructs up to
  m_p - 1 previously decided classes into each of the m_f equations, adding
  m_f additions and m_f multiplications per cancelled class.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .combiner import CapExceeded, CombinerDesign
from .pattern import FactorChain, PatternMatrix
from .simkit import Constellation

DEFAULT_HYPOTHESIS_CAP = 4096
DEFAULT_ORACLE_CAP = 1 << 20


class DetectionError(ValueError):
    """Detector configuration or input contract violation."""


class SicPredecessorError(DetectionError):
    """A cancellation stage needs a class decision that is not available."""


class HypothesisCapExceeded(CapExceeded):
    """An exhaustive hypothesis sweep would exceed its configured cap."""


@dataclass
class OpCounters:
    """Running scalar-operation tally for one detection pass."""

    adds: int = 0
    muls: int = 0
    final_invocations: int = 0


@dataclass(frozen=True)
class OpCountBounds:
    """Closed-form per-detection operation bounds for a factor chain."""

    combining_adds: int
    total_adds: int
    total_muls: int
    final_sets: int


def final_stage_costs(
    F: PatternMatrix,
    alphabet_size: int,
    *,
    uniform_priors: bool = True,
    cancel_classes: int = 0,
) -> tuple[int, int]:
    """Scalar (adds, muls) of one exhaustive final-stage invocation.

    cancel_classes > 0 budgets a successive-cancellation stage that
    reconstructs that many previously decided classes into each equation."""
    if alphabet_size < 2:
        raise ValueError("alphabet size must be at least 2")
    if cancel_classes < 0:
        raise ValueError("cancel_classes must be nonnegative")
    hypotheses = alphabet_size**F.cols
    nnz = int(F.entries.sum())
    n_add = hypotheses * (nnz + F.rows - 1)
    n_mul = hypotheses * (F.cols + 2 * F.rows)
    if not uniform_priors:
        n_add += hypotheses
    if cancel_classes:
        n_add += F.rows * cancel_classes
        n_mul += F.rows * cancel_classes
    return n_add, n_mul


def op_count_bounds(chain: FactorChain, n_add_reg: int, n_mul_reg: int) -> OpCountBounds:
    """Bounds for one full detection: r recursions of grouped combining plus
    m_p^r final-stage invocations at the given per-invocation costs."""
    if n_add_reg < 0 or n_mul_reg < 0:
        raise ValueError("per-invocation costs must be nonnegative")
    m_p, m_f, r = chain.m_p, chain.m_f, chain.r
    sets = m_p**r
    combining = r * m_f * sets * (m_p - 1)
    return OpCountBounds(
        combining_adds=combining,
        total_adds=combining + sets * n_add_reg,
        total_muls=sets * n_mul_reg,
        final_sets=sets,
    )


@dataclass(frozen=True)
class OpCountReport:
    """Measured operation counts validated against the closed-form bounds."""

    measured_adds: int
    measured_muls: int
    final_invocations: int
    bounds: OpCountBounds

    def __post_init__(self):
        if self.measured_adds > self.bounds.total_adds:
            raise AssertionError(
                f"measured additions {self.measured_adds} exceed the bound "
                f"{self.bounds.total_adds}"
            )
        if self.measured_muls > self.bounds.total_muls:
            raise AssertionError(
                f"measured multiplications {self.measured_muls} exceed the "
                f"bound {self.bounds.total_muls}"
            )
        if self.final_invocations != self.bounds.final_sets:
            raise AssertionError(
                f"ran {self.final_invocations} final-stage invocations, "
                f"expected {self.bounds.final_sets}"
            )


@dataclass(frozen=True)
class DetectionConfig:
    """Everything a detection pass needs besides the received vector.

    power_offsets are per-user amplitude scalings (length K, all positive);
    they keep superposed group sums identifiable.  final_mode "map" runs the
    plain exhaustive final stage on every path; "sic" additionally rebuilds
    the classes listed in sic_symbols at the last recursion by cancelling
    the already-decided overlapping classes out of the raw group equations."""

    chain: FactorChain
    design: CombinerDesign
    constellation: Constellation
    power_offsets: np.ndarray | None = None
    final_mode: str = "map"
    sic_symbols: tuple[int, ...] = ()
    hypothesis_cap: int = DEFAULT_HYPOTHESIS_CAP

    def __post_init__(self):
        if self.design.P != self.chain.P:
            raise DetectionError("combiner design was built for a different inner factor")
        if self.final_mode not in ("map", "sic"):
            raise DetectionError("final_mode must be 'map' or 'sic'")
        offs = self.power_offsets
        offs = np.ones(self.chain.K) if offs is None else np.asarray(offs, dtype=float)
        if offs.shape != (self.chain.K,) or np.any(offs <= 0):
            raise DetectionError("power offsets must be positive, one per user")
        offs = offs.copy()
        offs.setflags(write=False)
        object.__setattr__(self, "power_offsets", offs)
        sic = tuple(sorted(set(int(j) for j in self.sic_symbols)))
        if sic and self.final_mode != "sic":
            raise DetectionError("sic_symbols requires final_mode='sic'")
        if any(j < 0 or j >= self.chain.m_p for j in sic):
            raise DetectionError("sic_symbols must index inner-factor classes")
        object.__setattr__(self, "sic_symbols", sic)
        if self.hypothesis_cap < 1:
            raise DetectionError("hypothesis cap must be positive")


@dataclass(frozen=True)
class RecursionRecord:
    """Snapshot of one recursion level for trace inspection."""

    level: int
    super_groups_in: int
    equations_per_group: int
    group_size: int
    paths: tuple[tuple[int, ...], ...]
    combined: tuple[np.ndarray, ...]
    weights: tuple[int, ...]
    gain_products: tuple[Fraction, ...]
    noise_multipliers: tuple[int, ...]
    adds_so_far: int
    muls_so_far: int


@dataclass(frozen=True)
class FinalSet:
    """One solved regular set over the outer factor."""

    path: tuple[int, ...]
    users: tuple[int, ...]
    values: np.ndarray
    weight: int
    gain: Fraction
    noise_multiplier: int
    used_sic: bool
    decided: tuple
    unit_prediction: np.ndarray
    tie_count: int


@dataclass(frozen=True)
class DetectionTrace:
    recursions: tuple[RecursionRecord, ...]
    final_sets: tuple[FinalSet, ...]


@dataclass(frozen=True)
class DetectionResult:
    symbols: np.ndarray
    trace: DetectionTrace
    report: OpCountReport
    ambiguous: bool


def path_users(chain: FactorChain, path: tuple[int, ...]) -> tuple[int, ...]:
    """Users (pattern columns) solved by the final set reached along `path`.

    The t-th branch choice (0-based) fixes the inner-factor digit with place
    value m_p^t; the outer-factor column index contributes c_f * m_p^r."""
    if len(path) != chain.r:
        raise ValueError("path length must equal the recursion depth")
    offset = sum(j * chain.m_p**t for t, j in enumerate(path))
    stride = chain.m_p**chain.r
    return tuple(c_f * stride + offset for c_f in range(chain.k_f))


def coupled_sums(symbols, groups, power_offsets) -> np.ndarray:
    """Offset-weighted symbol sum per duplicate-column user group.

    Users sharing a pattern column are only jointly observable; their
    offset-weighted sum is the quantity a detector can actually decide."""
    symbols = np.asarray(symbols)
    offs = np.asarray(power_offsets)
    return np.array([(offs[list(g)] * symbols[list(g)]).sum() for g in groups])


_HYP_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _hypothesis_indices(q: int, k: int) -> np.ndarray:
    """All Q^k symbol-index tuples, first position most significant."""
    key = (q, k)
    if key not in _HYP_CACHE:
        _HYP_CACHE[key] = np.array(list(itertools.product(range(q), repeat=k)), dtype=np.int64)
    return _HYP_CACHE[key]


def final_stage_map(
    z,
    F: PatternMatrix,
    weight,
    constellation: Constellation,
    power_offsets=None,
    noise_variance: float = 1.0,
    *,
    hypothesis_cap: int = DEFAULT_HYPOTHESIS_CAP,
    counters: OpCounters | None = None,
) -> tuple[tuple, int, np.ndarray]:
    """Exhaustive MAP decision for one regular set w * F (offs . x) + noise.

    Returns (decided symbol values, tie count, unit prediction F (offs . x^))
    where the unit prediction is the winning hypothesis's noiseless equation
    values before the weight.  Ties on the decision metric are broken toward
    the lowest hypothesis index and reported via tie count; the weight must
    be positive (flip the sign of z and weight together for a negative
    weight, the equations are equivalent)."""
    z = np.asarray(z)
    if z.shape != (F.rows,):
        raise ValueError("z must have one value per outer-factor row")
    if not weight > 0:
        raise ValueError("combined weight must be positive")
    if noise_variance < 0:
        raise ValueError("noise variance must be nonnegative")
    q, k_f = constellation.size, F.cols
    n_hyp = q**k_f
    if n_hyp > hypothesis_cap:
        raise HypothesisCapExceeded(
            f"final stage needs {q}^{k_f} = {n_hyp} hypotheses, above the cap ({hypothesis_cap})"
        )
    offs = np.ones(k_f) if power_offsets is None else np.asarray(power_offsets, dtype=float)
    if offs.shape != (k_f,):
        raise ValueError("power offsets must have one entry per set user")
    idx = _hypothesis_indices(q, k_f)
    X = constellation.symbols[idx]  # (H, k_f)
    unit = (X * offs) @ F.entries.T.astype(float)  # (H, m_f)
    metric = np.abs(z - float(weight) * unit) ** 2
    metric = metric.sum(axis=1)
    if constellation.uniform_priors or noise_variance == 0.0:
        score = metric
    else:
        score = metric / (2.0 * noise_variance) - np.log(constellation.priors)[idx].sum(axis=1)
    best = int(np.argmin(score))  # argmin takes the first occurrence: lowest index wins ties
    ties = int((score == score[best]).sum())
    if counters is not None:
        nnz = int(F.entries.sum())
        counters.adds += n_hyp * (nnz + F.rows - 1)
        counters.muls += n_hyp * (k_f + 2 * F.rows)
        if not constellation.uniform_priors:
            counters.adds += n_hyp
        counters.final_invocations += 1
    return tuple(X[best]), ties, unit[best]


class _SuperGroup:
    __slots__ = ("values", "weight", "mult", "gain", "path")

    def __init__(self, values, weight, mult, gain, path):
        self.values = values
        self.weight = weight
        self.mult = mult
        self.gain = gain
        self.path = path


def _solve_set(sg: _SuperGroup, cfg: DetectionConfig, noise_variance: float, counters: OpCounters) -> FinalSet:
    users = path_users(cfg.chain, sg.path)
    weight, values = sg.weight, sg.values
    if weight < 0:  # equivalent equations; sign flips are free
        weight, values = -weight, -values
    decided, ties, unit = final_stage_map(
        values,
        cfg.chain.F,
        weight,
        cfg.constellation,
        power_offsets=cfg.power_offsets[list(users)],
        noise_variance=noise_variance * sg.mult,
        hypothesis_cap=cfg.hypothesis_cap,
        counters=counters,
    )
    return FinalSet(
        path=sg.path,
        users=users,
        values=sg.values,
        weight=sg.weight,
        gain=sg.gain,
        noise_multiplier=sg.mult,
        used_sic=False,
        decided=decided,
        unit_prediction=unit,
        tie_count=ties,
    )


def sic_enhanced_final(
    raw_values,
    decided: dict[int, FinalSet],
    cfg: DetectionConfig,
    *,
    noise_variance: float,
    parent_path: tuple[int, ...] = (),
    parent_weight: int = 1,
    parent_noise_mult: int = 1,
    parent_gain: Fraction = Fraction(1),
    counters: OpCounters | None = None,
) -> list[FinalSet]:
    """Decide the designated classes of one last-recursion super-group by
    cancellation instead of combining.

    raw_values are the super-group's m_f * m_p equations before combining.
    For a designated class j, the equations carrying class j are summed
    (gain: the column weight d_j instead of the combining gain) and every
    overlapping, already-decided class is reconstructed from its final-set
    decision and subtracted.  Raises SicPredecessorError when an overlapping
    class has no decision to cancel with."""
    P = cfg.chain.P
    m_p, m_f = cfg.chain.m_p, cfg.chain.m_f
    raw = np.asarray(raw_values)
    if raw.shape != (m_f * m_p,):
        raise ValueError("raw_values must hold the full super-group")
    counters = OpCounters() if counters is None else counters
    decided = dict(decided)
    out: list[FinalSet] = []
    blocks = raw.reshape(m_f, m_p)
    for j in cfg.sic_symbols:
        rows = np.flatnonzero(P.entries[:, j])
        d_j = rows.size
        if d_j == 0:
            raise DetectionError(f"class {j} touches no equation")
        overlaps = {
            jp: int(P.entries[rows, jp].sum()) for jp in range(m_p) if jp != j
        }
        needed = [jp for jp, ov in overlaps.items() if ov > 0]
        missing = [jp for jp in needed if jp not in decided]
        if missing:
            raise SicPredecessorError(
                f"class {j} needs decided classes {missing} to cancel"
            )
        zeta = blocks[:, rows].sum(axis=1)
        counters.adds += m_f * (d_j - 1)
        for jp in needed:
            scale = parent_weight * overlaps[jp]
            zeta = zeta - scale * decided[jp].unit_prediction
            counters.adds += m_f
            counters.muls += m_f
        weight = parent_weight * d_j
        flip_w, flip_z = (weight, zeta) if weight > 0 else (-weight, -zeta)
        users = path_users(cfg.chain, parent_path + (j,))
        dec, ties, unit = final_stage_map(
            flip_z,
            cfg.chain.F,
            flip_w,
            cfg.constellation,
            power_offsets=cfg.power_offsets[list(users)],
            noise_variance=noise_variance * parent_noise_mult * d_j,
            hypothesis_cap=cfg.hypothesis_cap,
            counters=counters,
        )
        fs = FinalSet(
            path=parent_path + (j,),
            users=users,
            values=zeta,
            weight=weight,
            gain=parent_gain * d_j,
            noise_multiplier=parent_noise_mult * d_j,
            used_sic=True,
            decided=dec,
            unit_prediction=unit,
            tie_count=ties,
        )
        decided[j] = fs
        out.append(fs)
    return out


def recursive_detect(y, cfg: DetectionConfig, noise_variance: float) -> DetectionResult:
    """Detect all K users from y by recursive combining plus small MAP sets.

    Recursion level l reshapes each super-group into consecutive groups of
    m_p equations, combines every group with each class's coefficient vector,
    and routes class j's outputs to child super-group j; level l starts from
    m_p^(l-1) super-groups of m_f * m_p^(r-l+1) equations.  Children are
    visited in branch-lexicographic order, so final sets come out sorted by
    path.  With final_mode 'sic', the designated classes of each last-level
    super-group are decided by cancellation against the sibling decisions."""
    chain = cfg.chain
    m_p, m_f, r = chain.m_p, chain.m_f, chain.r
    y = np.asarray(y)
    if y.shape != (chain.M,):
        raise ValueError("y must have one value per resource element")
    if noise_variance < 0:
        raise ValueError("noise variance must be nonnegative")
    sic_set = set(cfg.sic_symbols)
    if sic_set and r == 0:
        raise SicPredecessorError("cancellation needs at least one recursion level")

    alpha = cfg.design.alpha
    nnz = [int(np.count_nonzero(alpha[j])) for j in range(m_p)] if r else []
    counters = OpCounters()
    groups = [_SuperGroup(y, 1, 1, Fraction(1), ())]
    records: list[RecursionRecord] = []
    last_raw: list[_SuperGroup] = []

    for level in range(1, r + 1):
        skip = sic_set if level == r else set()
        if level == r:
            last_raw = groups
        eqs_per_group = groups[0].values.size
        children: list[_SuperGroup] = []
        for sg in groups:
            blocks = sg.values.reshape(-1, m_p)
            for j in range(m_p):
                if j in skip:
                    continue
                vals = blocks @ alpha[j]
                counters.adds += blocks.shape[0] * (nnz[j] - 1)
                children.append(
                    _SuperGroup(
                        vals,
                        sg.weight * cfg.design.weights[j],
                        sg.mult * int(alpha[j] @ alpha[j]),
                        sg.gain * cfg.design.gains[j],
                        sg.path + (j,),
                    )
                )
        records.append(
            RecursionRecord(
                level=level,
                super_groups_in=len(groups),
                equations_per_group=eqs_per_group,
                group_size=m_p,
                paths=tuple(c.path for c in children),
                combined=tuple(c.values for c in children),
                weights=tuple(c.weight for c in children),
                gain_products=tuple(c.gain for c in children),
                noise_multipliers=tuple(c.mult for c in children),
                adds_so_far=counters.adds,
                muls_so_far=counters.muls,
            )
        )
        groups = children

    final_sets = [_solve_set(sg, cfg, noise_variance, counters) for sg in groups]
    if sic_set:
        per_parent = m_p - len(sic_set)
        for pi, parent in enumerate(last_raw):
            siblings = final_sets[pi * per_parent : (pi + 1) * per_parent]
            final_sets.extend(
                sic_enhanced_final(
                    parent.values,
                    {fs.path[-1]: fs for fs in siblings},
                    cfg,
                    noise_variance=noise_variance,
                    parent_path=parent.path,
                    parent_weight=parent.weight,
                    parent_noise_mult=parent.mult,
                    parent_gain=parent.gain,
                    counters=counters,
                )
            )
        final_sets.sort(key=lambda fs: fs.path)

    symbols = np.empty(chain.K, dtype=cfg.constellation.symbols.dtype)
    for fs in final_sets:
        symbols[list(fs.users)] = fs.decided
    symbols.setflags(write=False)

    costs = final_stage_costs(
        chain.F,
        cfg.constellation.size,
        uniform_priors=cfg.constellation.uniform_priors,
        cancel_classes=(m_p - 1) if sic_set else 0,
    )
    report = OpCountReport(
        measured_adds=counters.adds,
        measured_muls=counters.muls,
        final_invocations=counters.final_invocations,
        bounds=op_count_bounds(chain, *costs),
    )
    trace = DetectionTrace(recursions=tuple(records), final_sets=tuple(final_sets))
    return DetectionResult(
        symbols=symbols,
        trace=trace,
        report=report,
        ambiguous=any(fs.tie_count > 1 for fs in final_sets),
    )


def combining_matrix(chain: FactorChain, design: CombinerDesign) -> np.ndarray:
    """The linear map L with L @ y = all final-set inputs, stacked in
    branch-lexicographic path order, m_f equations per path.

    Row (path, d_f) is e_{d_f} (x) alpha^(j_r) (x) ... (x) alpha^(j_1):
    later recursion levels peel later positions of the path, so their
    coefficient vectors sit on the slower-varying (outer) Kronecker axes."""
    if design.P != chain.P:
        raise DetectionError("combiner design was built for a different inner factor")
    alpha = design.alpha
    rows = []
    eye = np.eye(chain.m_f, dtype=np.int64)
    for path in itertools.product(range(chain.m_p), repeat=chain.r):
        acc = np.array([1], dtype=np.int64)
        for j in reversed(path):
            acc = np.kron(acc, alpha[j])
        for d_f in range(chain.m_f):
            rows.append(np.kron(eye[d_f], acc))
    L = np.array(rows, dtype=np.int64)
    L.setflags(write=False)
    return L


def brute_force_map_oracle(
    y,
    G: PatternMatrix,
    constellation: Constellation,
    power_offsets=None,
    noise_variance: float = 1.0,
    *,
    hypothesis_cap: int = DEFAULT_ORACLE_CAP,
) -> tuple[np.ndarray, int]:
    """Joint MAP over all Q^K hypotheses on the full pattern matrix.

    Exponential reference detector used to validate the recursive one.
    Evaluates hypotheses in chunks; raises HypothesisCapExceeded rather than
    attempt an infeasible sweep.  Returns (symbols, tie count) with ties
    broken toward the lowest hypothesis index (first symbol most
    significant), matching the final-stage convention."""
    y = np.asarray(y)
    if y.shape != (G.rows,):
        raise ValueError("y must have one value per resource element")
    q, K = constellation.size, G.cols
    n_hyp = q**K
    if n_hyp > hypothesis_cap:
        raise HypothesisCapExceeded(
            f"oracle needs {q}^{K} = {n_hyp} hypotheses, above the cap ({hypothesis_cap})"
        )
    offs = np.ones(K) if power_offsets is None else np.asarray(power_offsets, dtype=float)
    if offs.shape != (K,):
        raise ValueError("power offsets must have one entry per user")
    Gf = G.entries.T.astype(float)
    logpri = None
    if not constellation.uniform_priors and noise_variance > 0:
        logpri = np.log(constellation.priors)

    chunk = 1 << 16
    best_score = math.inf
    best_idx = -1
    ties = 0
    digits = q ** np.arange(K - 1, -1, -1, dtype=np.int64)
    for start in range(0, n_hyp, chunk):
        stop = min(start + chunk, n_hyp)
        h = np.arange(start, stop, dtype=np.int64)
        idx = (h[:, None] // digits) % q  # (chunk, K), first symbol most significant
        X = constellation.symbols[idx]
        pred = (X * offs) @ Gf
        score = (np.abs(y - pred) ** 2).sum(axis=1)
        if logpri is not None:
            score = score / (2.0 * noise_variance) - logpri[idx].sum(axis=1)
        lo = float(score.min())
        if lo < best_score:
            best_score = lo
            best_idx = start + int(np.argmax(score == lo))
            ties = int((score == lo).sum())
        elif lo == best_score:
            ties += int((score == lo).sum())
    digits_best = (best_idx // digits) % q
    return constellation.symbols[digits_best], ties
