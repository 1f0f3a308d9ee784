"""Seeded, block-deterministic trial runner for detection experiments.

Trials are processed in fixed-size blocks; every block draws its randomness
from counter-keyed substreams (seed, purpose, surface, block index), so
results are bit-identical no matter how blocks are scheduled across workers,
and extending a run (rare-event escalation) never perturbs earlier trials.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .codes import all_shifts
from .signal import TAG_FRAME, TAG_RIS, substream

__all__ = [
    "BLOCK",
    "TrialPlan",
    "Estimate",
    "ConfusionMatrix",
    "AveragedMetrics",
    "wilson_interval",
    "estimate_pf",
    "estimate_pmiss",
    "decision_sweep",
    "confusion",
    "averaged_metrics",
]

BLOCK = 8192  # trials per randomness block; fixed so results never depend on scheduling

ESCALATION_FACTOR = 10
ESCALATION_CAP = 10_000_000
MIN_EVENTS = 50

_Z95 = 1.959963984540054  # two-sided 95% normal quantile


def wilson_interval(events: int, trials: int, z: float = _Z95):
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = events / trials
    denom = 1.0 + z**2 / trials
    center = (p + z**2 / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / trials + z**2 / (4 * trials**2))
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class TrialPlan:
    """What to simulate: scenario, how many trials, seed, reachability law.

    ``reachability_law`` maps surface id to True (always reachable), False
    (never) or None (independent fair coin per trial); missing ids default
    to the fair coin. The scenario object must provide m, v_total, power_w,
    noise_variance_w and sim_profiles() (see cli.Scenario).
    """

    scenario: object
    trials: int
    seed: int
    reachability_law: Mapping[int, bool | None] = field(default_factory=dict)
    escalate: bool = True
    max_trials: int = ESCALATION_CAP
    threads: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("at least one trial is required")
        if self.max_trials < self.trials:
            raise ValueError("escalation cap below the base trial count")


@dataclass(frozen=True)
class Estimate:
    """Binomial estimate with its 95% Wilson interval."""

    value: float
    ci_low: float
    ci_high: float
    events: int
    trials: int
    low_confidence: bool = False

    @property
    def std_error(self) -> float:
        p = self.value
        return math.sqrt(max(p * (1 - p), 1e-300) / self.trials)


def _law_for(plan: TrialPlan, overrides: Mapping[int, bool | None]) -> dict:
    law = dict(plan.reachability_law)
    law.update(overrides)
    return law


def _run_blocks(plan: TrialPlan, law: Mapping, t0: int, t1: int, consume):
    """Apply ``consume(D, reach)`` to every block slice in [t0, t1).

    ``consume`` must return a tuple of integer ndarrays; partial results
    are summed, which keeps the reduction order-free. Blocks always draw
    full-size randomness so trial t sees the same draws regardless of the
    total trial count.
    """
    scn = plan.scenario
    m, vt = scn.m, scn.v_total
    frame_len = m + vt
    profs = sorted(scn.sim_profiles(), key=lambda p: p.id)
    sqrt_p = math.sqrt(scn.power_w)
    noise_scale = math.sqrt(scn.noise_variance_w / 2.0)
    shift_mats = [all_shifts(p.code).astype(np.float64) for p in profs]
    col_idx = np.arange(m)[None, :]

    def one_block(blk: int):
        lo = max(t0, blk * BLOCK)
        hi = min(t1, (blk + 1) * BLOCK)
        rows = slice(lo - blk * BLOCK, hi - blk * BLOCK)

        fs = substream(plan.seed, TAG_FRAME, 0, blk)
        v1 = fs.integers(1, vt + 1, size=BLOCK)
        y = fs.standard_normal((BLOCK, frame_len, 2)).view(np.complex128)[..., 0]
        y *= noise_scale

        reach = np.empty((BLOCK, len(profs)), dtype=bool)
        for j, p in enumerate(profs):
            rs = substream(plan.seed, TAG_RIS, p.id, blk)
            rule = law.get(p.id, None)
            if rule is None:
                reach[:, j] = rs.random(BLOCK) < 0.5
            else:
                reach[:, j] = rule
                if rule is False:
                    continue  # surface never contributes; skip its draws
            c = rs.integers(1, m + 1, size=BLOCK)
            zu = rs.standard_normal((BLOCK, p.n, 2)).view(np.complex128)[..., 0]
            zb = rs.standard_normal((BLOCK, p.n, 2)).view(np.complex128)[..., 0]
            if p.corr_factor is not None:
                zu = zu @ p.corr_factor.T
                zb = zb @ p.corr_factor.T
            # CN(0,1) normalization (1/2 per draw) and per-hop gains
            hop_scale = math.sqrt(p.beta_ur * p.beta_rb) / 2.0
            h_tilde = sqrt_p * hop_scale * np.einsum("ij,ij->i", zu, zb)
            amp = np.where(reach[:, j], h_tilde, 0.0)
            contrib = amp[:, None] * shift_mats[j][c - 1]
            y[np.arange(BLOCK)[:, None], v1[:, None] + col_idx] += contrib

        yr = np.ascontiguousarray(y.real)
        yi = np.ascontiguousarray(y.imag)
        metric = np.empty((BLOCK, len(profs)))
        for j in range(len(profs)):
            st = shift_mats[j].T
            best = np.zeros(BLOCK)
            for k in range(vt + 1):
                dr = yr[:, k : k + m] @ st
                di = yi[:, k : k + m] @ st
                np.maximum(best, (dr * dr + di * di).max(axis=1), out=best)
            metric[:, j] = best / m
        return consume(metric[rows], reach[rows])

    blocks = range(t0 // BLOCK, (t1 - 1) // BLOCK + 1)
    if plan.threads > 1:
        with ThreadPoolExecutor(max_workers=plan.threads) as pool:
            partials = list(pool.map(one_block, blocks))
    else:
        partials = [one_block(b) for b in blocks]
    totals = partials[0]
    for part in partials[1:]:
        totals = tuple(a + b for a, b in zip(totals, part))
    return totals


def _profile_index(plan: TrialPlan, target_ris: int) -> int:
    ids = sorted(p.id for p in plan.scenario.sim_profiles())
    return ids.index(target_ris)


def _estimate_threshold_events(plan, law, target_ris, r_w, want_decided):
    idx = _profile_index(plan, target_ris)

    def consume(metric, reach):
        decided = metric[:, idx] > r_w
        hits = decided if want_decided else ~decided
        return (np.array([int(hits.sum())], dtype=np.int64),)

    total = plan.trials
    (events,) = _run_blocks(plan, law, 0, total, consume)
    while plan.escalate and events[0] < MIN_EVENTS and total < plan.max_trials:
        new_total = min(total * ESCALATION_FACTOR, plan.max_trials)
        (extra,) = _run_blocks(plan, law, total, new_total, consume)
        events = events + extra
        total = new_total
    k = int(events[0])
    lo, hi = wilson_interval(k, total)
    return Estimate(
        value=k / total, ci_low=lo, ci_high=hi, events=k, trials=total,
        low_confidence=k < MIN_EVENTS,
    )


def estimate_pf(plan: TrialPlan, target_ris: int, r_bar: float) -> Estimate:
    """False-detection probability of one surface forced unreachable.

    Other surfaces follow the plan's reachability law (fair coin by
    default). Trials escalate tenfold up to the cap until at least 50
    events are seen; estimates below that are flagged low-confidence.
    """
    law = _law_for(plan, {target_ris: False})
    r_w = r_bar**2 * plan.scenario.noise_variance_w
    return _estimate_threshold_events(plan, law, target_ris, r_w, want_decided=True)


def estimate_pmiss(plan: TrialPlan, target_ris: int, r_bar: float) -> Estimate:
    """Miss-detection probability of one surface forced reachable."""
    law = _law_for(plan, {target_ris: True})
    r_w = r_bar**2 * plan.scenario.noise_variance_w
    return _estimate_threshold_events(plan, law, target_ris, r_w, want_decided=False)


def decision_sweep(
    plan: TrialPlan,
    target_ris: int,
    r_bars: Sequence[float],
    forced: Mapping[int, bool],
    count_missed: bool = False,
):
    """One simulation pass scored against a whole threshold grid.

    The decision metric does not depend on the threshold, so a single run
    yields an estimate per grid point. No escalation is applied.
    """
    law = _law_for(plan, forced)
    idx = _profile_index(plan, target_ris)
    sn2 = plan.scenario.noise_variance_w
    r_w = np.array([r**2 * sn2 for r in r_bars])

    def consume(metric, reach):
        dec = metric[:, idx][:, None] > r_w[None, :]
        hits = ~dec if count_missed else dec
        return (hits.sum(axis=0).astype(np.int64),)

    (events,) = _run_blocks(plan, law, 0, plan.trials, consume)
    out = []
    for k in events:
        lo, hi = wilson_interval(int(k), plan.trials)
        out.append(Estimate(
            value=int(k) / plan.trials, ci_low=lo, ci_high=hi,
            events=int(k), trials=plan.trials,
            low_confidence=int(k) < MIN_EVENTS,
        ))
    return out


@dataclass(frozen=True)
class ConfusionMatrix:
    """Joint true-state vs decided-state counts over 2^L reachability states.

    State index encodes surface l (1-based position in ascending id order)
    as bit l-1. For two surfaces the states are, in order:
    NO RIS, RIS 1, RIS 2, BOTH RISs.
    """

    counts: np.ndarray
    labels: tuple
    trials: int

    def frequencies(self) -> np.ndarray:
        """Row-normalized frequencies; all-zero rows stay zero."""
        c = self.counts.astype(np.float64)
        sums = c.sum(axis=1, keepdims=True)
        return np.divide(c, sums, out=np.zeros_like(c), where=sums > 0)

    def _row_conditional(self, rows_cols) -> Fraction:
        total = Fraction(0)
        for row, cols in rows_cols:
            row_n = int(self.counts[row].sum())
            if row_n == 0:
                raise ValueError(f"no trials observed in state {self.labels[row]!r}")
            num = int(sum(self.counts[row, c] for c in cols))
            total += Fraction(num, row_n)
        return total / len(rows_cols)

    def miss_probability(self, surface: int) -> Fraction:
        """Exact tally of deciding the surface absent while it reflects.

        Averages the conditional miss rate over the equally likely states of
        the other surface, mirroring the analytical conditioning.
        """
        if self.counts.shape != (4, 4):
            raise ValueError("per-surface tallies are defined for two surfaces")
        bit = 1 << (surface - 1)
        rows = [s for s in range(4) if s & bit]
        return self._row_conditional(
            [(row, [c for c in range(4) if not c & bit]) for row in rows]
        )

    def false_probability(self, surface: int) -> Fraction:
        """Exact tally of deciding the surface present while it is silent."""
        if self.counts.shape != (4, 4):
            raise ValueError("per-surface tallies are defined for two surfaces")
        bit = 1 << (surface - 1)
        rows = [s for s in range(4) if not s & bit]
        return self._row_conditional(
            [(row, [c for c in range(4) if c & bit]) for row in rows]
        )


def confusion(plan: TrialPlan, r_bars: Sequence[float]):
    """Confusion matrices for every grid threshold from one simulation pass.

    All surfaces follow independent fair-coin reachability. Returns a dict
    mapping each threshold to its ConfusionMatrix.
    """
    profs = sorted(plan.scenario.sim_profiles(), key=lambda p: p.id)
    n_states = 1 << len(profs)
    sn2 = plan.scenario.noise_variance_w
    r_w = np.array([r**2 * sn2 for r in r_bars])
    weights = 1 << np.arange(len(profs))

    def consume(metric, reach):
        true_state = reach.astype(np.int64) @ weights
        outs = []
        for rw in r_w:
            dec_state = (metric > rw).astype(np.int64) @ weights
            joint = np.zeros((n_states, n_states), dtype=np.int64)
            np.add.at(joint, (true_state, dec_state), 1)
            outs.append(joint)
        return tuple(outs)

    law = _law_for(plan, {})
    joints = _run_blocks(plan, law, 0, plan.trials, consume)
    if len(profs) == 2:
        labels = ("NO RIS", "RIS 1", "RIS 2", "BOTH RISs")
    else:
        labels = tuple(
            "+".join(
                [f"RIS {j + 1}" for j in range(len(profs)) if s & (1 << j)]
            ) or "NO RIS"
            for s in range(n_states)
        )
    return {
        float(rb): ConfusionMatrix(counts=joint, labels=labels, trials=plan.trials)
        for rb, joint in zip(r_bars, joints)
    }


@dataclass(frozen=True)
class AveragedMetrics:
    """Per-threshold averages of the per-surface conditional error rates."""

    r_bar: float
    avg_pmiss: float
    avg_pf: float
    per_ris_pmiss: tuple
    per_ris_pf: tuple


def averaged_metrics(plan: TrialPlan, r_bars: Sequence[float]):
    """Average miss/false rates across surfaces for each grid threshold.

    Surfaces follow fair-coin reachability; each surface's miss rate is
    tallied over the trials where it truly reflects, the false rate over
    the rest, then both are averaged across surfaces.
    """
    profs = sorted(plan.scenario.sim_profiles(), key=lambda p: p.id)
    n_l = len(profs)
    sn2 = plan.scenario.noise_variance_w
    r_w = np.array([r**2 * sn2 for r in r_bars])

    def consume(metric, reach):
        reach_n = reach.sum(axis=0).astype(np.int64)
        silent_n = (~reach).sum(axis=0).astype(np.int64)
        miss = np.empty((len(r_w), n_l), dtype=np.int64)
        false = np.empty((len(r_w), n_l), dtype=np.int64)
        for i, rw in enumerate(r_w):
            dec = metric > rw
            miss[i] = (reach & ~dec).sum(axis=0)
            false[i] = (~reach & dec).sum(axis=0)
        return reach_n, silent_n, miss, false

    law = _law_for(plan, {})
    reach_n, silent_n, miss, false = _run_blocks(plan, law, 0, plan.trials, consume)
    out = []
    for i, rb in enumerate(r_bars):
        pmiss = miss[i] / np.maximum(reach_n, 1)
        pf = false[i] / np.maximum(silent_n, 1)
        out.append(AveragedMetrics(
            r_bar=float(rb),
            avg_pmiss=float(pmiss.mean()),
            avg_pf=float(pf.mean()),
            per_ris_pmiss=tuple(float(x) for x in pmiss),
            per_ris_pf=tuple(float(x) for x in pf),
        ))
    return out
