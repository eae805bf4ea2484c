"""Monte Carlo model of the two-target teleportation experiment.

One simulated beam proton scatters in the first (liquid hydrogen) target,
producing a singlet pair.  One partner flies to the polarized target where
the Bell filter acts on it together with a target proton and the detector
F-1 tags the event; the traveler flies on to the carbon analyzer, whose
left-right scattering asymmetry reads out its polarization, and is counted
in F-2.  The two detector streams are paired by a coincidence window over
the classical channel, and causal separation |x_F1 - x_F2| > c |t_F1 -
t_F2| is audited per event.

Kinematics are timing-only: straight legs at the constant speed given by
the beam kinetic energy; no energy loss or angular spread.  Beam protons
arrive on a fixed period.  Event randomness is drawn from counter-based
Philox streams keyed by (seed, chunk index) with a fixed chunk size, so
results are byte-reproducible for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple, Optional

import numpy as np

from .bell import BellOutcome
from .spin import SpinOperator, SpinState, bloch_vector, embed_pair_operator, unit_vector
from .teleport import MEASURED_PAIR, UnknownState, channel_decomposition, compose_three, make_epr

C_LIGHT = 299_792_458.0        # m/s
PROTON_MASS_MEV = 938.272

CHUNK_EVENTS = 65536           # fixed chunk size; part of the determinism contract

_NORMALS = np.eye(3)           # analyzer normals cycle through x, y, z


def relativistic_beta(kinetic_mev: float, mass_mev: float = PROTON_MASS_MEV) -> float:
    """v/c of a particle with the given kinetic energy."""
    if kinetic_mev <= 0.0:
        raise ValueError("kinetic energy must be positive")
    gamma_inv = mass_mev / (mass_mev + kinetic_mev)
    return math.sqrt(1.0 - gamma_inv * gamma_inv)


class LegTimes(NamedTuple):
    """Flight times (s) from the first-target scattering at t = 0."""

    t_ph2: float   # pair partner reaches the polarized target
    t_k: float     # traveler reaches the analyzer point
    t_f1: float    # Bell-tagged partner counted in F-1
    t_f2: float    # analyzed traveler counted in F-2


@dataclass(frozen=True)
class GeometryConfig:
    """Positions (m), beam energy (MeV) and detector bookkeeping knobs."""

    lh2: np.ndarray
    ph2: np.ndarray
    analyzer: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    beam_energy_mev: float
    coincidence_window_s: float
    beam_period_s: float = 1e-6
    detector_efficiency: float = 1.0
    timestamp_jitter_s: float = 0.0

    def __post_init__(self):
        for name in ("lh2", "ph2", "analyzer", "f1", "f2"):
            pos = np.asarray(getattr(self, name), dtype=float).reshape(3)
            if not np.all(np.isfinite(pos)):
                raise ValueError(f"position {name} has non-finite components")
            pos = pos.copy()
            pos.setflags(write=False)
            object.__setattr__(self, name, pos)
        for a, b in combinations(("lh2", "ph2", "analyzer", "f1", "f2"), 2):
            if np.linalg.norm(getattr(self, a) - getattr(self, b)) <= 0.0:
                raise ValueError(f"positions {a} and {b} coincide")
        if not 0.0 < self.beam_energy_mev < 1000.0:
            raise ValueError("beam energy must lie in (0, 1000) MeV")
        if self.coincidence_window_s <= 0.0:
            raise ValueError("coincidence window must be positive")
        if self.beam_period_s <= 0.0:
            raise ValueError("beam period must be positive")
        if not 0.0 <= self.detector_efficiency <= 1.0:
            raise ValueError("detector efficiency must lie in [0, 1]")
        if self.timestamp_jitter_s < 0.0:
            raise ValueError("timestamp jitter must be nonnegative")

    @property
    def speed(self) -> float:
        """Proton speed in m/s at the configured beam energy."""
        return relativistic_beta(self.beam_energy_mev) * C_LIGHT

    def leg_times(self) -> LegTimes:
        v = self.speed
        d = np.linalg.norm
        t_ph2 = d(self.ph2 - self.lh2) / v
        t_k = d(self.analyzer - self.lh2) / v
        return LegTimes(
            t_ph2=t_ph2,
            t_k=t_k,
            t_f1=t_ph2 + d(self.f1 - self.ph2) / v,
            t_f2=t_k + d(self.f2 - self.analyzer) / v,
        )

    @property
    def detector_distance(self) -> float:
        return float(np.linalg.norm(self.f1 - self.f2))

    @classmethod
    def default(cls) -> "GeometryConfig":
        """Length-matched arms, so same-event detections are simultaneous."""
        return cls(
            lh2=np.array([0.0, 0.0, 0.0]),
            ph2=np.array([-5.0, 0.0, 0.0]),
            analyzer=np.array([5.0, 0.0, 0.0]),
            f1=np.array([-6.0, 0.0, 0.0]),
            f2=np.array([6.0, 0.0, 0.0]),
            beam_energy_mev=40.0,
            coincidence_window_s=5e-8,
        )


@dataclass(frozen=True)
class PolarizedTarget:
    """Pure spin state of the protons in the polarized target."""

    state: UnknownState

    @classmethod
    def from_bloch(cls, direction) -> "PolarizedTarget":
        return cls(state=UnknownState.from_bloch(direction))


@dataclass(frozen=True)
class AnalyzerModel:
    """Linear left-right polarimeter: P(Left) = (1 + A p_n) / 2."""

    analyzing_power: float

    def __post_init__(self):
        if not -1.0 <= self.analyzing_power <= 1.0:
            raise ValueError("analyzing power must lie in [-1, 1]")


@dataclass(frozen=True)
class EventRecord:
    """One simulated event; timestamps are NaN when a detector stayed silent."""

    event_id: int
    t_f1: float
    t_f2: float
    outcome: Optional[BellOutcome]      # None = no Bell tag (no event)
    analyzer_side: Optional[str]        # "L" / "R", None when no event
    causal_separated: bool
    accepted: bool


# ---------------------------------------------------------------------------
# polarimetry

def left_probability(spin: SpinState, model: AnalyzerModel, normal) -> float:
    """Analyzer law P(Left) = (1 + A p_n)/2 with p_n = 2 <S.n>."""
    n = unit_vector(normal)
    p_n = float(bloch_vector(spin) @ n)
    return 0.5 * (1.0 + model.analyzing_power * p_n)


def analyzer_scatter(spin: SpinState, model: AnalyzerModel, normal,
                     rng: np.random.Generator) -> str:
    """Sample the left/right deflection of one analyzed proton."""
    return "L" if rng.random() < left_probability(spin, model, normal) else "R"


def asymmetry(n_left: int, n_right: int) -> tuple[float, float]:
    """Counting asymmetry (N_L - N_R)/(N_L + N_R) and its binomial error."""
    total = n_left + n_right
    if total <= 0:
        raise ValueError("asymmetry needs at least one count")
    epsilon = (n_left - n_right) / total
    sigma = math.sqrt(max(0.0, 1.0 - epsilon * epsilon) / total)
    return epsilon, sigma


# ---------------------------------------------------------------------------
# coincidence matching and causal separation

class CoincidenceResult(NamedTuple):
    pairs: np.ndarray          # (k, 2) indices into the two input streams
    n_unmatched_f1: int
    n_unmatched_f2: int


def coincidence_match(t_f1, t_f2, window: float) -> CoincidenceResult:
    """Greedy nearest-in-time pairing of two sorted timestamp streams.

    Candidate pairs satisfy |t1 - t2| <= window; they are consumed in order
    of increasing |t1 - t2| (ties: earlier F-1 record, then earlier F-2
    record), each record used at most once.  Deterministic for sorted
    inputs; unmatched records are only counted.
    """
    t1 = np.asarray(t_f1, dtype=float).reshape(-1)
    t2 = np.asarray(t_f2, dtype=float).reshape(-1)
    if window <= 0.0:
        raise ValueError("window must be positive")
    if np.any(np.diff(t1) < 0.0) or np.any(np.diff(t2) < 0.0):
        raise ValueError("streams must be sorted by time")
    lo = np.searchsorted(t2, t1 - window, side="left")
    hi = np.searchsorted(t2, t1 + window, side="right")
    counts = hi - lo
    total = int(counts.sum())
    if total == 0:
        return CoincidenceResult(np.empty((0, 2), dtype=np.int64), t1.size, t2.size)
    cand_i = np.repeat(np.arange(t1.size), counts)
    offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    cand_j = np.repeat(lo, counts) + offsets
    dt = np.abs(t1[cand_i] - t2[cand_j])
    order = np.lexsort((cand_j, cand_i, dt))
    used1 = np.zeros(t1.size, dtype=bool)
    used2 = np.zeros(t2.size, dtype=bool)
    pairs = []
    for k in order:
        i = cand_i[k]
        j = cand_j[k]
        if not used1[i] and not used2[j]:
            used1[i] = True
            used2[j] = True
            pairs.append((i, j))
    pairs.sort()
    pair_arr = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    return CoincidenceResult(pair_arr, int(t1.size - used1.sum()), int(t2.size - used2.sum()))


def causal_flags(t_f1, t_f2, detector_distance: float) -> np.ndarray:
    """Causal-separation predicate |x_F1 - x_F2| > c |t_F1 - t_F2| (exact).

    NaN timestamps (silent detectors) compare as not separated.
    """
    dt = np.abs(np.asarray(t_f1, dtype=float) - np.asarray(t_f2, dtype=float))
    with np.errstate(invalid="ignore"):
        return detector_distance > C_LIGHT * dt


def causal_filter(events: list[EventRecord], config: GeometryConfig) -> list[EventRecord]:
    """Retain exactly the causally separated events."""
    d = config.detector_distance
    keep = causal_flags([e.t_f1 for e in events], [e.t_f2 for e in events], d)
    return [e for e, k in zip(events, keep) if bool(k)]


# ---------------------------------------------------------------------------
# event generation

@dataclass(frozen=True)
class FilterChannels:
    """Per-Bell-channel statistics of the filtered (target, partner) pair."""

    detected: bool
    probabilities: np.ndarray    # (4,) outcome weights given a detection
    spins: np.ndarray            # (4, 2) conditional traveler states (zero rows: dead channels)


def filter_channels(target: PolarizedTarget, bell_filter: Optional[SpinOperator]) -> FilterChannels:
    """Resolve the filtered three-particle state over the Bell channels."""
    state = compose_three(target.state, make_epr())
    if bell_filter is not None:
        embedded = embed_pair_operator(bell_filter, MEASURED_PAIR, 3)
        vec = embedded.matrix @ state.amplitudes
        norm = float(np.linalg.norm(vec))
        if norm <= 1e-12:
            return FilterChannels(False, np.zeros(4), np.zeros((4, 2), dtype=complex))
        state = SpinState(vec / norm)
    channels = channel_decomposition(state)
    probs = np.zeros(4)
    spins = np.zeros((4, 2), dtype=complex)
    for out in BellOutcome:
        weight, conditional = channels[out]
        probs[out.value] = weight
        if conditional is not None:
            spins[out.value] = conditional.amplitudes
    probs = probs / probs.sum()
    return FilterChannels(True, probs, spins)


def _left_prob_table(channels: FilterChannels, model: AnalyzerModel) -> np.ndarray:
    """P(Left) per (Bell outcome, analyzer normal in x/y/z order)."""
    table = np.full((4, 3), 0.5)
    for k in range(4):
        if np.any(channels.spins[k] != 0):
            spin = SpinState(channels.spins[k])
            for a in range(3):
                table[k, a] = left_probability(spin, model, _NORMALS[a])
    return table


def generate_event(config: GeometryConfig, target: PolarizedTarget,
                   bell_filter: Optional[SpinOperator], rng: np.random.Generator,
                   model: AnalyzerModel, normal, event_id: int = 0,
                   start_time: float = 0.0) -> EventRecord:
    """Simulate one beam proton through the full layout.

    A no-event (annihilating filter, missed detector, or a time difference
    beyond the coincidence window) is recorded in the returned EventRecord,
    never raised.  The per-event draw order is: outcome, analyzer side,
    F-1 efficiency, F-2 efficiency, two jitter deviates.
    """
    channels = filter_channels(target, bell_filter)
    legs = config.leg_times()
    u = rng.random(4)
    jitter = rng.standard_normal(2) * config.timestamp_jitter_s

    if channels.detected:
        edges = np.cumsum(channels.probabilities)
        edges[-1] = max(edges[-1], 1.0)
        outcome = BellOutcome(int(np.searchsorted(edges, u[0], side="right")))
        spin = SpinState(channels.spins[outcome.value])
        side = "L" if u[1] < left_probability(spin, model, normal) else "R"
        f1_fired = u[2] < config.detector_efficiency
        f2_fired = u[3] < config.detector_efficiency
    else:
        outcome, side, f1_fired, f2_fired = None, None, False, False

    t_f1 = start_time + legs.t_f1 + jitter[0] if f1_fired else math.nan
    t_f2 = start_time + legs.t_f2 + jitter[1] if f2_fired else math.nan
    causal = bool(causal_flags(t_f1, t_f2, config.detector_distance))
    accepted = (f1_fired and f2_fired
                and abs(t_f1 - t_f2) <= config.coincidence_window_s)
    return EventRecord(event_id=event_id, t_f1=t_f1, t_f2=t_f2, outcome=outcome,
                       analyzer_side=side, causal_separated=causal, accepted=accepted)


# ---------------------------------------------------------------------------
# batch simulation

@dataclass
class EventArrays:
    """Columnar event table (one row per generated event)."""

    event_id: np.ndarray     # int64
    t_f1: np.ndarray         # float64, NaN = silent
    t_f2: np.ndarray
    outcome: np.ndarray      # int8, Bell code or -1 for no event
    side: np.ndarray         # int8, 0 = L, 1 = R, -1 = none
    causal: np.ndarray       # bool
    accepted: np.ndarray     # bool

    def __len__(self):
        return self.event_id.size


class NormalSummary(NamedTuple):
    n_left: int
    n_right: int
    epsilon: float
    sigma: float


@dataclass
class ExperimentSummary:
    n_events: int
    counts: dict[str, int]                  # per Bell label plus "no_event"
    n_accepted: int
    n_mismatched_pairs: int
    n_unmatched_f1: int
    n_unmatched_f2: int
    n_causal: int
    causal_fraction: float
    per_normal: dict[str, NormalSummary]    # keys "x", "y", "z"
    polarization: np.ndarray                # reconstructed Bloch vector (NaN if degenerate)
    polarization_sigma: np.ndarray
    summary_channel: str
    warning: Optional[str]


def _chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    """Counter-based stream for one chunk: Philox keyed by (seed, chunk)."""
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) + chunk_index))


def _simulate_chunk(start: int, count: int, seed: int, chunk_index: int,
                    channels: FilterChannels, pl_table: np.ndarray,
                    config: GeometryConfig, legs: LegTimes) -> tuple:
    rng = _chunk_rng(seed, chunk_index)
    u = rng.random((count, 4))
    g = rng.standard_normal((count, 2))
    ids = np.arange(start, start + count, dtype=np.int64)
    normal_idx = (ids % 3).astype(np.int64)

    if channels.detected:
        edges = np.cumsum(channels.probabilities)
        edges[-1] = max(edges[-1], 1.0)
        outcome = np.searchsorted(edges, u[:, 0], side="right").astype(np.int8)
        pl = pl_table[outcome, normal_idx]
        side = np.where(u[:, 1] < pl, 0, 1).astype(np.int8)
        fired1 = u[:, 2] < config.detector_efficiency
        fired2 = u[:, 3] < config.detector_efficiency
    else:
        outcome = np.full(count, -1, dtype=np.int8)
        side = np.full(count, -1, dtype=np.int8)
        fired1 = np.zeros(count, dtype=bool)
        fired2 = np.zeros(count, dtype=bool)

    t0 = ids * config.beam_period_s
    t_f1 = np.where(fired1, t0 + legs.t_f1 + config.timestamp_jitter_s * g[:, 0], np.nan)
    t_f2 = np.where(fired2, t0 + legs.t_f2 + config.timestamp_jitter_s * g[:, 1], np.nan)
    return ids, t_f1, t_f2, outcome, side


def run_experiment(config: GeometryConfig, target: PolarizedTarget,
                   bell_filter: Optional[SpinOperator], model: AnalyzerModel,
                   n_events: int, seed: int, threads: int = 1,
                   summary_channel: BellOutcome = BellOutcome.PSI_MINUS,
                   ) -> tuple[ExperimentSummary, EventArrays]:
    """Simulate a full run and aggregate its statistics.

    Analyzer normals cycle deterministically through x, y, z by event id;
    asymmetries are computed per normal from coincidence-accepted events in
    the summary channel, and the target polarization is reconstructed as
    epsilon_i / analyzing_power.  Chunks draw independent Philox streams,
    so the output is identical for any ``threads``.
    """
    if n_events < 1:
        raise ValueError("n_events must be >= 1")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    channels = filter_channels(target, bell_filter)
    pl_table = _left_prob_table(channels, model)
    legs = config.leg_times()

    n_chunks = (n_events + CHUNK_EVENTS - 1) // CHUNK_EVENTS
    ids = np.empty(n_events, dtype=np.int64)
    t_f1 = np.empty(n_events, dtype=float)
    t_f2 = np.empty(n_events, dtype=float)
    outcome = np.empty(n_events, dtype=np.int8)
    side = np.empty(n_events, dtype=np.int8)

    def work(chunk_index: int):
        start = chunk_index * CHUNK_EVENTS
        count = min(CHUNK_EVENTS, n_events - start)
        return start, count, _simulate_chunk(start, count, seed, chunk_index,
                                             channels, pl_table, config, legs)

    if threads == 1 or n_chunks == 1:
        results = map(work, range(n_chunks))
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, range(n_chunks)))
    for start, count, cols in results:
        sl = slice(start, start + count)
        ids[sl], t_f1[sl], t_f2[sl], outcome[sl], side[sl] = cols

    # coincidence matching over the two fired streams in time order (jitter
    # can reorder records relative to the beam order)
    fired1 = np.flatnonzero(~np.isnan(t_f1))
    fired1 = fired1[np.argsort(t_f1[fired1], kind="stable")]
    fired2 = np.flatnonzero(~np.isnan(t_f2))
    fired2 = fired2[np.argsort(t_f2[fired2], kind="stable")]
    match = coincidence_match(t_f1[fired1], t_f2[fired2], config.coincidence_window_s)
    accepted = np.zeros(n_events, dtype=bool)
    mismatched = 0
    for i, j in match.pairs:
        if fired1[i] == fired2[j]:
            accepted[fired1[i]] = True
        else:
            mismatched += 1

    causal = causal_flags(t_f1, t_f2, config.detector_distance)
    arrays = EventArrays(event_id=ids, t_f1=t_f1, t_f2=t_f2, outcome=outcome,
                         side=side, causal=causal, accepted=accepted)

    counts = {out.label: int(np.count_nonzero(outcome == out.value)) for out in BellOutcome}
    counts["no_event"] = int(np.count_nonzero(outcome == -1))

    in_channel = accepted & (outcome == np.int8(summary_channel.value))
    normal_idx = (ids % 3).astype(np.int64)
    per_normal: dict[str, NormalSummary] = {}
    warning = None
    pol = np.full(3, np.nan)
    pol_sigma = np.full(3, np.nan)
    power = model.analyzing_power
    for a, name in enumerate("xyz"):
        mask = in_channel & (normal_idx == a)
        n_l = int(np.count_nonzero(mask & (side == 0)))
        n_r = int(np.count_nonzero(mask & (side == 1)))
        if n_l + n_r == 0:
            per_normal[name] = NormalSummary(0, 0, math.nan, math.nan)
            if warning is None:
                warning = ("degenerate run: no accepted summary-channel events "
                           f"for analyzer normal {name}")
            continue
        eps, sig = asymmetry(n_l, n_r)
        per_normal[name] = NormalSummary(n_l, n_r, eps, sig)
        if power != 0.0:
            pol[a] = eps / power
            pol_sigma[a] = sig / abs(power)
    if power == 0.0 and warning is None:
        warning = "degenerate run: analyzing power is zero, polarization not reconstructable"

    summary = ExperimentSummary(
        n_events=n_events,
        counts=counts,
        n_accepted=int(accepted.sum()),
        n_mismatched_pairs=mismatched,
        n_unmatched_f1=match.n_unmatched_f1,
        n_unmatched_f2=match.n_unmatched_f2,
        n_causal=int(np.count_nonzero(causal)),
        causal_fraction=float(np.count_nonzero(causal)) / n_events,
        per_normal=per_normal,
        polarization=pol,
        polarization_sigma=pol_sigma,
        summary_channel=summary_channel.label,
        warning=warning,
    )
    return summary, arrays
