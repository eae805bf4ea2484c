"""Bell states, projectors, collective-spin operators and state identification.

The four maximally entangled two-particle states are labeled PSI_MINUS,
PSI_PLUS, PHI_MINUS, PHI_PLUS and carry the 2-bit classical codes 00, 01,
10, 11.  The collective operators S_x, S_y, S_z (total spin) and s_z
(spin difference) are built from Bell-basis outer products; the companion
tests verify they equal the direct sums/differences of single-particle
projections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from itertools import islice
from typing import Iterable, NamedTuple

import numpy as np

from .spin import (
    ATOL,
    SpinOperator,
    SpinState,
    X_AXIS,
    Y_AXIS,
    Z_AXIS,
    rotation,
    unit_vector,
)

_SQRT2 = math.sqrt(2.0)


class BellOutcome(IntEnum):
    """The four Bell states; the integer value is the 2-bit classical code."""

    PSI_MINUS = 0
    PSI_PLUS = 1
    PHI_MINUS = 2
    PHI_PLUS = 3

    @property
    def code(self) -> str:
        """Two-bit message string, e.g. '00' for PSI_MINUS."""
        return format(self.value, "02b")

    @property
    def label(self) -> str:
        return self.name.lower()


# amplitudes over (uu, ud, du, dd)
_BELL_AMPLITUDES = {
    BellOutcome.PSI_MINUS: np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / _SQRT2,
    BellOutcome.PSI_PLUS: np.array([0.0, 1.0, 1.0, 0.0], dtype=complex) / _SQRT2,
    BellOutcome.PHI_MINUS: np.array([1.0, 0.0, 0.0, -1.0], dtype=complex) / _SQRT2,
    BellOutcome.PHI_PLUS: np.array([1.0, 0.0, 0.0, 1.0], dtype=complex) / _SQRT2,
}

TRIPLET_OUTCOMES = (BellOutcome.PSI_PLUS, BellOutcome.PHI_MINUS, BellOutcome.PHI_PLUS)


def bell_ket(outcome: BellOutcome) -> SpinState:
    """The normalized two-particle Bell state for an outcome label."""
    return SpinState(_BELL_AMPLITUDES[BellOutcome(outcome)])


def bell_projector(outcome: BellOutcome) -> SpinOperator:
    """Rank-1 projector |beta><beta| onto one Bell state."""
    amps = _BELL_AMPLITUDES[BellOutcome(outcome)]
    return SpinOperator(np.outer(amps, amps.conj()))


def _transition(ket_to: BellOutcome, bra_from: BellOutcome) -> np.ndarray:
    return np.outer(_BELL_AMPLITUDES[ket_to], _BELL_AMPLITUDES[bra_from].conj())


def collective_operator(which: str) -> SpinOperator:
    """Collective two-particle spin operator in Bell outer-product form.

    "Sx", "Sy", "Sz" are the components of S1 + S2 and "sz" is the z
    component of S1 - S2:

        S_x = |Psi+><Phi+| + |Phi+><Psi+|
        S_y = i(|Psi+><Phi-| - |Phi-><Psi+|)
        S_z = |Phi-><Phi+| + |Phi+><Phi-|
        s_z = |Psi+><Psi-| + |Psi-><Psi+|
    """
    P, M = BellOutcome.PSI_PLUS, BellOutcome.PSI_MINUS
    FP, FM = BellOutcome.PHI_PLUS, BellOutcome.PHI_MINUS
    if which == "Sx":
        mat = _transition(P, FP) + _transition(FP, P)
    elif which == "Sy":
        mat = 1j * (_transition(P, FM) - _transition(FM, P))
    elif which == "Sz":
        mat = _transition(FM, FP) + _transition(FP, FM)
    elif which == "sz":
        mat = _transition(P, M) + _transition(M, P)
    else:
        raise ValueError(f"unknown collective operator {which!r}; expected Sx, Sy, Sz or sz")
    return SpinOperator(mat)


# ---------------------------------------------------------------------------
# triplet 3-vector structure

@dataclass(frozen=True)
class TripletVectorBasis:
    """Orthonormal total-spin-1 eigenstates e1=|1,0>, e2=|1,1>, e3=|1,-1>."""

    e1: SpinState
    e2: SpinState
    e3: SpinState


class TripletReport(NamedTuple):
    basis: TripletVectorBasis
    residuals: dict[str, float]
    ok: bool


def triplet_basis() -> TripletVectorBasis:
    """Build |1,1>, |1,0>, |1,-1> by lowering from the stretched state uu."""
    e2 = np.zeros(4, dtype=complex)
    e2[0] = 1.0  # uu
    # S- = S1- + S2- maps uu -> du + ud
    e1 = np.array([0.0, 1.0, 1.0, 0.0], dtype=complex) / _SQRT2
    e3 = np.zeros(4, dtype=complex)
    e3[3] = 1.0  # dd
    return TripletVectorBasis(e1=SpinState(e1), e2=SpinState(e2), e3=SpinState(e3))


def triplet_relations() -> TripletReport:
    """Check |Psi+> = e1 and |Phi+-> = (e2 +- e3)/sqrt(2); return the basis.

    Residuals are deviations of the overlap moduli from 1.
    """
    basis = triplet_basis()
    combo_plus = SpinState((basis.e2.amplitudes + basis.e3.amplitudes) / _SQRT2)
    combo_minus = SpinState((basis.e2.amplitudes - basis.e3.amplitudes) / _SQRT2)
    residuals = {
        "psi_plus_vs_e1": abs(bell_ket(BellOutcome.PSI_PLUS).overlap_modulus(basis.e1) - 1.0),
        "phi_plus_vs_e2+e3": abs(bell_ket(BellOutcome.PHI_PLUS).overlap_modulus(combo_plus) - 1.0),
        "phi_minus_vs_e2-e3": abs(bell_ket(BellOutcome.PHI_MINUS).overlap_modulus(combo_minus) - 1.0),
    }
    return TripletReport(basis=basis, residuals=residuals, ok=max(residuals.values()) <= ATOL)


class RotationPermutationReport(NamedTuple):
    axis: str
    mapping: dict[BellOutcome, BellOutcome]   # triplet state -> its image
    overlaps: dict[BellOutcome, float]        # modulus of the winning overlap
    singlet_overlap: float                    # |<Psi-| R x R |Psi->|


_NAMED_AXES = {"x": X_AXIS, "y": Y_AXIS, "z": Z_AXIS}


def rotation_permutation(axis, angle: float = math.pi / 2) -> RotationPermutationReport:
    """How a quarter-turn applied to both particles permutes the Bell states.

    ``axis`` must be one of the coordinate axes (or the strings "x", "y",
    "z") and ``angle`` must be pi/2.  Each triplet state is carried onto a
    single triplet state with overlap modulus 1, and the singlet is left
    invariant.
    """
    if abs(angle - math.pi / 2) > ATOL:
        raise ValueError("rotation_permutation is defined for angle = pi/2")
    if isinstance(axis, str):
        name = axis
    else:
        arr = unit_vector(axis)
        matches = [nm for nm, ax in _NAMED_AXES.items() if np.abs(arr - ax).max() <= ATOL]
        if not matches:
            raise ValueError("axis must be one of the coordinate axes x, y, z")
        name = matches[0]
    if name not in _NAMED_AXES:
        raise ValueError(f"unknown axis {name!r}")

    r2x2 = rotation(_NAMED_AXES[name], angle).matrix
    r_pair = np.kron(r2x2, r2x2)
    mapping: dict[BellOutcome, BellOutcome] = {}
    overlaps: dict[BellOutcome, float] = {}
    for src in TRIPLET_OUTCOMES:
        image = r_pair @ _BELL_AMPLITUDES[src]
        best, best_mod = None, -1.0
        for dst in TRIPLET_OUTCOMES:
            mod = abs(np.vdot(_BELL_AMPLITUDES[dst], image))
            if mod > best_mod:
                best, best_mod = dst, mod
        if best_mod < 1.0 - 1e-9:
            raise ValueError(f"rotation about {name} does not permute the triplet states")
        mapping[src] = best
        overlaps[src] = best_mod
    singlet = _BELL_AMPLITUDES[BellOutcome.PSI_MINUS]
    singlet_overlap = abs(np.vdot(singlet, r_pair @ singlet))
    return RotationPermutationReport(axis=name, mapping=mapping, overlaps=overlaps,
                                     singlet_overlap=singlet_overlap)


# ---------------------------------------------------------------------------
# two-particle correlation along measurement axes

def _pair_joint_probabilities(state: SpinState, axis0, axis1) -> np.ndarray:
    """Joint Born weights for (s0, s1) in (++, +-, -+, --) order.

    The two single-particle projectors commute, so this joint distribution
    equals the sequential chain of projective measurements.
    """
    if state.n_particles != 2:
        raise ValueError("correlation requires a two-particle state")
    from .spin import _plus_projector  # shared cache

    n0 = unit_vector(axis0)
    n1 = unit_vector(axis1)
    p0 = _plus_projector(n0, 0, 2)
    p1 = _plus_projector(n1, 1, 2)
    psi = state.amplitudes
    vecs = {
        (0, 0): p1 @ (p0 @ psi),
        (0, 1): (p0 @ psi) - p1 @ (p0 @ psi),
    }
    minus0 = psi - p0 @ psi
    vecs[(1, 0)] = p1 @ minus0
    vecs[(1, 1)] = minus0 - p1 @ minus0
    probs = np.array([
        np.vdot(vecs[(0, 0)], vecs[(0, 0)]).real,
        np.vdot(vecs[(0, 1)], vecs[(0, 1)]).real,
        np.vdot(vecs[(1, 0)], vecs[(1, 0)]).real,
        np.vdot(vecs[(1, 1)], vecs[(1, 1)]).real,
    ])
    return np.clip(probs, 0.0, 1.0)


def correlation_probability(state: SpinState, axis1, axis2) -> float:
    """Born probability that the two measured projections sum to zero.

    Particle 0 is measured along ``axis1`` and particle 1 along ``axis2``;
    the result is the exact probability of opposite signs (+- or -+).
    """
    probs = _pair_joint_probabilities(state, axis1, axis2)
    return float(probs[1] + probs[2])


def sample_sum_zero(state: SpinState, axis1, axis2, n_samples: int, rng: np.random.Generator) -> int:
    """Sample n joint projective measurements; count events with zero sum.

    Vectorized equivalent of measuring particle 0 then particle 1 with
    :func:`nucleport.spin.measure_projection` on each copy.
    """
    if n_samples < 0:
        raise ValueError("n_samples must be nonnegative")
    probs = _pair_joint_probabilities(state, axis1, axis2)
    edges = np.cumsum(probs)
    edges[-1] = max(edges[-1], 1.0)
    draws = np.searchsorted(edges, rng.random(n_samples), side="right")
    return int(np.count_nonzero((draws == 1) | (draws == 2)))


# ---------------------------------------------------------------------------
# statistical Bell-state identification

class DiscriminationResult(NamedTuple):
    estimate: BellOutcome
    confidence: float   # 1 - 2**(-rounds); a coarse bound, not a posterior


_JOINT_CACHE: dict[tuple, np.ndarray] = {}

# candidate sets keyed by (axis index, anticorrelated?)
_Z_SPLIT = {True: {BellOutcome.PSI_MINUS, BellOutcome.PSI_PLUS},
            False: {BellOutcome.PHI_MINUS, BellOutcome.PHI_PLUS}}
_X_SPLIT = {True: {BellOutcome.PSI_MINUS, BellOutcome.PHI_MINUS},
            False: {BellOutcome.PSI_PLUS, BellOutcome.PHI_PLUS}}


def _sample_anticorrelation_bit(state: SpinState, axis: np.ndarray, rng: np.random.Generator) -> bool:
    """One joint measurement of a copy: True when the projections sum to zero."""
    key = (state.amplitudes.tobytes(), axis.tobytes())
    edges = _JOINT_CACHE.get(key)
    if edges is None:
        edges = np.cumsum(_pair_joint_probabilities(state, axis, axis))
        edges[-1] = max(edges[-1], 1.0)
        if len(_JOINT_CACHE) < 4096:
            _JOINT_CACHE[key] = edges
    cell = int(np.searchsorted(edges, rng.random(), side="right"))
    return cell in (1, 2)


def discriminate_bell(source: Iterable[SpinState], copies: int, rng: np.random.Generator) -> DiscriminationResult:
    """Identify which Bell state a stream of identical copies carries.

    Copies are measured alternately along the z and x axes (both particles
    along the same axis).  The z correlation separates {Psi-, Psi+} from
    {Phi-, Phi+}; the x correlation separates each pair, since Psi- is
    anticorrelated and Phi+/Psi+ are correlated along x while Phi- is
    anticorrelated.  Majority vote per axis picks the branch; with only one
    axis observed the first candidate in code order is reported.

    Confidence is 1 - 2**(-k) with k = ceil(copies/2) measurement rounds
    (a z/x pair of copies per round); this is a documented coarse bound on
    being correct, not a posterior probability.
    """
    if copies < 1:
        raise ValueError("copies must be >= 1")
    votes = {0: [], 1: []}  # 0 -> z axis, 1 -> x axis
    n_used = 0
    for i, state in enumerate(islice(source, copies)):
        axis_idx = i % 2
        axis = Z_AXIS if axis_idx == 0 else X_AXIS
        votes[axis_idx].append(_sample_anticorrelation_bit(state, axis, rng))
        n_used += 1
    if n_used == 0:
        raise ValueError("empty source: no copies to measure")

    candidates = set(BellOutcome)
    if votes[0]:
        anti = sum(votes[0]) * 2 >= len(votes[0])  # ties favor anticorrelated
        candidates &= _Z_SPLIT[anti]
    if votes[1]:
        anti = sum(votes[1]) * 2 >= len(votes[1])
        candidates &= _X_SPLIT[anti]
    if not candidates:
        # only reachable for non-Bell input; fall back to the z-axis branch
        candidates = _Z_SPLIT[sum(votes[0]) * 2 >= len(votes[0])] if votes[0] else set(BellOutcome)

    estimate = min(candidates)
    rounds = (n_used + 1) // 2
    confidence = 1.0 - 2.0 ** (-rounds)
    return DiscriminationResult(estimate=estimate, confidence=confidence)
