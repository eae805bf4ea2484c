"""Four-channel teleportation of an unknown spin state.

Particle 0 carries the unknown state, particles 1 and 2 the shared EPR
pair; the traveler (particle 1) ends up holding the teleported state.  A
joint Bell measurement of particles (0, 2) yields a 2-bit classical
message; conditioned on it, the traveler's state is one of four known
unitary images of the input, and the matching correction restores the
input exactly.  With the singlet ancilla the message outcomes are uniform
(1/4 each) and the pre-message traveler ensemble is maximally mixed, so
nothing about the input leaks before the classical message arrives.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bell import BellOutcome, bell_ket
from .spin import SpinOperator, SpinState, bloch_vector, project_pair, qubit, tensor

MEASURED_PAIR = (0, 2)   # the Bell measurement couples the unknown state and the EPR partner


@dataclass(frozen=True)
class UnknownState:
    """The state to teleport, a|up> + b|down> with |a|^2 + |b|^2 = 1."""

    a: complex
    b: complex

    def __post_init__(self):
        a, b = complex(self.a), complex(self.b)
        norm = abs(a) ** 2 + abs(b) ** 2
        if not np.isfinite(norm) or norm <= 0.0:
            raise ValueError("amplitudes must be finite and not both zero")
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"|a|^2 + |b|^2 must be 1, got {norm!r}")
        scale = norm ** -0.5
        object.__setattr__(self, "a", a * scale)
        object.__setattr__(self, "b", b * scale)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "UnknownState":
        """Haar-uniform random direction on the Bloch sphere."""
        raw = rng.normal(size=4)
        a = complex(raw[0], raw[1])
        b = complex(raw[2], raw[3])
        norm = (abs(a) ** 2 + abs(b) ** 2) ** 0.5
        return cls(a / norm, b / norm)

    @classmethod
    def from_bloch(cls, direction) -> "UnknownState":
        """Pure state polarized along a unit Bloch vector."""
        from .spin import unit_vector

        n = unit_vector(direction)
        # eigenvector of sigma.n with eigenvalue +1
        if n[2] > -1.0 + 1e-15:
            a = complex(np.sqrt((1.0 + n[2]) / 2.0))
            b = complex(n[0], n[1]) / np.sqrt(2.0 * (1.0 + n[2]))
        else:
            a, b = 0.0, 1.0
        return cls(a, b)

    def ket(self) -> SpinState:
        return qubit(self.a, self.b)

    def bloch(self) -> np.ndarray:
        return bloch_vector(self.ket())


@dataclass(frozen=True)
class ClassicalMessage:
    """The 2-bit Bell outcome sent over the classical channel."""

    outcome: BellOutcome
    emission_time: float = 0.0   # seconds; used by the experiment simulation


@dataclass(frozen=True)
class TeleportRecord:
    input: UnknownState
    outcome: BellOutcome
    outcome_probability: float
    pre_correction: SpinState    # traveler state before the correction
    correction: SpinOperator
    output: SpinState
    fidelity: float              # |<input|output>|^2


def make_epr(which: BellOutcome = BellOutcome.PSI_MINUS) -> SpinState:
    """The shared two-particle entangled resource (singlet by default)."""
    return bell_ket(which)


def compose_three(phi: UnknownState, epr: SpinState) -> SpinState:
    """Product state of the unknown particle and the EPR pair."""
    if epr.n_particles != 2:
        raise ValueError("epr must be a two-particle state")
    return tensor(phi.ket(), epr)


def channel_decomposition(state: SpinState) -> dict[BellOutcome, tuple[float, Optional[SpinState]]]:
    """Born weight and conditional traveler state for each Bell channel.

    The three-particle state is resolved over the Bell basis of the
    measured pair; channels with zero weight carry no conditional state.
    """
    if state.n_particles != 3:
        raise ValueError("channel_decomposition expects a three-particle state")
    channels = {}
    for outcome in BellOutcome:
        remainder, weight = project_pair(state, bell_ket(outcome), MEASURED_PAIR)
        conditional = SpinState.normalized(remainder) if weight > 1e-28 else None
        channels[outcome] = (weight, conditional)
    return channels


def bell_measure_13(state: SpinState, rng: np.random.Generator) -> tuple[ClassicalMessage, SpinState, float]:
    """Bell measurement of the (unknown, EPR-partner) pair.

    Returns the classical message, the renormalized traveler state
    conditioned on it, and the Born probability of the sampled outcome.
    """
    channels = channel_decomposition(state)
    weights = np.array([channels[out][0] for out in BellOutcome])
    edges = np.cumsum(weights)
    if edges[-1] <= 0.0:
        raise ValueError("state has no support on the Bell basis of the measured pair")
    edges = edges / edges[-1]
    edges[-1] = max(edges[-1], 1.0)
    idx = int(np.searchsorted(edges, rng.random(), side="right"))
    outcome = BellOutcome(idx)
    probability = float(weights[idx])
    conditional = channels[outcome][1]
    if conditional is None:
        raise ValueError("sampled a channel with no conditional state")
    return ClassicalMessage(outcome=outcome), conditional, probability


_CORRECTIONS = {
    BellOutcome.PSI_MINUS: np.eye(2, dtype=complex),
    BellOutcome.PSI_PLUS: np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
    BellOutcome.PHI_MINUS: np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    # spin flip composed with the sign flip; equals a y-axis pi rotation
    BellOutcome.PHI_PLUS: np.array([[0.0, -1.0], [1.0, 0.0]], dtype=complex),
}


def correction_for(outcome: BellOutcome) -> SpinOperator:
    """The 2x2 unitary the receiver applies for a given message.

    Real matrices by convention; outputs may differ from the input by a
    global phase, which carries no physics.
    """
    return SpinOperator(_CORRECTIONS[BellOutcome(outcome)])


def apply_correction(message: ClassicalMessage, conditional: SpinState) -> SpinState:
    """Complete the protocol once the classical message has arrived.

    Accepts only a ClassicalMessage: applying a correction without having
    received the message is a protocol violation.
    """
    if not isinstance(message, ClassicalMessage):
        raise TypeError("correction requires the classical message, not a bare outcome")
    from .spin import apply_normalized

    return apply_normalized(correction_for(message.outcome), conditional)


def run_protocol(phi: UnknownState, rng: np.random.Generator,
                 bell_filter: Optional[SpinOperator] = None) -> Optional[TeleportRecord]:
    """One teleportation trial; None means the filter produced no event.

    Without a filter the Bell measurement is ideal.  With a 4x4 filter the
    measured pair is scattered through it first and the outcome follows the
    filter statistics (per detected event); annihilated trials are
    discarded, not failures.
    """
    state = compose_three(phi, make_epr())
    if bell_filter is None:
        message, conditional, probability = bell_measure_13(state, rng)
    else:
        from .spin import embed_pair_operator

        embedded = embed_pair_operator(bell_filter, MEASURED_PAIR, 3)
        vec = embedded.matrix @ state.amplitudes
        norm = float(np.linalg.norm(vec))
        if norm <= 1e-12:
            return None
        filtered = SpinState(vec / norm)
        message, conditional, probability = bell_measure_13(filtered, rng)
    output = apply_correction(message, conditional)
    fidelity = phi.ket().overlap_modulus(output) ** 2
    return TeleportRecord(
        input=phi,
        outcome=message.outcome,
        outcome_probability=probability,
        pre_correction=conditional,
        correction=correction_for(message.outcome),
        output=output,
        fidelity=fidelity,
    )


def run_batch(phi: UnknownState, n_trials: int, rng: np.random.Generator,
              bell_filter: Optional[SpinOperator] = None) -> tuple[list[TeleportRecord], int]:
    """Run independent trials; returns the kept records and the discard count."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    records: list[TeleportRecord] = []
    discarded = 0
    for _ in range(n_trials):
        record = run_protocol(phi, rng, bell_filter)
        if record is None:
            discarded += 1
        else:
            records.append(record)
    return records, discarded
