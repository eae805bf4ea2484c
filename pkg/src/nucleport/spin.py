"""Exact spin-1/2 state and operator algebra for up to three particles.

Conventions used throughout the package:

* hbar = 1: every single-particle spin projection has eigenvalues +-1/2.
* Amplitudes are indexed by the spin-z bit pattern of the configuration.
  Particle 0 occupies the most significant bit; bit value 0 means spin up,
  bit value 1 means spin down.  For two particles the basis order is
  (uu, ud, du, dd).
* Global phases carry no physics.  Compare states through
  ``overlap_modulus``, never componentwise.
* Every value is immutable after construction; randomness enters only
  through explicit ``numpy.random.Generator`` arguments, so any object may
  be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

ATOL = 1e-12            # exact-algebra tolerance (dims <= 8, double precision)
AXIS_NORM_TOL = 1e-9    # rejection threshold for non-unit direction vectors

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

X_AXIS = np.array([1.0, 0.0, 0.0])
Y_AXIS = np.array([0.0, 1.0, 0.0])
Z_AXIS = np.array([0.0, 0.0, 1.0])
for _axis in (SIGMA_X, SIGMA_Y, SIGMA_Z, X_AXIS, Y_AXIS, Z_AXIS):
    _axis.setflags(write=False)


class ZeroNormError(ValueError):
    """An operation annihilated the state (zero-norm result)."""


def unit_vector(v) -> np.ndarray:
    """Validate a 3-vector as a unit direction and return a read-only copy."""
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"direction must be a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("direction has non-finite components")
    if abs(np.linalg.norm(arr) - 1.0) > AXIS_NORM_TOL:
        raise ValueError(f"direction is not unit length: |v| = {np.linalg.norm(arr)!r}")
    out = arr.copy()
    out.setflags(write=False)
    return out


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=complex, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SpinState:
    """Normalized pure state of 1, 2 or 3 spin-1/2 particles.

    ``amplitudes`` holds 2**n complex coefficients in the bit-pattern order
    documented in the module docstring.  The constructor renormalizes the
    vector exactly, but rejects input whose norm is not already 1 within
    1e-9 (use :meth:`normalized` to build a state from a raw vector).
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] not in (2, 4, 8):
            raise ValueError(f"state length must be 2, 4 or 8, got {amps.shape[0]}")
        if not np.all(np.isfinite(amps.view(float))):
            raise ValueError("state has non-finite amplitudes")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state is not normalized: |psi| = {norm!r}")
        object.__setattr__(self, "amplitudes", _freeze(amps / norm))

    @classmethod
    def normalized(cls, amplitudes) -> "SpinState":
        """Build a state from any nonzero vector, scaling it to unit norm."""
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = float(np.linalg.norm(amps))
        if norm <= 0.0 or not np.isfinite(norm):
            raise ZeroNormError("cannot normalize a zero or non-finite vector")
        return cls(amps / norm)

    @property
    def n_particles(self) -> int:
        return self.amplitudes.shape[0].bit_length() - 1

    def overlap(self, other: "SpinState") -> complex:
        """Inner product <self|other>."""
        if self.amplitudes.shape != other.amplitudes.shape:
            raise ValueError("particle counts differ")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def overlap_modulus(self, other: "SpinState") -> float:
        """|<self|other>|, the phase-free comparison of two states."""
        return abs(self.overlap(other))

    def probabilities(self) -> np.ndarray:
        """Born weights of the spin-z configurations."""
        return np.abs(self.amplitudes) ** 2

    def __repr__(self):
        return f"SpinState({np.array2string(self.amplitudes, precision=6)})"


@dataclass(frozen=True, eq=False)
class SpinOperator:
    """Dense complex operator on the 2**n dimensional spin space."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] not in (2, 4, 8):
            raise ValueError(f"operator must be square of dim 2, 4 or 8, got {mat.shape}")
        if not np.all(np.isfinite(mat.view(float))):
            raise ValueError("operator has non-finite entries")
        object.__setattr__(self, "matrix", _freeze(mat))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_particles(self) -> int:
        return self.dim.bit_length() - 1

    def dag(self) -> "SpinOperator":
        return SpinOperator(self.matrix.conj().T)

    def is_hermitian(self, tol: float = ATOL) -> bool:
        return bool(np.abs(self.matrix - self.matrix.conj().T).max() <= tol)

    def is_unitary(self, tol: float = ATOL) -> bool:
        prod = self.matrix.conj().T @ self.matrix
        return bool(np.abs(prod - np.eye(self.dim)).max() <= tol)

    def __matmul__(self, other: "SpinOperator") -> "SpinOperator":
        return SpinOperator(self.matrix @ other.matrix)

    def __add__(self, other: "SpinOperator") -> "SpinOperator":
        return SpinOperator(self.matrix + other.matrix)

    def __sub__(self, other: "SpinOperator") -> "SpinOperator":
        return SpinOperator(self.matrix - other.matrix)

    def __mul__(self, scalar) -> "SpinOperator":
        return SpinOperator(self.matrix * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "SpinOperator":
        return SpinOperator(-self.matrix)

    def __repr__(self):
        return f"SpinOperator(dim={self.dim})"


class Measurement(NamedTuple):
    """Outcome of a projective spin measurement."""

    value: float            # +0.5 or -0.5
    collapsed: SpinState
    probability: float      # Born weight of the sampled branch


# ---------------------------------------------------------------------------
# constructors

def qubit(a: complex, b: complex) -> SpinState:
    """Single-particle state a|up> + b|down> (normalized on input)."""
    return SpinState.normalized([a, b])


def basis_state(pattern: str) -> SpinState:
    """Spin-z basis ket from a pattern string such as "u", "ud" or "udu"."""
    if not pattern or any(ch not in "ud" for ch in pattern) or len(pattern) > 3:
        raise ValueError(f"pattern must be 1-3 characters of 'u'/'d', got {pattern!r}")
    index = 0
    for ch in pattern:
        index = (index << 1) | (ch == "d")
    amps = np.zeros(2 ** len(pattern), dtype=complex)
    amps[index] = 1.0
    return SpinState(amps)


def identity(n_particles: int) -> SpinOperator:
    return SpinOperator(np.eye(2 ** n_particles, dtype=complex))


def sigma_dot(axis) -> np.ndarray:
    """Pauli vector contracted with a unit direction, sigma . n (2x2)."""
    n = unit_vector(axis)
    return n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z


def _embed_single(op2: np.ndarray, particle: int, n_particles: int) -> np.ndarray:
    """Kronecker-embed a 2x2 matrix at one particle slot (particle 0 = MSB)."""
    mat = np.eye(1, dtype=complex)
    for k in range(n_particles):
        mat = np.kron(mat, op2 if k == particle else np.eye(2, dtype=complex))
    return mat


def spin_component(axis, particle: int, n_particles: int) -> SpinOperator:
    """Spin projection S . n of one particle embedded in the n-particle space.

    Hermitian with eigenvalues +-1/2; acts as identity on the other
    particles.
    """
    if not 0 <= particle < n_particles:
        raise ValueError(f"particle index {particle} out of range for {n_particles} particles")
    if n_particles not in (1, 2, 3):
        raise ValueError(f"n_particles must be 1, 2 or 3, got {n_particles}")
    return SpinOperator(_embed_single(0.5 * sigma_dot(axis), particle, n_particles))


def rotation(axis, angle: float) -> SpinOperator:
    """Single-particle rotation exp(-i angle sigma.n / 2), a 2x2 unitary.

    Closed form: cos(angle/2) 1 - i sin(angle/2) sigma.n.  Note the spinor
    double cover: rotation(n, 2 pi) = -1.
    """
    half = 0.5 * float(angle)
    return SpinOperator(np.cos(half) * np.eye(2, dtype=complex) - 1j * np.sin(half) * sigma_dot(axis))


def tensor(left: SpinState, right: SpinState) -> SpinState:
    """Tensor product; the left factor's particles come first (higher bits)."""
    total = left.n_particles + right.n_particles
    if total > 3:
        raise ValueError(f"tensor product would hold {total} particles, supported maximum is 3")
    return SpinState(np.kron(left.amplitudes, right.amplitudes))


# ---------------------------------------------------------------------------
# application, expectation, measurement

def apply(op: SpinOperator, state: SpinState) -> tuple[np.ndarray, float]:
    """Apply an operator, returning the raw (unnormalized) vector and its norm."""
    if op.dim != state.amplitudes.shape[0]:
        raise ValueError(f"dimension mismatch: operator dim {op.dim}, state dim {state.amplitudes.shape[0]}")
    vec = op.matrix @ state.amplitudes
    return vec, float(np.linalg.norm(vec))


def apply_normalized(op: SpinOperator, state: SpinState) -> SpinState:
    """Apply an operator and renormalize; raises ZeroNormError on annihilation."""
    vec, norm = apply(op, state)
    if norm <= ATOL:
        raise ZeroNormError("operator annihilated the state")
    return SpinState(vec / norm)


def expectation(state: SpinState, op: SpinOperator) -> float:
    """Real expectation value <psi|M|psi> of a Hermitian operator."""
    if not op.is_hermitian():
        raise ValueError("expectation requires a Hermitian operator")
    vec, _ = apply(op, state)
    val = complex(np.vdot(state.amplitudes, vec))
    if abs(val.imag) > ATOL:
        raise ValueError(f"expectation of a Hermitian operator came out complex: {val!r}")
    return val.real


def bloch_vector(state: SpinState) -> np.ndarray:
    """Bloch vector (2<S_x>, 2<S_y>, 2<S_z>) of a single-particle state."""
    if state.n_particles != 1:
        raise ValueError("bloch_vector is defined for single-particle states")
    v = state.amplitudes
    return np.array([
        float(np.vdot(v, SIGMA_X @ v).real),
        float(np.vdot(v, SIGMA_Y @ v).real),
        float(np.vdot(v, SIGMA_Z @ v).real),
    ])


# cache for the embedded "spin up along n" projectors used by sampling;
# keyed by exact axis bytes so lookups never alias distinct directions
_PROJECTOR_CACHE: dict[tuple, np.ndarray] = {}


def _plus_projector(axis: np.ndarray, particle: int, n_particles: int) -> np.ndarray:
    key = (n_particles, particle, axis.tobytes())
    proj = _PROJECTOR_CACHE.get(key)
    if proj is None:
        proj = _embed_single(0.5 * (np.eye(2, dtype=complex) + sigma_dot(axis)), particle, n_particles)
        proj.setflags(write=False)
        if len(_PROJECTOR_CACHE) < 4096:
            _PROJECTOR_CACHE[key] = proj
    return proj


def measure_projection(state: SpinState, particle: int, axis, rng: np.random.Generator) -> Measurement:
    """Projective measurement of S . n on one particle.

    The value +-1/2 is sampled with its Born probability; the returned
    state is the renormalized projection onto the sampled branch.
    """
    n = state.n_particles
    if not 0 <= particle < n:
        raise ValueError(f"particle index {particle} out of range for {n} particles")
    axis = unit_vector(axis)
    proj_plus = _plus_projector(axis, particle, n)
    plus_vec = proj_plus @ state.amplitudes
    p_plus = min(1.0, float(np.vdot(plus_vec, plus_vec).real))
    if rng.random() < p_plus:
        branch, prob, value = plus_vec, p_plus, 0.5
    else:
        branch, prob, value = state.amplitudes - plus_vec, 1.0 - p_plus, -0.5
    collapsed = SpinState.normalized(branch)
    return Measurement(value=value, collapsed=collapsed, probability=prob)


# ---------------------------------------------------------------------------
# two-particle embeddings inside a larger register

def embed_pair_operator(op: SpinOperator, positions: tuple[int, int], n_particles: int) -> SpinOperator:
    """Embed a two-particle operator at the given particle slots.

    ``positions`` are distinct particle indices (row/column bit order of the
    4x4 operator follows the package convention: first position = high bit).
    """
    i, j = positions
    if op.dim != 4:
        raise ValueError("embed_pair_operator expects a two-particle (4x4) operator")
    if i == j or not (0 <= i < n_particles and 0 <= j < n_particles):
        raise ValueError(f"invalid pair positions {positions} for {n_particles} particles")
    if n_particles == 2:
        if (i, j) == (0, 1):
            return op
    rest = [k for k in range(n_particles) if k not in (i, j)]
    big = np.kron(op.matrix, np.eye(2 ** len(rest), dtype=complex))
    tens = big.reshape((2,) * (2 * n_particles))
    # current axis order: (i, j, rest...) for rows, then the same for columns
    src_of_target = {i: 0, j: 1}
    for k, pos in enumerate(rest):
        src_of_target[pos] = 2 + k
    perm = [src_of_target[t] for t in range(n_particles)]
    full_perm = perm + [n_particles + p for p in perm]
    dim = 2 ** n_particles
    return SpinOperator(tens.transpose(full_perm).reshape(dim, dim))


def project_pair(state: SpinState, pair_ket: SpinState, positions: tuple[int, int]) -> tuple[np.ndarray, float]:
    """Contract two particles of a register against a two-particle ket.

    Returns the (unnormalized) amplitude vector of the remaining particles
    and the Born weight |<ket_pair|psi>|^2 of that projection.
    """
    i, j = positions
    n = state.n_particles
    if pair_ket.n_particles != 2:
        raise ValueError("pair_ket must be a two-particle state")
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"invalid pair positions {positions} for {n} particles")
    psi = state.amplitudes.reshape((2,) * n)
    moved = np.moveaxis(psi, (i, j), (0, 1)).reshape(2, 2, -1)
    bra = pair_ket.amplitudes.conj().reshape(2, 2)
    remainder = np.einsum("pq,pqr->r", bra, moved)
    weight = float(np.vdot(remainder, remainder).real)
    return remainder, weight
