"""Brute-force oracles shared by the test modules.

Everything here is written from the definitions with explicit loops and
standard numpy building blocks, independent of the package's own code
paths, so library results are checked against a second route.
"""

import numpy as np

SQRT2 = np.sqrt(2.0)

# Bell amplitudes over (uu, ud, du, dd), written out from the definitions
BELL_VECS = {
    "psi_minus": np.array([0, 1, -1, 0], dtype=complex) / SQRT2,
    "psi_plus": np.array([0, 1, 1, 0], dtype=complex) / SQRT2,
    "phi_minus": np.array([1, 0, 0, -1], dtype=complex) / SQRT2,
    "phi_plus": np.array([1, 0, 0, 1], dtype=complex) / SQRT2,
}

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def sigma_dot_brute(axis):
    return axis[0] * PAULI["x"] + axis[1] * PAULI["y"] + axis[2] * PAULI["z"]


def embed_single_brute(op2, particle, n):
    """Elementwise single-particle embedding (particle 0 = most significant bit)."""
    dim = 2 ** n
    out = np.zeros((dim, dim), dtype=complex)
    shift = n - 1 - particle
    for row in range(dim):
        for col in range(dim):
            if (row & ~(1 << shift)) != (col & ~(1 << shift)):
                continue
            out[row, col] = op2[(row >> shift) & 1, (col >> shift) & 1]
    return out


def embed_pair_brute(op4, positions, n):
    """Elementwise two-particle embedding used to check the library's version."""
    i, j = positions
    dim = 2 ** n
    si, sj = n - 1 - i, n - 1 - j
    mask = ~((1 << si) | (1 << sj))
    out = np.zeros((dim, dim), dtype=complex)
    for row in range(dim):
        for col in range(dim):
            if (row & mask) != (col & mask):
                continue
            r = (((row >> si) & 1) << 1) | ((row >> sj) & 1)
            c = (((col >> si) & 1) << 1) | ((col >> sj) & 1)
            out[row, col] = op4[r, c]
    return out


def random_unit_vector(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_state_vector(rng, n):
    v = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    return v / np.linalg.norm(v)


def expm_hermitian_generator(axis, angle):
    """exp(-i angle sigma.n / 2) by eigendecomposition (oracle for rotations)."""
    h = 0.5 * angle * sigma_dot_brute(axis)
    vals, vecs = np.linalg.eigh(h)
    return vecs @ np.diag(np.exp(-1j * vals)) @ vecs.conj().T


def rodrigues(axis, angle):
    """3x3 active rotation matrix about a unit axis."""
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    k = np.array([[0, -n[2], n[1]], [n[2], 0, -n[0]], [-n[1], n[0], 0]])
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * (k @ k)


def four_term_expansion(a, b):
    """The Bell-channel expansion of (a up + b down) x singlet, by explicit loops.

    Index convention: bits (s0, s1, s2), particle 0 most significant, 0 = up.
    The measured pair is (particle 0, particle 2); particle 1 is the traveler.
    """
    pair_amp = {
        "psi_minus": {(0, 1): 1 / SQRT2, (1, 0): -1 / SQRT2},
        "psi_plus": {(0, 1): 1 / SQRT2, (1, 0): 1 / SQRT2},
        "phi_minus": {(0, 0): 1 / SQRT2, (1, 1): -1 / SQRT2},
        "phi_plus": {(0, 0): 1 / SQRT2, (1, 1): 1 / SQRT2},
    }
    traveler = {
        "psi_minus": {0: a, 1: b},
        "psi_plus": {0: a, 1: -b},
        "phi_minus": {0: -b, 1: -a},
        "phi_plus": {0: b, 1: -a},
    }
    out = np.zeros(8, dtype=complex)
    for name, pair in pair_amp.items():
        for (s0, s2), amp_pair in pair.items():
            for s1, amp_traveler in traveler[name].items():
                idx = (s0 << 2) | (s1 << 1) | s2
                out[idx] += 0.5 * amp_pair * amp_traveler
    return out


def symmetric_amplitude_rows(n_knots=9):
    """An identical-nucleon amplitude table built backwards from Bell-side
    functions with the required (anti)symmetries in theta <-> pi - theta.

    Returns (theta, values) with values columns A..F.
    """
    theta = np.linspace(0.2, np.pi - 0.2, n_knots)
    rows = []
    for th in theta:
        a = 1.0 + 0.5 * np.cos(2 * th) + 0.15j * np.cos(4 * th)
        b = 0.3 * np.cos(th) + 0.05j * np.cos(3 * th)
        c = -0.2 * np.cos(th) + 0.1j * np.cos(th)
        d = 0.4 * np.cos(3 * th)
        e_val = 0.25 + 0.05 * np.cos(2 * th) - 0.02j * np.cos(2 * th)
        big_a = (a + b + c + d) / 4.0
        big_b = b + d - c - a
        big_c = b + c - d - a
        big_d = c + d - b - a
        rows.append([big_a, big_b, big_c, big_d, e_val, 0.0])
    return theta, np.array(rows, dtype=complex)
