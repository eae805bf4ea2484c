"""Two-spin scattering operator: invariant-amplitude and Bell-projector forms.

The general elastic amplitude for two spin-1/2 particles is parameterized
by six invariant functions A..F of the c.m. angle in an orthonormal frame
(lambda, mu, nu):

    f = A + B (S1.lambda)(S2.lambda) + C (S1.mu)(S2.mu) + D (S1.nu)(S2.nu)
          + E (S1+S2).nu + F (S1-S2).nu

In the canonical frame (lambda=x, mu=y, nu=z) the same operator reads, in
the Bell basis,

    f = a P_Psi- + b P_Psi+ + c P_Phi- + d P_Phi+ + E S_z + F s_z

with a = A - (B+C+D)/4, b = a + (B+C)/2, c = a + (C+D)/2, d = a + (B+D)/2.
Amplitudes are dimensionless model inputs; the operator is used as a
relative-probability filter (per detected event), never as an absolute
cross section.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .bell import BellOutcome, bell_ket, bell_projector, collective_operator
from .spin import ATOL, SpinOperator, SpinState, spin_component, unit_vector

SYMMETRY_TOL = 1e-9   # tolerance for identical-nucleon table checks

_COEFF_NAMES = ("A", "B", "C", "D", "E", "F")


def _finite_complex(value, name: str) -> complex:
    z = complex(value)
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise ValueError(f"amplitude {name} is not finite: {z!r}")
    return z


@dataclass(frozen=True)
class InvariantAmplitudes:
    """The six invariant amplitudes at one angle.

    With ``identical_nucleons`` set, F must vanish (total spin squared is
    conserved for nucleon-nucleon scattering and the F term would mix Bell
    states of different total spin).
    """

    A: complex
    B: complex
    C: complex
    D: complex
    E: complex
    F: complex = 0.0
    identical_nucleons: bool = False

    def __post_init__(self):
        for name in _COEFF_NAMES:
            object.__setattr__(self, name, _finite_complex(getattr(self, name), name))
        if self.identical_nucleons and abs(self.F) > SYMMETRY_TOL:
            raise ValueError(f"identical nucleons require F = 0, got F = {self.F!r}")


@dataclass(frozen=True)
class BellCoefficients:
    """Diagonal Bell-basis coefficients a..d plus the passthrough E, F."""

    a: complex
    b: complex
    c: complex
    d: complex
    E: complex
    F: complex


def bell_coefficients(amps: InvariantAmplitudes) -> BellCoefficients:
    """Linear combinations mapping A..D onto the Bell-projector weights."""
    a = amps.A - (amps.B + amps.C + amps.D) / 4.0
    return BellCoefficients(
        a=a,
        b=a + (amps.B + amps.C) / 2.0,
        c=a + (amps.C + amps.D) / 2.0,
        d=a + (amps.B + amps.D) / 2.0,
        E=amps.E,
        F=amps.F,
    )


@dataclass(frozen=True)
class ScatterFrame:
    """Right-handed orthonormal frame (lambda, mu, nu) for the invariant form."""

    lam: np.ndarray
    mu: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        lam = unit_vector(self.lam)
        mu = unit_vector(self.mu)
        nu = unit_vector(self.nu)
        for name, pair in (("lam.mu", (lam, mu)), ("lam.nu", (lam, nu)), ("mu.nu", (mu, nu))):
            if abs(float(pair[0] @ pair[1])) > ATOL:
                raise ValueError(f"frame vectors are not orthogonal ({name})")
        if np.abs(np.cross(lam, mu) - nu).max() > ATOL:
            raise ValueError("frame is not right-handed: lambda x mu must equal nu")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "nu", nu)

    @classmethod
    def canonical(cls) -> "ScatterFrame":
        return cls(lam=np.array([1.0, 0.0, 0.0]),
                   mu=np.array([0.0, 1.0, 0.0]),
                   nu=np.array([0.0, 0.0, 1.0]))


def scattering_operator(amps: InvariantAmplitudes, frame: ScatterFrame) -> SpinOperator:
    """Assemble the 4x4 operator term by term from the invariant form."""
    def pair_term(axis):
        return (spin_component(axis, 0, 2) @ spin_component(axis, 1, 2)).matrix

    s_nu = spin_component(frame.nu, 0, 2).matrix + spin_component(frame.nu, 1, 2).matrix
    diff_nu = spin_component(frame.nu, 0, 2).matrix - spin_component(frame.nu, 1, 2).matrix
    mat = (amps.A * np.eye(4, dtype=complex)
           + amps.B * pair_term(frame.lam)
           + amps.C * pair_term(frame.mu)
           + amps.D * pair_term(frame.nu)
           + amps.E * s_nu
           + amps.F * diff_nu)
    return SpinOperator(mat)


def bell_form(coeffs: BellCoefficients) -> SpinOperator:
    """Assemble the same operator from Bell projectors and collective terms."""
    mat = (coeffs.a * bell_projector(BellOutcome.PSI_MINUS).matrix
           + coeffs.b * bell_projector(BellOutcome.PSI_PLUS).matrix
           + coeffs.c * bell_projector(BellOutcome.PHI_MINUS).matrix
           + coeffs.d * bell_projector(BellOutcome.PHI_PLUS).matrix
           + coeffs.E * collective_operator("Sz").matrix
           + coeffs.F * collective_operator("sz").matrix)
    return SpinOperator(mat)


def ninety_degree_operator(a_coeff: complex, e_coeff: complex) -> SpinOperator:
    """Identical-nucleon operator at 90 degrees c.m.

    The antisymmetry of b, c, d under theta -> pi - theta forces them to
    vanish at pi/2, leaving a P_Psi- plus the E-driven Phi- <-> Phi+
    transition term.
    """
    phi_m = bell_ket(BellOutcome.PHI_MINUS).amplitudes
    phi_p = bell_ket(BellOutcome.PHI_PLUS).amplitudes
    swap = np.outer(phi_m, phi_p.conj()) + np.outer(phi_p, phi_m.conj())
    return SpinOperator(complex(a_coeff) * bell_projector(BellOutcome.PSI_MINUS).matrix
                        + complex(e_coeff) * swap)


def registration_condition(coeffs: BellCoefficients, target: BellOutcome, tol: float) -> bool:
    """True when the operator registers exactly one Bell state.

    Requires |E| and |F| below ``tol``, the target's coefficient above it,
    and the three other diagonal coefficients below it.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    by_outcome = {
        BellOutcome.PSI_MINUS: coeffs.a,
        BellOutcome.PSI_PLUS: coeffs.b,
        BellOutcome.PHI_MINUS: coeffs.c,
        BellOutcome.PHI_PLUS: coeffs.d,
    }
    if abs(coeffs.E) >= tol or abs(coeffs.F) >= tol:
        return False
    target = BellOutcome(target)
    if abs(by_outcome[target]) <= tol:
        return False
    return all(abs(val) < tol for out, val in by_outcome.items() if out != target)


# ---------------------------------------------------------------------------
# amplitude tables in the c.m. angle

class SymmetryCheck(NamedTuple):
    name: str
    passed: bool
    max_residual: float
    detail: str


def _pair_indices(theta: np.ndarray) -> list[tuple[int, int]]:
    """Indices (i, j) with theta[j] = pi - theta[i], each unordered pair once."""
    pairs = []
    thetas = theta.tolist()
    for i, th in enumerate(thetas):
        mirror = np.pi - th
        j = bisect_left(thetas, mirror - 1e-12)
        if j < len(thetas) and abs(thetas[j] - mirror) <= 1e-12 and i <= j:
            pairs.append((i, j))
    return pairs


@dataclass(frozen=True)
class AmplitudeTable:
    """Invariant amplitudes tabulated against the c.m. angle in radians.

    Values between knots are linearly interpolated; evaluation outside the
    tabulated range is an error.  For ``identical_nucleons`` tables the
    constructor enforces F = 0 and the theta <-> pi - theta (anti)symmetry
    of the derived Bell coefficients, both within 1e-9.
    """

    theta: np.ndarray
    values: np.ndarray            # shape (n, 6), columns A..F
    identical_nucleons: bool = False

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float).reshape(-1)
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (theta.shape[0], 6):
            raise ValueError(f"values must have shape (n, 6), got {values.shape}")
        if theta.shape[0] < 2:
            raise ValueError("amplitude table needs at least two angles")
        if np.any(np.diff(theta) <= 0.0):
            raise ValueError("angles must be strictly increasing")
        if np.any(theta < 0.0) or np.any(theta > np.pi):
            raise ValueError("angles must lie in [0, pi]")
        if not np.all(np.isfinite(theta)) or not np.all(np.isfinite(values.view(float))):
            raise ValueError("table contains non-finite entries")
        theta = theta.copy()
        values = values.copy()
        theta.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "values", values)
        if self.identical_nucleons:
            failed = [c for c in self.symmetry_report() if not c.passed]
            if failed:
                worst = failed[0]
                raise ValueError(
                    f"identical-nucleon table violates rule {worst.name!r}: {worst.detail} "
                    f"(max residual {worst.max_residual:.3e})")

    def at(self, theta: float) -> InvariantAmplitudes:
        """Linearly interpolated amplitudes at one angle."""
        th = float(theta)
        if th < self.theta[0] - 1e-12 or th > self.theta[-1] + 1e-12:
            raise ValueError(f"theta = {th!r} outside tabulated range "
                             f"[{self.theta[0]!r}, {self.theta[-1]!r}]")
        cols = [complex(np.interp(th, self.theta, self.values[:, k].real)
                        + 1j * np.interp(th, self.theta, self.values[:, k].imag))
                for k in range(6)]
        return InvariantAmplitudes(*cols, identical_nucleons=self.identical_nucleons)

    def bell_coefficient_rows(self) -> np.ndarray:
        """Derived (a, b, c, d, E, F) at every knot, shape (n, 6)."""
        rows = np.empty_like(self.values)
        for i in range(self.values.shape[0]):
            c = bell_coefficients(InvariantAmplitudes(*self.values[i]))
            rows[i] = (c.a, c.b, c.c, c.d, c.E, c.F)
        return rows

    def symmetry_report(self) -> list[SymmetryCheck]:
        """Identical-nucleon rules evaluated on the derived Bell coefficients.

        Symmetric rules compare g(theta) with g(pi - theta), antisymmetric
        rules with -g(pi - theta), over every tabulated complementary pair;
        F must vanish at every knot.
        """
        rows = self.bell_coefficient_rows()
        pairs = _pair_indices(self.theta)
        checks = [SymmetryCheck(
            name="F_zero",
            passed=bool(np.abs(rows[:, 5]).max() <= SYMMETRY_TOL),
            max_residual=float(np.abs(rows[:, 5]).max()),
            detail="F(theta) = 0 at every knot",
        )]
        rules = (("a_symmetric", 0, +1.0), ("b_antisymmetric", 1, -1.0),
                 ("c_antisymmetric", 2, -1.0), ("d_antisymmetric", 3, -1.0),
                 ("E_symmetric", 4, +1.0))
        for name, col, sign in rules:
            if pairs:
                res = max(abs(rows[i, col] - sign * rows[j, col]) for i, j in pairs)
            else:
                res = 0.0
            relation = "g(theta) = g(pi-theta)" if sign > 0 else "g(theta) = -g(pi-theta)"
            checks.append(SymmetryCheck(
                name=name, passed=res <= SYMMETRY_TOL, max_residual=float(res),
                detail=f"{relation} on tabulated pairs ({len(pairs)} pairs)"))
        return checks


def load_amplitude_table(path, identical_nucleons: bool = False) -> AmplitudeTable:
    """Parse a whitespace-separated amplitude table file.

    The first non-blank line must be the exact header
    ``theta_rad A_re A_im B_re B_im C_re C_im D_re D_im E_re E_im F_re F_im``;
    each following row holds the 13 numbers.  Malformed rows are reported
    with their line number.
    """
    expected_header = ("theta_rad A_re A_im B_re B_im C_re C_im "
                       "D_re D_im E_re E_im F_re F_im")
    thetas: list[float] = []
    rows: list[list[complex]] = []
    header_seen = False
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if not header_seen:
                if line.split() != expected_header.split():
                    raise ValueError(
                        f"{path}:{lineno}: bad header; expected {expected_header!r}")
                header_seen = True
                continue
            fields = line.split()
            if len(fields) != 13:
                raise ValueError(f"{path}:{lineno}: expected 13 fields, got {len(fields)}")
            try:
                nums = [float(f) for f in fields]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric field ({exc})") from None
            thetas.append(nums[0])
            rows.append([complex(nums[2 * k + 1], nums[2 * k + 2]) for k in range(6)])
    if not header_seen:
        raise ValueError(f"{path}: empty amplitude file (missing header)")
    if len(rows) < 2:
        raise ValueError(f"{path}: amplitude table needs at least two rows")
    return AmplitudeTable(theta=np.array(thetas), values=np.array(rows, dtype=complex),
                          identical_nucleons=identical_nucleons)


# ---------------------------------------------------------------------------
# scattering as a Bell-state filter

@dataclass(frozen=True)
class ScatterResult:
    outcome: BellOutcome
    probability: float      # conditional on the event being detected
    post_state: SpinState


_BELL_KETS = {out: bell_ket(out).amplitudes for out in BellOutcome}


def scatter_filter(state: SpinState, operator: SpinOperator,
                   rng: np.random.Generator) -> Optional[ScatterResult]:
    """Scatter a two-particle state and detect it in the Bell basis.

    The outcome is sampled with probability |P_beta f psi|^2 / |f psi|^2
    (probabilities are per detected event); the post state is the
    renormalized projection.  Returns None when the operator annihilates
    the input: that event produces no detector count.
    """
    if state.n_particles != 2 or operator.dim != 4:
        raise ValueError("scatter_filter works on two-particle states and 4x4 operators")
    scattered = operator.matrix @ state.amplitudes
    total = float(np.vdot(scattered, scattered).real)
    if total <= ATOL ** 2:
        return None
    overlaps = {out: complex(np.vdot(ket, scattered)) for out, ket in _BELL_KETS.items()}
    weights = np.array([abs(overlaps[out]) ** 2 for out in BellOutcome]) / total
    edges = np.cumsum(weights)
    edges[-1] = max(edges[-1], 1.0)
    idx = int(np.searchsorted(edges, rng.random(), side="right"))
    outcome = BellOutcome(idx)
    amp = overlaps[outcome]
    post = SpinState(_BELL_KETS[outcome] * (amp / abs(amp)))
    return ScatterResult(outcome=outcome, probability=float(weights[idx]), post_state=post)
