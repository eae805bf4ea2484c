"""Spin-1/2 teleportation through nuclear scattering, simulated exactly.

Building blocks: exact few-particle spin algebra (``spin``), the Bell
basis with its collective operators and statistical state identification
(``bell``), the two-nucleon scattering operator in invariant and
Bell-projector form (``scattering``), the four-channel teleportation
protocol (``teleport``), and a Monte Carlo model of the two-target
coincidence experiment (``experiment``).  The ``nucleport`` command-line
tool drives batch runs; see the README for file formats.
"""

from .bell import (
    BellOutcome,
    bell_ket,
    bell_projector,
    collective_operator,
    correlation_probability,
    discriminate_bell,
    rotation_permutation,
    triplet_relations,
)
from .experiment import (
    AnalyzerModel,
    EventRecord,
    GeometryConfig,
    PolarizedTarget,
    analyzer_scatter,
    asymmetry,
    causal_filter,
    coincidence_match,
    generate_event,
    relativistic_beta,
    run_experiment,
)
from .scattering import (
    AmplitudeTable,
    BellCoefficients,
    InvariantAmplitudes,
    ScatterFrame,
    bell_coefficients,
    bell_form,
    load_amplitude_table,
    ninety_degree_operator,
    registration_condition,
    scatter_filter,
    scattering_operator,
)
from .spin import (
    Measurement,
    SpinOperator,
    SpinState,
    ZeroNormError,
    apply,
    apply_normalized,
    basis_state,
    bloch_vector,
    expectation,
    measure_projection,
    qubit,
    rotation,
    spin_component,
    tensor,
    unit_vector,
)
from .teleport import (
    ClassicalMessage,
    TeleportRecord,
    UnknownState,
    bell_measure_13,
    compose_three,
    correction_for,
    make_epr,
    run_protocol,
)

__version__ = "0.1.0"
