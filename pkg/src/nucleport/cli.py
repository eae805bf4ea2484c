"""Batch command-line harness.

Subcommands drive the library and emit deterministic CSV/JSON: identical
(config, seed) always produce byte-identical files, regardless of the
worker count.  Randomness comes from the counter-based Philox generator
(numpy's Philox4x64-10) keyed by the run seed; the experiment derives one
independent stream per fixed-size event chunk from (seed, chunk index).

Numeric formatting: CSV floats use scientific notation with 12 digits
after the point ("%.12e", NaN printed as "nan"); JSON floats use the
shortest round-trip decimal repr, with non-finite values emitted as null.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bell, config as cfgmod, experiment, scattering, teleport
from .bell import BellOutcome
from .config import ConfigError
from .scattering import ScatterFrame
from .spin import X_AXIS, Y_AXIS, Z_AXIS

FIDELITY_GATE = 1.0 - 1e-9
EXACT_TOL = 1e-12
SYMMETRY_TOL = scattering.SYMMETRY_TOL


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else format(float(x), ".12e")


def _jsonable(obj):
    """Convert to plain JSON types; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        val = float(obj)
        return val if math.isfinite(val) else None
    return obj


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
    path.write_text(text, encoding="utf-8")


def _write_lines(path: Path, lines) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def _resolve_seed(args, cfg) -> int:
    seed = args.seed if args.seed is not None else cfg["seed"]
    return cfgmod.validate_seed(seed)


# ---------------------------------------------------------------------------
# teleport

def cmd_teleport(args) -> int:
    cfg = cfgmod.load_config(args.config)
    seed = _resolve_seed(args, cfg)
    section = cfg["teleport"]
    trials = args.trials if args.trials is not None else section["trials"]
    if not isinstance(trials, int) or trials < 1:
        raise ConfigError("teleport.trials must be a positive integer")
    bell_filter = cfgmod.build_filter(section["filter"], "teleport.filter")
    state_block = section["state"]
    rng = _rng(seed)

    fixed_state = None
    if state_block.get("mode") != "random":
        fixed_state = cfgmod.build_unknown_state(state_block, "teleport.state", rng)

    counts = {out.label: 0 for out in BellOutcome}
    per_channel = {out.label: [] for out in BellOutcome}
    fidelities = []
    discarded = 0
    for _ in range(trials):
        phi = fixed_state if fixed_state is not None else teleport.UnknownState.random(rng)
        record = teleport.run_protocol(phi, rng, bell_filter)
        if record is None:
            discarded += 1
            continue
        counts[record.outcome.label] += 1
        per_channel[record.outcome.label].append(record.fidelity)
        fidelities.append(record.fidelity)

    min_fid = min(fidelities) if fidelities else math.nan
    report = {
        "schema_version": cfgmod.SCHEMA_VERSION,
        "seed": seed,
        "trials": trials,
        "discarded": discarded,
        "outcome_counts": counts,
        "fidelity": {
            "min": min_fid,
            "mean": float(np.mean(fidelities)) if fidelities else math.nan,
            "per_channel": {
                label: {
                    "count": len(vals),
                    "min": min(vals) if vals else math.nan,
                    "mean": float(np.mean(vals)) if vals else math.nan,
                }
                for label, vals in per_channel.items()
            },
        },
    }
    report["min_fidelity_ok"] = bool(fidelities) and min_fid >= FIDELITY_GATE
    out = Path(args.out) / "teleport_report.json"
    _write_json(out, report)
    print(f"teleport: {trials} trials, {discarded} discarded, min fidelity {_fmt(min_fid)}")
    print(f"wrote {out}")
    return 0 if report["min_fidelity_ok"] else 1


# ---------------------------------------------------------------------------
# scatter-check

def _check(name: str, residual: float, tol: float, detail: str = "") -> dict:
    return {
        "name": name,
        "max_residual": float(residual),
        "tolerance": tol,
        "passed": bool(residual <= tol),
        "detail": detail,
    }


def cmd_scatter_check(args) -> int:
    table = scattering.load_amplitude_table(args.amplitudes)
    frame = ScatterFrame.canonical()
    checks = []

    res_equiv = 0.0
    res_spectral = 0.0
    kets = {out: bell.bell_ket(out).amplitudes for out in BellOutcome}
    for i in range(table.theta.size):
        amps = scattering.InvariantAmplitudes(*table.values[i])
        coeffs = scattering.bell_coefficients(amps)
        f_inv = scattering.scattering_operator(amps, frame).matrix
        f_bel = scattering.bell_form(coeffs).matrix
        res_equiv = max(res_equiv, float(np.abs(f_inv - f_bel).max()))
        diag = scattering.bell_form(scattering.BellCoefficients(
            a=coeffs.a, b=coeffs.b, c=coeffs.c, d=coeffs.d, E=0.0, F=0.0)).matrix
        for out, eig in ((BellOutcome.PSI_MINUS, coeffs.a), (BellOutcome.PSI_PLUS, coeffs.b),
                         (BellOutcome.PHI_MINUS, coeffs.c), (BellOutcome.PHI_PLUS, coeffs.d)):
            res_spectral = max(res_spectral, float(np.abs(diag @ kets[out] - eig * kets[out]).max()))
    checks.append(_check("form_equivalence", res_equiv, EXACT_TOL,
                         "invariant six-term form vs Bell-projector form, every knot"))
    checks.append(_check("spectral_projection", res_spectral, EXACT_TOL,
                         "with E=F=0 each Bell ket is an eigenvector with weight a,b,c,d"))

    unity = sum(bell.bell_projector(out).matrix for out in BellOutcome)
    checks.append(_check("unity_decomposition", float(np.abs(unity - np.eye(4)).max()),
                         EXACT_TOL, "the four Bell projectors sum to the identity"))

    if args.identical_nucleons:
        for rule in table.symmetry_report():
            checks.append(_check(rule.name, rule.max_residual, SYMMETRY_TOL, rule.detail))
        half_pi = math.pi / 2.0
        if table.theta[0] <= half_pi <= table.theta[-1]:
            coeffs = scattering.bell_coefficients(table.at(half_pi))
            target = scattering.ninety_degree_operator(coeffs.a, coeffs.E).matrix
            res90 = float(np.abs(scattering.bell_form(coeffs).matrix - target).max())
            checks.append(_check("ninety_degree_form", res90, SYMMETRY_TOL,
                                 "at theta=pi/2 the operator reduces to a P_Psi- plus the "
                                 "E-driven Phi-/Phi+ transition"))

    all_passed = all(c["passed"] for c in checks)
    report = {
        "schema_version": cfgmod.SCHEMA_VERSION,
        "file": str(args.amplitudes),
        "identical_nucleons": bool(args.identical_nucleons),
        "n_angles": int(table.theta.size),
        "checks": checks,
        "all_passed": all_passed,
    }
    out = Path(args.out) / "scatter_check.json"
    _write_json(out, report)
    for c in checks:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"{status} {c['name']}: max residual {_fmt(c['max_residual'])} "
              f"(tolerance {_fmt(c['tolerance'])})")
    print(f"wrote {out}")
    return 0 if all_passed else 1


# ---------------------------------------------------------------------------
# bellscan

def cmd_bellscan(args) -> int:
    cfg = cfgmod.load_config(args.config)
    seed = _resolve_seed(args, cfg)
    section = cfg["bellscan"]
    grid_points = section["grid_points"]
    if not isinstance(grid_points, int) or grid_points < 2:
        raise ConfigError("bellscan.grid_points must be an integer >= 2")
    samples = args.trials if args.trials is not None else section["mc_samples"]
    if not isinstance(samples, int) or samples < 1:
        raise ConfigError("bellscan.mc_samples must be a positive integer")
    try:
        state = bell.bell_ket(BellOutcome[str(section["state"]).upper()])
    except KeyError:
        raise ConfigError(f"bellscan.state: unknown Bell state {section['state']!r}") from None
    plane = section["tilt_plane"]
    if plane not in ("xz", "yz"):
        raise ConfigError("bellscan.tilt_plane must be 'xz' or 'yz'")
    in_plane = X_AXIS if plane == "xz" else Y_AXIS

    rng = _rng(seed)
    lines = ["theta_radians,analytic_probability,mc_frequency,mc_sigma"]
    for theta in np.linspace(0.0, math.pi, grid_points):
        axis = math.sin(theta) * in_plane + math.cos(theta) * Z_AXIS
        axis /= np.linalg.norm(axis)
        analytic = bell.correlation_probability(state, axis, axis)
        hits = bell.sample_sum_zero(state, axis, axis, samples, rng)
        freq = hits / samples
        sigma = math.sqrt(freq * (1.0 - freq) / samples)
        lines.append(",".join((_fmt(theta), _fmt(analytic), _fmt(freq), _fmt(sigma))))
    out = Path(args.out) / "bellscan.csv"
    _write_lines(out, lines)
    print(f"bellscan: {grid_points} angles x {samples} samples")
    print(f"wrote {out}")
    return 0


# ---------------------------------------------------------------------------
# experiment

_SIDE_LABEL = {0: "L", 1: "R", -1: "none"}


def cmd_experiment(args) -> int:
    cfg = cfgmod.load_config(args.config)
    seed = _resolve_seed(args, cfg)
    section = cfg["experiment"]
    n_events = args.trials if args.trials is not None else section["events"]
    if not isinstance(n_events, int) or n_events < 1:
        raise ConfigError("experiment.events must be a positive integer")
    threads = args.threads
    if threads < 1:
        raise ConfigError("--threads must be >= 1")

    geometry = cfgmod.build_geometry(section["geometry"])
    target = cfgmod.build_target(section["target"])
    analyzer = cfgmod.build_analyzer(section["analyzer"])
    bell_filter = cfgmod.build_filter(section["filter"], "experiment.filter")
    summary_channel = cfgmod._outcome(section["summary_channel"], "experiment.summary_channel")

    summary, arrays = experiment.run_experiment(
        geometry, target, bell_filter, analyzer, n_events, seed,
        threads=threads, summary_channel=summary_channel)

    outcome_labels = {out.value: out.label for out in BellOutcome}
    outcome_labels[-1] = "none"

    def rows():
        yield "event_id,t_f1_s,t_f2_s,outcome,side,causal,accepted"
        for k in range(len(arrays)):
            yield (f"{arrays.event_id[k]},{_fmt(arrays.t_f1[k])},{_fmt(arrays.t_f2[k])},"
                   f"{outcome_labels[int(arrays.outcome[k])]},{_SIDE_LABEL[int(arrays.side[k])]},"
                   f"{int(arrays.causal[k])},{int(arrays.accepted[k])}")

    out_dir = Path(args.out)
    events_path = out_dir / "events.csv"
    _write_lines(events_path, rows())

    payload = {
        "schema_version": cfgmod.SCHEMA_VERSION,
        "seed": seed,
        "params": {
            "events": n_events,
            "geometry": section["geometry"],
            "target": section["target"],
            "analyzer": section["analyzer"],
            "filter": section["filter"],
            "summary_channel": summary.summary_channel,
        },
        "counts": summary.counts,
        "n_accepted": summary.n_accepted,
        "n_mismatched_pairs": summary.n_mismatched_pairs,
        "n_unmatched_f1": summary.n_unmatched_f1,
        "n_unmatched_f2": summary.n_unmatched_f2,
        "causal": {
            "n_causal": summary.n_causal,
            "fraction": summary.causal_fraction,
        },
        "asymmetry": {
            name: {"n_left": s.n_left, "n_right": s.n_right,
                   "epsilon": s.epsilon, "sigma": s.sigma}
            for name, s in summary.per_normal.items()
        },
        "polarization": {
            "vector": summary.polarization,
            "sigma": summary.polarization_sigma,
        },
        "warning": summary.warning,
    }
    summary_path = out_dir / "summary.json"
    _write_json(summary_path, payload)
    print(f"experiment: {n_events} events, {summary.n_accepted} accepted, "
          f"{summary.n_causal} causally separated")
    if summary.warning:
        print(f"warning: {summary.warning}")
    print(f"wrote {events_path}")
    print(f"wrote {summary_path}")
    return 0


# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nucleport",
        description="Simulations of spin-1/2 state teleportation through nuclear "
                    "scattering: Bell algebra scans, scattering-operator checks and "
                    "a Monte Carlo two-target experiment.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_trials=True):
        p.add_argument("--config", default=None, help="JSON config file (defaults are built in)")
        p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit RNG seed")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        if with_trials:
            p.add_argument("--trials", type=int, default=None,
                           help="override the per-subcommand trial/event/sample count")

    p_tel = sub.add_parser("teleport", help="run teleportation trials and report fidelities")
    common(p_tel)

    p_scat = sub.add_parser("scatter-check",
                            help="validate an amplitude table: form equivalence and symmetries")
    p_scat.add_argument("amplitudes", help="amplitude table file")
    p_scat.add_argument("--identical-nucleons", action="store_true",
                        help="enforce the identical-nucleon symmetry rules")
    p_scat.add_argument("--out", default="out", help="output directory (default: out)")

    p_scan = sub.add_parser("bellscan",
                            help="correlation probability vs measurement-axis tilt, analytic and MC")
    common(p_scan)

    p_exp = sub.add_parser("experiment", help="Monte Carlo of the two-target experiment")
    common(p_exp)
    p_exp.add_argument("--threads", type=int, default=1,
                       help="worker threads (never changes the results)")

    args = parser.parse_args(argv)
    handlers = {
        "teleport": cmd_teleport,
        "scatter-check": cmd_scatter_check,
        "bellscan": cmd_bellscan,
        "experiment": cmd_experiment,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
