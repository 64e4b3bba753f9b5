"""Command-line interface: experiment orchestration and CSV/JSON emission.

Determinism: identical invocations produce byte-identical data files. Data
files never carry timestamps; a run timestamp goes to a ``<out>.log`` sidecar
when writing to a file. Every output embeds the resolved parameters (and the
derived (tau, b) where applicable) so results are self-describing.

Exit codes: 0 success, 2 parameter-constraint violation, 3 failed statistical
gate (z >= 3 in verification commands), 4 I/O error.

Seeding: the master seed (--seed, default from EQUICOUNT_SEED or 0) is mapped
to a per-command stream, which estimators split into per-batch substreams by
index. Reimplementations can match trial counts, though not bit streams.

Serialization of infinities: CSV uses the literals "inf" / "-inf"; JSON uses
the tagged form {"kind": "-inf"} rather than a sentinel float.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import ConstraintError, DomainError, EquicountError
from .gee import eigvals_batch, sample_gee_entries
from .montecarlo import (
    IntervalB,
    empirical_spectral_test,
    empirical_tail_rate,
    estimate_equilibria_count,
    verify_dimension_lift,
)
from .rates import (
    ModelParams,
    derive_tau_b,
    multiplier_cutoff,
    rate_diverging_index,
    rate_fixed_index,
    rate_lagrange_window,
    threshold_tau,
)
from .sampling import derive_seed, substream, z_score
from .sphere_field import field_model_params, oracle_mean_counts

#: Stable per-command stream indices (part of the seeding contract).
_COMMAND_STREAMS = {
    "rates": 0,
    "threshold-curve": 1,
    "s-gamma": 2,
    "sample-gee": 3,
    "spectral-test": 4,
    "estimate": 5,
    "verify-uppingdim": 6,
    "oracle-compare": 7,
    "ldp-tail": 8,
    "lagrange-rates": 9,
}

Z_GATE = 3.0


def _tagged(value: float):
    """JSON encoding for possibly-infinite rates."""
    if math.isinf(value):
        return {"kind": "-inf" if value < 0 else "inf"}
    return {"kind": "finite", "value": value}


def _fmt(value: float) -> str:
    """CSV cell for a float; infinities as bare literals."""
    if math.isinf(value):
        return "-inf" if value < 0 else "inf"
    return repr(float(value))


def _parse_extended(text: str) -> float:
    if text in ("-inf", "-infinity"):
        return -math.inf
    if text in ("inf", "infinity", "+inf"):
        return math.inf
    return float(text)


def _parse_grid(text: str) -> np.ndarray:
    """start:stop:count inclusive grid."""
    try:
        start, stop, count = text.split(":")
        return np.linspace(float(start), float(stop), int(count))
    except ValueError as exc:
        raise DomainError(f"bad grid spec {text!r}; expected start:stop:count") from exc


def _parse_int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok]


def _write_output(out_path: str | None, payload: str) -> None:
    if out_path is None:
        sys.stdout.write(payload)
        return
    with open(out_path, "w") as fh:
        fh.write(payload)
    with open(out_path + ".log", "w") as log:
        log.write(f"written at {time.strftime('%Y-%m-%dT%H:%M:%S%z')}\n")


def _csv_payload(config: dict, header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json_payload(record: dict) -> str:
    return json.dumps(record, sort_keys=True, indent=2) + "\n"


def _emit_table(args, command: str, config: dict, header: list[str], rows: list[list]) -> None:
    """Write typed rows as CSV (default) or as the JSON record schema.

    Row cells are python values; floats go through the infinity-aware
    formatter for CSV and through the tagged encoding for JSON.
    """
    fmt = getattr(args, "format", "csv")
    if fmt == "csv":
        text_rows = [
            [_fmt(v) if isinstance(v, float) else ("" if v is None else str(v)) for v in row]
            for row in rows
        ]
        _write_output(args.out, _csv_payload(config, header, text_rows))
        return
    results = []
    for row in rows:
        cell = {}
        for key, value in zip(header, row):
            if isinstance(value, float) and math.isinf(value):
                value = _tagged(value)
            cell[key] = value
        results.append(cell)
    record = {"op": command, "params": config, "results": results, "version": __version__}
    if hasattr(args, "seed"):
        record["seed"] = args.seed
    _write_output(args.out, _json_payload(record))


def _model_params(args) -> ModelParams:
    return ModelParams(phi1=args.phi1, dphi1=args.dphi1, phi2=args.phi2, sigma2=args.sigma2)


# ---------------------------------------------------------------------------
# Command implementations (each returns an exit code)
# ---------------------------------------------------------------------------


def _cmd_rates(args) -> int:
    if (args.b is None and args.b_grid is None) or (args.tau is None and args.tau_grid is None):
        raise DomainError("rates needs --b or --b-grid, and --tau or --tau-grid")
    bs = _parse_grid(args.b_grid) if args.b_grid else [args.b]
    taus = _parse_grid(args.tau_grid) if args.tau_grid else [args.tau]
    gammas = _parse_grid(args.gamma_grid) if args.gamma_grid else None
    config = {
        "command": "rates", "b": args.b, "tau": args.tau, "m": args.m,
        "b_grid": args.b_grid, "tau_grid": args.tau_grid, "gamma_grid": args.gamma_grid,
    }
    rows = []
    for b in bs:
        for tau in taus:
            if gammas is None:
                result = rate_fixed_index(float(b), float(tau))
                rows.append([float(b), float(tau), None, result.branch, result.rate])
            else:
                for gamma in gammas:
                    result = rate_diverging_index(float(b), float(tau), float(gamma))
                    rows.append([float(b), float(tau), float(gamma), result.branch, result.rate])
    _emit_table(args, "rates", config, ["b", "tau", "gamma_or_c", "branch", "rate"], rows)
    return 0


def _cmd_threshold_curve(args) -> int:
    grid = _parse_grid(args.b_grid)
    config = {"command": "threshold-curve", "b_grid": args.b_grid}
    rows = []
    for b in grid:
        tau = threshold_tau(float(b))
        rows.append([float(b), tau, rate_fixed_index(float(b), tau).rate])
    _emit_table(args, "threshold-curve", config, ["b", "tau_threshold", "rate_at_threshold"], rows)
    return 0


def _cmd_s_gamma(args) -> int:
    from .ellipse import tail_mass, tail_quantile

    s = tail_quantile(args.gamma, args.tau, tol=args.tol)
    config = {"command": "s-gamma", "gamma": args.gamma, "tau": args.tau, "tol": args.tol}
    rows = [[args.gamma, args.tau, s, float(tail_mass(s, args.tau))]]
    _emit_table(args, "s-gamma", config, ["gamma", "tau", "s_gamma", "tail_mass"], rows)
    return 0


def _cmd_sample_gee(args) -> int:
    seed = derive_seed(args.seed, _COMMAND_STREAMS["sample-gee"])
    config = {
        "command": "sample-gee", "n": args.n, "tau": args.tau,
        "trials": args.trials, "seed": args.seed,
    }
    rows = []
    done = 0
    batch_index = 0
    while done < args.trials:
        take = min(1024, args.trials - done)
        mats = sample_gee_entries(args.n, args.tau, substream(seed, batch_index), take)
        values, is_real = eigvals_batch(mats)
        for t in range(take):
            for j in range(args.n):
                rows.append([
                    done + t, j + 1,
                    float(values[t, j].real), float(values[t, j].imag),
                    int(is_real[t, j]),
                ])
        done += take
        batch_index += 1
    _emit_table(args, "sample-gee", config, ["trial_index", "j", "re", "im", "is_real"], rows)
    return 0


def _cmd_spectral_test(args) -> int:
    seed = derive_seed(args.seed, _COMMAND_STREAMS["spectral-test"])
    ks = empirical_spectral_test(args.n, args.tau, args.trials, seed)
    record = {
        "op": "spectral-test",
        "params": {"n": args.n, "tau": args.tau, "trials": args.trials},
        "ks_distance": ks,
        "seed": args.seed,
        "version": __version__,
    }
    _write_output(args.out, _json_payload(record))
    return 0


def _cmd_estimate(args) -> int:
    p = _model_params(args)
    tau, b = derive_tau_b(p)
    seed = derive_seed(args.seed, _COMMAND_STREAMS["estimate"])
    window = IntervalB(_parse_extended(args.lo), _parse_extended(args.hi))
    est = estimate_equilibria_count(
        args.n, args.m, p, window, n_trials=args.trials, seed=seed,
        index_variant=args.index_variant,
    )
    record = {
        "op": "estimate",
        "params": {
            "n": args.n, "m": args.m, "phi1": args.phi1, "dphi1": args.dphi1,
            "phi2": args.phi2, "sigma2": args.sigma2, "lo": _fmt(window.lo),
            "hi": _fmt(window.hi), "trials": args.trials,
            "index_variant": args.index_variant, "tau": tau, "b": b,
        },
        "mean": est.mean,
        "stderr": est.stderr,
        "n_trials": est.n_trials,
        "seed": args.seed,
        "version": __version__,
    }
    _write_output(args.out, _json_payload(record))
    return 0


def _cmd_verify_uppingdim(args) -> int:
    seed = derive_seed(args.seed, _COMMAND_STREAMS["verify-uppingdim"])
    report = verify_dimension_lift(
        args.n, args.m, args.tau, IntervalB(args.lo, args.hi),
        n_trials=args.trials, seed=seed,
    )
    record = {
        "op": "verify-uppingdim",
        "params": {
            "n": args.n, "m": args.m, "tau": args.tau,
            "lo": args.lo, "hi": args.hi, "trials": args.trials,
        },
        "results": [
            {"side": "lhs", "mean": report.lhs.mean, "stderr": report.lhs.stderr},
            {"side": "rhs", "mean": report.rhs.mean, "stderr": report.rhs.stderr},
        ],
        "z_score": report.z_score,
        "seed": args.seed,
        "version": __version__,
    }
    _write_output(args.out, _json_payload(record))
    return 0 if report.z_score < Z_GATE else 3


def _cmd_oracle_compare(args) -> int:
    p = field_model_params(args.sigma2)
    tau, b = derive_tau_b(p)
    seed = derive_seed(args.seed, _COMMAND_STREAMS["oracle-compare"])
    collected = [] if args.dump_equilibria else None
    oracle = oracle_mean_counts(
        args.n, args.sigma2, args.samples, derive_seed(seed, 0), collect=collected
    )
    if args.dump_equilibria:
        config = {
            "command": "oracle-compare/equilibria", "n": args.n,
            "sigma2": args.sigma2, "samples": args.samples, "seed": args.seed,
        }
        header = ["sample_index", "eq_index", "m", "lagrange"]
        header += [f"x{i}" for i in range(args.n)] + ["residual"]
        rows = []
        eq_index = 0
        last_sample = None
        for sample_index, eq in collected:
            eq_index = eq_index + 1 if sample_index == last_sample else 0
            last_sample = sample_index
            rows.append(
                [str(sample_index), str(eq_index), str(eq.m), _fmt(eq.lagrange)]
                + [_fmt(x) for x in eq.position]
                + [_fmt(eq.residual)]
            )
        _write_output(args.dump_equilibria, _csv_payload(config, header, rows))
    comparisons = []
    worst = 0.0
    total_est_mean = 0.0
    total_est_var = 0.0
    for m in range(args.n):
        est = estimate_equilibria_count(
            args.n, m, p, n_trials=args.trials, seed=derive_seed(seed, 1 + m)
        )
        z = z_score(est, oracle.per_m[m])
        worst = max(worst, z)
        total_est_mean += est.mean
        total_est_var += est.stderr**2
        comparisons.append({
            "m": m, "estimate": est.mean, "estimate_stderr": est.stderr,
            "oracle": oracle.per_m[m].mean, "oracle_stderr": oracle.per_m[m].stderr,
            "z_score": z,
        })
    total_gap = abs(total_est_mean - oracle.total.mean)
    total_se = math.sqrt(total_est_var + oracle.total.stderr**2)
    total_z = total_gap / total_se if total_se > 0 else (0.0 if total_gap == 0 else math.inf)
    worst = max(worst, total_z)
    record = {
        "op": "oracle-compare",
        "params": {
            "n": args.n, "sigma2": args.sigma2, "samples": args.samples,
            "trials": args.trials, "tau": tau, "b": b,
        },
        "results": comparisons,
        "total": {
            "estimate": total_est_mean, "oracle": oracle.total.mean, "z_score": total_z,
        },
        "flagged_rate": oracle.flagged_rate,
        "seed": args.seed,
        "version": __version__,
    }
    _write_output(args.out, _json_payload(record))
    return 0 if worst < Z_GATE else 3


def _cmd_ldp_tail(args) -> int:
    seed = derive_seed(args.seed, _COMMAND_STREAMS["ldp-tail"])
    points = empirical_tail_rate(
        _parse_int_list(args.n_list), args.m, args.x, args.tau, args.trials, seed
    )
    config = {
        "command": "ldp-tail", "n_list": args.n_list, "m": args.m,
        "x": args.x, "tau": args.tau, "trials": args.trials, "seed": args.seed,
    }
    rows = [
        [pt.n, pt.rate_hat, pt.reference, pt.hits, int(not pt.sufficient)]
        for pt in points
    ]
    _emit_table(args, "ldp-tail", config, ["n", "rate_hat", "reference", "hits", "flagged"], rows)
    return 0


def _cmd_lagrange_rates(args) -> int:
    c = _parse_extended(args.c)
    d = _parse_extended(args.d)
    result = rate_lagrange_window(args.b, args.tau, args.dphi1, args.m, c, d)
    config = {
        "command": "lagrange-rates", "b": args.b, "tau": args.tau,
        "dphi1": args.dphi1, "m": args.m, "c": args.c, "d": args.d,
    }
    rows = [[args.b, args.tau, c, result.branch, result.rate]]
    if args.with_cutoff:
        z0 = multiplier_cutoff(args.b, args.tau, args.dphi1, args.m)
        rows.append([args.b, args.tau, z0, "cutoff", 0.0])
    _emit_table(args, "lagrange-rates", config, ["b", "tau", "gamma_or_c", "branch", "rate"], rows)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="equicount",
        description="Equilibrium-count rates and elliptic-ensemble verification experiments.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    default_seed = int(os.environ.get("EQUICOUNT_SEED", "0"))
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, trials_default=100_000):
        sp.add_argument("--seed", type=int, default=default_seed)
        sp.add_argument("--trials", type=int, default=trials_default)
        sp.add_argument("--out", default=None, help="output path (stdout if omitted)")

    sp = sub.add_parser("rates", help="fixed- or proportional-index rate table")
    sp.add_argument("--b", type=float, default=None)
    sp.add_argument("--tau", type=float, default=None)
    sp.add_argument("--m", type=int, default=0, help="index (the fixed-index rate does not depend on it)")
    sp.add_argument("--b-grid", default=None, help="start:stop:count; overrides --b")
    sp.add_argument("--tau-grid", default=None, help="start:stop:count; overrides --tau")
    sp.add_argument("--gamma-grid", default=None,
                    help="start:stop:count of index fractions; switches to the diverging-index rate")
    sp.add_argument("--out", default=None)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(func=_cmd_rates)

    sp = sub.add_parser("threshold-curve", help="zero-rate curve tau(b) over a b grid")
    sp.add_argument("--b-grid", required=True, help="start:stop:count")
    sp.add_argument("--out", default=None)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(func=_cmd_threshold_curve)

    sp = sub.add_parser("s-gamma", help="tail quantile of the ellipse-law real marginal")
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--tau", type=float, required=True)
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.add_argument("--out", default=None)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(func=_cmd_s_gamma)

    sp = sub.add_parser("sample-gee", help="dump ordered spectra of sampled matrices")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--tau", type=float, required=True)
    common(sp, trials_default=100)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(func=_cmd_sample_gee)

    sp = sub.add_parser("spectral-test", help="elliptic-law sup-distance check")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--tau", type=float, required=True)
    common(sp, trials_default=50)
    sp.set_defaults(func=_cmd_spectral_test)

    sp = sub.add_parser("estimate", help="mean equilibrium count via the ensemble estimator")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--phi1", type=float, required=True)
    sp.add_argument("--dphi1", type=float, required=True)
    sp.add_argument("--phi2", type=float, required=True)
    sp.add_argument("--sigma2", type=float, required=True)
    sp.add_argument("--lo", default="-inf")
    sp.add_argument("--hi", default="inf")
    sp.add_argument("--index-variant", choices=("m+1", "m"), default="m+1")
    common(sp)
    sp.set_defaults(func=_cmd_estimate)

    sp = sub.add_parser("verify-uppingdim", help="dimension-lift identity check (gate: z < 3)")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--tau", type=float, required=True)
    sp.add_argument("--lo", type=float, default=1.0)
    sp.add_argument("--hi", type=float, default=1.4)
    common(sp)
    sp.set_defaults(func=_cmd_verify_uppingdim)

    sp = sub.add_parser("oracle-compare", help="ensemble estimator vs brute-force sphere count")
    sp.add_argument("--n", type=int, choices=(2, 3), required=True)
    sp.add_argument("--sigma2", type=float, required=True)
    sp.add_argument("--samples", type=int, default=2000)
    sp.add_argument("--dump-equilibria", default=None, metavar="PATH",
                    help="also write every retained equilibrium as CSV")
    common(sp)
    sp.set_defaults(func=_cmd_oracle_compare)

    sp = sub.add_parser("ldp-tail", help="empirical tail rates across matrix sizes")
    sp.add_argument("--n-list", required=True, help="comma-separated sizes, e.g. 10,20,40")
    sp.add_argument("--m", type=int, default=1)
    sp.add_argument("--x", type=float, required=True)
    sp.add_argument("--tau", type=float, required=True)
    common(sp)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(func=_cmd_ldp_tail)

    sp = sub.add_parser("lagrange-rates", help="multiplier-window rate and optional cutoff")
    sp.add_argument("--b", type=float, required=True)
    sp.add_argument("--tau", type=float, required=True)
    sp.add_argument("--dphi1", type=float, required=True)
    sp.add_argument("--m", type=int, default=0)
    sp.add_argument("--c", default="-inf", help="window start; write --c=-inf for minus infinity")
    sp.add_argument("--d", default="inf")
    sp.add_argument("--with-cutoff", action="store_true")
    sp.add_argument("--out", default=None)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(func=_cmd_lagrange_rates)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConstraintError, DomainError) as exc:
        print(f"equicount: parameter constraint violated: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"equicount: I/O error: {exc}", file=sys.stderr)
        return 4
    except EquicountError as exc:
        print(f"equicount: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
