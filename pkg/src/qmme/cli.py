"""Command line front end: validate, synthesize, build, evolve, analyze.

Exit codes: 0 success, 1 validation or certification failure, 2 usage or
parse error, 3 numerical failure. Module errors become a machine-readable
JSON object on stdout. Every tolerance flag can also be set through an
environment variable with the ``QMME_`` prefix (``--tol-herm`` reads
``QMME_TOL_HERM``, and so on); the flag wins when both are present.
"""

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, dynamics, generator, model as model_mod
from .bohr import decompose
from .errors import (
    Defective,
    DimensionMismatch,
    InadmissibleModel,
    InsufficientDecay,
    NoConvergence,
    NotHermitian,
    NotPSD,
    NotUnitary,
    OrderViolation,
    Overflow,
    ParseError,
    QmmeError,
    SpectralViolation,
    TruncationLoss,
    UnknownFrequency,
)
from .io import (
    dumps_canonical,
    load_density_matrix,
    load_model,
    write_trajectory_csv,
)

__all__ = ["main", "build_parser"]

_USAGE_ERRORS = (ParseError, DimensionMismatch, OrderViolation, UnknownFrequency)
_CONTRACT_ERRORS = (InadmissibleModel, NotPSD, NotHermitian, NotUnitary, SpectralViolation)
_NUMERICAL_ERRORS = (NoConvergence, Overflow, Defective, InsufficientDecay, TruncationLoss)


def _exit_code_for(exc):
    if isinstance(exc, _USAGE_ERRORS):
        return 2
    if isinstance(exc, _CONTRACT_ERRORS):
        return 1
    if isinstance(exc, _NUMERICAL_ERRORS):
        return 3
    return 3


def _env_default(flag, fallback):
    name = "QMME_" + flag.strip("-").upper().replace("-", "_")
    raw = os.environ.get(name)
    if raw is None:
        return fallback
    try:
        return float(raw)
    except ValueError:
        raise ParseError(f"environment variable {name}={raw!r} is not a number") from None


def _add_tol(parser, flag, fallback, help_text):
    parser.add_argument(
        flag,
        type=float,
        default=_env_default(flag, fallback),
        metavar="X",
        help=f"{help_text} (default {fallback:g}, env {('QMME_' + flag.strip('-').upper().replace('-', '_'))})",
    )


def _add_common(parser):
    parser.add_argument("model", help="model JSON file")
    parser.add_argument("--out", metavar="DIR", default=None,
                        help="write artifacts into DIR instead of stdout")
    parser.add_argument("--trunc", type=int, default=None, metavar="N",
                        help="re-truncate the unitary series to box N")
    parser.add_argument("--box", type=int, default=12, metavar="K",
                        help="integer lattice box for independence/congruence scans")
    _add_tol(parser, "--tol-herm", 1e-10, "Hermiticity residual bound")
    _add_tol(parser, "--tol-cluster", 1e-9, "relative eigenvalue clustering width")
    _add_tol(parser, "--tol-unitary", 1e-9, "unitarity drift bound for p(t)")
    _add_tol(parser, "--tol-independence", 1e-9, "rational-independence scan tolerance")
    _add_tol(parser, "--tol-congruence", 1e-9, "congruence-freedom scan tolerance")


def _parse_grid(spec):
    parts = spec.split(":")
    if len(parts) != 3:
        raise ParseError(f"--grid needs start:stop:count, got {spec!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ParseError(f"--grid needs numeric start:stop and integer count, got {spec!r}") from None
    if start < 0 or stop <= start or count < 2:
        raise ParseError(
            f"--grid needs 0 <= start < stop and count >= 2, got {spec!r}"
        )
    return np.linspace(start, stop, count)


def _initial_state(spec, mdl):
    d = mdl.dim
    if spec == "mixed":
        return np.eye(d, dtype=complex) / d
    if spec == "basis0":
        rho = np.zeros((d, d), dtype=complex)
        rho[0, 0] = 1.0
        return rho
    if spec == "plus":
        return np.full((d, d), 1.0 / d, dtype=complex)
    if spec == "ground":
        w, v = np.linalg.eigh(0.5 * (mdl.h_bar + mdl.h_bar.conj().T))
        g = v[:, 0]
        return np.outer(g, g.conj())
    path = Path(spec)
    if not path.exists():
        raise ParseError(
            f"--rho0 {spec!r} is neither a named state (mixed, basis0, plus, ground) "
            "nor an existing file"
        )
    rho = load_density_matrix(path)
    if rho.shape != (d, d):
        raise DimensionMismatch(f"initial state has shape {rho.shape}, model dimension is {d}")
    return rho


def _load(args):
    mdl = load_model(args.model)
    if args.trunc is not None:
        import dataclasses

        mdl = dataclasses.replace(mdl, p_series=mdl.p_series.truncate(args.trunc))
    return mdl


def _emit(args, name, text):
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / name).write_text(text)
        print(str(out_dir / name))
    else:
        sys.stdout.write(text)


def _validate(args, mdl):
    return model_mod.validate_model(
        mdl,
        box=args.box,
        tol_independence=args.tol_independence,
        tol_congruence=args.tol_congruence,
        tol_unitary=args.tol_unitary,
        tol_herm=args.tol_herm,
        tol_cluster=args.tol_cluster,
    )


def _build(args, mdl):
    report = _validate(args, mdl)
    if not report.passed:
        raise InadmissibleModel(
            "model failed admissibility checks", report=report
        )
    bundle = generator.build_generator(
        mdl,
        validate=False,
        box=args.box,
        tol_psd=args.tol_psd,
        tol_cluster=args.tol_cluster,
        tol_congruence=args.tol_congruence,
    )
    return report, bundle


def _matrix_json(m):
    m = np.asarray(m, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_validate(args):
    mdl = _load(args)
    report = _validate(args, mdl)
    _emit(args, "validate.json", dumps_canonical(report.to_dict()))
    return 0 if report.passed else 1


def cmd_synthesize(args):
    mdl = _load(args)
    h_series = model_mod.synthesize_hamiltonian(
        mdl.p_series, mdl.frequencies, mdl.h_bar, tol_unitary=args.tol_unitary
    )
    payload = {
        "r": h_series.r,
        "dim": h_series.d,
        "trunc": h_series.trunc,
        "tail_norm": float(h_series.tail_norm),
        "coefficients": [
            {"n": [int(v) for v in n], "matrix": _matrix_json(h_series.coeffs[n])}
            for n in h_series.indices()
        ],
    }
    _emit(args, "h_series.json", dumps_canonical(payload))
    return 0


def cmd_build(args):
    mdl = _load(args)
    report, bundle = _build(args, mdl)
    cov = generator.check_covariance(bundle)
    decomp = bundle.decomp
    payload = {
        "validation": report.to_dict(),
        "decomposition": {
            "quasienergies": [float(e) for e in decomp.quasienergies],
            "bohr_frequencies": [float(w) for w in decomp.bohr_frequencies],
            "projections": [_matrix_json(p) for p in decomp.projections],
        },
        "jump_operators": [
            {
                "coupling": int(mu),
                "n": [int(v) for v in n],
                "frequency": float(decomp.bohr_frequencies[w_idx]),
                "shifted_frequency": float(
                    bundle.jumps.shifted_frequency(n, w_idx, mdl.frequencies)
                ),
                "norm": float(np.linalg.norm(s)),
            }
            for (mu, n, w_idx), s in bundle.jumps.items_sorted()
        ],
        "delta_h": _matrix_json(bundle.delta_h),
        "kossakowski_blocks": [
            {
                "n": [int(v) for v in n],
                "frequency": float(decomp.bohr_frequencies[w_idx]),
                "shifted_frequency": float(bundle.shifted_frequencies[(w_idx, n)]),
                "h_matrix": _matrix_json(h),
            }
            for (w_idx, n), h in sorted(bundle.kossakowski.items())
        ],
        "x_matrix": _matrix_json(bundle.x.matrix),
        "covariance": cov.to_dict(),
    }
    _emit(args, "build.json", dumps_canonical(payload))
    return 0


def cmd_evolve(args):
    mdl = _load(args)
    _, bundle = _build(args, mdl)
    dmap = dynamics.DynamicalMap(mdl, bundle, tol_unitary=args.tol_unitary)
    ts = _parse_grid(args.grid)
    rho0 = _initial_state(args.rho0, mdl)
    product = dmap.evolve(rho0, ts)
    direct = dmap.integrate_direct(rho0, ts, tol=args.tol_integrate)
    from .linalg import trace_norm

    dist = [trace_norm(product[i] - direct[i]) for i in range(ts.size)]
    extra = {}
    d = mdl.dim
    for i in range(d):
        for j in range(d):
            extra[f"direct_re_{i}{j}"] = direct[:, i, j].real
            extra[f"direct_im_{i}{j}"] = direct[:, i, j].imag
    extra["dist"] = dist

    import io as _io

    buf = _io.StringIO()
    write_trajectory_csv(buf, ts, product, extra=extra)
    _emit(args, "trajectory.csv", buf.getvalue())
    return 0


def cmd_spectrum(args):
    mdl = _load(args)
    _, bundle = _build(args, mdl)
    report = analysis.spectrum_classification(bundle.x, tol_spec=args.tol_spectral)
    _emit(args, "spectrum.json", dumps_canonical(report.to_dict()))
    return 0


def cmd_steady_state(args):
    mdl = _load(args)
    _, bundle = _build(args, mdl)
    dmap = dynamics.DynamicalMap(mdl, bundle, tol_unitary=args.tol_unitary)
    stability = analysis.spectrum_classification(bundle.x, tol_spec=args.tol_spectral)
    rho0 = _initial_state(args.rho0, mdl)
    cycle = analysis.limit_cycle(dmap, rho0, tol_spec=args.tol_spectral)
    ts = _parse_grid(args.grid)
    try:
        fit = analysis.decay_rate_fit(dmap, cycle, rho0, ts).to_dict()
    except InsufficientDecay as exc:
        fit = {"error": str(exc)}
    payload = {
        "stability": stability.to_dict(),
        "limit_cycle": cycle.to_dict(),
        "decay_fit": fit,
    }
    _emit(args, "steady_state.json", dumps_canonical(payload))
    return 0


def cmd_certify(args):
    mdl = _load(args)
    _, bundle = _build(args, mdl)
    dmap = dynamics.DynamicalMap(mdl, bundle, tol_unitary=args.tol_unitary)
    ts = _parse_grid(args.grid) if args.grid else None
    cert = analysis.cptp_certificate(
        dmap,
        ts=ts,
        n_pairs=args.pairs,
        seed=args.seed,
        tol_choi=args.tol_choi,
        tol_trace=args.tol_trace,
    )
    _emit(args, "certificate.json", dumps_canonical(cert.to_dict()))
    return 0 if cert.passed else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qmme",
        description=(
            "Quasiperiodic Markovian master equation toolkit: validate model "
            "files, synthesize the lab-frame Hamiltonian, build the constant "
            "generator, evolve states along the product-form map, and certify "
            "its properties."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check model admissibility")
    _add_common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("synthesize", help="emit the lab-frame Hamiltonian series")
    _add_common(p)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("build", help="emit decomposition, shift, rates, and generator")
    _add_common(p)
    _add_tol(p, "--tol-psd", 1e-12, "bath positivity slack")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("evolve", help="trajectory CSV from both dynamics paths")
    _add_common(p)
    _add_tol(p, "--tol-psd", 1e-12, "bath positivity slack")
    _add_tol(p, "--tol-integrate", 1e-8, "step-halving convergence bound")
    p.add_argument("--grid", default="0:20:200", metavar="A:B:N",
                   help="time grid start:stop:count (default 0:20:200)")
    p.add_argument("--rho0", default="mixed", metavar="STATE",
                   help="initial state: mixed, basis0, plus, ground, or a JSON file")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("spectrum", help="classify the constant generator spectrum")
    _add_common(p)
    _add_tol(p, "--tol-psd", 1e-12, "bath positivity slack")
    _add_tol(p, "--tol-spectral", 1e-9, "spectral snapping tolerance")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("steady-state", help="limit cycle and decay-rate report")
    _add_common(p)
    _add_tol(p, "--tol-psd", 1e-12, "bath positivity slack")
    _add_tol(p, "--tol-spectral", 1e-9, "spectral snapping tolerance")
    p.add_argument("--grid", default="0:60:400", metavar="A:B:N",
                   help="time grid for the decay fit (default 0:60:400)")
    p.add_argument("--rho0", default="basis0", metavar="STATE",
                   help="initial state: mixed, basis0, plus, ground, or a JSON file")
    p.set_defaults(func=cmd_steady_state)

    p = sub.add_parser("certify", help="complete-positivity certificate")
    _add_common(p)
    _add_tol(p, "--tol-psd", 1e-12, "bath positivity slack")
    _add_tol(p, "--tol-choi", 1e-10, "lowest admissible Choi eigenvalue")
    _add_tol(p, "--tol-trace", 1e-12, "trace-preservation defect bound")
    p.add_argument("--grid", default=None, metavar="A:B:N",
                   help="sample times (default: 20 log-spaced points up to t=50)")
    p.add_argument("--pairs", type=int, default=20, metavar="N",
                   help="number of random two-time propagators to certify")
    p.add_argument("--seed", type=int, default=7, metavar="S",
                   help="seed for the random pair sample")
    p.set_defaults(func=cmd_certify)

    return parser


def main(argv=None):
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
    except QmmeError as exc:
        sys.stdout.write(dumps_canonical({"error": {"type": type(exc).__name__, "message": str(exc)}}))
        return 2
    try:
        return args.func(args)
    except QmmeError as exc:
        payload = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        report = getattr(exc, "report", None)
        if report is not None:
            payload["validation"] = report.to_dict()
        sys.stdout.write(dumps_canonical(payload))
        return _exit_code_for(exc)


if __name__ == "__main__":
    raise SystemExit(main())
