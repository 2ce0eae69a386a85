"""``nhlab`` command line: every experiment as a reproducible table file.

Exit codes: 0 success, 2 usage or parameter error, 3 numerical failure,
4 physically refused request (e.g. a quasi-stationary state outside the band).
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .analytic import BandPredicate, hatano_obc_eigs, ssh_zero_mode, ssh_zero_mode_domain
from .dynamics import StepSizeUnderflow, disorder_robustness, evolve
from .eigen import ConvergenceError, Method, Spectrum, eigenvalues_qr, obc_spectrum, pbc_spectrum
from .lattice import Boundary, DisorderSpec, ModelKind, ModelSpec, build_hamiltonian
from .output import format_table, make_metadata, svg_plot
from .recursion import (
    DEFAULT_J,
    DivergentEnergyError,
    band_scan,
    pbc_loop_polygon,
    quasi_stationary_state,
    recurse,
)

EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_REFUSED = 4


class UsageError(Exception):
    pass


def _model_args(p: argparse.ArgumentParser, bc: bool = True):
    p.add_argument("--model", choices=[k.value for k in ModelKind], default="hatano")
    p.add_argument("--n", type=int, default=40, help="number of sites")
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--v0", type=float, default=0.0)
    p.add_argument("--delta", type=float, default=0.0)
    if bc:
        p.add_argument("--bc", choices=[b.value for b in Boundary], default="obc")


def _output_args(p: argparse.ArgumentParser):
    p.add_argument("--out", help="output file (stdout if omitted)")
    p.add_argument("--format", choices=["csv", "json", "svg"], default=None,
                   help="svg writes the plot to --out instead of the table")
    p.add_argument("--deterministic", action="store_true", help="omit the timestamp")


def _spec(args, **over) -> ModelSpec:
    kw = dict(
        kind=args.model, N=args.n, gamma=args.gamma, V0=args.v0, delta=args.delta,
        bc=getattr(args, "bc", "obc"),
    )
    kw.update(over)
    return ModelSpec(**kw)


def _spec_params(spec: ModelSpec) -> dict:
    return {"model": spec.kind, "N": spec.N, "gamma": spec.gamma, "V0": spec.V0, "delta": spec.delta, "bc": spec.bc}


def _emit(args, command, params, columns, rows):
    fmt = args.format or ("json" if args.out and args.out.endswith(".json") else "csv")
    if fmt == "svg":
        return
    text = format_table(columns, rows, make_metadata(command, params, args.deterministic), fmt)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_svg(path, svg):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(svg)


def _threads() -> int | None:
    v = os.environ.get("NHLAB_THREADS")
    return max(1, int(v)) if v else None


# --------------------------------------------------------------------------

def cmd_spectrum(args):
    spec = _spec(args)
    if spec.bc is Boundary.PBC:
        if args.method == "qr":
            sp = eigenvalues_qr(build_hamiltonian(spec))
        else:
            sp = pbc_spectrum(spec, args.num_k)
    elif args.method == "analytic":
        if spec.kind is not ModelKind.HATANO_NELSON:
            raise UsageError("closed-form OBC spectrum exists only for the hatano model")
        sp = Spectrum(hatano_obc_eigs(spec.N, spec.gamma).astype(complex), Method.ANALYTIC)
    elif args.method == "qr":
        sp = eigenvalues_qr(build_hamiltonian(spec))
    else:
        sp = obc_spectrum(spec)
    rows = [(i, float(e.real), float(e.imag), sp.method.value) for i, e in enumerate(sp.eigenvalues)]
    params = _spec_params(spec) | {"method": args.method}
    if sp.conditioning_note:
        params["conditioning_note"] = sp.conditioning_note
    _emit(args, "spectrum", params, ["index", "re", "im", "method"], rows)
    if args.svg:
        ev = sp.eigenvalues
        _write_svg(args.svg, svg_plot(
            [{"x": ev.real, "y": ev.imag, "color": "steelblue"}],
            f"{spec.kind.value} {spec.bc.value} spectrum", "Re E", "Im E",
        ))


def _window(text: str):
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 4 or parts[0] >= parts[1] or parts[2] >= parts[3]:
        raise UsageError("--window needs RE_MIN,RE_MAX,IM_MIN,IM_MAX with min < max")
    return tuple(parts)


def cmd_band(args):
    spec = _spec(args, bc="obc")
    window = _window(args.window)
    scan = band_scan(spec, window, args.grid, J=args.j, num_k=args.num_k)
    params = _spec_params(spec) | {"grid": args.grid, "window": list(window), "J": args.j,
                                   "agreement": scan.agreement()}
    _emit(args, "band", params, ["re_E", "im_E", "growth_verdict", "winding_verdict", "decay_rate"], scan.rows())
    if args.svg:
        E = scan.energies.ravel()
        bounded = np.array([g.value == "bounded" for g in scan.growth.ravel()])
        series = [{"x": E.real[bounded], "y": E.imag[bounded], "color": "lightblue", "radius": 1.5}]
        for loop in scan.loops.loops:
            series.append({"x": loop.real, "y": loop.imag, "style": "line", "closed": True, "color": "red"})
        _write_svg(args.svg, svg_plot(series, f"{spec.kind.value} continuum band", "Re E", "Im E"))


def _zero_mode_region(delta: float, gamma: float) -> str:
    lo, _ = ssh_zero_mode_domain(gamma)
    if delta > 0:
        return "topological"
    if delta > lo:
        return "quasi_stationary"
    return "none"


def sweep_delta(gamma: float, n: int, deltas):
    """Rows ``(delta, index, re, im, method, region)`` of the OBC SSH fan."""
    rows = []
    for d in deltas:
        sp = obc_spectrum(ModelSpec(ModelKind.SSH, n, gamma, delta=float(d)))
        region = _zero_mode_region(float(d), gamma)
        rows.extend((float(d), i, float(e.real), float(e.imag), sp.method.value, region)
                    for i, e in enumerate(sp.eigenvalues))
    return rows


def _delta_grid(lo: float, hi: float, step: float):
    count = int(round((hi - lo) / step))
    return np.round(lo + step * np.arange(count + 1), 12)


def cmd_sweep_delta(args):
    deltas = _delta_grid(args.delta_min, args.delta_max, args.delta_step)
    rows = sweep_delta(args.gamma, args.n, deltas)
    lo, hi = ssh_zero_mode_domain(args.gamma)
    params = {"model": "ssh", "N": args.n, "gamma": args.gamma, "delta_min": args.delta_min,
              "delta_max": args.delta_max, "delta_step": args.delta_step,
              "quasi_stationary_window": [lo, 0.0], "topological_window": [0.0, hi]}
    _emit(args, "sweep-delta", params, ["delta", "index", "re", "im", "method", "region"], rows)
    if args.svg:
        d = np.array([r[0] for r in rows])
        e = np.array([r[2] for r in rows])
        red = sorted({r[0] for r in rows if r[5] != "none"})
        _write_svg(args.svg, svg_plot(
            [{"x": d, "y": e, "color": "steelblue", "radius": 1.2},
             {"x": red, "y": [0.0] * len(red), "color": "red", "radius": 1.6}],
            f"SSH OBC spectrum, gamma={args.gamma}, N={args.n}", "delta", "E",
        ))


def cmd_recurse(args):
    spec = _spec(args, bc="obc")
    E = complex(args.energy)
    seed = E if args.seed == "paper" else 1.0
    J = args.j or spec.N + 1
    trace = recurse(spec, E, seed, J)
    params = _spec_params(spec) | {"energy": E, "seed": args.seed, "J": J,
                                   "boundary": trace.boundary, "residual": trace.residual}
    if args.quasi_stationary:
        qs = quasi_stationary_state(spec, E, args.growth_j)
        params |= {"growth_verdict": qs.growth.verdict.value, "decay_rate": qs.growth.decay_rate,
                   "boundary_residual": qs.boundary_residual}
        rows = [(j + 1, float(v.real), float(v.imag)) for j, v in enumerate(qs.vector)]
        _emit(args, "recurse", params, ["j", "re_psi", "im_psi"], rows)
    else:
        la = trace.log_abs
        amp = trace.amplitudes
        rows = [(j, float(amp[j].real), float(amp[j].imag), float(la[j])) for j in range(J + 1)]
        _emit(args, "recurse", params, ["j", "re_psi", "im_psi", "log_abs"], rows)
    print(f"|psi_{J}| = {trace.boundary:.6e}  (relative residual {trace.residual:.6e})", file=sys.stderr)


def cmd_evolve(args):
    spec = _spec(args)
    H = build_hamiltonian(spec)
    if args.init == "zeromode":
        if spec.kind is not ModelKind.SSH:
            raise UsageError("--init zeromode needs --model ssh")
        psi0 = ssh_zero_mode(spec.N, spec.gamma, spec.delta).amplitudes
    elif args.init == "qs":
        psi0 = quasi_stationary_state(spec.with_(bc=Boundary.OBC), complex(args.energy)).vector
    else:
        psi0 = np.zeros(spec.N, dtype=complex)
        psi0[0] = 1.0
    res = evolve(H, psi0, args.t, tol=args.tol, dt_out=args.dt, eps_life=args.eps_life, store_states=False)
    params = _spec_params(spec) | {"init": args.init, "t": args.t, "tol": args.tol,
                                   "eps_life": args.eps_life, "lifetime": res.lifetime}
    params |= {f"stats_{k}": v for k, v in res.integrator_stats.items()}
    rows = zip(res.times.tolist(), res.deviation.tolist(), res.lognorm.tolist())
    _emit(args, "evolve", params, ["t", "deviation", "lognorm"], rows)
    print(f"lifetime = {res.lifetime}", file=sys.stderr)


def cmd_disorder(args):
    spec = _spec(args, kind="ssh", bc="obc")
    d = DisorderSpec(args.fwidth, args.gwidth, args.seed, args.realizations)
    rep = disorder_robustness(spec, d, probe_time=args.probe_time, max_workers=_threads())
    params = _spec_params(spec) | {
        "forward_width": d.forward_width, "gamma_width": d.gamma_width, "seed": d.seed,
        "realizations": d.realizations, "zero_energy_spread": rep.zero_energy_spread,
        "survival_fraction": rep.survival_fraction, "verdict": rep.verdict,
    }
    params |= {f"threshold_{k}": v for k, v in rep.thresholds.items()}
    _emit(args, "disorder", params, ["realization", "nearest_eig_re", "nearest_eig_im", "overlap"], rep.rows())
    print(f"verdict = {rep.verdict.value}", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nhlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="OBC or PBC eigenvalues")
    _model_args(p)
    p.add_argument("--method", choices=["analytic", "qr", "auto"], default="auto")
    p.add_argument("--num-k", type=int, default=256)
    p.add_argument("--svg")
    _output_args(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("band", help="continuum-band membership map")
    _model_args(p, bc=False)
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--window", default="-2,2,-2,2")
    p.add_argument("--j", type=int, default=DEFAULT_J)
    p.add_argument("--num-k", type=int, default=2048)
    p.add_argument("--svg")
    _output_args(p)
    p.set_defaults(func=cmd_band)

    p = sub.add_parser("sweep-delta", help="SSH OBC spectrum versus dimerization")
    p.add_argument("--gamma", type=float, default=0.2)
    p.add_argument("--n", type=int, default=40)
    p.add_argument("--delta-min", type=float, default=-0.99)
    p.add_argument("--delta-max", type=float, default=0.99)
    p.add_argument("--delta-step", type=float, default=0.01)
    p.add_argument("--svg")
    _output_args(p)
    p.set_defaults(func=cmd_sweep_delta)

    p = sub.add_parser("recurse", help="forward recursion at a trial energy")
    _model_args(p, bc=False)
    p.add_argument("--energy", default="0")
    p.add_argument("--seed", choices=["unit", "paper"], default="unit",
                   help="psi_1 = 1 (unit) or psi_1 = E")
    p.add_argument("--j", type=int, default=None)
    p.add_argument("--quasi-stationary", action="store_true", help="emit the normalized state")
    p.add_argument("--growth-j", type=int, default=DEFAULT_J)
    _output_args(p)
    p.set_defaults(func=cmd_recurse)

    p = sub.add_parser("evolve", help="time evolution and lifetime")
    _model_args(p)
    p.add_argument("--t", type=float, default=40.0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--eps-life", type=float, default=0.01)
    p.add_argument("--init", choices=["zeromode", "qs", "site1"], default="zeromode")
    p.add_argument("--energy", default="0")
    _output_args(p)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("disorder", help="zero-mode robustness Monte Carlo")
    _model_args(p, bc=False)
    p.add_argument("--realizations", type=int, default=100)
    p.add_argument("--fwidth", type=float, default=0.05)
    p.add_argument("--gwidth", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--probe-time", type=float, default=5.0)
    _output_args(p)
    p.set_defaults(func=cmd_disorder, model="ssh")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.format == "svg":
            if not hasattr(args, "svg"):
                raise UsageError(f"{args.command} has no plot; use csv or json")
            if not args.out:
                raise UsageError("--format svg needs --out")
            args.svg = args.out
        args.func(args)
    except DivergentEnergyError as exc:
        print(f"nhlab: refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except (ConvergenceError, StepSizeUnderflow, FloatingPointError) as exc:
        print(f"nhlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, ValueError) as exc:
        print(f"nhlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
