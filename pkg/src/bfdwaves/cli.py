"""Command-line front end: ``bfdwaves <subcommand> ...``.

Every subcommand prints JSON or CSV to stdout or writes into ``--out``.
``--plotdata`` adds whitespace-separated ``.dat`` copies of the tables.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import io
from .errors import ConvergenceError, StepFailure
from .experiments import ExperimentSpec, WaveSpec, collision_spec, convergence_study, run_experiment
from .integrator import EvolveConfig, evolve
from .params import AbcdSystem, ModelingParameters, classify, reduced_parameters
from .solitary import ProfileSolveConfig, solve_profile
from .spectral import PeriodicGrid
from .theory import c_gamma, dispersion


def _system(args):
    return reduced_parameters(args.eps_db, args.gamma)[1]


def _print_json(payload):
    json.dump(io._clean(payload), sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _plot_copy(path: Path, header, rows):
    io.write_plotdata(path.with_suffix(".dat"), header, rows)


# -- subcommands ---------------------------------------------------------------

def cmd_classify(args):
    p = ModelingParameters(args.alpha1, args.alpha2, args.beta)
    _print_json(classify(AbcdSystem.from_modeling(p)).to_dict())


def cmd_speed_limit(args):
    report = c_gamma(_system(args), k_max=args.kmax, c_s=args.cs)
    _print_json(report.to_dict())


def cmd_dispersion(args):
    k = np.linspace(args.kmin, args.kmax, args.n)
    rows = dispersion(_system(args), args.cs, k).rows() + 0.0  # no negative zeros
    header = ["k", "phi", "omega+", "omega-", "v+", "v-", "group+", "group-"]
    if args.out:
        out = Path(args.out)
        io.write_table(out, header, rows)
        if args.plotdata:
            _plot_copy(out, header, rows)
    else:
        np.savetxt(sys.stdout, rows, fmt=io.FMT, delimiter=",", header=",".join(header), comments="")


def cmd_solitary(args):
    sys_ = _system(args)
    grid = PeriodicGrid(args.L, args.N)
    cfg = ProfileSolveConfig(grid=grid, c_s=args.cs, tolerance=args.tol, mpe_width=args.mpe,
                             max_iterations=args.max_iter, use_mpe=args.mpe > 0 and not args.no_mpe)
    wave = solve_profile(cfg, sys_)
    out = Path(args.out)
    io.write_state(out, grid, wave.state, meta={"c_s": repr(args.cs), "digest": sys_.digest()})
    sidecar = dict(wave.summary(), system=sys_.to_dict(), digest=sys_.digest(), tolerance=args.tol,
                   mpe_width=args.mpe)
    io.write_json(out.with_suffix(".json"), sidecar)
    if args.plotdata:
        _plot_copy(out, ["x", "zeta", "u"], np.column_stack([grid.x, wave.zeta, wave.u]))
    _print_json({k: sidecar[k] for k in ("iterations", "residual", "amplitude_zeta", "amplitude_u")})


def cmd_evolve(args):
    sys_ = _system(args)
    grid, state = io.read_state(args.init)
    cfg = EvolveConfig(dt=args.dt, t_final=args.tfinal, record_every=args.record,
                       stage_tolerance=args.stage_tol, allow_courant_violation=args.allow_courant_violation)
    out = Path(args.out)
    (out / "snapshots").mkdir(parents=True, exist_ok=True)
    digest = sys_.digest()
    io.write_json(out / "meta.json", {
        "init": str(args.init), "system": sys_.to_dict(), "digest": digest,
        "grid": {"L": grid.L, "N": grid.N, "h": grid.h},
        "evolve": {"dt": cfg.dt, "t_final": cfg.t_final, "record_every": cfg.record_every,
                   "stage_tolerance": cfg.stage_tolerance, "stage_max_iters": cfg.stage_max_iters,
                   "n_steps": cfg.n_steps},
    })
    count = [0]

    def snapshot(t, st):
        io.write_state(out / "snapshots" / f"snap{count[0]:06d}.csv", grid, st,
                       meta={"t": repr(t), "digest": digest})
        count[0] += 1

    def dump(inv):
        rows = np.column_stack(inv.arrays())
        io.write_table(out / "invariants.csv", ["t", "E_h", "I_h"], rows)
        if args.plotdata:
            _plot_copy(out / "invariants.csv", ["t", "E_h", "I_h"], rows)
        return rows

    try:
        _, inv = evolve(state, sys_, grid, cfg, on_record=snapshot, keep_snapshots=False)
    except StepFailure as exc:
        dump(exc.partial[1])
        (out / "FAILED").write_text(str(exc) + "\n")
        raise
    dump(inv)
    _print_json({"snapshots": count[0], "max_energy_drift": inv.max_energy_drift(),
                 "max_momentum_drift": inv.max_momentum_drift()})


def _run(spec: ExperimentSpec, args):
    res = run_experiment(spec, args.out)
    if args.plotdata and args.out:
        out = Path(args.out)
        _plot_copy(out / "invariants.csv", ["t", "E_h", "I_h"],
                   np.column_stack([res.times, res.energy, res.momentum]))
        for i, tr in enumerate(res.trackers):
            if tr.records:
                _plot_copy(out / "tracks" / f"wave{i}.csv", ["t", "amplitude", "position", "speed"],
                           tr.rows())
    _print_json(res.summary)


def _experiment_kw(args) -> dict:
    kw = dict(gamma=args.gamma, eps_db=args.eps_db, L=args.L, N=args.N, dt=args.dt,
              t_final=args.tfinal, record_every=args.record,
              snapshot_times=tuple(args.snapshots or ()))
    if args.readout:
        kw["readout_times"] = tuple(args.readout)
    return kw


def cmd_perturb(args):
    kw = _experiment_kw(args)
    kw.setdefault("readout_times", (0.0, args.tfinal))
    spec = ExperimentSpec(kind="perturb", waves=(WaveSpec(args.cs, 0.0, 1),),
                          amplitude_factor=args.A, perturbation=args.mode, **kw)
    _run(spec, args)


def cmd_collide(args):
    kw = _experiment_kw(args)
    spec = collision_spec(args.mode, args.cs1, args.cs2, args.x1, args.x2, **kw)
    _run(spec, args)


def cmd_resolve(args):
    kw = _experiment_kw(args)
    kw.setdefault("readout_times", (0.0, args.tfinal))
    spec = ExperimentSpec(kind="gaussian", gaussian=(args.A, args.tau), n_tracks=args.tracks, **kw)
    _run(spec, args)


def cmd_converge(args):
    N_list = [int(v) for v in args.Nlist.split(",")]
    A, tau = args.A, args.tau

    def initial(x):
        g = A * np.exp(-tau * x ** 2)
        return g, g.copy()

    table = convergence_study(_system(args), initial, args.L, N_list, args.Nref, args.dt, args.tfinal,
                              refine_dt=args.refine_dt)
    header = ["N", "err_zeta", "err_u", "observed_rate"]
    rows = table.to_rows()
    if args.out:
        out = Path(args.out)
        io.write_table(out, header, rows)
        if args.plotdata:
            _plot_copy(out, header, rows)
    np.savetxt(sys.stdout, np.asarray(rows, dtype=float), fmt=io.FMT, delimiter=",",
               header=",".join(header), comments="")


# -- parser ----------------------------------------------------------------------

def _physics(p):
    p.add_argument("--gamma", type=float, default=0.8, help="density ratio (default 0.8)")
    p.add_argument("--eps-db", type=float, default=0.0, dest="eps_db", help="d - b (default 0)")


def _run_opts(p, tfinal):
    p.add_argument("--L", type=float, default=256.0)
    p.add_argument("--N", type=int, default=4096)
    p.add_argument("--dt", type=float, default=6.25e-3)
    p.add_argument("--tfinal", type=float, default=tfinal)
    p.add_argument("--record", type=int, default=160, help="steps between records")
    p.add_argument("--snapshots", type=float, nargs="*", help="times at which to write snapshots")
    p.add_argument("--readout", type=float, nargs="*", help="times for amplitude/speed readings")
    p.add_argument("--out", required=True)
    p.add_argument("--plotdata", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bfdwaves", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="abcd coefficients and well-posedness class")
    p.add_argument("--alpha1", type=float, required=True)
    p.add_argument("--alpha2", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("speed-limit", help="c_gamma and the related speed conditions")
    _physics(p)
    p.add_argument("--kmax", type=float, default=200.0)
    p.add_argument("--cs", type=float, default=None, help="optional speed for alpha0, beta0")
    p.set_defaults(func=cmd_speed_limit)

    p = sub.add_parser("dispersion", help="linear dispersion table")
    _physics(p)
    p.add_argument("--cs", type=float, required=True)
    p.add_argument("--kmin", type=float, default=0.0)
    p.add_argument("--kmax", type=float, required=True)
    p.add_argument("--n", type=int, default=201)
    p.add_argument("--out")
    p.add_argument("--plotdata", action="store_true")
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("solitary", help="solitary-wave profile by Petviashvili iteration")
    _physics(p)
    p.add_argument("--cs", type=float, required=True)
    p.add_argument("--L", type=float, default=256.0)
    p.add_argument("--N", type=int, default=4096)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--mpe", type=int, default=6, help="extrapolation width (0 disables)")
    p.add_argument("--no-mpe", action="store_true")
    p.add_argument("--max-iter", type=int, default=500, dest="max_iter")
    p.add_argument("--out", required=True)
    p.add_argument("--plotdata", action="store_true")
    p.set_defaults(func=cmd_solitary)

    p = sub.add_parser("evolve", help="time-integrate an (x, zeta, u) CSV")
    _physics(p)
    p.add_argument("--init", required=True)
    p.add_argument("--dt", type=float, default=6.25e-3)
    p.add_argument("--tfinal", type=float, required=True)
    p.add_argument("--record", type=int, default=100, help="steps between snapshots")
    p.add_argument("--stage-tol", type=float, default=1e-13, dest="stage_tol")
    p.add_argument("--allow-courant-violation", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--plotdata", action="store_true")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("perturb", help="evolve an amplitude-perturbed solitary wave")
    _physics(p)
    p.add_argument("--A", type=float, required=True)
    p.add_argument("--cs", type=float, required=True)
    p.add_argument("--mode", choices=("both", "zeta_only", "u_only"), default="both")
    _run_opts(p, 400.0)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("collide", help="head-on or overtaking collision of two waves")
    _physics(p)
    p.add_argument("--mode", choices=("head-on", "overtake"), required=True)
    p.add_argument("--cs1", type=float, default=0.1)
    p.add_argument("--cs2", type=float, default=0.2)
    p.add_argument("--x1", type=float, default=None)
    p.add_argument("--x2", type=float, default=None)
    _run_opts(p, 400.0)
    p.set_defaults(func=cmd_collide)

    p = sub.add_parser("resolve", help="evolve Gaussian data A exp(-tau x^2)")
    _physics(p)
    p.add_argument("--A", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--tracks", type=int, default=1, help="number of crests to follow")
    _run_opts(p, 400.0)
    p.set_defaults(func=cmd_resolve)

    p = sub.add_parser("converge", help="spatial convergence table")
    _physics(p)
    p.add_argument("--Nlist", required=True, help="comma-separated grid sizes")
    p.add_argument("--Nref", type=int, required=True)
    p.add_argument("--L", type=float, default=64.0)
    p.add_argument("--dt", type=float, default=1e-2)
    p.add_argument("--tfinal", type=float, default=1.0)
    p.add_argument("--A", type=float, default=0.1)
    p.add_argument("--tau", type=float, default=0.1)
    p.add_argument("--refine-dt", action="store_true", dest="refine_dt")
    p.add_argument("--out")
    p.add_argument("--plotdata", action="store_true")
    p.set_defaults(func=cmd_converge)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with warnings.catch_warnings():
            if not args.verbose:
                warnings.simplefilter("ignore", UserWarning)
            args.func(args)
    except (ValueError, ConvergenceError, StepFailure, OSError) as exc:
        print(f"bfdwaves {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
