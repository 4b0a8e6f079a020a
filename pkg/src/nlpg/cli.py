"""Command-line entry point: configured runs plus the benchmark presets."""

import argparse
import sys

import numpy as np

from . import experiments
from .mesh import write_nodes_csv


def _add_config_flags(parser):
    # every config-file key is also a flag of the same name; flags win
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--problem")
    parser.add_argument("--eps")
    parser.add_argument("--delta")
    parser.add_argument("--coupling")
    parser.add_argument("--p")
    parser.add_argument("--dp")
    parser.add_argument("--norm")
    parser.add_argument("--refinement")
    parser.add_argument("--steps")
    parser.add_argument("--theta")
    parser.add_argument("--n_over")
    parser.add_argument("--output")
    parser.add_argument("--mesh_out", help="write the final mesh nodes as CSV")
    parser.add_argument("--dump_matrices", metavar="PREFIX",
                        help="debug: dump final G/B/F as dense row-major text")


def build_parser():
    parser = argparse.ArgumentParser(prog="nlpg",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute one configured study")
    _add_config_flags(run)

    for name, doc in (("table1", "smooth solution, uniform h, four horizons"),
                      ("table3", "smooth solution, uniform p, four horizons"),
                      ("table7", "local-limit couplings, uniform h")):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--norm", default="app", choices=experiments.NORMS)
        p.add_argument("--steps", type=int, default=9 if name != "table3" else 4)
        p.add_argument("--out", default=f"{name}.csv")
        if name == "table3":
            p.add_argument("--dp", type=int, default=2)

    sharp = sub.add_parser("sharp-demo", help="test-norm stability comparison")
    sharp.add_argument("--delta", type=float, default=1e-5)
    sharp.add_argument("--eps", type=float, default=0.01)
    sharp.add_argument("--dp", type=int, default=6)
    sharp.add_argument("--out", default="sharp_demo.csv")
    return parser


def _run_command(args):
    cfg = (experiments.config_from_file(args.config) if args.config
           else experiments.RunConfig())
    overrides = {key: getattr(args, key) for key in
                 ("problem", "eps", "delta", "coupling", "p", "dp", "norm",
                  "refinement", "steps", "theta", "n_over", "output")
                 if getattr(args, key) is not None}
    cfg = experiments.apply_overrides(cfg, overrides)
    cfg.validate()
    records = experiments.run(cfg)
    text = experiments.records_to_csv(records, cfg.output or None)
    if cfg.output:
        print(f"wrote {cfg.output} ({len(records)} steps)")
    else:
        sys.stdout.write(text)

    if args.mesh_out or args.dump_matrices:
        from .driver import solve_problem
        from .mesh import initial_mesh, refine_uniform
        from .problems import make_problem
        # rebuild the final state of a uniform run for the requested dumps
        mesh = initial_mesh(cfg.delta)
        if cfg.refinement == "uniform-h" and cfg.coupling == "fixed":
            for _ in range(max(1, cfg.steps) - 1):
                mesh = refine_uniform(mesh)
        if args.mesh_out:
            write_nodes_csv(mesh, args.mesh_out)
            print(f"wrote {args.mesh_out}")
        if args.dump_matrices:
            problem = make_problem(cfg.problem, cfg.eps, mesh.delta)
            result = solve_problem(mesh, problem, eps=cfg.eps, p=cfg.p, dp=cfg.dp,
                                   norms=(cfg.norm,), n_over=cfg.n_over)[cfg.norm]
            for name, arr in (("G", result.system.G), ("B", result.system.B),
                              ("F", result.system.F)):
                path = f"{args.dump_matrices}{name}.txt"
                np.savetxt(path, np.atleast_2d(arr))
                print(f"wrote {path}")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run_command(args)
        if args.command == "table1":
            experiments.run_table1(norm=args.norm, steps=args.steps, out=args.out)
        elif args.command == "table3":
            experiments.run_table3(norm=args.norm, dp=args.dp, steps=args.steps,
                                   out=args.out)
        elif args.command == "table7":
            experiments.run_table7(norm=args.norm, steps=args.steps, out=args.out)
        elif args.command == "sharp-demo":
            _, overshoot = experiments.run_sharp_demo(delta=args.delta, eps=args.eps,
                                                      dp=args.dp, out=args.out)
            for norm in ("app", "eng"):
                print(f"overshoot[{norm}] = {overshoot[norm]:.6f}")
        print(f"wrote {args.out}")
        return 0
    except Exception as exc:  # CLI contract: nonzero exit with one diagnostic line
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
