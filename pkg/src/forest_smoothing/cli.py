"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 input error, 3 problem too large for
an exact method.  Data goes to stdout only when ``--output`` is absent;
diagnostics always go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .estimators import default_threads, smooth
from .graph import GraphFormatError, read_graph
from .oracle import GuardError, MAX_DENSE_NODES, exact_smooth, variance_functionals
from .pgm import PGMError, read_pgm
from .pipelines import denoise_experiment, scaling_benchmark, ssl_experiment
from .rng import derive_seed
from .sampler import QVector
from .synthetic import grid_graph

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_GUARD = 0, 1, 2, 3

# argument names that do not change results and are left out of recorded configs
_UNRECORDED = {"output", "report", "threads", "func", "csv"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text):
    vals = _float_list(text)
    if any(v != int(v) for v in vals):
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}")
    return [int(v) for v in vals]


def read_vector(path) -> np.ndarray:
    """One number per line; blank lines are not allowed."""
    values = []
    with open(path) as fh:
        for k, line in enumerate(fh, 1):
            try:
                values.append(float(line.strip()))
            except ValueError:
                raise ValueError(f"{path}: line {k}: expected a number, got {line.rstrip()!r}") from None
    arr = np.array(values)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{path}: non-finite value")
    return arr


def _format_rows(header, columns) -> str:
    lines = [",".join(header)]
    for row in zip(*(c.tolist() for c in columns)):
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _record(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _UNRECORDED}


def _dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _envelope(args, result) -> dict:
    return {"config": _record(args), "seed": args.seed, "version": __version__, "result": result}


def _load_graph(args):
    if args.graph:
        return read_graph(args.graph)
    try:
        r, c = (int(t) for t in args.grid.lower().split("x"))
    except ValueError:
        raise ValueError(f"--grid expects ROWSxCOLS, got {args.grid!r}") from None
    return grid_graph(r, c)


def _load_q(args, n):
    if args.q_file:
        q = read_vector(args.q_file)
        if q.shape[0] != n:
            raise ValueError(f"{args.q_file}: {q.shape[0]} values for {n} nodes")
        return QVector(q)
    return QVector.uniform(args.q, n)


def _load_signal(args, n):
    y = read_vector(args.signal)
    if y.shape[0] != n:
        raise ValueError(f"{args.signal}: {y.shape[0]} values for {n} nodes")
    return y


def cmd_smooth(args) -> int:
    g = _load_graph(args)
    q = _load_q(args, g.n)
    y = _load_signal(args, g.n)
    seed = derive_seed(args.seed, "sampling")
    res = smooth(g, q, y, args.n_forests, args.estimator, seed=seed, threads=args.threads)
    d = res.diagnostics
    print(
        f"forests={d['n_forests']} walk_steps={d['walk_steps']} "
        f"time={d['wall_time']:.4f}s total_variance={res.variance.sum():.6g}",
        file=sys.stderr,
    )
    _emit(_format_rows(["estimate", "variance"], [res.mean, res.variance]), args.output)
    if args.report:
        diag = {k: v for k, v in d.items() if k != "wall_time"}
        diag["total_variance"] = float(res.variance.sum())
        _emit(_dumps(_envelope(args, diag)), args.report)
    return EXIT_OK


def cmd_exact(args) -> int:
    g = _load_graph(args)
    if args.variances and g.n > MAX_DENSE_NODES:
        raise GuardError(f"--variances needs the dense oracle, limited to n <= {MAX_DENSE_NODES}")
    if g.n > args.max_nodes:
        raise GuardError(f"n={g.n} exceeds --max-nodes={args.max_nodes}; use 'smooth' instead")
    q = _load_q(args, g.n)
    y = _load_signal(args, g.n)
    x = exact_smooth(g, q, y)
    result = {}
    if args.variances:
        vt, vb = variance_functionals(g, q, y)
        result = {"v_tilde": vt, "v_bar": vb}
        print(f"v_tilde={vt!r} v_bar={vb!r}", file=sys.stderr)
    _emit(_format_rows(["exact"], [x]), args.output)
    if args.report:
        _emit(_dumps(_envelope(args, result)), args.report)
    return EXIT_OK


def _default_image():
    return resources.files("forest_smoothing").joinpath("data/shapes64.pgm")


def cmd_denoise(args) -> int:
    with resources.as_file(Path(args.image) if args.image else _default_image()) as p:
        img, maxval = read_pgm(p)
    gamma = args.gamma if args.gamma is not None else 0.1 * maxval
    rep = denoise_experiment(img, args.q_grid, gamma, args.n_forests, args.realizations,
                             args.seed, max_value=float(maxval), threads=args.threads)
    out = rep.to_dict()
    out["params"]["image"] = args.image or "bundled:shapes64.pgm"
    for q, e, t, b in zip(rep.q_grid, rep.mean_psnr("exact"), rep.mean_psnr("tilde"),
                          rep.mean_psnr("bar")):
        print(f"q={q:g} psnr exact={e:.3f} tilde={t:.3f} bar={b:.3f}", file=sys.stderr)
    _emit(_dumps(_envelope(args, out)), args.output)
    if args.csv:
        cols = [np.array(rep.q_grid)] + [rep.mean_psnr(w) for w in ("noisy", "exact", "tilde", "bar")]
        with open(args.csv, "w", newline="\n") as fh:
            fh.write(_format_rows(["q", "noisy", "exact", "tilde", "bar"], cols))
    return EXIT_OK


def cmd_ssl(args) -> int:
    rep = ssl_experiment(args.n, args.p_in, args.p_out, args.m, args.n_forests,
                         args.realizations, args.seed, sigma=args.sigma, mu=args.mu, k=args.k,
                         threads=args.threads)
    for j, m in enumerate(rep.m_grid):
        parts = " ".join(f"{k}={rep.mean_ari(k)[j]:.3f}" for k in rep.methods)
        print(f"m={m} ARI {parts}", file=sys.stderr)
    _emit(_dumps(_envelope(args, rep.to_dict())), args.output)
    return EXIT_OK


def cmd_bench(args) -> int:
    rows = scaling_benchmark([int(e) for e in args.edges], args.q, args.seed,
                             mean_degree=args.mean_degree, repeats=args.repeats)
    for r in rows:
        print(f"n={r.n} m={r.m} time={r.wall_time * 1e3:.2f}ms steps={r.walk_steps} "
              f"Ly={r.matvec_time * 1e3:.2f}ms", file=sys.stderr)
    result = {"experiment": "bench", "rows": [r.to_dict() for r in rows]}
    _emit(_dumps(_envelope(args, result)), args.output)
    return EXIT_OK


def cmd_replay(args) -> int:
    with open(args.report_file) as fh:
        config = json.load(fh)["config"]
    replayed = argparse.Namespace(**config)
    replayed.output = args.output
    replayed.report = None
    replayed.csv = None
    replayed.threads = args.threads
    return _COMMANDS[config["command"]](replayed)


_COMMANDS = {
    "smooth": cmd_smooth,
    "exact": cmd_exact,
    "denoise": cmd_denoise,
    "ssl": cmd_ssl,
    "bench": cmd_bench,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="forest-smooth", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, seed=True):
        sp.add_argument("--output", "-o", help="output file (default: stdout)")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker cap (default: $FOREST_SMOOTH_THREADS or CPU count)")
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    def graph_and_signal(sp):
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--graph", help="graph text file ('n m' header, then 'i j w' lines)")
        src.add_argument("--grid", help="generated grid graph ROWSxCOLS")
        sp.add_argument("--signal", required=True, help="one value per line")
        qs = sp.add_mutually_exclusive_group()
        qs.add_argument("--q", type=float, default=1.0)
        qs.add_argument("--q-file", help="per-node q, one value per line")
        sp.add_argument("--report", help="also write a JSON run record here")

    sp = sub.add_parser("smooth", help="Monte-Carlo smoothing of a signal")
    graph_and_signal(sp)
    sp.add_argument("--n-forests", type=int, default=100)
    sp.add_argument("--estimator", choices=("bar", "tilde"), default="bar")
    common(sp)

    sp = sub.add_parser("exact", help="exact smoothing by linear solve")
    graph_and_signal(sp)
    sp.add_argument("--variances", action="store_true",
                    help="also report the two estimators' total variances (dense)")
    sp.add_argument("--max-nodes", type=int, default=10**7)
    common(sp)

    sp = sub.add_parser("denoise", help="image denoising experiment on a grid graph")
    sp.add_argument("--image", help="PGM file (default: bundled 64x64 test image)")
    sp.add_argument("--q-grid", type=_float_list, default=[0.125, 0.25, 0.5, 1, 2, 4, 8])
    sp.add_argument("--gamma", type=float, default=None, help="noise std (default 0.1*maxval)")
    sp.add_argument("--n-forests", type=int, default=20)
    sp.add_argument("--realizations", type=int, default=100)
    sp.add_argument("--csv", help="also write mean PSNR per q as CSV")
    common(sp)

    sp = sub.add_parser("ssl", help="semi-supervised classification on block models")
    sp.add_argument("--n", type=int, default=3000)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--p-in", type=float, default=0.02)
    sp.add_argument("--p-out", type=float, default=0.003)
    sp.add_argument("--m", type=_int_list, default=[1, 2, 5, 10, 50])
    sp.add_argument("--n-forests", type=int, default=500)
    sp.add_argument("--sigma", type=float, default=0.0, choices=(0.0, 0.5, 1.0))
    sp.add_argument("--mu", type=float, default=1.0)
    sp.add_argument("--realizations", type=int, default=10)
    common(sp)

    sp = sub.add_parser("bench", help="time one forest estimate on random graphs")
    sp.add_argument("--edges", type=_float_list, default=[1e5, 1e6, 1e7])
    sp.add_argument("--q", type=float, default=1.0)
    sp.add_argument("--mean-degree", type=float, default=20.0)
    sp.add_argument("--repeats", type=int, default=3)
    common(sp)

    sp = sub.add_parser("replay", help="re-run the config recorded in a JSON report")
    sp.add_argument("report_file")
    common(sp, seed=False)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads is None:
        args.threads = default_threads()
    func = cmd_replay if args.command == "replay" else _COMMANDS[args.command]
    try:
        return func(args)
    except GuardError as exc:
        print(f"forest-smooth: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (OSError, ValueError, GraphFormatError, PGMError, KeyError) as exc:
        print(f"forest-smooth: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
