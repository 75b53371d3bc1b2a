"""Command-line entry point (``loclets <subcommand> ...``)."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bench
from .denoise import (
    DenoiseConfig,
    denoise_llet,
    denoise_llet_pf,
    snr_db,
)
from .graph import dense_eigendecomposition, laplacian
from .spectrum import hutchinson_interval_counts, regular_partition, select_partition


def _float_list(text: str) -> list:
    return [float(x) for x in text.split(",") if x.strip()]


def _int_list(text: str) -> list:
    return [int(x) for x in text.split(",") if x.strip()]


def _load(args):
    g = bench.resolve_graph(args.matrix, args.mode)
    return g, laplacian(g)


def _partition(L, args):
    if str(args.K) == "auto":
        sel = select_partition(L, N=args.N, n_H=args.n_H, seed=bench.mix_seed(args.seed, 0))
        return sel.partition
    P = regular_partition(L.lambda_max, int(args.K))
    counts = hutchinson_interval_counts(L, P, args.N, args.n_H, bench.mix_seed(args.seed, 0))
    return P.with_counts(counts, "estimated")


def _write_vector(path, x):
    text = "\n".join(repr(float(v)) for v in x) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _read_vector(path) -> np.ndarray:
    return np.loadtxt(path, dtype=float, ndmin=1, delimiter=",")


def cmd_load(args):
    g, L = _load(args)
    print(f"name={g.name or args.matrix}")
    print(f"n={L.n}")
    print(f"edges={g.n_edges}")
    print(f"lambda_max_bound={L.lambda_max!r}")
    print(f"connected={g.is_connected()}")


def cmd_gen_signal(args):
    _, L = _load(args)
    eig = dense_eigendecomposition(L)
    f = bench.generate_signal(eig, bench.SignalSpec.parse(args.signal, args.seed))
    if args.sigma:
        f = bench.add_noise(f, _float_list(args.sigma)[0], bench.mix_seed(args.seed, 1))
    _write_vector(args.out, f)


def cmd_estimate_noise(args):
    _, L = _load(args)
    eig = dense_eigendecomposition(L)
    K_grid = _int_list(args.K) if args.K != "auto" else [5, 10, 20, 30, 40, 50]
    rows = bench.run_noise_estimation(
        L, eig, bench.SignalSpec.parse(args.signal, args.seed), _float_list(args.sigma),
        K_grid, _int_list(args.r), args.reps, args.seed, args.N, args.n_H, out=args.out,
    )
    if not args.out:
        sys.stdout.write(bench.write_rows(None, bench.NOISE_HEADER, rows))


def cmd_denoise(args):
    _, L = _load(args)
    noisy = _read_vector(args.input)
    if noisy.size != L.n:
        raise ValueError(f"input has {noisy.size} values, graph has n={L.n}")
    P = _partition(L, args)
    sigma = _float_list(args.sigma)[0] if args.sigma else None
    cfg = DenoiseConfig(args.alpha, args.t1, args.t2, sigma, args.N)
    if args.method == "LLet":
        res = denoise_llet(L, noisy, P, cfg)
    else:
        res = denoise_llet_pf(L, noisy, P, cfg)
    print(f"method={res.method} K={P.K} support={list(map(int, res.support.selected))} "
          f"sigma={res.support.sigma!r}", file=sys.stderr)
    if args.clean:
        print(f"snr_in={float(snr_db(_read_vector(args.clean), noisy))!r} "
              f"snr_out={float(snr_db(_read_vector(args.clean), res.estimate))!r}", file=sys.stderr)
    _write_vector(args.out, res.estimate)


def cmd_bench(args):
    _, L = _load(args)
    eig = dense_eigendecomposition(L)
    signals = [bench.SignalSpec.parse(s, args.seed) for s in args.signals.split(",")]
    K = int(args.K) if args.K != "auto" else select_partition(
        L, N=args.N, n_H=args.n_H, seed=bench.mix_seed(args.seed, 0)).K_elbow
    rows = bench.run_denoise_benchmark(
        L, eig, signals, _float_list(args.sigma), K, args.reps, args.seed,
        tuple(args.methods.split(",")), args.alpha, args.N, args.n_H, out=args.out,
    )
    if not args.out:
        sys.stdout.write(bench.write_rows(None, bench.BENCH_HEADER, rows))


def cmd_entropy_scan(args):
    _, L = _load(args)
    eig = dense_eigendecomposition(L) if args.exact else None
    rows = bench.run_entropy_scan(L, _int_list(args.K_grid), args.N, args.n_H, args.seed,
                                  args.gain, eig, out=args.out)
    if not args.out:
        sys.stdout.write(bench.write_rows(None, bench.ENTROPY_HEADER, rows))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--matrix", required=True,
                        help="Matrix Market path, 'minnesota', or 'swissroll:n,k'")
    common.add_argument("--mode", default="abs", choices=["abs", "raw", "laplacian-direct"],
                        help="how Matrix Market values become weights")
    common.add_argument("--K", default="22", help="interval count, list, or 'auto'")
    common.add_argument("--N", type=int, default=200, help="Chebyshev degree")
    common.add_argument("--n-H", dest="n_H", type=int, default=50, help="Hutchinson probes")
    common.add_argument("--alpha", type=float, default=0.001)
    common.add_argument("--sigma", default="", help="comma-separated noise levels")
    common.add_argument("--reps", type=int, default=10)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="output CSV path (stdout if omitted)")

    p = argparse.ArgumentParser(prog="loclets", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("load", parents=[common], help="load a graph and print a summary")
    s.set_defaults(func=cmd_load)

    s = sub.add_parser("gen-signal", parents=[common], help="frequency-sparse test signal")
    s.add_argument("--signal", required=True, help="eigenvector range i-j (1-based, decreasing)")
    s.set_defaults(func=cmd_gen_signal)

    s = sub.add_parser("estimate-noise", parents=[common], help="noise-level estimation sweep")
    s.add_argument("--signal", required=True)
    s.add_argument("--r", default="1,2", help="trim levels for the mean estimator")
    s.set_defaults(func=cmd_estimate_noise)

    s = sub.add_parser("denoise", parents=[common], help="denoise one signal")
    s.add_argument("--input", required=True, help="noisy signal, one value per line")
    s.add_argument("--clean", default=None, help="optional clean signal for SNR reporting")
    s.add_argument("--method", default="LLet+PF", choices=["LLet", "LLet+PF"])
    s.add_argument("--t1", type=float, default=0.0)
    s.add_argument("--t2", type=float, default=0.0)
    s.set_defaults(func=cmd_denoise)

    s = sub.add_parser("bench", parents=[common], help="denoising benchmark table")
    s.add_argument("--signals", default="951-1000,501-550")
    s.add_argument("--methods", default="PF,LLet,LLet+PF")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("entropy-scan", parents=[common], help="entropy and MRE versus K")
    s.add_argument("--K-grid", dest="K_grid", default="5,10,15,20,25,30,35,40,45,50")
    s.add_argument("--gain", type=float, default=0.05, help="elbow relative-gain threshold")
    s.add_argument("--exact", action="store_true", help="exact MRE from the dense oracle")
    s.set_defaults(func=cmd_entropy_scan)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:  # report and fail with a nonzero status
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
