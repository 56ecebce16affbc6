"""Command-line harness.

Verbs:
  generate       write a synthetic dataset CSV
  pack           package a CSV into fixed mini-batch binary files
  run            run an experiment described by a JSON spec file
  bench-io       shorthand for the packaged-vs-shuffled disk benchmark
  report         re-render charts and print a summary from report CSVs
  bench-kernels  compare the compiled and pure-Python update kernels

Exit codes: 0 success, 2 spec error, 3 divergence threshold exceeded,
4 I/O failure.
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_SPEC = 2
EXIT_DIVERGENCE = 3
EXIT_IO = 4


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    from .experiments import DivergenceThresholdExceeded, SpecError

    try:
        return args.func(args)
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except DivergenceThresholdExceeded as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mgdlab",
                                     description="mini-batch gradient descent laboratory")
    sub = parser.add_subparsers(dest="verb", required=True)

    g = sub.add_parser("generate", help="write a synthetic dataset CSV")
    g.add_argument("--model", default="linear", choices=["linear", "logistic", "poisson"])
    g.add_argument("--N", type=int, default=5000)
    g.add_argument("--p", type=int, default=50)
    g.add_argument("--theta-value", type=float, default=None,
                   help="constant true coefficient (model default when omitted)")
    g.add_argument("--noise-sd", type=float, default=1.0)
    g.add_argument("--rho", type=float, default=0.5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    p = sub.add_parser("pack", help="package a CSV into fixed mini-batch files")
    p.add_argument("--csv", required=True)
    p.add_argument("--batches", type=int, required=True, help="number of mini-batches M")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pack)

    r = sub.add_parser("run", help="run an experiment from a JSON spec file")
    r.add_argument("--spec", required=True)
    r.add_argument("--out", default=None, help="override the spec outputs directory")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--workers", type=int, default=None)
    r.add_argument("--scale", choices=["desk", "full"], default=None)
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench-io", help="packaged vs shuffled disk reads")
    b.add_argument("--out", required=True)
    b.add_argument("--kappas", default=None, help="comma list of N/10^4 values")
    b.add_argument("--n", type=int, default=None)
    b.add_argument("--p", type=int, default=None)
    b.add_argument("--B", type=int, default=None)
    b.add_argument("--seed", type=int, default=None)
    b.set_defaults(func=cmd_bench_io)

    s = sub.add_parser("report", help="summarize an output directory")
    s.add_argument("--dir", required=True)
    s.set_defaults(func=cmd_report)

    k = sub.add_parser("bench-kernels", help="compare compiled and python kernels")
    k.add_argument("--p", type=int, default=50)
    k.add_argument("--M", type=int, default=50)
    k.add_argument("--n", type=int, default=100)
    k.add_argument("--epochs", type=int, default=200)
    k.add_argument("--out", default=None, help="optional CSV path for the table")
    k.set_defaults(func=cmd_bench_kernels)
    return parser


def cmd_generate(args) -> int:
    from .datagen import DataGenSpec, make_dataset, save_csv

    kw = {}
    if args.theta_value is not None:
        kw["theta_true"] = np.full(args.p, args.theta_value)
    spec = DataGenSpec(N=args.N, p=args.p, model=args.model, noise_sd=args.noise_sd,
                       rho=args.rho, seed=args.seed, **kw)
    save_csv(make_dataset(spec), args.out)
    print(f"wrote {args.out} ({args.N} rows, {args.p} predictors, model {args.model})")
    return EXIT_OK


def cmd_pack(args) -> int:
    from .batchstore import pack
    from .partitions import make_fixed

    n_rows = sum(1 for _ in open(args.csv, "rb")) - 1
    plan = make_fixed(n_rows, args.batches, args.seed)
    manifest = pack(args.csv, plan, args.out)
    total = sum(f[2] for f in manifest.files)
    print(f"packed {manifest.N} rows into {manifest.M} files "
          f"({total} bytes) under {args.out}")
    return EXIT_OK


def cmd_run(args) -> int:
    from . import experiments

    spec = experiments.load_spec(args.spec)
    updates = {}
    if args.out is not None:
        updates["outputs"] = args.out
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.workers is not None:
        updates["workers"] = args.workers
    if args.scale is not None:
        updates["scale"] = args.scale
    if updates:
        spec = experiments.ExperimentSpec(**{**spec.__dict__, **updates})
    report = experiments.run_experiment(spec)
    print(f"{spec.experiment} '{spec.name}': {report.total_runs} runs, "
          f"{report.divergent} divergent, {report.aborted} aborted")
    for path in report.files:
        print(f"  {path}")
    return EXIT_OK


def cmd_bench_io(args) -> int:
    from . import experiments

    overrides = {}
    if args.kappas:
        overrides["kappas"] = [int(tok) for tok in args.kappas.split(",")]
    for key in ("n", "p", "B"):
        val = getattr(args, key)
        if val is not None:
            overrides[key] = val
    spec = experiments.ExperimentSpec(name="bench-io", experiment="io_benchmark",
                                      outputs=args.out,
                                      seed=args.seed if args.seed is not None else 20240601,
                                      overrides=overrides)
    report = experiments.run_experiment(spec)
    for kappa, pm, sm in zip(report.settings["kappas"], report.samples["packaged_means"],
                             report.samples["shuffled_means"]):
        print(f"kappa={kappa}: packaged {pm:.4f}s  shuffled {sm:.4f}s")
    print(f"engine results identical: {report.samples['equal_results']}")
    return EXIT_OK


def cmd_report(args) -> int:
    directory = Path(args.dir)
    manifest = directory / "run_manifest.json"
    if manifest.exists():
        doc = json.loads(manifest.read_text(encoding="utf-8"))
        print(f"experiment {doc.get('experiment')} '{doc.get('name')}' "
              f"(scale {doc.get('scale')}, seed {doc.get('seed')}, "
              f"backend {doc.get('kernel_backend')})")
    found = False
    for csv_path in sorted(directory.glob("*.csv")):
        found = True
        with open(csv_path, "r", encoding="ascii") as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
        print(f"{csv_path.name}: {max(len(lines) - 1, 0)} rows")
        for ln in lines[:6]:
            print("   " + ln.rstrip())
    if not found:
        print("no report CSVs found", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def cmd_bench_kernels(args) -> int:
    from . import _kernels_py
    from .kernels import backend_name, glm_epoch, ls_epoch

    rng = np.random.default_rng(0)
    p, M, n, T = args.p, args.M, args.n, args.epochs
    sxx = np.ascontiguousarray(rng.standard_normal((M, p, p)))
    sxx = np.ascontiguousarray(np.einsum("mij,mkj->mik", sxx, sxx) / p + np.eye(p))
    sxy = np.ascontiguousarray(rng.standard_normal((M, p)))
    X = np.ascontiguousarray(rng.standard_normal((M * n, p)))
    Y = (rng.random(M * n) < 0.5).astype(np.float64)
    idx = np.arange(M * n, dtype=np.int64).reshape(M, n)
    alpha = 1e-3

    backends = [("python", _kernels_py.ls_epoch, _kernels_py.glm_epoch)]
    if backend_name() == "compiled":
        backends.insert(0, ("compiled", ls_epoch, glm_epoch))

    rows = []
    for name, ls_fn, glm_fn in backends:
        theta = np.zeros(p)
        tic = time.perf_counter()
        for _ in range(T):
            ls_fn(sxx, sxy, theta, alpha, None)
        ls_s = time.perf_counter() - tic
        theta = np.zeros(p)
        tic = time.perf_counter()
        for _ in range(T):
            glm_fn(X, Y, idx, theta, alpha, 1, None)
        glm_s = time.perf_counter() - tic
        rows.append((name, ls_s, glm_s))
        print(f"{name:9s} least-squares {ls_s:8.4f}s   glm {glm_s:8.4f}s "
              f"({T} epochs, M={M}, n={n}, p={p})")
    if len(rows) == 2:
        print(f"speedup: least-squares x{rows[1][1] / rows[0][1]:.1f}, "
              f"glm x{rows[1][2] / rows[0][2]:.1f}")
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write("backend,ls_seconds,glm_seconds\n")
            for name, a, b in rows:
                fh.write(f"{name},{a!r},{b!r}\n")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
