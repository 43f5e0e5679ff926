"""Command-line front end.

Subcommands: ``generate`` (synthesize an instance directory), ``reconstruct``
(run a solver on an instance and emit trace/summary/image files),
``probe-cone`` (sample tangential-cone ratios), ``bench-fft`` (time the fast
vs naive transform).  Exit codes: 0 success, 2 configuration/usage error,
3 numerical failure, 4 I/O or parse error.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import io
from .errors import ConfigurationError, FileFormatError, NumericalFailure
from .grid import ComplexImage, JointParameter, norm
from .operators import ScalarProductModel, cone_probe, rescale_problem
from .phantoms import synthesize
from .solvers import METHOD_LLK, METHOD_LSDK, SolverConfig, run_joint, run_linear
from .transform import DftPlan, NAIVE, is_power_of_two

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

BENCH_NAIVE_LIMIT = 4096
BENCH_REPS = 5


@dataclass(frozen=True)
class RunConfig:
    """A reconstruct job: instance location, solver settings, output layout."""

    instance_dir: str
    method: str = METHOD_LSDK
    tau: float = 2.1
    max_cycles: int = 10000
    joint: bool = False
    eps_stop: float = 0.0
    initial_image: str | None = None
    record_error: bool = True
    out_dir: str = "."
    write_trace: bool = True
    write_result_csv: bool = True
    write_pgm: bool = True


_RUN_KEYS = {
    "instance",
    "method",
    "tau",
    "max_cycles",
    "joint",
    "eps_stop",
    "initial_image",
    "record_error",
    "out",
    "formats",
}
_FORMAT_KEYS = {"trace", "result_csv", "pgm"}


def _load_run_config(path) -> RunConfig:
    payload = io.read_json(path)
    if not isinstance(payload, dict):
        raise FileFormatError(path, "run config must be a JSON object")
    unknown = set(payload) - _RUN_KEYS
    if unknown:
        raise FileFormatError(path, f"unknown run config fields: {sorted(unknown)}")
    if "instance" not in payload:
        raise FileFormatError(path, "run config must name an 'instance' directory")
    formats = payload.get("formats", {})
    if not isinstance(formats, dict) or set(formats) - _FORMAT_KEYS:
        raise FileFormatError(path, f"formats must be a JSON object with keys {sorted(_FORMAT_KEYS)}")
    return RunConfig(
        instance_dir=str(payload["instance"]),
        method=payload.get("method", METHOD_LSDK),
        tau=float(payload.get("tau", 2.1)),
        max_cycles=int(payload.get("max_cycles", 10000)),
        joint=bool(payload.get("joint", False)),
        eps_stop=float(payload.get("eps_stop", 0.0)),
        initial_image=payload.get("initial_image"),
        record_error=bool(payload.get("record_error", True)),
        out_dir=str(payload.get("out", ".")),
        write_trace=bool(formats.get("trace", True)),
        write_result_csv=bool(formats.get("result_csv", True)),
        write_pgm=bool(formats.get("pgm", True)),
    )


def cmd_generate(args) -> int:
    spec = io.read_instance_spec(args.config)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    instance = synthesize(spec)
    written = io.write_instance(instance, args.out)
    print(f"wrote {len(written)} files to {args.out}")
    return EXIT_OK


def _write_failure(out, cfg, exc):
    if exc.trace is not None and cfg.write_trace:
        io.write_trace_csv(out / "trace.csv", exc.trace)
    io.write_json(out / "summary.json", {"failure": str(exc), "termination_reason": "numerical-failure"})


def cmd_reconstruct(args) -> int:
    cfg = _load_run_config(args.config)
    if args.method is not None:
        cfg = replace(cfg, method=args.method)
    if args.tau is not None:
        cfg = replace(cfg, tau=args.tau)
    if args.max_cycles is not None:
        cfg = replace(cfg, max_cycles=args.max_cycles)
    if args.joint:
        cfg = replace(cfg, joint=True)
    if args.out is not None:
        cfg = replace(cfg, out_dir=args.out)

    instance = io.load_instance(cfg.instance_dir)
    initial = None
    if cfg.initial_image is not None:
        initial = ComplexImage(instance.spec.grid, io.read_complex_csv(cfg.initial_image))
    solver_cfg = SolverConfig(
        method=cfg.method,
        tau=cfg.tau,
        max_cycles=cfg.max_cycles,
        eps_stop=cfg.eps_stop,
        initial_image=initial,
    )
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    scaling = None
    try:
        if cfg.joint:
            problem = instance.joint_problem()
            result = run_joint(problem, solver_cfg)
            final_image = result.final.image
        else:
            problem = instance.linear_problem()
            if cfg.method == METHOD_LLK:
                problem, scaling = rescale_problem(problem)
            reference = instance.truth.image if cfg.record_error else None
            result = run_linear(problem, solver_cfg, reference=reference)
            final_image = result.final
    except NumericalFailure as exc:
        _write_failure(out, cfg, exc)
        raise

    final_residuals = [
        norm(op.apply(result.final) - problem.measurements.vectors[i])
        for i, op in enumerate(problem.operators)
    ]
    bounds = [cfg.tau * float(d) for d in problem.measurements.deltas]
    summary = {
        "instance": str(cfg.instance_dir),
        "method": cfg.method,
        "joint": cfg.joint,
        "tau": cfg.tau,
        "max_cycles": cfg.max_cycles,
        "seed": instance.spec.seed,
        "k_star": result.trace.k_star,
        "termination_reason": result.reason,
        "n_cycles": result.trace.n_cycles,
        "n_steps": result.trace.n_steps,
        "deltas": [float(d) for d in problem.measurements.deltas],
        "final_residuals": final_residuals,
        "tau_delta_bounds": bounds,
        "discrepancy_ok": all(r <= b for r, b in zip(final_residuals, bounds)),
        "metadata": result.metadata,
        "scaling": None if scaling is None else scaling.as_dict(),
    }
    io.write_json(out / "summary.json", summary)
    if cfg.write_trace:
        io.write_trace_csv(out / "trace.csv", result.trace)
    if cfg.write_result_csv:
        io.write_complex_csv(out / "result.csv", final_image.values)
        if cfg.joint:
            io.write_coefficients_csv(out / "result_coefficients.csv", result.final.coefficients)
    if cfg.write_pgm:
        io.write_pgm(out / "result_magnitude.pgm", final_image)
    print(
        f"{cfg.method}{' joint' if cfg.joint else ''}: {result.reason} after "
        f"{result.trace.n_cycles} cycles (k* = {result.trace.k_star})"
    )
    return EXIT_OK


_PROBE_KEYS = {"instance", "targets", "samples", "radius", "seed"}


def cmd_probe_cone(args) -> int:
    payload = io.read_json(args.config) if args.config else {}
    if not isinstance(payload, dict):
        raise FileFormatError(args.config, "probe config must be a JSON object")
    unknown = set(payload) - _PROBE_KEYS
    if unknown:
        raise FileFormatError(args.config, f"unknown probe config fields: {sorted(unknown)}")
    samples = int(payload.get("samples", 200))
    radius = float(payload.get("radius", 1.0))
    seed = args.seed if args.seed is not None else int(payload.get("seed", 0))
    instance_dir = payload.get("instance")
    targets = payload.get("targets")
    if targets is None:
        targets = ["scalar", "linear", "joint"] if instance_dir else ["scalar"]
    if samples < 1:
        raise ConfigurationError("samples must be >= 1")
    if any(t not in ("scalar", "linear", "joint") for t in targets):
        raise ConfigurationError(f"targets must be among scalar/linear/joint, got {targets}")
    if instance_dir is None and ("linear" in targets or "joint" in targets):
        raise ConfigurationError("linear/joint probes need an instance directory")

    report = {"samples": samples, "radius": radius, "seed": seed}
    if "scalar" in targets:
        rep = cone_probe(ScalarProductModel(), radius=radius, samples=samples, seed=seed)
        report["scalar"] = rep.as_dict(include_pairs=True)
    if instance_dir is not None and ("linear" in targets or "joint" in targets):
        instance = io.load_instance(instance_dir)
        report["instance"] = str(instance_dir)
        if "linear" in targets:
            rep = cone_probe(list(instance.operators), radius=radius, samples=samples, seed=seed)
            report["linear"] = rep.as_dict()
        if "joint" in targets:
            jprob = instance.joint_problem()
            center = JointParameter.zero(
                instance.spec.grid, instance.spec.r_num, instance.spec.b_num
            )
            rep = cone_probe(
                list(jprob.operators), center=center, radius=radius, samples=samples, seed=seed
            )
            report["joint"] = rep.as_dict()
    for name in ("scalar", "linear", "joint"):
        if name in report and report[name]["degenerate"]:
            print(f"warning: {name} probe sampling was degenerate", file=sys.stderr)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_json(out / "cone_report.json", report)
    for name in ("scalar", "linear", "joint"):
        if name in report:
            print(
                f"{name}: max ratio = {report[name]['max_ratio']}, "
                f"exceeds 1/2 = {report[name]['exceeds_half']}"
            )
    return EXIT_OK


def _median_seconds(fn, reps=BENCH_REPS) -> float:
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def cmd_bench_fft(args) -> int:
    sizes = list(args.sizes)
    bad = [s for s in sizes if not is_power_of_two(s)]
    if bad:
        raise ConfigurationError(f"sizes must be powers of two, got {bad}")
    rng = np.random.default_rng(args.seed)
    rows = []
    for size in sizes:
        x = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        fast = DftPlan(size, "fast")
        fast.forward_values(x)  # warm up tables and caches
        rows.append((size, "fast", _median_seconds(lambda: fast.forward_values(x)), ""))
        if size <= BENCH_NAIVE_LIMIT:
            naive = DftPlan(size, NAIVE)
            rows.append((size, "naive", _median_seconds(lambda: naive.forward_values(x)), ""))
        else:
            rows.append((size, "naive", None, f"skipped: naive transform disabled above {BENCH_NAIVE_LIMIT}"))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "bench.csv", "w", newline="") as fh:
        fh.write("p_num,algorithm,median_seconds,note\n")
        for size, algo, med, note in rows:
            fh.write(f"{size},{algo},{'' if med is None else repr(med)},{note}\n")
    for size, algo, med, note in rows:
        print(f"{size:>8} {algo:>6} {'-' if med is None else f'{med:.6f}s'} {note}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mrikacz",
        description="Loping Kaczmarz-type reconstruction for multi-receiver k-space data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthesize an instance directory from a spec JSON")
    g.add_argument("--config", required=True, help="instance spec JSON file")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--seed", type=int, default=None, help="override the spec seed")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("reconstruct", help="run a solver on a generated instance")
    r.add_argument("--config", required=True, help="run config JSON file")
    r.add_argument("--out", default=None, help="output directory (overrides config)")
    r.add_argument("--method", choices=[METHOD_LLK, METHOD_LSDK], default=None)
    r.add_argument("--joint", action="store_true", default=None, help="joint image+coefficients run")
    r.add_argument("--tau", type=float, default=None)
    r.add_argument("--max-cycles", type=int, default=None)
    r.set_defaults(func=cmd_reconstruct)

    c = sub.add_parser("probe-cone", help="sample tangential-cone ratios")
    c.add_argument("--config", default=None, help="probe config JSON file")
    c.add_argument("--out", default=".", help="output directory")
    c.add_argument("--seed", type=int, default=None)
    c.set_defaults(func=cmd_probe_cone)

    b = sub.add_parser("bench-fft", help="time the fast vs naive transform")
    b.add_argument("sizes", nargs="+", type=int, help="power-of-two transform lengths")
    b.add_argument("--out", default=".", help="output directory")
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=cmd_bench_fft)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigurationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
