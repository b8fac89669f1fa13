"""Command-line front end.

Every pipeline is a subcommand emitting a deterministic JSON report on
stdout (or --out).  Reports reuse the state-document grammar, so outputs
can feed back in as inputs.  A run manifest (--manifest) records the
command, input digests, and the fully resolved configuration; the
``replay`` subcommand re-executes a manifest and reproduces the report
byte for byte.

Exit codes: 0 success, 2 input error, 3 convergence failure,
4 incomplete basis.
"""

import argparse
import hashlib
import sys
import time

import numpy as np

from . import __version__, locc, measure_props, quasiprob, stateio, witness
from .backend import BACKEND_NAME
from .errors import (
    ConvergenceError,
    IncompleteBasisError,
    InputFormatError,
    SchmidtkitError,
)
from .hilbert import (
    BipartiteDims,
    BipartitePureState,
    DensityOperator,
    Observable,
    phi_r,
    random_density,
    random_pure,
    random_separable_density,
    schmidt_decompose,
)
from .se_solver import SolverConfig, f_max, oracle_f12_r, solve_rse_detailed

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONVERGENCE = 3
EXIT_INCOMPLETE = 4


def _parse_dims(text):
    for sep in ("x", ","):
        if sep in text:
            a, b = text.split(sep, 1)
            return BipartiteDims(int(a), int(b))
    raise InputFormatError(f"cannot parse dims {text!r} (expected e.g. 3x3)")


def _add_solver_flags(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=SolverConfig.restarts)
    p.add_argument("--max-iter", type=int, default=SolverConfig.max_iter)
    p.add_argument("--tol-lambda", type=float, default=SolverConfig.tol_lambda)
    p.add_argument("--tol-residual", type=float, default=SolverConfig.tol_residual)
    p.add_argument("--out", default=None, help="write the report to a file instead of stdout")
    p.add_argument("--manifest", default=None, help="also record a replayable run manifest")


def _config_from(args):
    return SolverConfig(
        restarts=args.restarts,
        max_iter=args.max_iter,
        tol_lambda=args.tol_lambda,
        tol_residual=args.tol_residual,
        seed=args.seed,
    )


def _config_doc(cfg):
    return {
        "restarts": cfg.restarts,
        "max_iter": cfg.max_iter,
        "tol_lambda": cfg.tol_lambda,
        "tol_residual": cfg.tol_residual,
        "dedupe_overlap": cfg.dedupe_overlap,
        "gram_rank_cutoff": cfg.gram_rank_cutoff,
        "seed": cfg.seed,
    }


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _run_section(command, inputs, cfg, extra):
    return {
        "command": command,
        "inputs": {name: path for name, path in inputs.items()},
        "config": _config_doc(cfg),
        "args": extra,
        "version": __version__,
    }


def _emit(args, report, inputs, cfg, extra, wall_time):
    text = stateio.dump(report, args.out)
    if args.out is None:
        sys.stdout.write(text)
    if args.manifest:
        manifest = {
            "manifest": "run",
            "command": report["run"]["command"],
            "inputs": {
                name: {"path": path, "sha256": _sha256(path)}
                for name, path in inputs.items()
            },
            "config": _config_doc(cfg),
            "args": extra,
            "seed": cfg.seed,
            "version": __version__,
            "wall_time_s": wall_time,
        }
        stateio.dump(manifest, args.manifest)
    return EXIT_OK


def _solution_doc(sol):
    return {
        "lambda": sol.lam,
        "residual": sol.residual,
        "iterations": sol.n_iter,
        "origin": sol.origin,
        "ansatz_rank": sol.ansatz.r,
        "state": stateio.state_document(sol.state),
    }


def _restart_doc(report):
    return {
        "restarts_run": report.restarts_run,
        "restarts_converged": report.restarts_converged,
        "restarts_collapsed": report.restarts_collapsed,
        "polish_attempted": report.polish_attempted,
        "polish_converged": report.polish_converged,
        "duplicates_merged": report.duplicates_merged,
        "distinct_solutions": len(report.solutions),
    }


def cmd_schmidt(args):
    t0 = time.perf_counter()
    state = stateio.load_state(args.state)
    if not isinstance(state, BipartitePureState):
        raise InputFormatError("schmidt expects a pure-state file")
    cfg = _config_from(args)
    dec = schmidt_decompose(state)
    report = {
        "report": "schmidt",
        "run": _run_section("schmidt", {"state": args.state}, cfg, {}),
        "rank": dec.rank,
        "coefficients": [float(c) for c in dec.coefficients],
        "left_basis": [stateio.vector_to_data(v) for v in dec.left_basis],
        "right_basis": [stateio.vector_to_data(v) for v in dec.right_basis],
    }
    print(f"rank {dec.rank}, coefficients {list(np.round(dec.coefficients, 8))}",
          file=sys.stderr)
    return _emit(args, report, {"state": args.state}, cfg, {}, time.perf_counter() - t0)


def cmd_f12(args):
    t0 = time.perf_counter()
    obs = stateio.load_state(args.observable)
    if not isinstance(obs, Observable):
        if isinstance(obs, DensityOperator):
            obs = Observable(obs.dims, obs.matrix)
        else:
            raise InputFormatError("f12 expects an observable (or density) file")
    cfg = _config_from(args)
    extra = {"rank": args.rank, "oracle": bool(args.oracle),
             "oracle_samples": args.oracle_samples}
    solve = solve_rse_detailed(obs, args.rank, cfg)
    report = {
        "report": "f12",
        "run": _run_section("f12", {"observable": args.observable}, cfg, extra),
        "rank": args.rank,
        "f12": solve.f12,
        "f_max": f_max(obs),
        "restart_statistics": _restart_doc(solve),
        "solutions": [_solution_doc(s) for s in solve.solutions[:12]],
    }
    if args.oracle:
        report["oracle_f12"] = oracle_f12_r(
            obs, args.rank, samples=args.oracle_samples, seed=cfg.seed
        )
    print(f"f12(rank {args.rank}) = {solve.f12:.12f}", file=sys.stderr)
    return _emit(args, report, {"observable": args.observable}, cfg, extra,
                 time.perf_counter() - t0)


def cmd_witness(args):
    t0 = time.perf_counter()
    rho = stateio.load_state(args.state)
    if isinstance(rho, BipartitePureState):
        rho = rho.projector()
    if not isinstance(rho, DensityOperator):
        raise InputFormatError("witness expects a state file (pure or density)")
    obs = stateio.load_state(args.observable)
    if not isinstance(obs, Observable):
        raise InputFormatError("witness expects an observable file")
    cfg = _config_from(args)
    extra = {"rank": args.rank}
    cert = witness.certify_schmidt_number(rho, obs, args.rank, cfg)
    report = {
        "report": "witness",
        "run": _run_section(
            "witness", {"state": args.state, "observable": args.observable}, cfg, extra
        ),
        "rank": cert.r,
        "f12": cert.f12_r_value,
        "oracle_f12": cert.oracle_value,
        "expectation": cert.expectation_value,
        "margin": cert.margin,
        "threshold": cert.threshold,
        "verdict": cert.verdict,
    }
    print(f"{cert.verdict} (margin {cert.margin:+.6f})", file=sys.stderr)
    return _emit(args, report,
                 {"state": args.state, "observable": args.observable},
                 cfg, extra, time.perf_counter() - t0)


def _quasiprob_doc(qp):
    return {
        "level": qp.r,
        "complete": qp.complete,
        "method": qp.method,
        "reconstruction_residual": qp.reconstruction_residual,
        "min_weight": qp.min_weight,
        "weights": [w for _, w in qp.components],
        "lambdas": [float(v) for v in qp.lambdas],
        "components": [stateio.state_document(s) for s, _ in qp.components],
        "gram": [[float(g) for g in row] for row in qp.gram],
        "statistics": qp.stats,
    }


def cmd_quasiprob(args):
    t0 = time.perf_counter()
    rho = stateio.load_state(args.state)
    if isinstance(rho, BipartitePureState):
        rho = rho.projector()
    if not isinstance(rho, DensityOperator):
        raise InputFormatError("quasiprob expects a state file (pure or density)")
    cfg = _config_from(args)
    if args.auto:
        extra = {"auto": True}
        est = quasiprob.estimate_schmidt_number(rho, cfg)
        report = {
            "report": "quasiprob_auto",
            "run": _run_section("quasiprob", {"state": args.state}, cfg, extra),
            "schmidt_number": est.value,
            "interval": [est.lower, est.upper],
            "exact": est.exact,
            "flagged_levels": list(est.flagged_levels),
            "levels": {str(r): _quasiprob_doc(q) for r, q in est.reports.items()},
        }
        code = EXIT_OK if est.exact else EXIT_INCOMPLETE
        print(f"schmidt number: {est.value if est.exact else est.lower}"
              f"{'' if est.exact else f'..{est.upper} (incomplete)'}", file=sys.stderr)
    else:
        if args.rank is None:
            raise InputFormatError("quasiprob needs --rank R or --auto")
        extra = {"rank": args.rank}
        qp = quasiprob.build_quasiprob(rho, args.rank, cfg)
        report = {
            "report": "quasiprob",
            "run": _run_section("quasiprob", {"state": args.state}, cfg, extra),
            **_quasiprob_doc(qp),
        }
        code = EXIT_OK if qp.complete else EXIT_INCOMPLETE
        print(f"level {qp.r}: min weight {qp.min_weight:+.6f}, "
              f"residual {qp.reconstruction_residual:.2e}", file=sys.stderr)
    _emit(args, report, {"state": args.state}, cfg, extra, time.perf_counter() - t0)
    return code


def cmd_ept(args):
    t0 = time.perf_counter()
    rho = stateio.load_state(args.state)
    if isinstance(rho, BipartitePureState):
        rho = rho.projector()
    if not isinstance(rho, DensityOperator):
        raise InputFormatError("ept expects a state file (pure or density)")
    cfg = _config_from(args)
    extra = {"n_li": args.n_li, "n_lp": args.n_lp}
    search = witness.EPTSearchConfig(n_li=args.n_li, n_lp=args.n_lp, seed=cfg.seed)
    bound = witness.e_pt_lower_bound(rho, search)
    npt, min_eig, _ = witness.is_npt(rho)
    report = {
        "report": "ept",
        "run": _run_section("ept", {"state": args.state}, cfg, extra),
        "e_pt_lower_bound": bound,
        "is_npt": npt,
        "min_pt_eigenvalue": min_eig,
    }
    print(f"E_PT >= {bound:.6f} (NPT: {npt})", file=sys.stderr)
    return _emit(args, report, {"state": args.state}, cfg, extra,
                 time.perf_counter() - t0)


def cmd_em(args):
    t0 = time.perf_counter()
    rho = stateio.load_state(args.state)
    if isinstance(rho, BipartitePureState):
        rho = rho.projector()
    if not isinstance(rho, DensityOperator):
        raise InputFormatError("em expects a state file (pure or density)")
    obs = stateio.load_state(args.observable)
    if not isinstance(obs, Observable):
        raise InputFormatError("em expects an observable file")
    cfg = _config_from(args)
    extra = {"class": args.op_class, "n_ops": args.n_ops}
    sampler = witness.default_operation_sampler(
        args.op_class, rho.dims, args.n_ops, cfg.seed
    )
    result = witness.operational_measure(rho, obs, sampler, cfg)
    report = {
        "report": "em",
        "run": _run_section(
            "em", {"state": args.state, "observable": args.observable}, cfg, extra
        ),
        "value": result.value,
        "raw_supremum": result.raw_supremum,
        "f_M": result.f_M,
        "f12_M": result.f12_M,
        "degenerate": result.degenerate,
        "samples_used": result.samples_used,
        "best_operation": (
            locc.operation_document(result.best_operation)
            if result.best_operation is not None
            else None
        ),
    }
    print(f"E_M = {result.value:.6f}", file=sys.stderr)
    return _emit(args, report,
                 {"state": args.state, "observable": args.observable},
                 cfg, extra, time.perf_counter() - t0)


def _report_doc(rep):
    return {
        "verdict": rep.verdict,
        "checks_run": rep.checks_run,
        "skipped": rep.skipped,
        "max_deficit": rep.max_deficit,
        "slack": rep.slack,
        "violations": rep.violations[:8],
        "violation_count": len(rep.violations),
    }


def cmd_props(args):
    t0 = time.perf_counter()
    cfg = _config_from(args)
    dims = _parse_dims(args.dims)
    extra = {"measure": args.measure, "class": args.op_class, "n": args.n,
             "dims": [dims.d1, dims.d2]}
    if args.measure == "schmidt":
        m = measure_props.schmidt_number_measure(cfg)
    elif args.measure == "purity_broken":
        m = measure_props.broken_purity_measure()
    else:
        raise InputFormatError(f"unknown measure {args.measure!r}")
    state_sampler = measure_props.default_state_sampler(dims)
    def op_sampler(seed):
        return locc.sample_operation(args.op_class, dims, seed)
    axioms = measure_props.check_measure_axioms(m, state_sampler, op_sampler, args.n, cfg.seed)
    report = {
        "report": "props",
        "run": _run_section("props", {}, cfg, extra),
        "measure": args.measure,
        "class": args.op_class,
        "axioms": _report_doc(axioms),
    }
    exit_code = EXIT_OK
    print(f"{args.measure} under {args.op_class}: {axioms.verdict} "
          f"({axioms.checks_run} checks, {len(axioms.violations)} violations)",
          file=sys.stderr)
    _emit(args, report, {}, cfg, extra, time.perf_counter() - t0)
    return exit_code


def cmd_gen(args):
    t0 = time.perf_counter()
    cfg = _config_from(args)
    dims = _parse_dims(args.dims)
    extra = {"kind": args.kind, "dims": [dims.d1, dims.d2], "rank": args.rank,
             "class": args.op_class, "mix_count": args.mix_count}
    if args.kind == "pure":
        doc = stateio.state_document(random_pure(dims, args.seed))
    elif args.kind == "density":
        doc = stateio.state_document(random_density(dims, args.seed, args.mix_count))
    elif args.kind == "separable":
        doc = stateio.state_document(random_separable_density(dims, args.seed, args.mix_count))
    elif args.kind == "phi":
        doc = stateio.state_document(phi_r(args.rank, dims))
    elif args.kind == "observable":
        rng = np.random.default_rng(args.seed)
        m = rng.standard_normal((dims.total, dims.total)) + 1j * rng.standard_normal(
            (dims.total, dims.total)
        )
        m = (m + m.conj().T) / 2
        m /= np.abs(np.linalg.eigvalsh(m)).max()
        doc = stateio.state_document(Observable(dims, m))
    elif args.kind == "operation":
        doc = locc.operation_document(locc.sample_operation(args.op_class, dims, args.seed))
    else:
        raise InputFormatError(f"unknown kind {args.kind!r}")
    text = stateio.dump(doc, args.out)
    if args.out is None:
        sys.stdout.write(text)
    if args.manifest:
        stateio.dump(
            {
                "manifest": "run",
                "command": "gen",
                "inputs": {},
                "config": _config_doc(cfg),
                "args": extra,
                "seed": cfg.seed,
                "version": __version__,
                "wall_time_s": time.perf_counter() - t0,
            },
            args.manifest,
        )
    return EXIT_OK


def cmd_replay(args):
    manifest = stateio.load_document(args.manifest_file)
    if not isinstance(manifest, dict) or manifest.get("manifest") != "run":
        raise InputFormatError("not a run manifest")
    command = manifest["command"]
    argv = [command]
    for name, entry in manifest.get("inputs", {}).items():
        path = entry["path"]
        digest = _sha256(path)
        if digest != entry["sha256"]:
            raise InputFormatError(
                f"input {name} at {path} changed since the recorded run "
                f"(sha256 {digest} != {entry['sha256']})"
            )
        argv.append(path)
    cfg = manifest.get("config", {})
    argv += ["--seed", str(manifest.get("seed", 0))]
    for flag, key in (
        ("--restarts", "restarts"),
        ("--max-iter", "max_iter"),
        ("--tol-lambda", "tol_lambda"),
        ("--tol-residual", "tol_residual"),
    ):
        if key in cfg:
            argv += [flag, str(cfg[key])]
    extra = manifest.get("args", {})
    flag_map = {
        "rank": "--rank",
        "oracle_samples": "--oracle-samples",
        "n_li": "--n-li",
        "n_lp": "--n-lp",
        "class": "--class",
        "n_ops": "--n-ops",
        "n": "--n",
        "measure": "--measure",
        "kind": "--kind",
        "mix_count": "--mix-count",
    }
    for key, value in extra.items():
        if value is None:
            continue
        if key == "oracle":
            if value:
                argv.append("--oracle")
        elif key == "auto":
            if value:
                argv.append("--auto")
        elif key == "dims":
            argv += ["--dims", f"{value[0]}x{value[1]}"]
        elif key in flag_map:
            argv += [flag_map[key], str(value)]
    if args.out:
        argv += ["--out", args.out]
    return main(argv)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="schmidtkit",
        description="Schmidt-number witnesses, quasi-probabilities, and "
        "entanglement measure checks",
    )
    parser.add_argument("--version", action="version",
                        version=f"schmidtkit {__version__} (kernel: {BACKEND_NAME})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schmidt", help="Schmidt decomposition of a pure state")
    p.add_argument("state")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_schmidt)

    p = sub.add_parser("f12", help="rank-r witness threshold of an observable")
    p.add_argument("observable")
    p.add_argument("--rank", type=int, default=1)
    p.add_argument("--oracle", action="store_true",
                   help="cross-check with the brute-force oracle")
    p.add_argument("--oracle-samples", type=int, default=10000)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_f12)

    p = sub.add_parser("witness", help="certify Schmidt number above r")
    p.add_argument("state")
    p.add_argument("observable")
    p.add_argument("--rank", type=int, default=1)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("quasiprob", help="quasi-probability distribution / Schmidt number")
    p.add_argument("state")
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--auto", action="store_true",
                   help="scan levels for the Schmidt number")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_quasiprob)

    p = sub.add_parser("ept", help="partial-transpose pseudo-measure lower bound")
    p.add_argument("state")
    p.add_argument("--n-li", type=int, default=24)
    p.add_argument("--n-lp", type=int, default=8)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_ept)

    p = sub.add_parser("em", help="operational measure for an observable")
    p.add_argument("state")
    p.add_argument("observable")
    p.add_argument("--class", dest="op_class", default=locc.GENERAL,
                   choices=locc.CLASS_TAGS)
    p.add_argument("--n-ops", type=int, default=64)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_em)

    p = sub.add_parser("props", help="measure-axiom property harness")
    p.add_argument("--measure", default="schmidt", choices=("schmidt", "purity_broken"))
    p.add_argument("--class", dest="op_class", default=locc.GENERAL,
                   choices=locc.CLASS_TAGS)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--dims", default="2x2")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_props)

    p = sub.add_parser("gen", help="generate states, observables, operations")
    p.add_argument("--kind", required=True,
                   choices=("pure", "density", "separable", "phi", "observable", "operation"))
    p.add_argument("--dims", default="2x2")
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--class", dest="op_class", default=locc.GENERAL,
                   choices=locc.CLASS_TAGS)
    p.add_argument("--mix-count", type=int, default=4)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("replay", help="re-run a recorded manifest")
    p.add_argument("manifest_file")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputFormatError,) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except IncompleteBasisError as exc:
        print(f"incomplete basis: {exc}", file=sys.stderr)
        return EXIT_INCOMPLETE
    except SchmidtkitError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
