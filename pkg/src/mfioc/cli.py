"""Command-line entry point.

Verbs: gen, simulate, solve, verify, repro-paper, montecarlo. Every
command is deterministic given its flags and seed; file outputs are
round-trippable. Exit codes: 0 success, 2 usage, 3 insufficient
excitation, 4 numerical, 5 acceptance miss, 6 generation failure.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .benchmark import REFERENCE_KSTAR, run_reference, reference_config
from .data import save_trajectory_csv
from .errors import AcceptanceMissError, MfiocError, UsageError
from .lqr import (
    LtiSystem,
    random_system,
    simulate_closed_loop,
    solve_care,
    system_from_json,
    system_to_json,
)
from .pipeline import RunConfig, monte_carlo, run_pipeline

__all__ = ["main"]


def _load_config(args):
    base = RunConfig()
    if getattr(args, "config", None):
        base = RunConfig.from_json(Path(args.config).read_text())
    overrides = {}
    for name in ("seed", "sign", "dt", "horizon", "epsilon", "trials",
                 "deriv_mode", "tol", "max_iter"):
        value = getattr(args, name.replace("-", "_"), None)
        if value is not None:
            overrides[name] = value
    return base.overridden(**overrides)


def _out_dir(args):
    out = Path(getattr(args, "out", None) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _say(args, message):
    if not getattr(args, "quiet", False):
        print(message)


def _read_system(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    return system_from_json(text)


def _write_solve_outputs(result, out, stem="run"):
    result.trace.to_csv(out / f"{stem}_trace.csv")
    save_trajectory_csv(result.expert, out / f"{stem}_expert.csv")
    model = result.model
    if model is not None:
        recon_system = LtiSystem(a=model.a_hat, b=model.b_hat)
        recon = simulate_closed_loop(
            recon_system, model.k_hat, result.expert.states[:, 0],
            float(result.expert.times[-1]), result.expert.dt,
        )
        save_trajectory_csv(recon, out / f"{stem}_recon.csv")
    result.report.to_json(out / f"{stem}_report.json")


def cmd_gen(args):
    config = _load_config(args)
    system, cost, x0 = random_system(args.n, args.m, config.seed)
    text = system_to_json(system, cost, x0)
    out_path = Path(args.out_file) if args.out_file else _out_dir(args) / "system.json"
    out_path.write_text(text + "\n")
    _say(args, f"wrote {out_path}")
    return 0


def cmd_simulate(args):
    config = _load_config(args)
    system, cost, x0 = _read_system(args.system)
    lqr = solve_care(system, cost)
    expert = simulate_closed_loop(system, lqr.k, x0, config.horizon, config.dt)
    out = _out_dir(args)
    save_trajectory_csv(expert, out / "expert.csv")
    _say(args, f"wrote {out / 'expert.csv'} ({expert.sample_count} samples)")
    return 0


def cmd_solve(args):
    config = _load_config(args)
    system, cost, x0 = _read_system(args.system)
    result = run_pipeline(system, cost, x0, config)
    out = _out_dir(args)
    _write_solve_outputs(result, out)
    report = result.report
    _say(args, f"status={report.solver_status} iterations={report.solver_iterations} "
               f"gain_error={report.gain_error_fro:.3e} mse={report.traj_mse:.3e}")
    if not report.certificate_passed:
        raise AcceptanceMissError("verification certificate failed; see run_report.json")
    return 0


def cmd_verify(args):
    try:
        doc = json.loads(Path(args.report).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read report: {exc}") from exc
    if "certificate_passed" not in doc:
        raise UsageError("not a verification report (missing certificate_passed)")
    _say(args, json.dumps(doc, indent=2))
    if not doc["certificate_passed"]:
        raise AcceptanceMissError("stored report did not pass the certificate")
    return 0


def cmd_repro_paper(args):
    config = reference_config(
        seed=getattr(args, "seed", None), sign=getattr(args, "sign", None),
        deriv_mode=getattr(args, "deriv_mode", None),
    )
    result, checks = run_reference(config)
    out = _out_dir(args)
    _write_solve_outputs(result, out, stem="reference")
    table = {
        "identified_kstar": result.kstar.tolist(),
        "expected_kstar": REFERENCE_KSTAR.tolist(),
        "checks": checks,
        "solver_status": result.trace.status,
        "solve_seconds": result.report.solve_seconds,
    }
    (out / "reference_table.json").write_text(json.dumps(table, indent=2) + "\n")
    for name, check in checks.items():
        _say(args, f"{name}: achieved {check['achieved']:.6g} "
                   f"(target {check['target']:.6g}) "
                   f"{'PASS' if check['passed'] else 'FAIL'}")
    if not all(check["passed"] for check in checks.values()):
        raise AcceptanceMissError("reference reproduction missed a target")
    return 0


def cmd_montecarlo(args):
    config = _load_config(args)
    summary = monte_carlo(config.trials, args.n, args.m, config.seed, config)
    out = _out_dir(args)
    summary.to_csv(out / "montecarlo.csv")
    summary.to_json(out / "montecarlo_summary.json")
    _say(args, f"{len(summary.records)} trials: median MSE {summary.mse_median:.3e}, "
               f"failures {summary.failure_count}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mfioc",
        description="Inverse LQR from a single expert trajectory: identify the "
                    "feedback gain, solve the conic reformulation by block "
                    "coordinate dual updates, and recover an equivalent model.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run-configuration file")
    common.add_argument("--out", help="output directory (default: current)")
    common.add_argument("--seed", type=int, help="random seed override")
    common.add_argument("--sign", choices=("standard", "paper"),
                        help="dual sign convention")
    common.add_argument("--quiet", action="store_true", help="suppress chatter")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate a random system JSON")
    p.add_argument("-n", type=int, required=True, help="state dimension")
    p.add_argument("-m", type=int, required=True, help="input dimension")
    p.add_argument("--out-file", help="system JSON path (default <out>/system.json)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("simulate", parents=[common],
                       help="simulate the expert trajectory for a system JSON")
    p.add_argument("system", help="system JSON file")
    p.add_argument("--dt", type=float, help="sampling interval (s)")
    p.add_argument("--horizon", type=float, help="time horizon (s)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("solve", parents=[common],
                       help="run the full inversion pipeline on a system JSON")
    p.add_argument("system", help="system JSON file")
    p.add_argument("--dt", type=float, help="sampling interval (s)")
    p.add_argument("--horizon", type=float, help="time horizon (s)")
    p.add_argument("--deriv-mode", choices=("fd", "oracle"),
                   help="derivative estimation mode")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", parents=[common],
                       help="re-check a stored verification report")
    p.add_argument("report", help="report JSON file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("repro-paper", parents=[common],
                       help="reproduce the built-in reference experiment")
    p.add_argument("--deriv-mode", choices=("fd", "oracle"))
    p.set_defaults(func=cmd_repro_paper)

    p = sub.add_parser("montecarlo", parents=[common],
                       help="randomized batch study with per-trial records")
    p.add_argument("--trials", type=int, help="number of trials (default 100)")
    p.add_argument("-n", type=int, default=3, help="state dimension")
    p.add_argument("-m", type=int, default=2, help="input dimension")
    p.add_argument("--dt", type=float, default=0.01,
                   help="sampling interval (s); finer than the single-run "
                        "default so numerical differentiation stays accurate")
    p.add_argument("--deriv-mode", choices=("fd", "oracle"))
    p.set_defaults(func=cmd_montecarlo)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MfiocError as exc:
        record = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
