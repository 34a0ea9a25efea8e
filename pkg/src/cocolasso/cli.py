"""Command-line front end: fit, cv, simulate, project.

Exit codes: 0 success, 2 input/validation error, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import io as cio
from .crossval import corrected_cv, make_folds
from .lasso import solution_path, solve
from .psd import AdmmConfig, nearest_psd
from .simbench import (
    AdditiveGaussian,
    ARDesign,
    CSDesign,
    MissingBernoulli,
    MultiplicativeLognormal,
    SimConfig,
    run_experiment,
)
from .surrogate import (
    AdditiveError,
    MissingData,
    MultiplicativeError,
    build_surrogates,
    estimate_missing_rates,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NOCONV = 3


class InputError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


def _add_common_data_flags(sp):
    sp.add_argument("--data", required=True, help="CSV file with header row")
    sp.add_argument("--response", required=True, help="name of the response column")
    sp.add_argument("--additive-cov", help="CSV path of the additive error covariance")
    sp.add_argument("--additive-tau2", type=float,
                    help="scalar additive error variance (covariance tau2*I)")
    sp.add_argument("--mult-mu", help="CSV path of the multiplicative error mean vector")
    sp.add_argument("--mult-cov", help="CSV path of the multiplicative error covariance")
    sp.add_argument("--missing", help="scalar missing rate in [0,1) or 'auto'")
    sp.add_argument("--out", required=True, help="output JSON path")
    sp.add_argument("--grid-size", type=int, default=100)
    sp.add_argument("--lambda-min-ratio", type=float, default=1e-3)
    sp.add_argument("--tol", type=float, default=1e-7)
    sp.add_argument("--max-iter", type=int, default=100_000)
    _add_admm_flags(sp)


def _add_admm_flags(sp):
    sp.add_argument("--admm-mu", type=float, default=10.0)
    sp.add_argument("--admm-tol", type=float, default=1e-7)
    sp.add_argument("--admm-max-iter", type=int, default=20000)
    sp.add_argument("--eps-floor", type=float, default=0.0)


def _admm_cfg(args):
    return AdmmConfig(
        mu=args.admm_mu,
        eps_floor=args.eps_floor,
        tol_primal=args.admm_tol,
        tol_dual=args.admm_tol,
        max_iter=args.admm_max_iter,
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cocolasso",
        description="Convex-conditioned Lasso for corrupted designs",
    )
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get("COCOLASSO_THREADS", "0")),
                        help="thread budget hint (results are thread-count independent)")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit along a lambda path or at one lambda")
    _add_common_data_flags(fit)
    fit.add_argument("--lambda", dest="lam", type=float,
                     help="single lambda; omit to fit the whole path")

    cv = sub.add_parser("cv", help="corrected cross-validation plus final fit")
    _add_common_data_flags(cv)
    cv.add_argument("--folds", type=int, default=5)
    cv.add_argument("--seed", type=int, default=0)
    cv.add_argument("--emit-naive", action="store_true",
                    help="also report the naive held-out residual loss")

    sim = sub.add_parser("simulate", help="run the simulation bench")
    sim.add_argument("--n", type=int, default=100)
    sim.add_argument("--p", type=int, default=250)
    sim.add_argument("--sigma-noise", type=float, default=3.0)
    sim.add_argument("--design", choices=("ar", "cs"), default="ar")
    sim.add_argument("--design-param", type=float, default=0.5)
    sim.add_argument("--corruption", choices=("additive", "multiplicative", "missing"),
                     default="additive")
    sim.add_argument("--tau", type=float, default=0.75,
                     help="corruption level (tau, or the missing rate)")
    sim.add_argument("--replications", type=int, default=100)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--bootstrap-samples", type=int, default=1000)
    sim.add_argument("--folds", type=int, default=5)
    sim.add_argument("--grid-size", type=int, default=50)
    sim.add_argument("--lambda-min-ratio", type=float, default=0.01)
    sim.add_argument("--estimate-rates", action="store_true")
    sim.add_argument("--out", required=True, help="output JSON path")
    sim.add_argument("--records-csv", help="optional per-replication CSV path")

    proj = sub.add_parser("project", help="max-norm nearest-PSD projection of a matrix")
    proj.add_argument("--matrix", required=True, help="square symmetric matrix CSV")
    proj.add_argument("--out", required=True, help="output JSON path")
    proj.add_argument("--matrix-out", help="optional CSV path for the projected matrix")
    _add_admm_flags(proj)
    return parser


def _error_model(args, data):
    chosen = [
        args.additive_cov is not None or args.additive_tau2 is not None,
        args.mult_mu is not None or args.mult_cov is not None,
        args.missing is not None,
    ]
    if sum(chosen) != 1:
        raise InputError(
            "specify exactly one error model: --additive-cov/--additive-tau2, "
            "--mult-mu/--mult-cov, or --missing"
        )
    if chosen[0]:
        if args.additive_cov is not None:
            cov = cio.read_matrix_csv(args.additive_cov)
        else:
            if args.additive_tau2 < 0:
                raise InputError("--additive-tau2 must be >= 0")
            cov = args.additive_tau2 * np.eye(data.p)
        return AdditiveError(cov)
    if chosen[1]:
        if args.mult_mu is None or args.mult_cov is None:
            raise InputError("multiplicative model needs both --mult-mu and --mult-cov")
        return MultiplicativeError(
            cio.read_vector_csv(args.mult_mu), cio.read_matrix_csv(args.mult_cov)
        )
    if args.missing == "auto":
        return MissingData(estimate_missing_rates(data))
    try:
        rate = float(args.missing)
    except ValueError:
        raise InputError("--missing must be a number in [0,1) or 'auto'") from None
    if not 0 <= rate < 1:
        raise InputError("--missing rate must lie in [0,1)")
    return MissingData(np.full(data.p, rate))


def _prepare(args):
    data = cio.read_dataset_csv(args.data, args.response)
    model = _error_model(args, data)
    centered, _, _ = cio.center_dataset(data)
    return centered, model


def _projection_payload(res):
    return {
        "iterations": res.iterations,
        "primal_residual": res.primal_residual,
        "dual_residual": res.dual_residual,
        "max_norm_distance": res.max_norm_distance,
        "converged": res.converged,
        "mu_used": res.mu_used,
    }


def cmd_fit(args):
    data, model = _prepare(args)
    surr = build_surrogates(data, model)
    proj = nearest_psd(surr.sigma_hat, _admm_cfg(args))
    if not proj.converged:
        raise ConvergenceError("PSD projection did not converge")
    if args.lam is not None:
        if args.lam < 0:
            raise InputError("--lambda must be >= 0")
        beta, info = solve(proj.sigma_tilde, surr.rho_tilde, args.lam,
                           tol=args.tol, max_iter=args.max_iter, check_psd=False)
        if not info["converged"]:
            raise ConvergenceError("coordinate descent did not converge")
        payload = {
            "mode": "single",
            "lambda": args.lam,
            "beta": beta,
            "kkt_residual": info["kkt_residual"],
            "iterations": info["iterations"],
            "projection": _projection_payload(proj),
        }
    else:
        path = solution_path(proj.sigma_tilde, surr.rho_tilde,
                             grid_size=args.grid_size,
                             lambda_min_ratio=args.lambda_min_ratio,
                             tol=args.tol, max_iter=args.max_iter,
                             check_psd=False)
        if not path.converged.any():
            raise ConvergenceError("no lambda on the path converged")
        payload = {
            "mode": "path",
            "lambdas": path.lambdas,
            "betas": path.betas,
            "kkt_residuals": path.kkt_residuals,
            "iterations": path.iterations,
            "converged": path.converged,
            "projection": _projection_payload(proj),
        }
    cio.write_json(args.out, payload)
    return EXIT_OK


def cmd_cv(args):
    data, model = _prepare(args)
    if args.folds < 2:
        raise InputError("--folds must be >= 2")
    if args.folds > data.n:
        raise InputError("--folds cannot exceed the number of rows")
    folds = make_folds(data.n, args.folds, seed=args.seed)
    report = corrected_cv(
        data, model, folds,
        grid_size=args.grid_size, lambda_min_ratio=args.lambda_min_ratio,
        admm_cfg=_admm_cfg(args), solver_tol=args.tol,
        solver_max_iter=args.max_iter, emit_naive=args.emit_naive,
    )
    surr = build_surrogates(data, model)
    proj = nearest_psd(surr.sigma_hat, _admm_cfg(args))
    if not proj.converged:
        raise ConvergenceError("PSD projection did not converge")
    beta, info = solve(proj.sigma_tilde, surr.rho_tilde, report.lambda_selected,
                       tol=args.tol, max_iter=args.max_iter, check_psd=False)
    if not info["converged"]:
        raise ConvergenceError("final fit did not converge")
    payload = {
        "folds": args.folds,
        "seed": args.seed,
        "lambdas": report.lambdas,
        "corrected_loss": report.corrected_loss,
        "lambda_selected": report.lambda_selected,
        "beta": beta,
        "kkt_residual": info["kkt_residual"],
        "per_fold_diagnostics": report.per_fold_diagnostics,
        "projection": _projection_payload(proj),
    }
    if args.emit_naive:
        payload["naive_loss"] = report.naive_loss
    cio.write_json(args.out, payload)
    return EXIT_OK


def cmd_simulate(args):
    design = ARDesign(args.design_param) if args.design == "ar" else CSDesign(args.design_param)
    if args.corruption == "additive":
        corruption = AdditiveGaussian(args.tau)
    elif args.corruption == "multiplicative":
        corruption = MultiplicativeLognormal(args.tau)
    else:
        corruption = MissingBernoulli(args.tau)
    cfg = SimConfig(
        n=args.n, p=args.p, sigma_noise=args.sigma_noise,
        design=design, corruption=corruption,
        replications=args.replications, seed=args.seed,
        bootstrap_samples=args.bootstrap_samples, cv_folds=args.folds,
        grid_size=args.grid_size, lambda_min_ratio=args.lambda_min_ratio,
        estimate_rates=args.estimate_rates,
    )
    try:
        report = run_experiment(cfg)
    except RuntimeError as exc:
        raise ConvergenceError(str(exc)) from exc
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    if args.records_csv:
        with open(args.records_csv, "w", encoding="utf-8") as fh:
            fh.write(report.records_csv())
    _print_summary(report)
    return EXIT_OK


def _print_summary(report):
    med, se = report.medians, report.bootstrap_se
    print(f"n={report.config['n']} p={report.config['p']} "
          f"design={report.config['design']} corruption={report.config['corruption']} "
          f"level={report.config['corruption_param']} "
          f"reps={report.config['replications']}")
    print(f"  C      {med['c']:8.3g}  (se {se['c']:.3g})")
    print(f"  IC     {med['ic']:8.3g}  (se {se['ic']:.3g})")
    print(f"  PE     {med['pe']:8.4g}  (se {se['pe']:.3g})")
    print(f"  MSE    {med['mse']:8.4g}  (se {se['mse']:.3g})")
    print(f"  failures: {report.failures}  runtime: {report.runtime_seconds:.1f}s")


def cmd_project(args):
    M = cio.read_matrix_csv(args.matrix)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InputError("matrix must be square")
    if not np.allclose(M, M.T, atol=1e-8, rtol=0.0):
        raise InputError("matrix must be symmetric (tolerance 1e-8)")
    res = nearest_psd(M, _admm_cfg(args))
    if not res.converged:
        raise ConvergenceError("ADMM did not converge")
    payload = {"sigma_tilde": res.sigma_tilde, **_projection_payload(res)}
    cio.write_json(args.out, payload)
    if args.matrix_out:
        cio.write_matrix_csv(args.matrix_out, res.sigma_tilde)
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "fit": cmd_fit,
        "cv": cmd_cv,
        "simulate": cmd_simulate,
        "project": cmd_project,
    }
    try:
        return handlers[args.command](args)
    except (InputError, cio.ParseError, ValueError, FileNotFoundError) as exc:
        print(f'{{"error": "input", "message": {_json_str(exc)}}}', file=sys.stderr)
        return EXIT_INPUT
    except ConvergenceError as exc:
        print(f'{{"error": "convergence", "message": {_json_str(exc)}}}', file=sys.stderr)
        return EXIT_NOCONV


def _json_str(exc):
    import json
    return json.dumps(str(exc))


if __name__ == "__main__":
    sys.exit(main())
