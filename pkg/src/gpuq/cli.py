"""Command-line front end.

Every subcommand requires an explicit ``--seed`` (there is no wall-clock
default), validates its inputs before computing, and writes its results plus
a run manifest to the output directory. Identical argv produces byte-identical
result files.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import os
import sys

import numpy as np

from . import __version__, bayesopt, calibrate, design, quadrature, risk, sensitivity, tasks
from .distributions import IndependentProduct, Normal
from .errors import GpuqError
from .gp import Dataset, PriorMean, fit_hyperparameters
from .kernels import KernelSpec
from .pendulum import PendulumConfig, pendulum_solve
from .serialize import load_dataset_csv, save_kernel_json, write_csv, write_json

_KERNEL_CHOICES = {
    "se": ("SE", None),
    "matern12": ("Matern12", None),
    "matern32": ("Matern32", None),
    "matern52": ("Matern52", None),
    "rq": ("RQ", 1.0),
    "linear": ("Linear", None),
    "polynomial": ("Polynomial", (2, 1.0)),
}


class _ConfigError(Exception):
    pass


def _add_common(p):
    p.add_argument("--seed", type=int, required=True, help="RNG seed (required)")
    p.add_argument("--out", default="gpuq-out", help="output directory")
    p.add_argument("--threads", type=int, default=1, help="worker threads (1 = deterministic default)")


def _prepare_out(args):
    try:
        os.makedirs(args.out, exist_ok=True)
    except OSError as exc:
        raise _ConfigError(f"cannot create output directory {args.out!r}: {exc}")
    return args.out


def _manifest(out, args, extra=None):
    doc = {
        "subcommand": args.subcommand,
        "argv": list(sys.argv[1:]) if args.argv is None else args.argv,
        "seed": args.seed,
        "threads": args.threads,
        "version": __version__,
    }
    if extra:
        doc.update(extra)
    write_json(os.path.join(out, "manifest.json"), doc)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_fit(args):
    out = _prepare_out(args)
    if not os.path.isfile(args.data):
        raise _ConfigError(f"data file not found: {args.data}")
    data = load_dataset_csv(args.data)
    family, smooth = _KERNEL_CHOICES[args.kernel]
    scales = tuple(np.where(np.std(data.inputs, axis=0) > 0, np.std(data.inputs, axis=0), 1.0)) if args.anisotropic else (1.0,)
    sv = float(np.var(data.responses)) if np.var(data.responses) > 0 else 1.0
    template = KernelSpec(family, sv, scales, smoothness=smooth, noise_variance=args.noise)
    prior = PriorMean({"zero": "Zero", "constant": "Constant", "linear": "Linear"}[args.prior_mean])
    spec, gp = fit_hyperparameters(
        template, prior, data, objective=args.objective.upper(),
        restarts=args.restarts, seed=args.seed,
    )
    from .gp import log_marginal_likelihood, loo_loss

    objfn = log_marginal_likelihood if args.objective == "mle" else loo_loss
    value, _ = objfn(spec, gp.prior_mean, data)
    save_kernel_json(os.path.join(out, "kernel.json"), spec)
    write_json(
        os.path.join(out, "fit_report.json"),
        {
            "objective": args.objective,
            "objective_value": value,
            "m": data.m,
            "d": data.d,
            "prior_mean": gp.prior_mean.family,
            "prior_mean_coefficients": list(gp.prior_mean.coefficients or []),
            "jitter": gp.jitter,
        },
    )
    _manifest(out, args)
    return 0


def _cmd_propagate(args):
    out = _prepare_out(args)
    if args.task == "pendulum-up":
        res = tasks.run_up(tasks.UqTaskSpec(), method=("BQ" if args.method == "bq" else "GpMeanMc"),
                           budget=args.budget, seed=args.seed, n_mc=args.samples)
        doc = {
            "task": args.task,
            "method": args.method,
            "mean": res["mean"].to_dict(),
            "variance": res["variance"].to_dict(),
            "n_model_evals": res["n_model_evals"],
        }
    else:  # x-squared
        rng = np.random.default_rng(args.seed)
        box = design.Domain(np.array([[-4.0, 4.0]]))
        X = design.lhs_sample(box, args.budget, args.seed).points
        y = (X[:, 0] ** 2).astype(float)
        sv = float(np.var(y))
        _, gp = fit_hyperparameters(
            KernelSpec("SE", sv, (1.0,), noise_variance=1e-6 * sv), PriorMean("Zero"),
            Dataset(X, y), restarts=3, seed=args.seed, include_noise=False,
        )
        if args.method == "bq":
            emb = quadrature.se_embedding_analytic(gp)
        else:
            emb = quadrature.embedding_mc(gp, IndependentProduct([Normal()]), args.samples, args.seed)
        est = quadrature.bq_estimate(gp, emb)
        doc = {
            "task": args.task,
            "method": args.method,
            "integral": est.to_dict(),
            "true_value": 1.0,
            "n_model_evals": args.budget,
        }
    write_json(os.path.join(out, "integral.json"), doc)
    _manifest(out, args)
    return 0


def _risk_builtin(args):
    if args.task == "pendulum-re":
        spec = tasks.UqTaskSpec()
        theta_fn = tasks._theta_batch(spec)
        limit = risk.LimitState(lambda X: spec.theta_max - theta_fn(X))
        pi = spec.marginals
    else:  # linear-2d
        beta = 2.33
        limit = risk.LimitState(lambda X: X[:, 0] + X[:, 1] + beta * np.sqrt(2.0))
        pi = IndependentProduct([Normal(), Normal()])
    return limit, pi


def _cmd_risk(args):
    out = _prepare_out(args)
    limit, pi = _risk_builtin(args)
    estimate, audit = risk.akmcs_run(
        limit, pi, args.population, args.initial, args.budget,
        utility=args.utility.upper(), stop_threshold=args.threshold, seed=args.seed,
    )
    d = audit[0].x.size
    write_json(os.path.join(out, "failure.json"), estimate.to_dict())
    write_csv(
        os.path.join(out, "audit.csv"),
        ["iter"] + [f"x{i + 1}" for i in range(d)] + ["g_value", "utility_value", "p_hat_current"],
        [[r.iteration] + list(r.x) + [r.g_value, r.utility_value, r.p_hat_current] for r in audit],
    )
    _manifest(out, args, {"n_model_evals": limit.n_evals})
    return 0


def _cmd_optimize(args):
    out = _prepare_out(args)
    if args.task == "pendulum-ou":
        res = tasks.run_ou(tasks.UqTaskSpec(), budget=args.budget, seed=args.seed)
        state = res["state"]
        doc = {
            "task": args.task,
            "mu_theta": res["mu_theta"],
            "objective": res["objective"],
            "constraint_mean_omega": res["constraint_mean_omega"],
            "pof_at_optimum": res["pof_at_optimum"],
            "n_outer_evals": res["n_outer_evals"],
            "n_model_evals": res["n_model_evals"],
        }
    else:
        mode = {"none": "None", "product": "ProductPoF", "threshold": "PoFThreshold"}[args.constraint_mode]
        acq = bayesopt.AcquisitionSpec(args.acquisition.upper(), xi=args.xi, constraint_mode=mode, epsilon=args.epsilon)
        domain = design.Domain(np.array([[0.0, 1.0]]))
        if args.task == "parabola-1d":
            objective = lambda X: -((np.atleast_2d(X)[:, 0] - 0.3) ** 2)
            constraints = []
        else:  # constrained-1d
            objective = lambda X: np.atleast_2d(X)[:, 0]
            constraints = [lambda X: np.atleast_2d(X)[:, 0] - 0.7]
            if mode == "None":
                acq = bayesopt.AcquisitionSpec(args.acquisition.upper(), xi=args.xi,
                                               constraint_mode="PoFThreshold", epsilon=args.epsilon)
        state = bayesopt.bo_run(objective, constraints, domain, args.m0, args.budget,
                                acq, pool_size=args.pool_size, seed=args.seed)
        doc = {
            "task": args.task,
            "x_best": list(state.x_best) if state.x_best is not None else None,
            "y_best": state.y_best,
            "n_evals": state.n_evals,
            "diagnostic": state.diagnostic,
        }
    k = len(state.history[0]["constraints"]) if state.history else 0
    d = state.history[0]["x"].size if state.history else 0
    write_csv(
        os.path.join(out, "history.csv"),
        ["iter"] + [f"x{i + 1}" for i in range(d)] + ["y"]
        + [f"constraint_{j + 1}" for j in range(k)] + ["is_feasible", "y_best_so_far"],
        [
            [h["iter"]] + list(h["x"]) + [h["y"]] + list(h["constraints"])
            + [h["is_feasible"], h["y_best_so_far"]]
            for h in state.history
        ],
    )
    write_json(os.path.join(out, "bo_result.json"), doc)
    _manifest(out, args)
    return 0


def _cmd_calibrate(args):
    out = _prepare_out(args)
    if args.task == "pendulum-pe":
        res = tasks.run_pe(tasks.UqTaskSpec(), budget=args.budget, seed=args.seed,
                           utility=args.utility.upper(), chain_length=args.chain_length,
                           burn_in=args.burn_in)
        chain, gp = res["chain"], res["surrogate"]
        doc = {
            "task": args.task,
            "posterior_mean": list(res["posterior_mean"]),
            "posterior_std": list(res["posterior_std"]),
            "acceptance_rate": res["acceptance_rate"],
            "n_model_evals": res["n_model_evals"],
        }
        log_t = gp.predict_batch(chain.samples)[0]
    else:  # gaussian-1d conjugate toy
        from .stats import norm_logpdf

        def log_joint_fn(x):
            x = float(np.atleast_1d(x)[0])
            lik = norm_logpdf((x - 1.0) / 0.5) - np.log(0.5)
            pri = norm_logpdf(x / 2.0) - np.log(2.0)
            return lik + pri

        log_joint = calibrate.LogJointModel(lambda x: 0.0, log_joint_fn)
        box = design.Domain(np.array([[-6.0, 6.0]]))
        if args.method == "bape":
            gp = calibrate.bape_run(log_joint, box, args.m0, args.budget,
                                    utility=args.utility.upper(), seed=args.seed)
            target = lambda x: gp.predict(np.atleast_1d(x))[0]
        else:
            rounds = calibrate.agp_iterate(log_joint, box, n_rounds=5,
                                           samples_per_round=1500, utility=args.utility.upper(),
                                           seed=args.seed, m0=args.m0,
                                           queries_per_round=max(1, (args.budget - args.m0) // 5))
            q, gp = rounds[-1].q, rounds[-1].gp
            target = lambda x: gp.predict(np.atleast_1d(x))[0] + float(q.logpdf(np.atleast_1d(x).reshape(1, -1))[0])
        chain = calibrate.mh_sample(target, np.zeros(1), np.array([0.8]),
                                    args.chain_length, args.burn_in, args.seed + 1)
        doc = {
            "task": args.task,
            "method": args.method,
            "posterior_mean": [float(np.mean(chain.samples))],
            "posterior_std": [float(np.std(chain.samples))],
            "closed_form_mean": 16.0 / 17.0,
            "closed_form_std": float(np.sqrt(4.0 / 17.0)),
            "acceptance_rate": chain.acceptance_rate,
            "n_model_evals": log_joint.n_evals,
        }
        log_t = np.array([target(x) for x in chain.samples])
    d = chain.samples.shape[1]
    write_csv(
        os.path.join(out, "chain.csv"),
        ["step"] + [f"x{i + 1}" for i in range(d)] + ["log_target"],
        [[i] + list(chain.samples[i]) + [log_t[i]] for i in range(chain.length)],
    )
    write_json(os.path.join(out, "calibration.json"), doc)
    _manifest(out, args)
    return 0


def _cmd_sensitivity(args):
    out = _prepare_out(args)
    if args.task == "pendulum-sa":
        result, audit, n_evals = tasks.run_sa(tasks.UqTaskSpec(), budget=args.budget,
                                              n=args.n, seed=args.seed, prefactor=args.prefactor.upper())
        names = ["theta0", "length", "gravity"]
    else:  # linear-additive
        pi = IndependentProduct([Normal(), Normal()])
        model = tasks._CountingModel(lambda X: X[:, 0] + 2.0 * X[:, 1])
        result, audit = sensitivity.active_sa_run(model, pi, m0=min(10, args.budget),
                                                  M=args.budget, n=args.n,
                                                  prefactor=args.prefactor.upper(), seed=args.seed)
        n_evals = model.n_evals
        names = ["x1", "x2"]
    write_json(os.path.join(out, "sobol.json"), result.to_dict())
    rows = []
    for i, nm in enumerate(names):
        rows.append([nm, result.first_order[i], result.total[i],
                     result.ci_half_width[i] if result.ci_half_width is not None else np.nan])
    write_csv(os.path.join(out, "sobol.csv"), ["input", "first_order", "total", "ci_half_width"], rows)
    d = audit[0]["x"].size if audit else 0
    write_csv(
        os.path.join(out, "audit.csv"),
        ["iter"] + [f"x{i + 1}" for i in range(d)] + ["score", "y"],
        [[i] + list(a["x"]) + [a["score"], a["y"]] for i, a in enumerate(audit)],
    )
    _manifest(out, args, {"n_model_evals": n_evals})
    return 0


def _cmd_pendulum(args):
    out = _prepare_out(args)
    cfg = PendulumConfig(args.theta0, args.length, args.gravity, args.horizon, args.dt)
    traj = pendulum_solve(cfg)
    write_json(
        os.path.join(out, "state.json"),
        {
            "theta_final": traj.theta_final,
            "omega_final": traj.omega_final,
            "theta0": cfg.theta0,
            "length": cfg.length,
            "gravity": cfg.gravity,
            "horizon": cfg.horizon,
            "dt": cfg.dt,
        },
    )
    if args.times:
        try:
            ts = np.array([float(t) for t in args.times.split(",")])
        except ValueError:
            raise _ConfigError("--times must be a comma-separated list of floats")
        if np.any(ts < 0) or np.any(ts > cfg.horizon):
            raise _ConfigError("--times must lie within [0, horizon]")
    else:
        ts = traj.times[:: max(1, len(traj.times) // 200)]
    write_csv(
        os.path.join(out, "trajectory.csv"),
        ["t", "theta", "omega"],
        [[t, float(traj.theta(t)), float(traj.omega(t))] for t in ts],
    )
    _manifest(out, args)
    return 0


# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="gpuq", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("fit", help="fit GP hyperparameters to a CSV dataset")
    _add_common(p)
    p.add_argument("--data", required=True, help="dataset CSV (header x1,...,xd,y)")
    p.add_argument("--kernel", choices=sorted(_KERNEL_CHOICES), default="se")
    p.add_argument("--objective", choices=["mle", "loo"], default="mle")
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--noise", type=float, default=0.0, help="initial noise variance (0 = noise-free)")
    p.add_argument("--anisotropic", action="store_true")
    p.add_argument("--prior-mean", choices=["zero", "constant", "linear"], default="zero")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("propagate", help="uncertainty propagation (Bayesian quadrature)")
    _add_common(p)
    p.add_argument("--task", choices=["pendulum-up", "x-squared"], default="pendulum-up")
    p.add_argument("--method", choices=["bq", "gp-mean-mc"], default="bq")
    p.add_argument("--budget", type=int, default=30)
    p.add_argument("--samples", type=int, default=100_000)
    p.set_defaults(func=_cmd_propagate)

    p = sub.add_parser("risk", help="failure probability via AK-MCS")
    _add_common(p)
    p.add_argument("--task", choices=["pendulum-re", "linear-2d"], default="pendulum-re")
    p.add_argument("--utility", choices=["eff", "u", "sur"], default="u")
    p.add_argument("--population", type=int, default=100_000)
    p.add_argument("--initial", type=int, default=12)
    p.add_argument("--budget", type=int, default=60)
    p.add_argument("--threshold", type=float, default=None)
    p.set_defaults(func=_cmd_risk)

    p = sub.add_parser("optimize", help="Bayesian optimization")
    _add_common(p)
    p.add_argument("--task", choices=["pendulum-ou", "parabola-1d", "constrained-1d"], default="pendulum-ou")
    p.add_argument("--acquisition", choices=["ei", "pi", "ucb"], default="ei")
    p.add_argument("--xi", type=float, default=0.0)
    p.add_argument("--constraint-mode", choices=["none", "product", "threshold"], default="none")
    p.add_argument("--epsilon", type=float, default=0.95)
    p.add_argument("--m0", type=int, default=4)
    p.add_argument("--budget", type=int, default=15)
    p.add_argument("--pool-size", type=int, default=2048)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("calibrate", help="Bayesian parameter estimation (BAPE/AGP + MCMC)")
    _add_common(p)
    p.add_argument("--task", choices=["pendulum-pe", "gaussian-1d"], default="pendulum-pe")
    p.add_argument("--method", choices=["bape", "agp"], default="bape")
    p.add_argument("--utility", choices=["ev", "ee"], default="ev")
    p.add_argument("--m0", type=int, default=8)
    p.add_argument("--budget", type=int, default=30)
    p.add_argument("--chain-length", type=int, default=20_000)
    p.add_argument("--burn-in", type=int, default=5_000)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("sensitivity", help="Sobol sensitivity indices")
    _add_common(p)
    p.add_argument("--task", choices=["pendulum-sa", "linear-additive"], default="pendulum-sa")
    p.add_argument("--budget", type=int, default=30)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--prefactor", choices=["d1", "d2"], default="d1")
    p.set_defaults(func=_cmd_sensitivity)

    p = sub.add_parser("pendulum", help="solve one pendulum trajectory")
    _add_common(p)
    p.add_argument("--theta0", type=float, default=0.2)
    p.add_argument("--length", type=float, default=1.0)
    p.add_argument("--gravity", type=float, default=9.81)
    p.add_argument("--horizon", type=float, default=2.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--times", default=None, help="comma-separated query times")
    p.set_defaults(func=_cmd_pendulum)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = list(argv) if argv is not None else None
    try:
        return args.func(args)
    except _ConfigError as exc:
        print(f"gpuq: configuration error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, FileNotFoundError) as exc:
        print(f"gpuq: configuration error: {exc}", file=sys.stderr)
        return 2
    except GpuqError as exc:
        print(f"gpuq: numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"gpuq: i/o failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
