"""Command-line interface.

Subcommands mirror the library layering: qpp/genvar for the corner
optimization, constant for the Monte Carlo and quadrature constants, dc
for the double-crossing asymptotics and their Monte Carlo verification,
simulate for raw path sampling, verify for expansion and diagonal-strip
checks.  Results are emitted as a single JSON document on stdout with the
schema tag, the resolved seed and configuration, and the package version;
validation errors exit with code 2, numerical failures with code 3.
"""

import argparse
import json
import sys

import numpy as np

from . import __version__
from .asymptotics import (
    crossing_point_prob,
    fbm_dc_asymptotic,
    general_asymptotic,
    stationary_dc_asymptotic,
)
from .constants import (
    g_corollary_report,
    g_integral,
    generalized_constant,
    pickands_constant,
    piterbarg_constant,
)
from .errors import NumericalError, ValidationError
from .mcverify import (
    compare_report,
    diagonal_strip_probability,
    mc_double_crossing,
    report_to_csv,
)
from .models import derive, fbm_model, stationary_model, verify_expansion
from .qpp import generalized_variance
from .simulate import sample_fbm, sample_gaussian_grid

SCHEMA = "gauss-extremes/v1"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError("not JSON serializable: %r" % (o,))


def _emit(command, seed, config, result, out=None):
    doc = {
        "schema": SCHEMA,
        "command": command,
        "version": __version__,
        "seed": seed,
        "config": config,
        "result": result,
    }
    text = json.dumps(doc, sort_keys=True, default=_json_default, indent=2)
    print(text)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    return 0


def _floats(text):
    return [float(x) for x in str(text).split(",") if x != ""]


def _matrix(text):
    return np.asarray(json.loads(text), dtype=float)


class Resolver:
    """Merge CLI flags with --config file values; explicit flags win."""

    def __init__(self, args):
        self.args = vars(args)
        self.cfg = {}
        path = self.args.get("config")
        if path:
            with open(path) as fh:
                self.cfg = json.load(fh)

    def get(self, name, default=None, required=False):
        v = self.args.get(name)
        if v is None:
            v = self.cfg.get(name, default)
        if v is None and required:
            raise ValidationError("missing required option --%s" % name.replace("_", "-"))
        return v

    def seed(self, required):
        s = self.get("seed")
        if s is None and required:
            raise ValidationError("--seed is required for stochastic subcommands")
        return None if s is None else int(s)

    def resolved(self, names):
        return {n: self.get(n) for n in names}


def _rho_family(name, theta, power):
    if theta is None or theta <= 0:
        raise ValidationError("--theta must be positive")
    if power is None or not (0.0 < power <= 2.0):
        raise ValidationError("--alpha-loc must lie in (0, 2]")
    if name == "exp":

        def rho(t):
            return np.exp(-theta * np.abs(t) ** power)

        def rho_prime(T):
            return -theta * power * T ** (power - 1.0) * np.exp(-theta * T ** power)

    elif name == "poly":

        def rho(t):
            return 1.0 / (1.0 + theta * np.abs(t) ** power)

        def rho_prime(T):
            return -theta * power * T ** (power - 1.0) / (1.0 + theta * T ** power) ** 2

    else:
        raise ValidationError("unknown rho family %r (choose exp or poly)" % (name,))
    return rho, rho_prime


def _build_model(r):
    kind = r.get("model")
    if kind is None:
        kind = "fbm" if r.get("H") is not None else "stationary"
    T = float(r.get("T", 1.0))
    a = float(r.get("a", 1.0))
    b = float(r.get("b", 1.0))
    if kind == "fbm":
        H = r.get("H", required=True)
        return fbm_model(float(H), T, a, b)
    name = r.get("rho", "exp")
    theta = r.get("theta", 1.0)
    power = r.get("alpha_loc", 1.0)
    rho, rho_prime = _rho_family(name, float(theta), float(power))
    return stationary_model(
        rho,
        T,
        a,
        b,
        alpha=float(power),
        vartheta=float(theta),
        rho_prime_T=rho_prime(T),
        name=name,
    )


def _add_common(p):
    p.add_argument("--config", help="JSON file with default option values")
    p.add_argument("--out", help="also write the JSON document to this file")
    p.add_argument("--threads", type=int)
    p.add_argument("--seed", type=int)


def _add_model_flags(p):
    p.add_argument("--model", choices=["fbm", "stationary"])
    p.add_argument("--H", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--rho", choices=["exp", "poly"])
    p.add_argument("--theta", type=float)
    p.add_argument("--alpha-loc", dest="alpha_loc", type=float)


def build_parser():
    top = argparse.ArgumentParser(
        prog="gauss-extremes",
        description="double-crossing asymptotics for Gaussian processes",
    )
    sub = top.add_subparsers(dest="group", required=True)

    p = sub.add_parser("qpp", help="corner quadratic program")
    _add_common(p)
    p.add_argument("--sigma", required=True, help="covariance as a JSON matrix")
    p.add_argument("--b", required=True, help="levels, comma separated")

    p = sub.add_parser("genvar", help="generalized variance at the corner")
    _add_common(p)
    p.add_argument("--sigma", required=True)
    p.add_argument("--b", required=True)

    p = sub.add_parser("constant", help="constants of the expansion")
    p.add_argument(
        "what", choices=["pickands", "piterbarg", "generalized", "g-integral"]
    )
    _add_common(p)
    _add_model_flags(p)
    p.add_argument("--two-h", dest="two_h", type=float)
    p.add_argument("--S", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--paths", type=int)
    p.add_argument("--lam", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--variant", choices=["half_drift", "plain"])
    p.add_argument("--window", type=float)
    p.add_argument("--Lambda", type=float)
    p.add_argument("--beta", help="exponents, comma separated")
    p.add_argument("--Xi", help="interaction matrix as JSON")
    p.add_argument("--xi", help="diagonal xi values for the corollary report")
    p.add_argument("--tol", type=float)
    p.add_argument("--corollary", action="store_true")
    p.add_argument("--convergence", action="store_true")

    p = sub.add_parser("dc", help="double-crossing asymptotics and MC checks")
    p.add_argument("what", choices=["stationary", "fbm"])
    _add_common(p)
    _add_model_flags(p)
    p.add_argument("--u", type=float)
    p.add_argument("--u-list", dest="u_list")
    p.add_argument("--asymptotic", action="store_true")
    p.add_argument("--mc", action="store_true")
    p.add_argument("--compare", action="store_true")
    p.add_argument("--steps", type=int)
    p.add_argument("--paths", type=int)
    p.add_argument("--csv", help="write the comparison table to this CSV file")

    p = sub.add_parser("simulate", help="sample paths")
    p.add_argument("what", choices=["fbm", "stationary"])
    _add_common(p)
    _add_model_flags(p)
    p.add_argument("--steps", type=int)
    p.add_argument("--paths", type=int)
    p.add_argument("--method", choices=["circulant", "cholesky"])
    p.add_argument("--csv", help="write sampled paths to this CSV file")

    p = sub.add_parser("verify", help="expansion and diagonal-strip checks")
    p.add_argument("what", choices=["expansion", "diagonal"])
    _add_common(p)
    _add_model_flags(p)
    p.add_argument("--u", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--paths", type=int)
    p.add_argument("--h0", type=float)
    p.add_argument("--levels", type=int)
    p.add_argument("--dirs", type=int)
    return top


def _cmd_qpp(args, as_genvar):
    r = Resolver(args)
    sigma = _matrix(r.get("sigma", required=True))
    b = np.asarray(_floats(r.get("b", required=True)))
    value, sol = generalized_variance(sigma, b)
    if as_genvar:
        result = {"sigma_minus2": value, "solution": sol.as_dict()}
        cmd = "genvar"
    else:
        result = sol.as_dict()
        result["sigma_minus2"] = value
        cmd = "qpp"
    return _emit(cmd, None, {"sigma": sigma.tolist(), "b": b.tolist()}, result,
                 r.get("out"))


def _cmd_constant(args):
    r = Resolver(args)
    what = args.what
    threads = int(r.get("threads", 1))
    out = r.get("out")
    if what == "pickands":
        seed = r.seed(required=True)
        rec = pickands_constant(
            float(r.get("two_h", required=True)),
            S=float(r.get("S", 32.0)),
            step=float(r.get("step", 0.01)),
            n_paths=int(r.get("paths", 200000)),
            seed=seed,
            report_convergence=bool(r.get("convergence", False)),
            threads=threads,
        )
        return _emit("constant pickands", rec.config["seed"], rec.config,
                     rec.to_dict(), out)
    if what == "piterbarg":
        seed = r.seed(required=True)
        rec = piterbarg_constant(
            lam=r.get("lam"),
            c=r.get("c"),
            variant=r.get("variant", "half_drift"),
            window=r.get("window"),
            step=float(r.get("step", 0.5)),
            n_paths=int(r.get("paths", 200000)),
            seed=seed,
            report_convergence=bool(r.get("convergence", False)),
            threads=threads,
        )
        return _emit("constant piterbarg", rec.config["seed"], rec.config,
                     rec.to_dict(), out)
    if what == "generalized":
        seed = r.seed(required=True)
        model = _build_model(r)
        dd = derive(model)
        rec = generalized_constant(
            dd,
            S=float(r.get("S", 16.0)),
            Lambda=float(r.get("Lambda", 8.0)),
            step=float(r.get("step", 0.02)),
            n_paths=int(r.get("paths", 100000)),
            seed=seed,
            report_convergence=bool(r.get("convergence", False)),
            threads=threads,
        )
        result = rec.to_dict()
        result["model"] = model.describe()
        return _emit("constant generalized", rec.config["seed"], rec.config,
                     result, out)
    # g-integral
    beta = _floats(r.get("beta", required=True))
    Xi = _matrix(r.get("Xi", required=True))
    value = g_integral(beta, Xi, tol=float(r.get("tol", 1e-6)))
    result = {"value": value}
    if r.get("corollary", False):
        xi = r.get("xi")
        if xi is None:
            xi = (np.diag(np.atleast_2d(Xi)) / 2.0).tolist()
        else:
            xi = _floats(xi)
        result["corollary"] = g_corollary_report(beta, xi)
    return _emit("constant g-integral", None,
                 {"beta": beta, "Xi": Xi.tolist()}, result, out)


def _cmd_dc(args):
    r = Resolver(args)
    mode_mc = bool(r.get("mc", False))
    mode_cmp = bool(r.get("compare", False))
    mode_asym = bool(r.get("asymptotic", False)) or not (mode_mc or mode_cmp)
    threads = int(r.get("threads", 1))
    out = r.get("out")
    model = _build_model_for_dc(args, r)
    asym_fn = fbm_dc_asymptotic if model.kind == "fbm" else stationary_dc_asymptotic

    def needs_mc_constant():
        if model.kind == "fbm":
            return model.params["H"] != 0.5
        return model.params["alpha"] < 1.0

    if mode_cmp:
        us = _floats(r.get("u_list", required=True))
        if len(us) < 2:
            raise ValidationError("--u-list needs at least two levels")
        seed = r.seed(required=True)
        steps = int(r.get("steps", 1024))
        paths = int(r.get("paths", 100000))
        consts = None
        if needs_mc_constant():
            first = asym_fn(model, us[0], seed=seed, threads=threads)
            consts = {"pickands": first.components["H_classical"]}
        asyms = [
            asym_fn(model, u, constants=consts, seed=seed, threads=threads)
            for u in sorted(us)
        ]
        mcs = [
            mc_double_crossing(
                model, u, n_steps=steps, n_paths=paths, seed=seed, threads=threads
            )
            for u in sorted(us)
        ]
        report = compare_report(asyms, mcs)
        csv_path = r.get("csv")
        if csv_path:
            report_to_csv(report, csv_path)
        result = {
            "report": report,
            "asymptotics": [a.to_dict() for a in asyms],
            "mc": [m.to_dict() for m in mcs],
            "model": model.describe(),
        }
        cfg = {"u_list": sorted(us), "steps": steps, "paths": paths}
        return _emit("dc %s compare" % args.what, seed, cfg, result, out)

    u = float(r.get("u", required=True))
    if mode_mc:
        seed = r.seed(required=True)
        steps = int(r.get("steps", 1024))
        paths = int(r.get("paths", 100000))
        mc = mc_double_crossing(
            model, u, n_steps=steps, n_paths=paths, seed=seed, threads=threads
        )
        result = mc.to_dict()
        result["model"] = model.describe()
        return _emit("dc %s mc" % args.what, seed, {"steps": steps, "paths": paths},
                     result, out)
    seed = r.seed(required=needs_mc_constant() and mode_asym)
    res = asym_fn(
        model,
        u,
        seed=seed,
        n_paths=int(r.get("paths", 200000)),
        threads=threads,
    )
    result = res.to_dict()
    result["model"] = model.describe()
    result["crossing_point_prob"] = crossing_point_prob(model, u)
    return _emit("dc %s asymptotic" % args.what, seed, {"u": u}, result, out)


def _build_model_for_dc(args, r):
    # the positional selects the family; model flags fill in the rest
    if args.what == "fbm":
        return fbm_model(
            float(r.get("H", required=True)),
            float(r.get("T", 1.0)),
            float(r.get("a", 1.0)),
            float(r.get("b", 1.0)),
        )
    name = r.get("rho", "exp")
    theta = float(r.get("theta", 1.0))
    power = float(r.get("alpha_loc", 1.0))
    rho, rho_prime = _rho_family(name, theta, power)
    T = float(r.get("T", 1.0))
    return stationary_model(
        rho,
        T,
        float(r.get("a", 1.0)),
        float(r.get("b", 1.0)),
        alpha=power,
        vartheta=theta,
        rho_prime_T=rho_prime(T),
        name=name,
    )


def _cmd_simulate(args):
    r = Resolver(args)
    seed = r.seed(required=True)
    threads = int(r.get("threads", 1))
    steps = int(r.get("steps", 256))
    paths = int(r.get("paths", 100))
    out = r.get("out")
    if args.what == "fbm":
        batch = sample_fbm(
            float(r.get("H", required=True)),
            float(r.get("T", 1.0)),
            steps,
            paths,
            seed=seed,
            method=r.get("method", "circulant"),
            threads=threads,
        )
    else:
        model = _build_model_for_dc(args, r)
        grid = np.linspace(0.0, model.T, steps + 1)
        batch = sample_gaussian_grid(
            model.scalar_cov, grid, paths, seed=seed, threads=threads
        )
    csv_path = r.get("csv")
    if csv_path:
        batch.to_csv(csv_path)
    result = {
        "n_paths": batch.n_paths,
        "dim": batch.dim,
        "scheme": batch.scheme,
        "grid_nodes": len(batch.grid),
        "csv": csv_path,
        "value_summary": {
            "mean_final": float(np.mean(batch.values[..., -1]))
            if batch.dim == 1
            else None,
            "max_abs": float(np.max(np.abs(batch.values))),
        },
    }
    cfg = {"steps": steps, "paths": paths}
    return _emit("simulate %s" % args.what, seed, cfg, result, out)


def _cmd_verify(args):
    r = Resolver(args)
    threads = int(r.get("threads", 1))
    out = r.get("out")
    model = _build_model_for_dc(args, r) if args.what != "expansion" or True else None
    if args.what == "expansion":
        probe = {}
        for key, name in (("h0", "h0"), ("levels", "levels"), ("dirs", "n_dirs")):
            v = r.get(key)
            if v is not None:
                probe[name] = v
        seed = r.seed(required=False)
        if seed is not None:
            probe["seed"] = seed
        report = verify_expansion(model, probe=probe or None)
        dd = derive(model)
        result = {
            "report": report,
            "derived": dd.to_dict(),
            "model": model.describe(),
        }
        return _emit("verify expansion", seed, probe, result, out)
    seed = r.seed(required=True)
    u = float(r.get("u", required=True))
    eps = float(r.get("eps", required=True))
    steps = int(r.get("steps", 1024))
    paths = int(r.get("paths", 100000))
    full = mc_double_crossing(
        model, u, n_steps=steps, n_paths=paths, seed=seed, threads=threads
    )
    strip = diagonal_strip_probability(
        model, u, eps, n_steps=steps, n_paths=paths, seed=seed, threads=threads
    )
    result = {
        "full": full.to_dict(),
        "strip": strip.to_dict(),
        "contained": strip.p_hat <= full.p_hat,
        "model": model.describe(),
    }
    cfg = {"u": u, "eps": eps, "steps": steps, "paths": paths}
    return _emit("verify diagonal", seed, cfg, result, out)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.group == "qpp":
            return _cmd_qpp(args, as_genvar=False)
        if args.group == "genvar":
            return _cmd_qpp(args, as_genvar=True)
        if args.group == "constant":
            return _cmd_constant(args)
        if args.group == "dc":
            return _cmd_dc(args)
        if args.group == "simulate":
            return _cmd_simulate(args)
        if args.group == "verify":
            return _cmd_verify(args)
        parser.error("unknown subcommand")
    except ValidationError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except NumericalError as exc:
        print("numerical error: %s" % exc, file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
