"""Command-line entry point: ``gibbs-shapes <command> ...``.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from . import oracles as orc
from . import regime as rg
from .config import RunConfig, parse_float_list, parse_pair
from .ensemble import sample_batch
from .errors import ConfigError, EmptyGrid, GibbsShapesError, NumericalError, OverlappingIntervals, RegimeMismatch
from .models import make_model
from .scaling import make_plan
from .verify import empirical_curve, enumerate_profiles, parse_grid

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

_CURVE_ORACLES = {"step": "step", "gamma": "gamma", "zero": "zero", "process": "process"}
_LOCAL_ORACLES = ("gaussian", "discrete_gaussian", "hard_step", "mixed")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file; flags override it")
    common.add_argument("--out", help="output path (default stdout)")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--model", help="model spec, e.g. uniform or power:p=2,a=0.5")

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--mu", type=float)
    run.add_argument("--mu-list", dest="mu_list", type=parse_float_list)
    run.add_argument("--seed", type=int)
    run.add_argument("--n", type=int, help="number of samples")
    run.add_argument("--eps-tail", dest="eps_tail", type=float)
    run.add_argument("--rel-tol", dest="rel_tol", type=float)
    run.add_argument("--k-max", dest="k_max", type=int)

    curve = argparse.ArgumentParser(add_help=False)
    curve.add_argument("--grid", help="a:b:step")
    curve.add_argument("--exclude", type=parse_pair, help="lo,hi window left out of sup distances")
    curve.add_argument("--oracle")
    curve.add_argument("--kappa", type=float)
    curve.add_argument("--zeta", type=float)

    p = argparse.ArgumentParser(prog="gibbs-shapes", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"gibbs-shapes {__version__}")
    sub = p.add_subparsers(dest="command")
    c = sub.add_parser("classify", parents=[common, model], help="regime report")
    c.add_argument("--json", action="store_true", default=None)
    sub.add_parser("simulate", parents=[common, model, run], help="sample a batch")
    sub.add_parser("curve", parents=[common, model, run, curve], help="MC rescaled F vs limit shape")
    sub.add_parser("local", parents=[common, model, run, curve], help="MC local G vs local profile")
    v = sub.add_parser("verify", parents=[common], help="run the acceptance manifest")
    v.add_argument("--only", type=lambda s: tuple(x.strip() for x in s.split(",") if x.strip()))
    e = sub.add_parser("enumerate", parents=[common], help="exact profiles of a given mass")
    e.add_argument("--M", type=int)
    return p


def _config(ns):
    base = RunConfig.from_file(ns.config) if getattr(ns, "config", None) else RunConfig()
    overrides = {k: v for k, v in vars(ns).items() if k != "config"}
    cfg = base.merged(**overrides)
    cfg.validate()
    return cfg


def _need(cfg, *names):
    for name in names:
        if getattr(cfg, name) is None:
            raise ConfigError(f"{cfg.command} needs --{name.replace('_', '-')}")


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.12g}"


def _mus(cfg, model):
    if cfg.mu_list:
        return list(cfg.mu_list)
    if cfg.mu is not None:
        return [cfg.mu]
    if cfg.kappa is not None and cfg.command == "local":
        return [-float(model.du(cfg.kappa))]
    raise ConfigError(f"{cfg.command} needs --mu")


def cmd_classify(cfg):
    _need(cfg, "model")
    report = rg.classify(make_model(cfg.model))
    return report.to_json() + "\n" if cfg.json else report.to_text()


def cmd_simulate(cfg):
    _need(cfg, "model")
    model = make_model(cfg.model)
    out = []
    for mu in _mus(cfg, model):
        batch = sample_batch(model, mu, cfg.n, seed=cfg.seed, k_max=cfg.k_max, eps_tail=cfg.eps_tail)
        out.append(f"# gibbs-shapes {__version__} simulate model={cfg.model} mu={_fmt(mu)} "
                   f"seed={cfg.seed} n={cfg.n} k_max={batch.k_max}")
        out.append("sample_index,mass,parts")
        out.extend(batch.export_lines())
    return "\n".join(out) + "\n"


def _curve_oracle(cfg, plan, report, local):
    name = (cfg.oracle or "auto").lower()
    if local:
        auto = orc.auto_local_oracle(plan)
        if name == "auto":
            return auto
        if name not in _LOCAL_ORACLES:
            raise ConfigError(f"unknown local oracle {name!r}; choose from auto, {', '.join(_LOCAL_ORACLES)}")
        allowed = {auto.kind} | ({"gaussian", "mixed"} if report.non_monotone else set())
        if name not in allowed:
            raise ConfigError(f"oracle {name} does not match local profile {report.local_label}")
        return orc.make_oracle(name, plan.local_c)
    auto = orc.auto_shape_oracle(plan)
    if name == "auto":
        return auto
    if name not in _CURVE_ORACLES:
        raise ConfigError(f"unknown oracle {name!r}; choose from auto, {', '.join(_CURVE_ORACLES)}")
    if name != auto.kind:
        raise ConfigError(f"oracle {name} does not match regime {report.regime} (expected {auto.kind})")
    return auto


def cmd_curve(cfg, local=False):
    _need(cfg, "model", "grid")
    model = make_model(cfg.model)
    report = rg.classify(model)
    if local and report.regime != rg.SUPERCRITICAL:
        raise RegimeMismatch(f"local profiles need a supercritical model, got {report.regime}")
    grid = parse_grid(cfg.grid)
    out = []
    for mu in _mus(cfg, model):
        plan = make_plan(model, report, mu, kappa=cfg.kappa, zeta=cfg.zeta, rel_tol=cfg.rel_tol)
        oracle = _curve_oracle(cfg, plan, report, local)
        curve = empirical_curve(model, mu, plan, grid, cfg.n, seed=cfg.seed, kind="G" if local else "F",
                                k_max=cfg.k_max, eps_tail=cfg.eps_tail, excluded=cfg.exclude)
        target = np.asarray(oracle(grid), dtype=float)
        out.append(f"# gibbs-shapes {__version__} {cfg.command}")
        out.append(f"# model={cfg.model}")
        out.append(f"# seed={cfg.seed} n={cfg.n} oracle={oracle.label}")
        if cfg.exclude:
            out.append(f"# exclude={_fmt(cfg.exclude[0])},{_fmt(cfg.exclude[1])}")
        out.append("# plan " + " ".join(plan.header_lines()))
        out.append("x,empirical_mean,empirical_sd,oracle,n")
        for x, m, s, o in zip(grid, curve.mean, curve.sd, target):
            out.append(f"{_fmt(x)},{_fmt(m)},{_fmt(s)},{_fmt(o)},{cfg.n}")
    return "\n".join(out) + "\n"


def cmd_verify(cfg):
    from .acceptance import run_all

    results = run_all(only=cfg.only)
    lines = ["check_id,status,statistic,threshold"] + [r.line() for r in results]
    failed = [r.check_id for r in results if not r.passed]
    return "\n".join(lines) + "\n", failed


def cmd_enumerate(cfg):
    _need(cfg, "M")
    try:
        enum = enumerate_profiles(cfg.M)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    lines = ["profile,multiplicity"]
    lines += [f"{' '.join(str(c) for c in prof)},{mult}" for prof, mult in enum.profiles]
    return "\n".join(lines) + "\n"


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if ns.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = _config(ns)
        failed = []
        if cfg.command == "classify":
            text = cmd_classify(cfg)
        elif cfg.command == "simulate":
            text = cmd_simulate(cfg)
        elif cfg.command == "curve":
            text = cmd_curve(cfg)
        elif cfg.command == "local":
            text = cmd_curve(cfg, local=True)
        elif cfg.command == "verify":
            text, failed = cmd_verify(cfg)
        else:
            text = cmd_enumerate(cfg)
        _emit(text, cfg.out)
        if failed:
            print(f"verification failed: {', '.join(failed)}", file=sys.stderr)
            return EXIT_VERIFY
        return EXIT_OK
    except (ConfigError, RegimeMismatch, EmptyGrid, OverlappingIntervals) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except GibbsShapesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
