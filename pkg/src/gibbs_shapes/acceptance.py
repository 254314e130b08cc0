"""The fixed acceptance suite; parameters live in the versioned manifest.json."""

from __future__ import annotations

import io
import json
import math
import os
from contextlib import contextmanager, redirect_stdout
from importlib import resources

import numpy as np

from . import oracles as orc
from . import specfun
from .ensemble import THREADS_ENV, sample_batch
from .models import make_model
from .regime import classify
from .scaling import make_plan, solve_kappa
from .series import concentration_ratio, expected_mass, log_partition, sum_S
from .verify import (
    CheckResult,
    bell_numbers,
    canonical_profile_probability,
    check_divergence,
    check_poissonization,
    check_zero_shape,
    empirical_curve,
    enumerate_profiles,
    nearest_index,
    parse_grid,
    poisson_profile_probability,
    subsequence_profiles,
    sup_distance,
    test_poisson_counts,
)


def load_manifest():
    text = resources.files("gibbs_shapes").joinpath("manifest.json").read_text(encoding="utf-8")
    return json.loads(text)


def _plan_for(model, mu, **kw):
    return make_plan(model, classify(model), mu, **kw)


def c1(p, seed):
    bell = bell_numbers(p["M_max"])
    bad = [M for M in range(1, p["M_max"] + 1) if enumerate_profiles(M).total != bell[M]]
    return [CheckResult("1.bell", not bad, float(len(bad)), "mismatches==0")]


def c2(p, seed):
    u = make_model("uniform")
    res = check_poissonization(u, p["mu_poissonization"], p["M_max"])
    out = [CheckResult("2.poissonization", res < p["residual_max"], res, f"<{p['residual_max']:g}")]
    for mu in p["log_partition_mus"]:
        err = abs(log_partition(u, mu).value - (math.exp(math.exp(-mu)) - 1.0))
        out.append(CheckResult(f"2.log_partition[mu={mu:.6g}]", err < p["log_partition_tol"], err,
                               f"<{p['log_partition_tol']:g}"))
    return out


def c3(p, seed):
    u = make_model("uniform")
    mu = p["mu"]
    total = log_partition(u, mu, 1e-15).value
    worst = 0.0
    for M in range(1, p["M_max"] + 1):
        for prof, _mult in enumerate_profiles(M).profiles:
            a = canonical_profile_probability(prof, u, mu, total)
            b = poisson_profile_probability(prof, u, mu, total)
            worst = max(worst, abs(a - b))
    # empty profile: e^{-sum alpha} both ways
    worst = max(worst, abs(math.exp(-total) - poisson_profile_probability((), u, mu, total)))
    return [CheckResult("3.multiplicativity", worst < p["tol"], worst, f"<{p['tol']:g}")]


def c4(p, seed):
    u = make_model(p["model"])
    grid = parse_grid(p["grid"])
    dists = []
    for kappa in p["kappas"]:
        mu = -math.log(kappa)
        plan = _plan_for(u, mu)
        curve = empirical_curve(u, mu, plan, grid, p["n"], seed=seed, excluded=tuple(p["exclude"]))
        dists.append(sup_distance(curve, orc.step_shape))
    decreasing = all(a > b for a, b in zip(dists, dists[1:]))
    out = [CheckResult(f"4.sup[kappa={k}]", True, d, "info") for k, d in zip(p["kappas"], dists)]
    out.append(CheckResult("4.decreasing", decreasing, float(decreasing), "==1"))
    out.append(CheckResult("4.final", dists[-1] < p["final_max"], dists[-1], f"<{p['final_max']:g}"))
    return out


def c5(p, seed):
    u = make_model(p["model"])
    mu = -math.log(p["kappa_nominal"])
    kappa = solve_kappa(u, mu)
    conc = concentration_ratio(u, mu, *p["lambda"], kappa=kappa)
    ratio = kappa * math.exp(sum_S(u, mu).log_value - expected_mass(u, mu).log_value)
    lo, hi = p["ratio_window"]
    return [
        CheckResult("5.concentration", conc >= p["ratio_min"], conc, f">={p['ratio_min']:g}"),
        CheckResult("5.kappa_S_over_EM", lo <= ratio <= hi, ratio, f"in[{lo:g},{hi:g}]"),
    ]


def c6(p, seed):
    m = make_model(p["model"])
    plan = _plan_for(m, p["mu"])
    curve = empirical_curve(m, p["mu"], plan, parse_grid(p["grid"]), p["n"], seed=seed)
    d = sup_distance(curve, orc.make_oracle("gamma", p["d"]))
    mm = p["mass_mu"]
    ratio = expected_mass(m, mm).value * mm**3 / math.gamma(p["d"] + 1.0)
    lo, hi = p["mass_window"]
    return [
        CheckResult("6.gamma_sup", d < p["sup_max"], d, f"<{p['sup_max']:g}"),
        CheckResult("6.mass_asymptotic", lo <= ratio <= hi, ratio, f"in[{lo:g},{hi:g}]"),
    ]


def c7(p, seed):
    m = make_model(p["model"])
    mu = p["mu"]
    batch = sample_batch(m, mu, p["n"], seed=seed)
    rep = test_poisson_counts(batch, m, mu, [tuple(iv) for iv in p["intervals"]], p["C"])
    out = []
    for st in rep.intervals:
        tag = f"[{st.interval[0]:g},{st.interval[1]:g})"
        out.append(CheckResult(f"7.mean{tag}", abs(st.z) <= p["z_max"], abs(st.z), f"<={p['z_max']:g}sd"))
        rel = abs(st.exact_mean - st.limit_mean) / st.limit_mean
        out.append(CheckResult(f"7.limit{tag}", rel <= p["limit_rel"], rel, f"<={p['limit_rel']:g}"))
    lo, hi = p["dispersion"]
    out.append(CheckResult("7.dispersion", lo <= rep.dispersion <= hi, rep.dispersion, f"in[{lo:g},{hi:g}]"))
    out.append(CheckResult("7.chi2_p", rep.p_value >= p["p_min"], rep.p_value, f">={p['p_min']:g}"))
    return out


def c8(p, seed):
    m = make_model(p["model"])
    kappa = float(p["kappa"])
    mu = -float(m.du(kappa))
    plan = _plan_for(m, mu)
    curve = empirical_curve(m, mu, plan, parse_grid(p["grid"]), p["n"], seed=seed, kind="G")
    d = sup_distance(curve, orc.gaussian_tail)
    return [CheckResult("8.gaussian_sup", d < p["sup_max"], d, f"<{p['sup_max']:g}")]


def c9(p, seed):
    m = make_model(p["model"])
    plan = _plan_for(m, p["mu"])
    curve = empirical_curve(m, p["mu"], plan, np.asarray(p["xs"], dtype=float), p["n"], seed=seed, kind="G")
    d = sup_distance(curve, orc.make_oracle("discrete_gaussian", p["c"]))
    return [CheckResult("9.discrete_gaussian_max", d < p["tol"], d, f"<{p['tol']:g}")]


def c10(p, seed):
    m = make_model(p["model"])
    kappa = float(p["kappa"])
    mu = -float(m.du(kappa))
    ddu = float(m.ddu(kappa))
    plan = _plan_for(m, mu, kappa=kappa)
    batch = sample_batch(m, mu, p["n"], seed=seed)
    far = total = 0.0
    for part in batch.partitions:
        w = part.counts.astype(float)
        far += float(np.sum(w[np.abs(part.sizes - kappa) > 2]))
        total += float(np.sum(w))
    frac = far / total
    grid = parse_grid(p["grid"])
    curve = empirical_curve(m, mu, plan, grid, p["n"], seed=seed, kind="G", excluded=tuple(p["exclude"]))
    d = sup_distance(curve, orc.hard_step)
    return [
        CheckResult("10.ddu_at_kappa", ddu >= p["ddu_min"], ddu, f">={p['ddu_min']:g}"),
        CheckResult("10.far_fraction", frac < p["far_fraction_max"], frac, f"<{p['far_fraction_max']:g}"),
        CheckResult("10.hard_step_sup", d < p["sup_max"], d, f"<{p['sup_max']:g}"),
    ]


def c11(p, seed):
    m = make_model(p["model"])
    n = p["n_level"]
    c1_, c2_, _p1, _p2 = subsequence_profiles(m, [n], p["n"], seed=seed, grid=parse_grid(p["grid"]))[n]
    d1 = sup_distance(c1_, orc.gaussian_tail)
    d2 = sup_distance(c2_, orc.mixed_counterexample_tail)
    i = nearest_index(c2_.grid, p["gap_x"])
    gap = abs(c2_.mean[i] - orc.gaussian_tail(c2_.grid[i]))
    return [
        CheckResult("11.seq1_vs_gaussian", d1 < p["sup_max"], d1, f"<{p['sup_max']:g}"),
        CheckResult("11.seq2_vs_mixed", d2 < p["sup_max"], d2, f"<{p['sup_max']:g}"),
        CheckResult("11.seq2_gap_from_gaussian", gap >= p["gap_min"], gap, f">={p['gap_min']:g}"),
    ]


def c12(p, seed):
    m = make_model(p["divergent_model"])
    bound = check_divergence(m, p["mu"], p["m"], p["N"])
    out = [CheckResult("12.divergence_bound", bound < p["bound_max"], bound, f"<{p['bound_max']:g}")]
    for spec in p["zero_models"]:
        vals = check_zero_shape(make_model(spec), p["mus"], p["x"], p["y"])
        ok = all(a > b for a, b in zip(vals, vals[1:]))
        out.append(CheckResult(f"12.zero_shape[{spec}]", ok, vals[-1], "strictly_decreasing"))
    return out


def c13(p, seed):
    gerr = max(abs(orc.gamma_shape(x, 1.0) - math.exp(-x)) for x in p["gamma_xs"])
    t = abs(specfun.gaussian_tail(p["gauss_x"]) - p["gauss_value"])
    th = abs(orc.theta_sum(p["theta_c"]) - p["theta_value"])
    return [
        CheckResult("13.gamma_shape_d1", gerr <= p["gamma_tol"], gerr, f"<={p['gamma_tol']:g}"),
        CheckResult("13.gaussian_tail", t <= p["gauss_tol"], t, f"<={p['gauss_tol']:g}"),
        CheckResult("13.theta_sum", th <= p["theta_tol"], th, f"<={p['theta_tol']:g}"),
    ]


@contextmanager
def _env(key, value):
    old = os.environ.get(key)
    os.environ[key] = value
    try:
        yield
    finally:
        if old is None:
            del os.environ[key]
        else:
            os.environ[key] = old


def c14(p, seed):
    from .cli import run

    outputs = []
    for threads in p["threads"]:
        for _ in range(2):
            buf = io.StringIO()
            with _env(THREADS_ENV, str(threads)), redirect_stdout(buf):
                code = run(list(p["argv"]))
            outputs.append((code, buf.getvalue().encode("utf-8")))
    same = all(o == outputs[0] for o in outputs) and outputs[0][0] == 0
    return [CheckResult("14.byte_identical", same, float(len(outputs)), "all_equal")]


CRITERIA = {str(i): f for i, f in enumerate((c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12, c13, c14), start=1)}


def run_criterion(cid, manifest=None):
    manifest = manifest or load_manifest()
    cid = str(cid)
    return CRITERIA[cid](manifest["criteria"][cid], manifest["seed"])


def run_all(only=None, manifest=None):
    manifest = manifest or load_manifest()
    results = []
    for cid in CRITERIA:
        if only and cid not in only:
            continue
        results.extend(run_criterion(cid, manifest))
    return results
