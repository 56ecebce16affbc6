"""Acceptance gate: the nine numbered checks this package must pass, each
at its stated tolerance and runtime budget.  Run with ``pytest -v -s
tests/test_acceptance.py`` to see one line per criterion."""

import math
import time

import numpy as np
import pytest

from mgdlab.datagen import DataGenSpec, make_ar_covariance, make_dataset
from mgdlab.dynsys import (
    asymptotic_moments,
    contraction_set,
    eval_bounds,
    fixed_point_residual,
    stable_solution,
)
from mgdlab.engine import RunConfig, q2_epoch_error, run
from mgdlab.experiments import (
    ExperimentSpec,
    rep_seed,
    run_case2,
    run_general_loss,
    run_io_benchmark,
)
from mgdlab.linalg import eig_sym
from mgdlab.losses import batch_stats, grad, loss_value, ols
from mgdlab.partitions import make_fixed, make_sampled, make_shuffled
from mgdlab.schedules import constant, polynomial, satisfies_convergence_conditions


def _report(tag: str, started: float, budget: float, detail: str) -> None:
    elapsed = time.time() - started
    print(f"[PASS] {tag}: {detail} ({elapsed:.1f}s / budget {budget:.0f}s)")
    assert elapsed < budget, f"{tag} exceeded its runtime budget"


def _linear(seed, N, p, **kw):
    return make_dataset(DataGenSpec(N=N, p=p, model="linear", seed=seed, **kw))


def test_a1_closed_form_gd_trajectory():
    started = time.time()
    worst = 0.0
    for k in range(20):
        data = _linear(rep_seed(101, k), N=500, p=10)
        ref = ols(data)
        stats = batch_stats(data, np.arange(data.N))
        for alpha in (0.05, 0.1):
            delta = np.eye(10) - alpha * stats.sxx
            traj = run(data, RunConfig(method="gd", schedule=constant(alpha), T=50,
                                       seed=k))
            for t in (1, 5, 50):
                power = np.linalg.matrix_power(delta, t)
                closed = (np.eye(10) - power) @ ref + power @ np.zeros(10)
                err = float(np.linalg.norm(traj.iterates[t - 1] - closed))
                worst = max(worst, err)
                assert err <= 1e-10
    _report("A1 closed-form full-batch trajectory", started, 5.0,
            f"20 instances, worst deviation {worst:.2e} <= 1e-10")


def test_a2_stable_solution_equivalence():
    started = time.time()
    worst_block = 0.0
    worst_resid = 0.0
    for k in range(20):
        M = (2, 5, 10)[k % 3]
        data = _linear(rep_seed(202, k), N=600, p=5)
        plan = make_fixed(600, M, seed=k)
        stats = [batch_stats(data, b) for b in plan.batches]
        cs = contraction_set(stats, 0.05)
        sol = stable_solution(cs, [s.sxy for s in stats])
        resid = fixed_point_residual(cs, [s.sxy for s in stats], sol)
        worst_resid = max(worst_resid, resid)
        assert resid <= 1e-8
        traj = run(data, RunConfig(method="fmgd", schedule=constant(0.05), T=10_000,
                                   M=M, seed=k, record="final_only"))
        err = float(np.abs(traj.last_epoch - sol.theta_star).max())
        worst_block = max(worst_block, err)
        assert err <= 1e-8
    _report("A2 stable-solution equivalence", started, 30.0,
            f"20 instances, worst block gap {worst_block:.2e}, "
            f"worst residual {worst_resid:.2e}")


def test_a3_contraction_rate_matches_slope():
    started = time.time()
    checked = 0
    worst_rel = 0.0
    for k in range(24):
        data = _linear(rep_seed(303, k), N=600, p=5)
        M = (3, 5)[k % 2]
        plan = make_fixed(600, M, seed=k)
        stats = [batch_stats(data, b) for b in plan.batches]
        lam_top = max(eig_sym(s.sxx)[0] for s in stats)
        sol = None
        for alpha in (0.35, 0.3, 0.25, 0.2, 0.15, 0.1):
            if alpha >= 1.0 / lam_top:
                continue  # keep every per-batch operator positive definite
            cs = contraction_set(stats, alpha)
            cand = stable_solution(cs, [s.sxy for s in stats])
            if 0.35 <= cand.rho_cycle <= 0.93:
                sol = cand
                break
        if sol is None:
            continue
        traj = run(data, RunConfig(method="fmgd", schedule=constant(alpha), T=500,
                                   M=M, seed=k), reference=sol.theta_star[-1])
        err = traj.numerical_error
        usable = np.nonzero(err > 1e-12)[0]
        hi = usable[-1]
        lo = max(5, hi - max(8, hi // 3))  # tail only: subdominant modes dead
        assert hi - lo >= 8, "fit window too short"
        slope = np.polyfit(np.arange(lo, hi + 1), np.log(err[lo:hi + 1]), 1)[0]
        rel = abs(slope - math.log(sol.rho_cycle)) / abs(math.log(sol.rho_cycle))
        worst_rel = max(worst_rel, rel)
        assert rel <= 0.10, f"instance {k}: slope {slope:.4f} vs log rho " \
                            f"{math.log(sol.rho_cycle):.4f}"
        checked += 1
    assert checked >= 20
    _report("A3 per-epoch rate equals cycle spectral radius", started, 30.0,
            f"{checked} instances in rho range [0.3, 0.95], worst deviation "
            f"{100 * worst_rel:.1f}% <= 10%")


def test_a4_asymptotic_moment_inflation():
    started = time.time()
    N, p, M, B = 500, 5, 5, 500
    sigma = make_ar_covariance(p, 0.5)
    theta = np.ones(p)
    draws = {0.0: [], 0.05: [], 0.1: []}
    for b in range(B):
        data = _linear(rep_seed(404, b), N=N, p=p)
        plan = make_fixed(N, M, seed=b)
        stats = [batch_stats(data, bt) for bt in plan.batches]
        draws[0.0].append(ols(data))
        for alpha in (0.05, 0.1):
            sol = stable_solution(contraction_set(stats, alpha),
                                  [s.sxy for s in stats])
            draws[alpha].append(sol.theta_star[-1])
    traces = {}
    worst = 0.0
    for alpha in (0.05, 0.1):
        sample = np.sqrt(N) * np.asarray(draws[alpha])
        emp = np.cov(sample, rowvar=False)
        theory = asymptotic_moments(sigma, alpha, M, theta).v  # sigma_eps = 1
        rel = np.abs(np.diag(emp) - np.diag(theory)) / np.diag(theory)
        worst = max(worst, float(rel.max()))
        assert rel.max() <= 0.15, f"alpha={alpha}: diagonal off by {rel.max():.3f}"
        traces[alpha] = float(np.trace(emp))
    traces[0.0] = float(np.trace(np.cov(np.sqrt(N) * np.asarray(draws[0.0]),
                                        rowvar=False)))
    assert traces[0.1] > traces[0.05] > traces[0.0]
    _report("A4 asymptotic variance inflation", started, 180.0,
            f"B={B}, worst diagonal deviation {100 * worst:.1f}% <= 15%, "
            f"trace ordering {traces[0.1]:.2f} > {traces[0.05]:.2f} > "
            f"{traces[0.0]:.2f}")


def test_a5_schedule_sweeps(tmp_path):
    budget_per_model = 300.0

    started = time.time()
    case2 = run_case2(ExperimentSpec(name="a5-linear", experiment="case2",
                                     outputs=str(tmp_path / "case2")))
    linear_elapsed = time.time() - started
    gammas = case2.settings["gammas"]
    curve = {g: float(np.mean(np.log(case2.samples[("fmgd", g)]))) for g in gammas}
    ols_mean = float(np.mean(np.log(case2.samples["ols"])))
    assert abs(curve[0.8] - ols_mean) < 0.15
    assert curve[0.3] - ols_mean > 0.5
    ols_rows = [r for r in case2.rows if r[1] == "ols"]
    assert len({r[2] for r in ols_rows}) == 1  # reference curve flat in gamma
    assert linear_elapsed < budget_per_model

    started_glm = time.time()
    general = run_general_loss(ExperimentSpec(name="a5-glm", experiment="general_loss",
                                              outputs=str(tmp_path / "general")))
    glm_elapsed = time.time() - started_glm
    details = [f"linear: gamma0.8 {curve[0.8] - ols_mean:+.3f}, "
               f"gamma0.3 {curve[0.3] - ols_mean:+.3f}"]
    for model, tol in (("logistic", 0.2), ("poisson", 0.2)):
        mle_mean = float(np.mean(np.log(general.samples[(model, "mle")])))
        fmgd = {g: float(np.mean(np.log(general.samples[(model, "fmgd", g)])))
                for g in gammas}
        assert abs(fmgd[0.8] - mle_mean) < tol
        assert fmgd[0.3] - mle_mean > 0.5
        for method in ("fmgd", "sfmgd", "smgd"):
            worst_gamma = float(np.mean(np.log(general.samples[(model, method, 0.1)])))
            assert worst_gamma - mle_mean > 0.5
        details.append(f"{model}: gamma0.8 {fmgd[0.8] - mle_mean:+.3f}, "
                       f"gamma0.3 {fmgd[0.3] - mle_mean:+.3f}")
    assert glm_elapsed < 2 * budget_per_model  # two models in one sweep
    print(f"[PASS] A5 decay-exponent sweeps: {'; '.join(details)} "
          f"(linear {linear_elapsed:.0f}s, glm {glm_elapsed:.0f}s / "
          f"budget {budget_per_model:.0f}s per model)")


def test_a6_constant_rate_shuffled_bound():
    started = time.time()
    N, p, M, T = 600, 5, 5, 60
    for k in range(20):
        data = _linear(rep_seed(606, k), N=N, p=p)
        ref = ols(data)
        lam_min, lam_max, grad_max = np.inf, 0.0, 0.0
        for t in range(1, T + 1):
            plan = make_shuffled(N, M, seed=k, epoch=t)
            for b in plan.batches:
                st = batch_stats(data, b)
                vals = eig_sym(st.sxx)
                lam_min = min(lam_min, vals[-1])
                lam_max = max(lam_max, vals[0])
                grad_max = max(grad_max, float(np.linalg.norm(st.sxx @ ref - st.sxy)))
        alpha = 0.9 / (M * lam_max)
        traj = run(data, RunConfig(method="sfmgd", schedule=constant(alpha), T=T,
                                   M=M, seed=k), reference=ref)
        bound = eval_bounds("constant_shuffled", lam_min=lam_min, lam_max=lam_max,
                            grad_max=grad_max, M=M, T=T, alpha=alpha,
                            init_dist=float(np.linalg.norm(ref)))
        assert np.all(traj.numerical_error <= bound + 1e-12), f"instance {k}"
    _report("A6 constant-rate reshuffle bound dominates", started, 30.0,
            "20 instances, observed error under the bound at every epoch")


def test_a7_one_epoch_error_scaling():
    started = time.time()
    alphas = np.array([0.2, 0.1, 0.05, 0.025])
    B, M = 100, 5
    means = {"fmgd": [], "smgd": []}
    for method in ("fmgd", "smgd"):
        errs = np.empty((B, len(alphas)))
        for b in range(B):
            data = _linear(rep_seed(707, b), N=500, p=5)
            for j, alpha in enumerate(alphas):
                errs[b, j] = q2_epoch_error(data, method, float(alpha), M, seed=b)
        means[method] = errs.mean(axis=0)
    slope_f = np.polyfit(np.log(alphas), np.log(means["fmgd"]), 1)[0]
    slope_s = np.polyfit(np.log(alphas), np.log(means["smgd"]), 1)[0]
    assert abs(slope_f - 2.0) <= 0.3
    assert abs(slope_s - 1.0) <= 0.3
    _report("A7 one-epoch error scaling in the rate", started, 60.0,
            f"fixed-partition slope {slope_f:.2f} (2 +/- 0.3), sampled slope "
            f"{slope_s:.2f} (1 +/- 0.3)")


def test_a8_packaged_reads_beat_shuffled_reads(tmp_path):
    started = time.time()
    report = run_io_benchmark(ExperimentSpec(name="a8-io", experiment="io_benchmark",
                                             outputs=str(tmp_path / "io")))
    kappas = report.settings["kappas"]
    packaged = report.samples["packaged_means"]
    shuffled = report.samples["shuffled_means"]
    for k, pm, sm in zip(kappas, packaged, shuffled):
        assert pm < sm, f"kappa={k}: packaged {pm} not below shuffled {sm}"
        assert report.samples[(k, "pack_seconds")] <= 2 * sm
    assert all(a < b for a, b in zip(packaged, packaged[1:]))
    assert all(a < b for a, b in zip(shuffled, shuffled[1:]))
    assert report.samples["equal_results"] is True
    _report("A8 packaged-batch reads beat row-addressed reads", started, 300.0,
            "; ".join(f"kappa={k}: {pm * 1e3:.1f}ms vs {sm * 1e3:.1f}ms"
                      for k, pm, sm in zip(kappas, packaged, shuffled)))


def test_a9_invariant_suites(tmp_path):
    started = time.time()

    # partition cover and disjointness
    for N, M in ((60, 5), (120, 8), (36, 6)):
        for plan in (make_fixed(N, M, seed=1), make_shuffled(N, M, seed=1, epoch=3)):
            assert sorted(plan.batches.reshape(-1).tolist()) == list(range(N))
    sampled = make_sampled(50, 4, 10, seed=1, epoch=1)
    assert sampled.batches.min() >= 0 and sampled.batches.max() < 50

    # batch-moment averaging identity at 1e-12 under compensated summation
    data = _linear(909, N=120, p=4)
    plan = make_fixed(120, 6, seed=9)
    parts = [batch_stats(data, b) for b in plan.batches]
    full = batch_stats(data, np.arange(120))
    for i in range(4):
        assert abs(math.fsum(s.sxy[i] for s in parts) / 6 - full.sxy[i]) <= 1e-12
        for j in range(4):
            assert abs(math.fsum(s.sxx[i, j] for s in parts) / 6 - full.sxx[i, j]) <= 1e-12

    # gradient versus central differences for every loss kind
    rng = np.random.default_rng(99)
    for kind, model in (("least_squares", "linear"), ("logistic", "logistic"),
                        ("poisson", "poisson")):
        gdata = make_dataset(DataGenSpec(N=24, p=3, model=model, seed=17))
        batch = (gdata.X, gdata.Y)
        theta = 0.2 * rng.standard_normal(3)
        arg = batch_stats(gdata, np.arange(24)) if kind == "least_squares" else batch
        g = grad(kind, arg, theta)
        h = 1e-6
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fd = (loss_value(kind, batch, theta + e)
                  - loss_value(kind, batch, theta - e)) / (2 * h)
            assert abs(fd - g[j]) / max(np.abs(g).max(), 1e-12) < 1e-5

    # schedule predicate against the direct p-series classification
    gammas = np.random.default_rng(3).uniform(0.01, 2.0, size=200)
    for gamma in gammas:
        verdict = satisfies_convergence_conditions(polynomial(0.01, float(gamma)), 10.0)
        expected = "yes" if (gamma <= 1.0 and 2 * gamma > 1.0) else "no"
        assert verdict.verdict == expected

    # seeded pipelines reproduce byte-identical reports
    overrides = dict(N=200, p=5, B=3, n=25, T=6, gammas=[0.4, 0.8])
    a_dir, b_dir = tmp_path / "a", tmp_path / "b"
    run_case2(ExperimentSpec(name="det", experiment="case2", outputs=str(a_dir),
                             overrides=overrides))
    run_case2(ExperimentSpec(name="det", experiment="case2", outputs=str(b_dir),
                             overrides=overrides))
    assert (a_dir / "case2_curve.csv").read_bytes() == (b_dir / "case2_curve.csv").read_bytes()
    assert (a_dir / "case2_curve.svg").read_bytes() == (b_dir / "case2_curve.svg").read_bytes()

    _report("A9 invariant suites", started, 60.0,
            "partitions, moment averaging, finite differences, predicate, "
            "byte-identical reports")
