"""One pass/fail line per acceptance criterion, at the stated tolerances."""

import math
import time

import numpy as np
import pytest
from scipy.integrate import quad

from delaymem.algebraic import CrossValConfig, cross_validate
from delaymem.constraintmap import assemble, constraints, synthesize, synthesize_partial
from delaymem.examples import library
from delaymem.model import HistoryFunction, compatible_steps, make_grid
from delaymem.simulator import ControlSignal, condition_residuals, continuation, history_nodes, simulate

from conftest import random_spec, scalar_spec


@pytest.fixture(scope="module")
def crossval():
    return cross_validate(CrossValConfig())


def test_integrator_control(accept):
    spec = scalar_spec()
    start = time.perf_counter()
    res = synthesize(assemble(spec, make_grid(spec, 100)))
    elapsed = time.perf_counter() - start
    dev = float(np.max(np.abs(res.control.values + 1.0)))
    ok = dev <= 1e-10 and abs(res.energy - 1.0) <= 1e-9 and elapsed < 1.0
    accept("1 integrator u*=-1", ok, f"max|u+1|={dev:.2e}, |E-1|={abs(res.energy - 1):.2e}, {elapsed:.3f}s")


def test_continuous_energy(accept):
    spec = scalar_spec(a=1.0)
    W, _ = quad(lambda s: math.exp(2 * (1.0 - s)), 0.0, 1.0)
    oracle = math.exp(2.0) / W
    errs = [abs(synthesize(assemble(spec, make_grid(spec, N))).energy - oracle) / oracle for N in (200, 400)]
    ok = errs[0] <= 0.01 and errs[1] < errs[0]
    accept("2 energy vs continuous Gramian", ok, f"rel err N=200 {errs[0]:.2e}, N=400 {errs[1]:.2e}")


def test_simulator_fidelity(accept):
    spec = scalar_spec(a=-1.0)
    errs = [abs(simulate(spec, make_grid(spec, N)).final()[0] - math.exp(-1)) for N in (50, 100, 200)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    delay = scalar_spec(a1=1.0, h=1.0, T=2.0)
    traj = simulate(delay, make_grid(delay, 400))
    y1, y2 = traj.at_step(200)[0], traj.final()[0]
    ok = all(3.0 <= r <= 5.0 for r in ratios) and abs(y1 - 2.0) <= 1e-6 and abs(y2 - 3.5) <= 1e-6
    accept("3 simulator order and method of steps", ok,
           f"ratios {ratios[0]:.3f}, {ratios[1]:.3f}; y(1)={y1:.12f}, y(2)={y2:.12f}")


@pytest.mark.parametrize("name", [k for k, e in library().items() if e.controllable])
def test_library_instance(accept, name):
    spec = library()[name].spec
    start = time.perf_counter()
    grid = make_grid(spec, compatible_steps(spec, 400))
    res = synthesize(assemble(spec, grid))
    window = spec.h if spec.h > 0 else spec.T / 10
    rest = continuation(spec, grid, res.control, window)["rest_max"]
    elapsed = time.perf_counter() - start
    phi = float(np.max(np.abs(history_nodes(spec, grid))))
    worst = max(res.residuals)
    ok = res.controllable and worst <= 1e-6 * max(1.0, phi) and rest <= 1e-5 * phi and elapsed < 60
    accept(f"4 library {name}", ok,
           f"N={grid.n_horizon}, max residual {worst:.2e}, rest {rest:.2e}, {elapsed:.2f}s")


def test_dropped_conditions(accept):
    delay = scalar_spec(a1=1.0, h=1.0, T=2.0)
    grid = make_grid(delay, 400)
    res = synthesize_partial(assemble(delay, grid), {"c"})
    rest = continuation(delay, grid, res.control, delay.h)["rest_max"]
    ok_c = res.residual_a <= 1e-6 and res.residual_b <= 1e-6 and rest >= 1e-3

    mem = scalar_spec(kernel=library()["constant-kernel-memory"].spec.kernel)
    mgrid = make_grid(mem, 400)
    res_b = synthesize_partial(assemble(mem, mgrid), {"b"})
    drift = continuation(mem, mgrid, res_b.control, mem.T / 10)["memory_drift"]
    ok_b = drift >= 1e-3
    accept("5 dropped conditions are necessary", ok_c and ok_b,
           f"drop c: res_a {res.residual_a:.1e}, res_b {res.residual_b:.1e}, rest {rest:.3f}; "
           f"drop b: memory drift {drift:.3f}")


def test_kalman_cross_validation(accept, crossval):
    s = crossval["summary"]
    fams = ("crafted-controllable", "crafted-uncontrollable", "random")
    agree = sum(s[f]["agree"] for f in fams)
    compared = sum(s[f]["compared"] for f in fams)
    mismatch = sum(s[f]["ground_truth_mismatch"] for f in fams)
    borderline = s["random"]["borderline"]
    ok = compared >= 40 and agree == compared and mismatch == 0
    accept("6 Kalman vs Gramian (20+20+50)", ok,
           f"{agree}/{compared} agree, {borderline} borderline excluded, ground-truth mismatches {mismatch}")


def test_separable_cross_validation(accept, crossval):
    s = crossval["summary"]["separable"]
    aug = crossval["augmentation_checks"]
    worst = max(r["augmentation_error"] for r in crossval["records"] if r["family"] == "separable")
    ok = s["agree"] == s["compared"] and aug["run"] == 50 and aug["passed"] == 50 and worst <= 1e-8
    accept("7 augmented Kalman vs Gramian (50 separable)", ok,
           f"{s['agree']}/{s['compared']} agree ({s['borderline']} borderline), "
           f"structural checks {aug['passed']}/{aug['run']}, worst {worst:.1e}")


def test_linearity_and_affinity(accept):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        spec = random_spec(rng, T=1.0)
        grid = make_grid(spec, 40)
        p1, p2 = rng.standard_normal((2, 2, spec.n))
        u1, u2 = rng.standard_normal((2, grid.n_horizon, spec.m))
        a, b = rng.standard_normal(2)
        run = lambda p, u: simulate(spec.replace(history=HistoryFunction.polynomial(p)), grid,
                                    ControlSignal(grid.dt, u)).states
        lhs = run(a * p1 + b * p2, a * u1 + b * u2)
        rhs = a * run(p1, u1) + b * run(p2, u2)
        worst = max(worst, np.max(np.abs(lhs - rhs)) / max(1.0, np.max(np.abs(lhs))))
        cm = assemble(spec, grid)
        U = rng.standard_normal(grid.n_horizon * spec.m)
        direct = constraints(spec, grid, U)
        worst = max(worst, np.linalg.norm(direct - cm.apply(U)) / max(1.0, np.linalg.norm(direct)))
    accept("8 linearity, superposition, affinity (20 instances)", worst <= 1e-10, f"worst relative {worst:.2e}")


def test_delay_table(accept, crossval):
    again = cross_validate(CrossValConfig())
    table = crossval["delay_table"]
    same = table == again["delay_table"]
    counts = sum(r["instances"] for r in table.values())
    ok = same and counts == 30 and set(table) == {"1.5", "2", "3"}
    rows = "; ".join(f"T/h={k}: " + ", ".join(f"{c}={v}" for c, v in r.items()) for k, r in sorted(table.items()))
    accept("9 delay defining-matrix table", ok, f"deterministic={same}; {rows}")


def test_delay_table_reference_agreement():
    pytest.skip("reference defining-matrix construction is not available; the table is reported, not scored")
