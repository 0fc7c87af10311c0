"""Acceptance criteria A1-A9, each at its stated parameters and tolerance.

Every test logs one PASS/FAIL line (see ``record_criterion``) with the
measured numbers, then asserts the verdict.  Run with ``-s`` to see the lines
inline; they are also collected in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from conftest import periodic_ka, product_echo
from tfim_gyro import (
    ChainSpec,
    EchoError,
    FieldConfig,
    ProtocolConfig,
    collapse_check,
    fit_eta,
    half_width,
    log_echo_partial_sum,
    approx_params,
    loschmidt_echo,
    resolution,
    run_trials,
    scan_curve,
)
from tfim_gyro.analysis import CONVENTIONS, REFERENCE_SQRT_ETA
from tfim_gyro.core import _log_factors_from_angles
from tfim_gyro.ed import frame_convergence, frame_equivalence_check, loschmidt_echo_ed_series
from tfim_gyro.protocol import scan_and_estimate

J = HBAR = 1.0
T0 = HBAR / (2 * J)


def test_a1_valley(record_criterion):
    omega = np.linspace(0.0, 4.0, 2001)
    start = time.perf_counter()
    curve = scan_curve(ChainSpec(2000), 0.01, 2.0, omega, time=T0)
    elapsed = time.perf_counter() - start
    echo = curve.echo
    far = np.abs(omega - 2.0) > 0.5
    below = np.flatnonzero(echo < 0.5)
    single = below.size > 0 and np.all(np.diff(below) == 1)
    w_min, l_min = curve.minimum()
    target = 2 * (1 + 0.01) * J / HBAR
    checks = {
        "far L>0.9": bool(np.all(echo[far] > 0.9)),
        "single valley below 1/2": bool(single),
        "minimizer": abs(w_min - target) <= 0.02,
        "runtime<5s": elapsed < 5.0,
    }
    ok = record_criterion(
        "A1", all(checks.values()),
        f"min L={l_min:.6f} at omega={w_min:.4f} (target {target:.2f}); "
        f"min far L={echo[far].min():.4f}; {elapsed:.2f}s; {checks}",
    )
    assert ok


def test_a2_collapse(record_criterion):
    cases = [(200, 0.1), (500, 0.063), (2000, 0.032), (20000, 0.01)]
    start = time.perf_counter()
    try:
        report = collapse_check(cases, time=T0)
    except EchoError as exc:
        elapsed = time.perf_counter() - start
        record_criterion("A2", False, f"{type(exc).__name__}: {exc} ({elapsed:.2f}s)")
        raise
    elapsed = time.perf_counter() - start
    ok = record_criterion(
        "A2", report.passed and elapsed < 30.0,
        f"widths={[round(w, 5) for w in report.half_widths]} max dev={report.max_deviation:.4f}; {elapsed:.2f}s",
    )
    assert ok


def test_a3_narrowing(record_criterion):
    spec = ChainSpec(500)
    widths = []
    for d in (0.01, 0.03, 0.05, 0.07):
        try:
            widths.append(half_width(spec, d, time=T0).epsilon0)
        except EchoError as exc:
            record_criterion("A3", False, f"delta={d}: {type(exc).__name__}: {exc}")
            raise
    increasing = all(b > a for a, b in zip(widths, widths[1:]))
    ok = record_criterion("A3", increasing, f"epsilon0={widths}")
    assert ok


def test_a4_fit(record_criterion):
    spec = ChainSpec(20000)
    deltas = np.linspace(0.002, 0.02, 10)
    points, failures = [], []
    for d in deltas:
        try:
            points.append((float(d), half_width(spec, float(d), time=T0).epsilon0))
        except EchoError as exc:
            failures.append(f"{d:.3f}:{type(exc).__name__}")
    if failures:
        record_criterion("A4", False, f"{len(failures)}/10 deltas without a half-width: {failures}")
        pytest.fail(f"half-width undefined for {failures}")
    fits = {c: fit_eta(points, spec.n_spins, c) for c in CONVENTIONS}
    good = [
        c for c, f in fits.items()
        if f.r_squared >= 0.99 and abs(f.sqrt_eta / REFERENCE_SQRT_ETA - 1) <= 0.25
    ]
    detail = "; ".join(f"{c}: sqrt_eta={f.sqrt_eta:.4f} r2={f.r_squared:.4f}" for c, f in fits.items())
    ok = record_criterion("A4", bool(good), f"{detail}; passing convention={good or None}")
    assert ok


def test_a5_oracle(record_criterion):
    times = np.linspace(0.0, 2 * T0, 20)
    worst = {}
    for n in (4, 6, 8):
        spec = ChainSpec(n)
        dev = 0.0
        for lam_t in (1.5, 2.0):
            ref, _, _ = loschmidt_echo_ed_series(n, lam_t, 0.1, times)
            prod = np.array([loschmidt_echo(spec, FieldConfig(lam_t, 0.1), t) for t in times])
            dev = max(dev, float(np.abs(prod - ref).max()))
        worst[n] = dev
    monotone = worst[4] > worst[6] > worst[8]
    ok = record_criterion(
        "A5", monotone and worst[8] < 0.05,
        f"max|L_product-L_ed| = {', '.join(f'N={n}: {v:.3e}' for n, v in worst.items())}; "
        f"decreasing={monotone}; N=8 below 0.05={worst[8] < 0.05}",
    )
    assert ok


def test_a6_frame(record_criterion):
    rows, ok = [], True
    for n in (1, 2, 3):
        history = frame_convergence(n, 2.0, 2.0 * J / HBAR, 10.0 * HBAR / J, steps=1000)
        control = frame_equivalence_check(n, 2.0, 0.0, 10.0 * HBAR / J, 1000)
        final = history[-1].max_infidelity
        ok &= final < 1e-6 and control.max_infidelity < 1e-10
        rows.append(f"N={n}: {final:.2e} @ {history[-1].steps} steps, control {control.max_infidelity:.1e}")
    ok = record_criterion("A6", ok, "; ".join(rows))
    assert ok


@pytest.fixture(scope="module")
def a7_run():
    config = ProtocolConfig(
        ChainSpec(2000), true_omega=2.0 * J / HBAR, sigma=0.5 * J / HBAR, delta=0.01, trials=200, seed=20240601
    )
    start = time.perf_counter()
    summary = run_trials(config)
    return config, summary, time.perf_counter() - start


def test_a7_success_rate(record_criterion, a7_run):
    config, summary, elapsed = a7_run
    ok = record_criterion(
        "A7 (success)", summary.success_rate >= 0.95 and elapsed < 60.0,
        f"bias-corrected success={summary.success_rate:.3f} "
        f"(uncorrected {summary.success_rate_uncorrected:.3f}), delta_Omega={config.delta_omega:.4f}, "
        f"completed {summary.completed}/{summary.trials}, {elapsed:.1f}s",
    )
    assert ok


def test_a7_systematic_offset(record_criterion, a7_run):
    config, summary, _ = a7_run
    predicted = -2 * J * config.delta / HBAR
    ok = record_criterion(
        "A7 (offset)", abs(summary.mean_error - predicted) <= 0.2 * abs(predicted),
        f"mean uncorrected error={summary.mean_error:.5f} vs predicted {predicted:.5f} (20% band)",
    )
    assert ok


def test_a8_resolution(record_criterion):
    value = resolution(1.0, 1e-5, 2000, 0.375)
    ok = abs(value - 3.354e-4) < 5e-8 and float(f"{value:.2g}") == 3.4e-4
    ok = record_criterion("A8", ok, f"resolution={value:.6e}")
    assert ok


def test_a9_invariants(record_criterion):
    rng = np.random.default_rng(2024)
    failures = []
    for _ in range(150):
        n = 2 * int(rng.integers(1, 400))
        lam_t = float(rng.uniform(-3, 3))
        delta = float(rng.uniform(0, 0.5))
        t = float(rng.uniform(0, 30))
        spec = ChainSpec(n)
        f = FieldConfig(lam_t, delta)
        L = loschmidt_echo(spec, f, t)
        if not 0 <= L <= 1:
            failures.append(("bounds", n, lam_t, delta, t))
        if loschmidt_echo(spec, f, 0.0) != 1.0:
            failures.append(("L(t=0)", n, lam_t, delta))
        if loschmidt_echo(spec, FieldConfig(lam_t, 0.0), t) != 1.0:
            failures.append(("L(delta=0)", n, lam_t, t))
        lt = np.array([[lam_t]])
        shift = np.pi * rng.integers(-1, 2, size=n // 2)
        base = np.exp(_log_factors_from_angles(spec, lt, delta, t).sum())
        moved = np.exp(_log_factors_from_angles(spec, lt, delta, t, shift=shift).sum())
        if abs(base - moved) >= 1e-12:
            failures.append(("branch", n, lam_t, delta, t))
        s = log_echo_partial_sum(spec, f, t, approx_params(spec, n // 2))
        if not math.isclose(math.exp(s), L, rel_tol=1e-10, abs_tol=1e-300):
            failures.append(("partial sum", n, lam_t, delta, t))
        if abs(L - product_echo(periodic_ka(n), lam_t, delta, t)) > 1e-9:
            failures.append(("product", n, lam_t, delta, t))

    config = ProtocolConfig(ChainSpec(200), 2.0, 0.5, 0.05, scan_points=401, trials=25, seed=99)
    first, second = run_trials(config), run_trials(config)
    if first != second or first.records != second.records:
        failures.append(("determinism",))
    for rec in first.records:
        tr = rec.trial
        if tr is None or tr.omega1 - 2 * J * (tr.lambda0 - 1) / HBAR != 0:
            failures.append(("estimate identity", rec.index))
    if scan_and_estimate(config, 2.2) != scan_and_estimate(config, 2.2):
        failures.append(("scan determinism",))

    ok = record_criterion("A9", not failures, f"150 random parameter sets + 25 seeded trials; failures={failures[:5]}")
    assert ok
