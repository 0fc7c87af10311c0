"""Monte Carlo model of the rotation-sensing workflow.

One trial: a coarse gyroscope reading ``omega0`` within ``sigma`` of the true
rotation; the field controller sweeps ``lam`` across the window that puts the
effective field through criticality; the echo minimum ``lambda0`` gives the
estimate ``omega1 = 2J(lambda0 - 1)/hbar``.  Because the echo valley sits at
``lambda_tilde = 1 - delta`` rather than 1, a corrected estimate
``2J(lambda0 - 1 + delta)/hbar`` is reported next to it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .analysis import REFERENCE_SQRT_ETA, resolution
from .core import ChainSpec, characteristic_time, loschmidt_echo_grid
from .errors import ConfigError, EchoError, FlatScanError

NoiseModel = Literal["uniform", "gaussian"]
FLAT_CONTRAST = 1e-6
MIN_SCAN_POINTS = 101


@dataclass(frozen=True)
class ProtocolConfig:
    spec: ChainSpec
    true_omega: float
    sigma: float
    delta: float
    noise_model: NoiseModel = "uniform"
    time: float | None = None
    scan_points: int = 2001
    trials: int = 200
    seed: int = 0
    sqrt_eta: float = REFERENCE_SQRT_ETA

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if not math.isfinite(self.true_omega):
            raise ConfigError("true_omega must be finite")
        if not (math.isfinite(self.delta) and self.delta >= 0):
            raise ConfigError(f"delta must be >= 0, got {self.delta}")
        if self.noise_model not in ("uniform", "gaussian"):
            raise ConfigError(f"noise_model must be 'uniform' or 'gaussian', got {self.noise_model!r}")
        if self.time is not None and not (math.isfinite(self.time) and self.time >= 0):
            raise ConfigError(f"time must be >= 0, got {self.time}")
        if int(self.scan_points) != self.scan_points or self.scan_points < MIN_SCAN_POINTS:
            raise ConfigError(f"scan_points must be an integer >= {MIN_SCAN_POINTS}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigError("trials must be an integer >= 1")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def eval_time(self) -> float:
        return characteristic_time(self.spec) if self.time is None else self.time

    @property
    def delta_omega(self) -> float:
        return resolution(self.spec.omega0, self.delta, self.spec.n_spins, self.sqrt_eta)

    @property
    def feasible(self) -> bool:
        return self.delta_omega < self.sigma


@dataclass(frozen=True)
class ProtocolTrial:
    omega0: float
    lambda_window: tuple[float, float]
    lambda0: float
    omega1: float
    omega1_corrected: float
    abs_error: float
    abs_error_corrected: float
    critical_in_window: bool
    echo_min: float
    echo_contrast: float


@dataclass(frozen=True)
class TrialRecord:
    index: int
    omega0: float
    trial: ProtocolTrial | None
    status: str


@dataclass(frozen=True)
class ProtocolSummary:
    trials: int
    completed: int
    mean_abs_error: float
    p95_abs_error: float
    success_rate: float
    success_rate_uncorrected: float
    mean_error: float
    mean_abs_error_corrected: float
    resolution_delta_omega: float
    feasible: bool
    records: tuple[TrialRecord, ...] = field(repr=False, default=())


def pmg_sample(
    true_omega: float, sigma: float, noise_model: NoiseModel, rng: np.random.Generator
) -> float:
    """Coarse gyroscope reading, always within [true - sigma, true + sigma]."""
    if sigma <= 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    if noise_model == "uniform":
        return float(rng.uniform(true_omega - sigma, true_omega + sigma))
    if noise_model == "gaussian":
        while True:
            x = float(rng.normal(true_omega, sigma / 2.0))
            if abs(x - true_omega) <= sigma:
                return x
    raise ConfigError(f"unknown noise model {noise_model!r}")


def mfc_window(omega0: float, sigma: float, spec: ChainSpec) -> tuple[float, float]:
    """Field range that carries the effective field through 1 for any
    rotation in [omega0 - sigma, omega0 + sigma]."""
    if sigma <= 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    c = spec.hbar / (2.0 * spec.coupling)
    return 1.0 + c * (omega0 - sigma), 1.0 + c * (omega0 + sigma)


def scan_and_estimate(config: ProtocolConfig, omega0: float) -> ProtocolTrial:
    spec = config.spec
    J, hbar = spec.coupling, spec.hbar
    lo, hi = mfc_window(omega0, config.sigma, spec)
    lams = np.linspace(lo, hi, int(config.scan_points))
    lt = lams - hbar * config.true_omega / (2.0 * J)
    echo = loschmidt_echo_grid(spec, lt, config.delta, config.eval_time)
    contrast = float(echo.max() - echo.min())
    if contrast < FLAT_CONTRAST:
        raise FlatScanError(f"flat scan: echo contrast {contrast:.3g} < {FLAT_CONTRAST}")
    i = int(np.argmin(echo))
    lambda0 = float(lams[i])
    if 0 < i < lams.size - 1:
        lambda0 = _parabolic_vertex(lams[i - 1 : i + 2], echo[i - 1 : i + 2])
    omega1 = 2.0 * J * (lambda0 - 1.0) / hbar
    omega1_corr = 2.0 * J * (lambda0 - 1.0 + config.delta) / hbar
    critical = 1.0 - config.delta + hbar * config.true_omega / (2.0 * J)
    return ProtocolTrial(
        omega0=omega0,
        lambda_window=(lo, hi),
        lambda0=lambda0,
        omega1=omega1,
        omega1_corrected=omega1_corr,
        abs_error=abs(omega1 - config.true_omega),
        abs_error_corrected=abs(omega1_corr - config.true_omega),
        critical_in_window=lo <= critical <= hi,
        echo_min=float(echo[i]),
        echo_contrast=contrast,
    )


def _parabolic_vertex(x: np.ndarray, y: np.ndarray) -> float:
    # uniform spacing; falls back to the middle sample when not convex
    h = x[1] - x[0]
    curv = y[0] - 2.0 * y[1] + y[2]
    if curv <= 0:
        return float(x[1])
    shift = 0.5 * h * (y[0] - y[2]) / curv
    return float(x[1] + min(max(shift, -h), h))


def trial_rngs(seed: int, trials: int) -> list[np.random.Generator]:
    """One independent generator per trial, keyed by (seed, trial index)."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(trials)]


def run_trials(config: ProtocolConfig) -> ProtocolSummary:
    records = []
    for index, rng in enumerate(trial_rngs(config.seed, config.trials)):
        omega0 = pmg_sample(config.true_omega, config.sigma, config.noise_model, rng)
        try:
            trial = scan_and_estimate(config, omega0)
        except FlatScanError:
            records.append(TrialRecord(index, omega0, None, "flat scan"))
        except EchoError as exc:
            records.append(TrialRecord(index, omega0, None, f"error: {exc}"))
        else:
            records.append(TrialRecord(index, omega0, trial, "ok"))
    return summarize(config, records)


def summarize(config: ProtocolConfig, records: list[TrialRecord]) -> ProtocolSummary:
    done = [r.trial for r in records if r.trial is not None]
    d_omega = config.delta_omega
    nan = float("nan")
    if done:
        err = np.sort([t.abs_error for t in done])
        err_c = np.sort([t.abs_error_corrected for t in done])
        signed = np.sort([t.omega1 - config.true_omega for t in done])
        stats = dict(
            mean_abs_error=float(err.mean()),
            p95_abs_error=float(np.percentile(err, 95)),
            success_rate=float(np.mean(err_c < d_omega)),
            success_rate_uncorrected=float(np.mean(err < d_omega)),
            mean_error=float(signed.mean()),
            mean_abs_error_corrected=float(err_c.mean()),
        )
    else:
        stats = dict.fromkeys(
            ("mean_abs_error", "p95_abs_error", "success_rate", "success_rate_uncorrected",
             "mean_error", "mean_abs_error_corrected"),
            nan,
        )
    return ProtocolSummary(
        trials=len(records),
        completed=len(done),
        resolution_delta_omega=d_omega,
        feasible=config.feasible,
        records=tuple(records),
        **stats,
    )
