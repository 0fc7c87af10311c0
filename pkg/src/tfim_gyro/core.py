"""Loschmidt echo of a transverse-field Ising chain seen from a rotating frame.

A rotation at angular velocity ``omega`` about the field axis shifts the
transverse field to ``lambda_tilde = lam - hbar * omega / (2 J)``.  The echo of
a probe coupled with strength ``delta`` is a product over the Bloch modes
``k = 2 pi n / (N a)``, ``n = 1 .. N/2``::

    L = prod_k [1 - sin^2(2 alpha_k) sin^2(eps_k t / hbar)]

with ``2 alpha_k = theta_k(lambda_tilde) - theta_k(lambda_tilde + delta)`` and
``eps_k`` the quasiexcitation energy at ``lambda_tilde + delta``.

Defaults are ``hbar = a = J = 1``.  Products are accumulated as sums of logs so
that chains of 10^4 spins and more do not underflow.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import (
    ApproximationSingularError,
    ConfigError,
    CutoffRangeError,
    InvalidChainError,
    InvalidFieldError,
    NegativeTimeError,
)

LOG_FLOOR = 1e-300
SINGULAR_FLOOR = 1e-12
CRITICAL_FIELD = 1.0

# rows * modes per work item in grid evaluation
_CHUNK_ELEMENTS = 1 << 18


@dataclass(frozen=True)
class ChainSpec:
    """Chain geometry and energy scales: N spins, spacing a, coupling J, hbar."""

    n_spins: int
    lattice_spacing: float = 1.0
    coupling: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        n = self.n_spins
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
            raise InvalidChainError(f"invalid chain: n_spins must be an integer, got {n!r}")
        if n < 2 or n % 2:
            raise InvalidChainError(f"invalid chain: n_spins must be even and >= 2, got {n}")
        for name in ("lattice_spacing", "coupling", "hbar"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidChainError(f"invalid chain: {name} must be positive, got {value!r}")

    @property
    def omega0(self) -> float:
        """Characteristic coupling frequency J / hbar."""
        return self.coupling / self.hbar


@dataclass(frozen=True)
class FieldConfig:
    lam: float
    delta: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        for name in ("lam", "delta", "omega"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidFieldError(f"{name} must be finite")
        if self.delta < 0:
            raise InvalidFieldError(f"delta must be >= 0, got {self.delta}")

    def effective_lambda(self, spec: ChainSpec) -> float:
        return effective_lambda(spec, self.lam, self.omega)


class BlochMode(NamedTuple):
    index: int
    wavevector: float


@dataclass(frozen=True)
class ApproxParams:
    """Momentum cutoff used by the small-k treatment of the echo.

    ``alpha_frac = K_c a / pi = N_c / N`` and ``eta = 4 pi^2 alpha^3 / 3``.
    """

    cutoff_number: int
    alpha_frac: float
    m: float
    eta: float
    cutoff_wavevector: float


@dataclass(frozen=True)
class GaussianEchoApprox:
    value: float
    short_time_value: float
    exponent: float
    kc_a: float
    short_time_param: float


def effective_lambda(spec: ChainSpec, lam: float, omega: float) -> float:
    return lam - spec.hbar * omega / (2.0 * spec.coupling)


def characteristic_time(spec: ChainSpec) -> float:
    """t0 = hbar / (2 J), the time at which half-widths are quoted."""
    return spec.hbar / (2.0 * spec.coupling)


def bloch_modes(spec: ChainSpec) -> list[BlochMode]:
    _check_chain(spec)
    n = spec.n_spins
    a = spec.lattice_spacing
    return [BlochMode(i, 2.0 * math.pi * i / (n * a)) for i in range(1, n // 2 + 1)]


def bogoliubov_angle(mode: BlochMode, x: float, lattice_spacing: float = 1.0) -> float:
    """Two-argument arctangent of (-sin ka, cos ka - x), in (-pi, pi].

    The echo only sees sin^2(2 alpha), so any branch shift by pi is harmless.
    At sin ka = 0 and cos ka = x the angle is 0.
    """
    ka = mode.wavevector * lattice_spacing
    s = math.sin(ka)
    if abs(s) < 4 * np.finfo(float).eps:
        s = 0.0
    return math.atan2(-s + 0.0, math.cos(ka) - x)


def quasiexcitation_energy(spec: ChainSpec, mode: BlochMode, x: float) -> float:
    ka = mode.wavevector * spec.lattice_spacing
    radicand = 1.0 + x * x - 2.0 * x * math.cos(ka)
    return 2.0 * spec.coupling * math.sqrt(max(radicand, 0.0))


def m_parameter(spec: ChainSpec, cutoff_number: int) -> float:
    """Sum of k^2 a^2 over the first ``cutoff_number`` modes."""
    nc = _check_cutoff(spec, cutoff_number)
    n = spec.n_spins
    return 4.0 * math.pi**2 * nc * (nc + 1) * (2 * nc + 1) / (6.0 * n * n)


def approx_params(spec: ChainSpec, cutoff_number: int) -> ApproxParams:
    nc = _check_cutoff(spec, cutoff_number)
    alpha = nc / spec.n_spins
    return ApproxParams(
        cutoff_number=nc,
        alpha_frac=alpha,
        m=m_parameter(spec, nc),
        eta=4.0 * math.pi**2 * alpha**3 / 3.0,
        cutoff_wavevector=nc * math.pi / (spec.n_spins * spec.lattice_spacing),
    )


def mode_factors(spec: ChainSpec, fields: FieldConfig, t: float) -> np.ndarray:
    """Per-mode factors F_k in [0, 1], ordered by ascending k."""
    _check_time(t)
    lt = fields.effective_lambda(spec)
    log_f = _log_factors(spec, np.array([[lt]]), fields.delta, t)[0]
    return np.exp(log_f)


def loschmidt_echo(spec: ChainSpec, fields: FieldConfig, t: float) -> float:
    _check_time(t)
    lt = fields.effective_lambda(spec)
    log_f = _log_factors(spec, np.array([[lt]]), fields.delta, t)[0]
    return float(np.exp(log_f.sum()))


def loschmidt_echo_grid(spec: ChainSpec, lambda_tilde, delta: float, t: float) -> np.ndarray:
    """Echo at every effective field in ``lambda_tilde`` (any 1-D array-like).

    Rows are split into chunks that may run on a thread pool sized by
    ``ECHO_THREADS``; each row is reduced independently, so the result does
    not depend on the chunking.
    """
    _check_time(t)
    if delta < 0:
        raise InvalidFieldError(f"delta must be >= 0, got {delta}")
    lt = np.asarray(lambda_tilde, dtype=float).reshape(-1)
    n_modes = spec.n_spins // 2
    rows = max(1, _CHUNK_ELEMENTS // n_modes)
    chunks = [lt[i : i + rows] for i in range(0, lt.size, rows)]

    def work(chunk):
        return np.exp(_log_factors(spec, chunk[:, None], delta, t).sum(axis=1))

    workers = worker_count()
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=min(workers, len(chunks))) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    return np.concatenate(parts) if parts else np.empty(0)


def log_echo_partial_sum(
    spec: ChainSpec, fields: FieldConfig, t: float, cutoff: ApproxParams
) -> float:
    """S = -sum |ln F_k| over the first ``cutoff.cutoff_number`` modes."""
    _check_time(t)
    nc = _check_cutoff(spec, cutoff.cutoff_number)
    lt = fields.effective_lambda(spec)
    log_f = _log_factors(spec, np.array([[lt]]), fields.delta, t)[0]
    return -float(np.abs(log_f[:nc]).sum())


def gaussian_echo_approx(
    spec: ChainSpec,
    fields: FieldConfig,
    t: float,
    cutoff: ApproxParams,
    floor: float = SINGULAR_FLOOR,
) -> GaussianEchoApprox:
    """Small-k closed form of the cutoff echo and its short-time Gaussian.

    Valid only for K_c a << 1 and, for the Gaussian, 2J(eps + delta)t/hbar << 1;
    both regime parameters are returned so the caller can judge.
    """
    _check_time(t)
    J, hbar = spec.coupling, spec.hbar
    delta = fields.delta
    gap = 1.0 - fields.effective_lambda(spec)
    eps = gap - delta
    if abs(gap) < floor or abs(eps) < floor:
        raise ApproximationSingularError(
            f"approximation singular: |1 - lambda_tilde| = {abs(gap):.3g}, "
            f"|1 - lambda_tilde - delta| = {abs(eps):.3g}"
        )
    m = cutoff.m
    exponent = -(delta**2) * m * math.sin(2 * J * gap * t / hbar) ** 2 / (gap**2 * eps**2)
    short = -4.0 * (delta**2 / eps**2) * m * J**2 * t**2 / hbar**2
    return GaussianEchoApprox(
        value=math.exp(exponent),
        short_time_value=math.exp(short),
        exponent=exponent,
        kc_a=cutoff.cutoff_wavevector * spec.lattice_spacing,
        short_time_param=2 * J * (eps + delta) * t / hbar,
    )


def worker_count() -> int:
    """Thread cap from ``ECHO_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("ECHO_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"ECHO_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError(f"ECHO_THREADS must be >= 0, got {n}")
    return n or (os.cpu_count() or 1)


@lru_cache(maxsize=32)
def _mode_trig(n_spins: int) -> tuple[np.ndarray, np.ndarray]:
    n = np.arange(1, n_spins // 2 + 1)
    ka = 2.0 * np.pi * n / n_spins
    sin_ka = np.sin(ka)
    cos_ka = np.cos(ka)
    # k = pi/a exactly: keep the numerator of theta at +0.0
    sin_ka[2 * n == n_spins] = 0.0
    cos_ka[2 * n == n_spins] = -1.0
    sin_ka.flags.writeable = False
    cos_ka.flags.writeable = False
    return sin_ka, cos_ka


def _log_factors(spec: ChainSpec, lt: np.ndarray, delta: float, t: float) -> np.ndarray:
    """ln F_k for a column of effective fields ``lt`` (shape (M, 1)) -> (M, N/2).

    Uses sin(theta_g - theta_e) = delta sin(ka) / (r_g r_e), where r_g, r_e
    are the radii of the two arctangent arguments, so no angle is formed and
    small delta does not cancel.  :func:`_log_factors_from_angles` is the
    literal route through the Bogoliubov angles.
    """
    sin_ka, cos_ka = _mode_trig(spec.n_spins)
    x = lt + delta
    r2_g = (cos_ka - lt) ** 2 + sin_ka**2
    r2_e = (cos_ka - x) ** 2 + sin_ka**2
    denom = r2_g * r2_e
    with np.errstate(divide="ignore", invalid="ignore"):
        sin2_2alpha = np.where(denom > 0, delta**2 * sin_ka**2 / denom, 0.0)
    eps = 2.0 * spec.coupling * np.sqrt(r2_e)
    return _log1m(sin2_2alpha * np.sin(eps * (t / spec.hbar)) ** 2)


def _log_factors_from_angles(
    spec: ChainSpec, lt: np.ndarray, delta: float, t: float, shift: np.ndarray | float = 0.0
) -> np.ndarray:
    """Reference path through theta_k; ``shift`` is added to the ground-state angles."""
    sin_ka, cos_ka = _mode_trig(spec.n_spins)
    numer = -sin_ka + 0.0
    x = lt + delta
    theta_g = np.arctan2(numer, cos_ka - lt) + shift
    theta_e = np.arctan2(numer, cos_ka - x)
    sin2_2alpha = np.sin(theta_g - theta_e) ** 2
    eps = 2.0 * spec.coupling * np.sqrt(np.maximum(1.0 + x * x - 2.0 * x * cos_ka, 0.0))
    return _log1m(sin2_2alpha * np.sin(eps * (t / spec.hbar)) ** 2)


def _log1m(s: np.ndarray) -> np.ndarray:
    """ln(1 - s) with s clamped to [0, 1] and the result floored at ln(1e-300)."""
    s = np.clip(s, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        log_f = np.log1p(-s)
    return np.maximum(log_f, math.log(LOG_FLOOR))


def _check_chain(spec: ChainSpec) -> None:
    n = spec.n_spins
    if n < 2 or n % 2:
        raise InvalidChainError(f"invalid chain: n_spins must be even and >= 2, got {n}")


def _check_time(t: float) -> None:
    if not math.isfinite(t):
        raise NegativeTimeError(f"time must be finite, got {t}")
    if t < 0:
        raise NegativeTimeError(f"negative time: {t}")


def _check_cutoff(spec: ChainSpec, cutoff_number: int) -> int:
    nc = int(cutoff_number)
    if nc != cutoff_number or not 1 <= nc <= spec.n_spins // 2:
        raise CutoffRangeError(
            f"cutoff number must be an integer in [1, {spec.n_spins // 2}], got {cutoff_number}"
        )
    return nc
