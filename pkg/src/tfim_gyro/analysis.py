"""Echo curves over rotation velocity, half-widths, and the sqrt(eta) fit.

Half-widths are measured around the valley center ``lambda_tilde = 1 - delta``
(where the evolving Hamiltonian is critical) and always at a stated time,
``t0 = hbar / 2J`` unless overridden.  Two conventions are carried:

* ``one_sided``: epsilon0, half the lambda_tilde distance between the two
  L = 1/2 crossings (the mean distance from the center to each crossing);
* ``chord``: the full distance between the crossings, i.e. ``2 * epsilon0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import bisect

from .core import (
    CRITICAL_FIELD,
    ChainSpec,
    characteristic_time,
    effective_lambda,
    loschmidt_echo_grid,
)
from .errors import (
    CrossingNotBracketedError,
    EchoError,
    GridError,
    InvalidInputError,
    ValleyTooShallowError,
)

REFERENCE_SQRT_ETA = 0.375
CONSTRAINT_COEFFICIENT = 1.33
CONVENTIONS = ("one_sided", "chord")
DEFAULT_GRID_POINTS = 2001
HALF = 0.5
RESIDUAL_TOL = 1e-8
_FIRST_STEP = 1e-6


@dataclass(frozen=True)
class EchoCurve:
    spec: ChainSpec
    delta: float
    lam: float
    time: float
    omega: np.ndarray
    lambda_tilde: np.ndarray
    echo: np.ndarray

    @property
    def samples(self) -> list[tuple[float, float, float]]:
        return list(zip(self.omega.tolist(), self.lambda_tilde.tolist(), self.echo.tolist()))

    def minimum(self) -> tuple[float, float]:
        """(omega, L) at the lowest sampled echo; ties go to the smaller omega."""
        i = int(np.argmin(self.echo))
        return float(self.omega[i]), float(self.echo[i])


@dataclass(frozen=True)
class HalfWidthResult:
    epsilon0: float
    delta_omega: float
    time: float
    bracket: tuple[float, float]
    residual: float
    crossings: tuple[float, float]
    center: float
    epsilon_left: float
    epsilon_right: float
    chord_omega: float
    convention: str = "one_sided"

    @property
    def chord(self) -> float:
        """Full L = 1/2 chord in lambda_tilde units."""
        return self.crossings[1] - self.crossings[0]

    def width(self, convention: str) -> float:
        return {"one_sided": self.epsilon0, "chord": self.chord}[_check_convention(convention)]


@dataclass(frozen=True)
class EtaFit:
    sqrt_eta: float
    r_squared: float
    points: tuple[tuple[float, float], ...]
    n_spins: int
    convention: str = "one_sided"


@dataclass(frozen=True)
class ConstraintCheck:
    satisfied: bool
    margin: float

    def __bool__(self) -> bool:
        return self.satisfied


@dataclass(frozen=True)
class CollapseReport:
    cases: tuple[tuple[int, float], ...]
    half_widths: tuple[float, ...]
    max_deviation: float
    passed: bool
    tolerance: float = 0.10
    results: tuple[HalfWidthResult, ...] = field(default=(), repr=False)


def scan_curve(
    spec: ChainSpec,
    delta: float,
    lam: float,
    omega_grid: Iterable[float],
    time: float | None = None,
) -> EchoCurve:
    if not isinstance(omega_grid, np.ndarray):
        omega_grid = list(omega_grid)
    omega = np.asarray(omega_grid, dtype=float).reshape(-1)
    if omega.size == 0:
        raise GridError("omega grid is empty")
    if np.any(np.diff(omega) <= 0):
        raise GridError("omega grid must be strictly increasing")
    t = characteristic_time(spec) if time is None else time
    lt = lam - spec.hbar * omega / (2.0 * spec.coupling)
    echo = loschmidt_echo_grid(spec, lt, delta, t)
    return EchoCurve(spec, delta, lam, t, omega, lt, echo)


def valley_center(delta: float) -> float:
    """Effective field where 1 - lambda_tilde - delta vanishes."""
    return CRITICAL_FIELD - delta


def half_width(
    spec: ChainSpec,
    delta: float,
    lam: float = 2.0,
    time: float | None = None,
    search_window: tuple[float, float] | None = None,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> HalfWidthResult:
    """Half-width of the echo valley at ``time`` (default t0).

    ``search_window`` is an (omega_lo, omega_hi) interval; by default it spans
    2J/hbar on either side of the valley center.  Bracketing starts from the
    center when the echo there is already below 1/2, else from the lowest
    point of a ``grid_points`` scan of the window.  Each flank is bracketed
    by geometric growth and then bisected.
    """
    t = characteristic_time(spec) if time is None else time
    J, hbar = spec.coupling, spec.hbar
    center = valley_center(delta)
    if search_window is None:
        omega_c = 2.0 * J * (lam - center) / hbar
        search_window = (omega_c - 2.0 * J / hbar, omega_c + 2.0 * J / hbar)
    w_lo, w_hi = search_window
    if not w_lo < w_hi:
        raise GridError(f"search window must satisfy lo < hi, got {search_window}")
    lt_lo = effective_lambda(spec, lam, w_hi)
    lt_hi = effective_lambda(spec, lam, w_lo)

    def f(lt: float) -> float:
        return float(loschmidt_echo_grid(spec, [lt], delta, t)[0]) - HALF

    seed = center
    if not (lt_lo <= center <= lt_hi and f(center) < 0):
        grid = np.linspace(lt_lo, lt_hi, grid_points)
        values = loschmidt_echo_grid(spec, grid, delta, t)
        i = int(np.argmin(values))
        if values[i] >= HALF:
            raise ValleyTooShallowError(
                f"valley too shallow: min L = {values[i]:.6g} > 1/2 "
                f"(N={spec.n_spins}, delta={delta}, t={t})"
            )
        seed = float(grid[i])

    left, res_left = _crossing(f, seed, lt_lo, -1.0)
    right, res_right = _crossing(f, seed, lt_hi, +1.0)
    eps0 = 0.5 * (right - left)
    return HalfWidthResult(
        epsilon0=eps0,
        delta_omega=2.0 * J * eps0 / hbar,
        time=t,
        bracket=(lt_lo, lt_hi),
        residual=max(res_left, res_right),
        crossings=(left, right),
        center=center,
        epsilon_left=center - left,
        epsilon_right=right - center,
        chord_omega=2.0 * J * (right - left) / hbar,
    )


def _crossing(f, seed: float, edge: float, direction: float) -> tuple[float, float]:
    reach = abs(edge - seed)
    inner, step = 0.0, _FIRST_STEP
    while True:
        step = min(step, reach)
        if f(seed + direction * step) >= 0:
            break
        if step >= reach:
            raise CrossingNotBracketedError(
                f"crossing not bracketed: L < 1/2 all the way to lambda_tilde = {edge:.6g}"
            )
        inner, step = step, 2.0 * step
    a, b = seed + direction * inner, seed + direction * step
    root = bisect(f, min(a, b), max(a, b), xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    residual = abs(f(root))
    if residual >= RESIDUAL_TOL:
        raise EchoError(f"bisection residual {residual:.3g} above {RESIDUAL_TOL}")
    return float(root), residual


def fit_eta(
    points: Sequence[tuple[float, float]],
    n_spins: int,
    convention: str = "one_sided",
) -> EtaFit:
    """Least squares through the origin of width against sqrt(N) * delta.

    ``points`` hold one-sided epsilon0 values; the chord convention doubles
    them.  r^2 is the uncentered coefficient of the origin-constrained model.
    """
    _check_convention(convention)
    pts = tuple((float(d), float(e)) for d, e in points)
    if len(pts) < 3:
        raise InvalidInputError(f"need at least 3 points to fit, got {len(pts)}")
    deltas = [d for d, _ in pts]
    if len(set(deltas)) != len(deltas):
        raise InvalidInputError("fit points must have distinct delta")
    if any(e <= 0 for _, e in pts):
        raise InvalidInputError("epsilon0 must be positive")
    x = math.sqrt(n_spins) * np.array(deltas)
    y = np.array([e for _, e in pts]) * (2.0 if convention == "chord" else 1.0)
    slope = float(x @ y / (x @ x))
    ssr = float(((y - slope * x) ** 2).sum())
    r2 = 1.0 - ssr / float(y @ y)
    return EtaFit(slope, min(max(r2, 0.0), 1.0), pts, n_spins, convention)


def resolution(omega0_char: float, delta: float, n_spins: int, sqrt_eta: float = REFERENCE_SQRT_ETA) -> float:
    """Rotation resolution 2 sqrt(eta) omega0 delta sqrt(N)."""
    return 2.0 * sqrt_eta * omega0_char * delta * math.sqrt(n_spins)


def constraint_check(delta: float, n_spins: int, sigma: float, omega0_char: float) -> ConstraintCheck:
    """Is the chain finer than the pre-measurement, delta sqrt(N) < 1.33 sigma / omega0?"""
    if sigma <= 0:
        raise InvalidInputError(f"sigma must be positive, got {sigma}")
    limit = CONSTRAINT_COEFFICIENT * sigma / omega0_char
    lhs = delta * math.sqrt(n_spins)
    margin = lhs / limit if math.isfinite(limit) else 0.0
    return ConstraintCheck(lhs < limit, margin)


def collapse_check(
    cases: Sequence[tuple[int, float]],
    lam: float = 2.0,
    time: float | None = None,
    coupling: float = 1.0,
    hbar: float = 1.0,
    tolerance: float = 0.10,
) -> CollapseReport:
    """Half-widths (omega units) for cases sharing delta sqrt(N).

    Cases must agree on delta sqrt(N) to 1% of their mean.  The deviation of
    a pair is |a - b| / min(a, b); the report passes when the largest one is
    below ``tolerance``.
    """
    cases = tuple((int(n), float(d)) for n, d in cases)
    if not cases:
        raise InvalidInputError("collapse check needs at least one case")
    scale = np.array([d * math.sqrt(n) for n, d in cases])
    spread = float(np.max(np.abs(scale - scale.mean())) / scale.mean())
    if spread > 0.01:
        raise InvalidInputError(
            f"precondition violated: delta*sqrt(N) differs by {spread:.2%} across cases"
        )
    results = tuple(
        half_width(ChainSpec(n, coupling=coupling, hbar=hbar), d, lam, time) for n, d in cases
    )
    widths = tuple(r.delta_omega for r in results)
    dev = max((abs(a - b) / min(a, b) for a, b in combinations(widths, 2)), default=0.0)
    return CollapseReport(cases, widths, dev, dev < tolerance, tolerance, results)


def _check_convention(convention: str) -> str:
    if convention not in CONVENTIONS:
        raise InvalidInputError(f"unknown convention {convention!r}; expected one of {CONVENTIONS}")
    return convention
