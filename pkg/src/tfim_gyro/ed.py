"""Dense exact-diagonalization reference for small periodic chains.

Everything here is brute force on the full 2^N Hilbert space.  It exists to
check the mode-product echo in :mod:`tfim_gyro.core` and the rotating-frame
field shift, not for production sweeps.

Basis convention: bit ``i`` of the basis index is spin ``i``; bit 0 is
sigma^z = +1.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import DenseSizeCapError, InvalidInputError, NegativeTimeError

MAX_DENSE_SPINS = 12
MAX_FRAME_SPINS = 4
DEGENERACY_GAP = 1e-8

_I2 = np.eye(2, dtype=complex)
_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class DenseHamiltonian:
    """Periodic-chain Hamiltonian as a dense matrix.

    The TFIM is real in the sigma^z basis, so ``matrix`` is real symmetric.
    """

    n_spins: int
    matrix: np.ndarray
    boundary: str = "periodic"

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class EDEcho:
    value: float
    degenerate: bool
    gap: float


@dataclass(frozen=True)
class FrameCheck:
    max_infidelity: float
    norm_drift: float
    steps: int


def build_hamiltonian(
    n_spins: int,
    lambda_eff: float,
    delta: float = 0.0,
    excited: bool = False,
    coupling: float = 1.0,
) -> DenseHamiltonian:
    """-J sum_i [sz_i sz_{i+1} + (lambda_eff + delta * excited) sx_i], periodic.

    The probe enters only as a classical shift of the field on its excited
    branch.  For N = 2 the periodic sum visits the single bond twice.
    """
    if not 2 <= n_spins <= MAX_DENSE_SPINS:
        raise DenseSizeCapError(
            f"dense oracle size cap: n_spins must be in [2, {MAX_DENSE_SPINS}], got {n_spins}"
        )
    field = lambda_eff + (delta if excited else 0.0)
    dim = 1 << n_spins
    idx = np.arange(dim)
    z = 1 - 2 * ((idx[:, None] >> np.arange(n_spins)) & 1)
    bonds = (z * np.roll(z, -1, axis=1)).sum(axis=1)
    h = np.diag(-coupling * bonds.astype(float))
    for site in range(n_spins):
        h[idx ^ (1 << site), idx] -= coupling * field
    return DenseHamiltonian(n_spins, h)


def ground_state(h: DenseHamiltonian) -> tuple[np.ndarray, float, float]:
    """Ground state, its energy and the gap to the next level.

    Inside a degenerate lowest manifold (gap below ``DEGENERACY_GAP``) the
    state with the largest overlap on the uniform vector is taken, then the
    global phase is fixed so the largest amplitude is real positive.
    """
    energies, vectors = np.linalg.eigh(h.matrix)
    e0 = energies[0]
    gap = float(energies[1] - e0) if energies.size > 1 else np.inf
    scale = max(1.0, float(np.abs(h.matrix).max()))
    manifold = vectors[:, energies - e0 < DEGENERACY_GAP * scale]
    uniform = np.full(h.dimension, 1.0 / np.sqrt(h.dimension))
    psi = manifold @ (manifold.conj().T @ uniform)
    if np.linalg.norm(psi) < 1e-12:
        psi = manifold[:, 0]
    psi = psi / np.linalg.norm(psi)
    pivot = psi[np.argmax(np.abs(psi))]
    psi = psi * (abs(pivot) / pivot)
    return psi, float(e0), gap


def loschmidt_echo_ed_series(
    n_spins: int,
    lambda_eff: float,
    delta: float,
    times,
    coupling: float = 1.0,
    hbar: float = 1.0,
) -> tuple[np.ndarray, bool, float]:
    """Echo |<G| e^{i H_g t} e^{-i H_e t} |G>|^2 at each time in ``times``."""
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise NegativeTimeError("negative time")
    h_g = build_hamiltonian(n_spins, lambda_eff, delta, excited=False, coupling=coupling)
    h_e = build_hamiltonian(n_spins, lambda_eff, delta, excited=True, coupling=coupling)
    psi, _, gap = ground_state(h_g)
    energies, vectors = np.linalg.eigh(h_e.matrix)
    weights = np.abs(vectors.conj().T @ psi) ** 2
    amps = np.exp(-1j * np.outer(times, energies) / hbar) @ weights
    degenerate = gap < DEGENERACY_GAP * coupling
    return np.abs(amps) ** 2, degenerate, gap


def loschmidt_echo_ed(
    n_spins: int,
    lambda_eff: float,
    delta: float,
    t: float,
    coupling: float = 1.0,
    hbar: float = 1.0,
) -> EDEcho:
    values, degenerate, gap = loschmidt_echo_ed_series(
        n_spins, lambda_eff, delta, [t], coupling, hbar
    )
    return EDEcho(float(values[0]), degenerate, gap)


def _site_op(op: np.ndarray, site: int, n_spins: int) -> np.ndarray:
    # kron order puts site 0 leftmost; only used by the frame check
    return reduce(np.kron, [op if i == site else _I2 for i in range(n_spins)])


def _rotation_pieces(n_spins: int):
    """Operator sums that make up the lab-frame Hamiltonian at angle theta.

    With sz(theta) = cos(theta) sz + sin(theta) sy the bond term expands to
    c^2 ZZ + s^2 YY + s c (YZ + ZY); sx is invariant.
    """
    sx = [_site_op(_SX, i, n_spins) for i in range(n_spins)]
    sy = [_site_op(_SY, i, n_spins) for i in range(n_spins)]
    sz = [_site_op(_SZ, i, n_spins) for i in range(n_spins)]
    nxt = [(i + 1) % n_spins for i in range(n_spins)]
    zz = sum(sz[i] @ sz[j] for i, j in enumerate(nxt))
    yy = sum(sy[i] @ sy[j] for i, j in enumerate(nxt))
    yz = sum(sy[i] @ sz[j] + sz[i] @ sy[j] for i, j in enumerate(nxt))
    x = sum(sx)
    return zz, yy, yz, x


def _expm_hermitian(h: np.ndarray, tau: float) -> np.ndarray:
    """exp(-i h tau) by eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * tau)) @ v.conj().T


def frame_equivalence_check(
    n_spins: int,
    lam: float,
    omega: float,
    t_max: float,
    steps: int,
    coupling: float = 1.0,
    hbar: float = 1.0,
) -> FrameCheck:
    """Compare lab-frame evolution, rotated into the co-rotating frame, with
    evolution under the static shifted-field Hamiltonian.

    The lab state is stepped with H evaluated at each step midpoint, starting
    from the ground state of H(0).  Infidelity is sampled after every step.
    """
    if not 1 <= n_spins <= MAX_FRAME_SPINS:
        raise DenseSizeCapError(
            f"frame check size cap: n_spins must be in [1, {MAX_FRAME_SPINS}], got {n_spins}"
        )
    if steps < 10:
        raise InvalidInputError(f"frame check needs steps >= 10, got {steps}")
    J = coupling
    zz, yy, yz, x = _rotation_pieces(n_spins)

    def h_lab(theta):
        c, s = np.cos(theta), np.sin(theta)
        return -J * (c * c * zz + s * s * yy + s * c * yz + lam * x)

    h_eff = -J * (zz + (lam - hbar * omega / (2 * J)) * x)
    _, psi0 = np.linalg.eigh(h_lab(0.0))
    psi0 = psi0[:, 0].astype(complex)

    dt = t_max / steps
    w_eff, v_eff = np.linalg.eigh(h_eff)
    c_eff = v_eff.conj().T @ psi0
    psi = psi0.copy()
    worst = 0.0
    drift = 0.0
    for step in range(1, steps + 1):
        t_mid = (step - 0.5) * dt
        psi = _expm_hermitian(h_lab(omega * t_mid), dt / hbar) @ psi
        t = step * dt
        theta = omega * t
        # R(theta) = exp(-i theta sum sx / 2) factorizes over sites
        r1 = np.cos(theta / 2) * _I2 - 1j * np.sin(theta / 2) * _SX
        rotated = reduce(np.kron, [r1] * n_spins) @ psi
        psi_eff = v_eff @ (np.exp(-1j * w_eff * t / hbar) * c_eff)
        worst = max(worst, 1.0 - abs(np.vdot(psi_eff, rotated)) ** 2)
        drift = max(drift, abs(np.linalg.norm(psi) - 1.0))
    return FrameCheck(float(worst), float(drift), steps)


def frame_convergence(
    n_spins: int,
    lam: float,
    omega: float,
    t_max: float,
    steps: int = 1000,
    target: float = 1e-6,
    max_halvings: int = 6,
    coupling: float = 1.0,
    hbar: float = 1.0,
) -> list[FrameCheck]:
    """Halve the step until the infidelity is below ``target`` or stops improving."""
    history = [frame_equivalence_check(n_spins, lam, omega, t_max, steps, coupling, hbar)]
    for _ in range(max_halvings):
        last = history[-1]
        if last.max_infidelity < target:
            break
        nxt = frame_equivalence_check(n_spins, lam, omega, t_max, 2 * last.steps, coupling, hbar)
        history.append(nxt)
        if nxt.max_infidelity * 3 > last.max_infidelity:
            break
    return history
