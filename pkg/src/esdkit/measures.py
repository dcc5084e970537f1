"""Concurrence family, quantum discord and the concurrence sum invariant."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .qcore import (
    DensityMatrix,
    Partition,
    PureState,
    SubsystemLayout,
    partial_trace,
    reduced_state,
    von_neumann_entropy,
)

log = logging.getLogger(__name__)

SIGMA_Y = np.array([[0, -1j], [1j, 0]])
YY = np.kron(SIGMA_Y, SIGMA_Y)
PAULIS = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    SIGMA_Y,
    np.array([[1, 0], [0, -1]], dtype=complex),
)

# eigenvalues of rho below this are treated as exact zeros when factoring
_RANK_CUTOFF = 1e-14


def _require_qubits(layout: SubsystemLayout, n: int | None = None, what: str = "state"):
    if n is not None and layout.n != n:
        raise ValueError(f"{what} must have {n} subsystems, layout has {layout.n}")
    if any(d != 2 for d in layout.dims):
        raise ValueError(f"{what} must be made of qubits, got dims {layout.dims}")


def _flip(amps: np.ndarray, n: int) -> np.ndarray:
    """sigma_y^{(x)n} applied to conj(amps), without building the 2^n matrix."""
    t = amps.conj().reshape((2,) * n)
    for ax in range(n):
        t = np.moveaxis(np.tensordot(SIGMA_Y, t, axes=([1], [ax])), 0, ax)
    return t.reshape(-1)


def concurrence_pure(psi: PureState) -> float:
    _require_qubits(psi.layout, 2, "pure-state concurrence input")
    return float(abs(np.vdot(psi.amplitudes, _flip(psi.amplitudes, 2))))


def n_concurrence(psi: PureState) -> float:
    """|<psi| sigma_y^{(x)n} |psi*>| for an even number of qubits."""
    _require_qubits(psi.layout, what="n-concurrence input")
    n = psi.layout.n
    if n % 2:
        raise ValueError(f"n-concurrence needs an even number of qubits, got {n}")
    return float(abs(np.vdot(psi.amplitudes, _flip(psi.amplitudes, n))))


def _factor(rho: np.ndarray) -> np.ndarray:
    p, v = np.linalg.eigh(rho)
    p = np.where(p > _RANK_CUTOFF, p, 0.0)
    return v * np.sqrt(p)


def _q_from_factor(a: np.ndarray) -> float:
    # rho = a a^+, spin-flipped rho~ = b b^+ with b = YY a*; the square roots of
    # the eigenvalues of rho rho~ are the singular values of a^+ b, so no
    # square root of a noisy near-zero eigenvalue is ever taken.
    b = YY @ a.conj()
    s = np.linalg.svd(a.conj().T @ b, compute_uv=False)
    roots = np.zeros(4)
    k = min(4, s.size)
    roots[:k] = np.sort(s)[::-1][:k]
    return float(roots[0] - roots[1] - roots[2] - roots[3])


def q_auxiliary(rho: DensityMatrix) -> float:
    """Wootters' signed auxiliary function sqrt(l1) - sqrt(l2) - sqrt(l3) - sqrt(l4).

    Negative values flag separable states that still carry quantum correlations.
    """
    _require_qubits(rho.layout, 2, "Q input")
    return _q_from_factor(_factor(rho.matrix))


def q_auxiliary_eigen(rho: DensityMatrix) -> float:
    """Textbook route: eigenvalues of rho (YY) rho* (YY), clamped then rooted.

    Loses ~sqrt(eps) accuracy next to zero eigenvalues; kept as a cross-check.
    """
    _require_qubits(rho.layout, 2, "Q input")
    m = rho.matrix
    lam = np.linalg.eigvals(m @ YY @ m.conj() @ YY).real
    r = np.sqrt(np.clip(np.sort(lam)[::-1], 0.0, None))
    return float(r[0] - r[1] - r[2] - r[3])


def reduced_q(psi: PureState, keep) -> float:
    """Q of the two-qubit reduced state of ``psi``, factored from the amplitudes."""
    keep = psi.layout.indices(keep)
    rho_layout = psi.layout.restrict(keep)
    _require_qubits(rho_layout, 2, "reduced pair")
    n = psi.layout.n
    drop = [i for i in range(n) if i not in keep]
    a = psi.tensor().transpose(list(keep) + drop).reshape(4, -1)
    return _q_from_factor(a)


def concurrence_mixed(rho: DensityMatrix) -> float:
    return max(0.0, q_auxiliary(rho))


@dataclass(frozen=True)
class MeasureReport:
    concurrence: float
    q: float
    traced: str

    @classmethod
    def of(cls, psi: PureState, keep) -> "MeasureReport":
        keep = psi.layout.indices(keep)
        traced = ",".join(psi.layout.labels[i] for i in range(psi.layout.n) if i not in keep)
        q = reduced_q(psi, keep)
        return cls(max(0.0, q), q, traced)


@dataclass(frozen=True)
class SigmaComponents:
    q_atoms: float
    q_photons: float
    c4: float

    @property
    def sigma(self) -> float:
        return self.q_atoms + self.q_photons + self.c4


def sigma_components(psi: PureState, atoms=(0, 2), photons=(1, 3)) -> SigmaComponents:
    """Q_AA, Q_PP and the 4-qubit concurrence of an atom/photon 4-qubit state.

    The four-qubit term is evaluated from its sigma_y^{(x)4} definition.
    """
    _require_qubits(psi.layout, 4, "invariant input")
    return SigmaComponents(reduced_q(psi, atoms), reduced_q(psi, photons), n_concurrence(psi))


# ---------------------------------------------------------------- discord


@dataclass(frozen=True)
class DiscordOptions:
    grid: int = 64
    tol: float = 1e-10
    max_iter: int = 400
    restarts: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.grid < 8:
            raise ValueError("discord grid resolution must be >= 8")
        if self.tol <= 0:
            raise ValueError("discord refinement tolerance must be positive")
        if self.max_iter < 1 or self.restarts < 0:
            raise ValueError("max_iter must be >= 1 and restarts >= 0")


@dataclass(frozen=True)
class DiscordResult:
    value: float
    raw: float
    theta: float
    phi: float
    converged: bool

    def __float__(self) -> float:
        return self.value


def discord_pure_bipartition(psi: PureState, bipartition: Partition) -> float:
    """Discord of a pure bipartite state, i.e. the entanglement entropy of either block."""
    if bipartition.K != 2:
        raise ValueError(f"discord needs a bipartition, got K={bipartition.K}")
    if bipartition.n != psi.layout.n:
        raise ValueError("partition does not match the state layout")
    s0 = von_neumann_entropy(reduced_state(psi, bipartition.blocks[0]))
    s1 = von_neumann_entropy(reduced_state(psi, bipartition.blocks[1]))
    if abs(s0 - s1) > 1e-8:
        log.warning("block entropies differ by %.3g", abs(s0 - s1))
    return 0.5 * (s0 + s1)


def _h(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -x * np.log2(x)
    return np.where(x > 1e-300, out, 0.0)


class _ConditionalEntropy:
    """Sum_b p_b S(rho_A|b) for projective measurements on the second qubit.

    With Pi_(+/-) = (I +/- n.sigma)/2 the unnormalised post-measurement states
    are (rho_A +/- n.T)/2, T_i = Tr_B[(I (x) sigma_i) rho], so whole grids of
    Bloch directions reduce to closed-form 2x2 eigenvalue problems.
    """

    def __init__(self, rho: np.ndarray):
        r = rho.reshape(2, 2, 2, 2)
        self.rho_a = np.einsum("ajbj->ab", r)
        self.t = np.stack([np.einsum("ajbk,kj->ab", r, s) for s in PAULIS])

    def __call__(self, theta, phi) -> np.ndarray:
        theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
        n = np.stack(
            [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1
        )
        nt = np.tensordot(n, self.t, axes=([-1], [0]))
        total = np.zeros(theta.shape)
        for sign in (1.0, -1.0):
            m = 0.5 * (self.rho_a + sign * nt)
            a, d, b = m[..., 0, 0].real, m[..., 1, 1].real, m[..., 0, 1]
            p = a + d
            gap = np.sqrt(0.25 * (a - d) ** 2 + np.abs(b) ** 2)
            e1, e2 = 0.5 * p + gap, 0.5 * p - gap
            safe = np.where(p > 1e-300, p, 1.0)
            total += np.where(p > 1e-300, p * (_h(e1 / safe) + _h(e2 / safe)), 0.0)
        return total


def discord_grid(rho: DensityMatrix, resolution: int) -> tuple[float, float, float]:
    """Brute-force minimum of the conditional entropy over a theta x phi grid.

    Returns (min value, theta, phi); ties resolve to the lowest flat grid index.
    """
    cond = _ConditionalEntropy(rho.matrix)
    thetas = np.linspace(0.0, np.pi / 2, resolution)
    phis = np.linspace(0.0, 2 * np.pi, resolution, endpoint=False)
    tg, pg = np.meshgrid(thetas, phis, indexing="ij")
    vals = cond(tg, pg)
    k = int(np.argmin(vals))
    return float(vals.flat[k]), float(tg.flat[k]), float(pg.flat[k])


def _discord_offset(rho: DensityMatrix) -> float:
    rho_b = partial_trace(rho, [1])
    return von_neumann_entropy(rho_b) - von_neumann_entropy(rho)


def discord_two_qubit(rho: DensityMatrix, opts: DiscordOptions | None = None) -> DiscordResult:
    """Ollivier-Zurek discord with projective measurements on the second qubit.

    D = S(rho_B) - S(rho) + min_n sum_b p_b S(rho_A|b), minimised by a coarse
    Bloch-angle grid followed by Nelder-Mead refinement from the grid winner
    and from seeded perturbations of it.
    """
    _require_qubits(rho.layout, 2, "discord input")
    opts = opts or DiscordOptions()
    cond = _ConditionalEntropy(rho.matrix)
    best, th0, ph0 = discord_grid(rho, opts.grid)
    best_x = np.array([th0, ph0])

    rng = np.random.default_rng(opts.seed)
    step = np.pi / opts.grid
    starts = [best_x] + [best_x + rng.uniform(-2 * step, 2 * step, size=2) for _ in range(opts.restarts)]
    converged = True
    for x0 in starts:
        res = minimize(
            lambda x: float(cond(x[0], x[1])),
            x0,
            method="Nelder-Mead",
            options={"xatol": 1e-9, "fatol": opts.tol, "maxiter": opts.max_iter},
        )
        converged &= bool(res.success)
        if res.fun < best:
            best, best_x = float(res.fun), res.x
    if not converged:
        log.warning("discord refinement hit max_iter; returning best value found")
    raw = _discord_offset(rho) + best
    return DiscordResult(max(0.0, raw), raw, float(best_x[0]), float(best_x[1]), converged)
