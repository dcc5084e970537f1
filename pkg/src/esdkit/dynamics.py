"""Jaynes-Cummings pairs, the discretised Weisskopf-Wigner bath, and ESD timing.

Conventions
-----------
* hbar = 1. JC times are usually passed as the dimensionless product ``Jt``.
* ``Gamma`` is the *population* decay rate of an atom in the WW bath, so the
  excited amplitude decays as ``exp(-Gamma t / 2)`` and ``|xi|^2 = exp(-Gamma t)``.
  With this choice the death time of a fragile pair is
  ``-ln(1 - cot theta) / Gamma``. The emitted Lorentzian then has half-width
  ``Gamma / 2`` (see :func:`emission_linewidth`).
* Both models are propagated in the frame rotating at the atomic frequency,
  which removes the global ``exp(-i E t)`` phases.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize

from .measures import (
    SigmaComponents,
    concurrence_mixed,
    q_auxiliary,
    sigma_components,
)
from .qcore import DensityMatrix, PureState, SubsystemLayout, reduced_state

log = logging.getLogger(__name__)

JC_LAYOUT = SubsystemLayout([2, 2, 2, 2], ["A1", "P1", "A2", "P2"])
ATOMS = (0, 2)
PHOTONS = (1, 3)
# atom / collective photon / environment for each emitter
WW6_LAYOUT = SubsystemLayout([2] * 6, ["A1", "P1", "E1", "A2", "P2", "E2"])

_QUARTER = math.pi / 4
_HALF = math.pi / 2


def _check_theta(theta: float, lo: float = 0.0, hi: float = _HALF):
    if not (lo - 1e-15 <= theta <= hi + 1e-15):
        raise ValueError(f"theta={theta!r} outside [{lo}, {hi}]")


def _pair_state(theta: float, phi_1: np.ndarray, phi_2: np.ndarray, ground: np.ndarray) -> np.ndarray:
    return math.cos(theta) * np.kron(ground, ground) + math.sin(theta) * np.kron(phi_1, phi_2)


# ------------------------------------------------------------------- JC


@dataclass(frozen=True)
class JCParams:
    J: float = 1.0
    E: float = 1.0
    omega: float | None = None

    def __post_init__(self):
        if self.J <= 0:
            raise ValueError("J must be positive")
        if self.omega is None:
            object.__setattr__(self, "omega", self.E)
        if not math.isclose(self.omega, self.E, rel_tol=0, abs_tol=1e-12):
            raise ValueError("only the resonant case E == omega is supported")


def jc_state(theta: float, Jt: float) -> PureState:
    """Closed-form two-pair JC state on the A1 P1 A2 P2 layout."""
    _check_theta(theta)
    c, s = math.cos(theta), math.sin(theta)
    amps = np.zeros(16, dtype=complex)
    amps[0b0000] = c
    amps[0b1010] = s * math.cos(Jt) ** 2
    amps[0b0101] = -s * math.sin(Jt) ** 2
    amps[0b0110] = amps[0b1001] = -1j * s * math.sin(2 * Jt) / 2
    return PureState.from_amplitudes(amps, JC_LAYOUT)


def jc_pair_hamiltonian(p: JCParams) -> np.ndarray:
    """H_JC on atom (x) photon with the photon truncated to {0, 1}; basis |g0>,|g1>,|e0>,|e1>."""
    sm = np.array([[0, 1], [0, 0]], dtype=complex)  # |g><e|
    a = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|
    i2 = np.eye(2)
    h = p.E * np.kron(sm.conj().T @ sm, i2) + p.omega * np.kron(i2, a.conj().T @ a)
    h += p.J * (np.kron(sm, a.conj().T) + np.kron(sm.conj().T, a))
    return h


def _pair_propagator(p: JCParams, t: float) -> np.ndarray:
    h = jc_pair_hamiltonian(p)
    w, v = np.linalg.eigh(h)
    u = (v * np.exp(-1j * w * t)) @ v.conj().T
    # excitation number commutes with H on resonance; undo its free phase
    n_exc = np.array([0.0, 1.0, 1.0, 2.0])
    return np.exp(1j * p.E * n_exc * t)[:, None] * u


def jc_evolve_numeric(theta: float, t: float, p: JCParams | None = None) -> PureState:
    """Propagate the initial JC state by diagonalising each atom-photon pair Hamiltonian."""
    p = p or JCParams()
    _check_theta(theta)
    psi0 = jc_state(theta, 0.0).amplitudes
    u = _pair_propagator(p, t)
    return PureState.from_amplitudes(np.kron(u, u) @ psi0, JC_LAYOUT)


def jc_esd_window_closed_form(theta: float) -> tuple[float, float] | None:
    """Jt interval on which the atom-atom concurrence vanishes, or None for robust states."""
    _check_theta(theta)
    if theta <= _QUARTER:
        return None
    x = math.asin(math.sqrt(1.0 / math.tan(theta)))
    return x, math.pi - x


def zero_crossings(
    f: Callable[[float], float], a: float, b: float, samples: int = 400, xtol: float = 1e-12
) -> list[float]:
    """Locate sign changes of ``f`` on [a, b] by sampling then bisection."""
    xs = np.linspace(a, b, samples)
    vals = np.array([f(x) for x in xs])
    roots = []
    for i in range(samples - 1):
        if (vals[i] > 0) != (vals[i + 1] > 0):
            roots.append(optimize.bisect(lambda x: f(x) - 0.0, xs[i], xs[i + 1], xtol=xtol))
    return roots


def jc_esd_window_numeric(theta: float, p: JCParams | None = None) -> tuple[float, float] | None:
    """Numeric zero set of C_AA in Jt over one period [0, pi].

    Bisects on the sign of the Wootters Q of the numerically propagated
    atom-atom reduced state; C_AA = max(0, Q) vanishes exactly where Q <= 0.
    """
    p = p or JCParams()

    def q(jt):
        return q_auxiliary(reduced_state(jc_evolve_numeric(theta, jt / p.J, p), ATOMS))

    roots = zero_crossings(q, 0.0, math.pi, samples=400)
    if not roots:
        return None
    return roots[0], roots[-1]


# ------------------------------------------------------------------- WW


@dataclass(frozen=True)
class WWParams:
    """Flat discretised bath: N modes uniformly on [E - W, E + W], equal couplings."""

    N: int = 1000
    Gamma: float = 1.0
    W: float = 40.0
    E: float = 0.0

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("need at least 2 bath modes")
        if self.W <= 0 or self.Gamma <= 0:
            raise ValueError("W and Gamma must be positive")

    @property
    def spacing(self) -> float:
        return 2 * self.W / (self.N - 1)

    @property
    def omegas(self) -> np.ndarray:
        return self.E + np.linspace(-self.W, self.W, self.N)

    @property
    def couplings(self) -> np.ndarray:
        return np.full(self.N, math.sqrt(self.Gamma * self.spacing / (2 * math.pi)))

    @property
    def horizon(self) -> float:
        """Recurrence time 2 pi / spacing; results are meaningful well before it."""
        return 2 * math.pi / self.spacing


@dataclass(frozen=True, eq=False)
class WWSolution:
    times: np.ndarray
    xi: np.ndarray
    lambdas: np.ndarray  # shape (len(times), N)
    params: WWParams | None = None
    beyond_horizon: bool = False

    def norm_error(self) -> float:
        tot = np.abs(self.xi) ** 2 + np.sum(np.abs(self.lambdas) ** 2, axis=1)
        return float(np.max(np.abs(tot - 1.0)))

    def at(self, t: float) -> tuple[complex, np.ndarray]:
        k = np.flatnonzero(np.isclose(self.times, t, rtol=0, atol=1e-12))
        if k.size == 0:
            raise ValueError(f"time {t!r} is not stored in this solution")
        return self.xi[k[0]], self.lambdas[k[0]]


class StarPropagator:
    """Exact propagation of one excitation shared by an emitter and N modes.

    The Hamiltonian in the atom's rotating frame is the star graph
    ``sum_k d_k |k><k| + J_k (|k><e| + |e><k|)`` with detunings ``d_k``;
    it is diagonalised once and then evaluated at any time.
    """

    def __init__(self, detunings: Sequence[float], couplings: Sequence[float]):
        d = np.asarray(detunings, dtype=float)
        j = np.asarray(couplings, dtype=float)
        if d.shape != j.shape or d.ndim != 1:
            raise ValueError("detunings and couplings must be 1-d arrays of equal length")
        n = d.size
        h = np.zeros((n + 1, n + 1))
        h[1:, 1:] = np.diag(d)
        h[0, 1:] = h[1:, 0] = j
        self.energies, self.vectors = np.linalg.eigh(h)
        self._weights = self.vectors[0, :].conj()

    def amplitudes(self, times) -> np.ndarray:
        """State vectors (rows) at ``times`` starting from the excited emitter."""
        ts = np.atleast_1d(np.asarray(times, dtype=float))
        phases = np.exp(-1j * np.outer(ts, self.energies)) * self._weights
        return phases @ self.vectors.T

    def xi(self, t: float) -> complex:
        return complex(np.sum(np.abs(self._weights) ** 2 * np.exp(-1j * self.energies * t)))


class WWModel:
    """Discretised Weisskopf-Wigner emitter, diagonalised once per parameter set."""

    def __init__(self, params: WWParams | None = None):
        self.params = params or WWParams()
        p = self.params
        self.propagator = StarPropagator(p.omegas - p.E, p.couplings)

    def amplitudes(self, t: float) -> tuple[complex, np.ndarray]:
        self._check_time(t)
        v = self.propagator.amplitudes([t])[0]
        return v[0], v[1:]

    def solve(self, times) -> WWSolution:
        ts = np.asarray(times, dtype=float)
        beyond = bool(np.max(ts) > self.params.horizon / 2) if ts.size else False
        if beyond:
            log.warning("requested times exceed half the recurrence time %.3g", self.params.horizon)
        v = self.propagator.amplitudes(ts)
        return WWSolution(ts, v[:, 0], v[:, 1:], self.params, beyond)

    def _check_time(self, t: float):
        if t > self.params.horizon / 2:
            log.warning("t=%.3g beyond half the recurrence time %.3g", t, self.params.horizon)


def ww_solve(p: WWParams, times) -> WWSolution:
    return WWModel(p).solve(times)


@dataclass(frozen=True, eq=False)
class ModeSubset:
    indices: np.ndarray
    delta_nu: float | None = field(default=None)

    @classmethod
    def all_modes(cls, p: WWParams) -> "ModeSubset":
        return cls(np.arange(p.N))

    @classmethod
    def window(cls, p: WWParams, delta_nu: float) -> "ModeSubset":
        if not 0 <= delta_nu <= p.W + 1e-12:
            raise ValueError(f"delta_nu={delta_nu!r} outside [0, W={p.W}]")
        idx = np.flatnonzero(np.abs(p.omegas - p.E) <= delta_nu + 1e-12 * p.W)
        return cls(idx, delta_nu)

    def chi_sq(self, lambdas: np.ndarray) -> float:
        return float(np.sum(np.abs(np.asarray(lambdas)[self.indices]) ** 2))

    def chi_prime(self, lambdas: np.ndarray) -> float:
        return math.sqrt(min(1.0, self.chi_sq(lambdas)))

    def product_form(self, lambdas_1: np.ndarray, lambdas_2: np.ndarray | None = None) -> float:
        """sum_k |lambda_k|^2_(1) |lambda_k|^2_(2) over the subset (diagnostic only)."""
        l1 = np.abs(np.asarray(lambdas_1)[self.indices]) ** 2
        l2 = l1 if lambdas_2 is None else np.abs(np.asarray(lambdas_2)[self.indices]) ** 2
        return float(np.sum(l1 * l2))


def ww_pair_state(theta: float, xi: complex, chi: float) -> PureState:
    """Two emitters, each split into atom / collective mode / environment qubits.

    Per emitter: xi |e,0,0> + chi |g,1,0> + sqrt(1 - |xi|^2 - chi^2) |g,0,1>.
    """
    _check_theta(theta)
    env = math.sqrt(max(0.0, 1.0 - abs(xi) ** 2 - chi**2))
    phi = np.zeros(8, dtype=complex)
    phi[0b100] = xi
    phi[0b010] = chi
    phi[0b001] = env
    ground = np.zeros(8)
    ground[0] = 1.0
    return PureState.from_amplitudes(_pair_state(theta, phi, phi, ground), WW6_LAYOUT)


def ww_four_qubit_state(theta: float, xi: complex, chi: float) -> PureState:
    """Atoms plus full collective modes (no environment) on the A1 P1 A2 P2 layout."""
    _check_theta(theta)
    phi = np.array([0.0, chi, xi, 0.0], dtype=complex)  # |g0>,|g1>,|e0>,|e1>
    ground = np.array([1.0, 0, 0, 0])
    return PureState.from_amplitudes(_pair_state(theta, phi, phi, ground), JC_LAYOUT)


_PAIRS = {"atoms": (0, 3), "photons": (1, 4)}
_OFF_X = [(0, 1), (0, 2), (1, 3), (2, 3)]


def _amplitudes_at(sol, t: float) -> tuple[complex, np.ndarray]:
    if isinstance(sol, WWModel):
        return sol.amplitudes(t)
    return sol.at(t)


def two_atom_ww_reduced(
    theta: float, sol: WWModel | WWSolution, subset: ModeSubset, t: float, pair: str = "atoms"
) -> DensityMatrix:
    """X-form two-qubit state of the atoms or of the collective modes at time ``t``."""
    if pair not in _PAIRS:
        raise ValueError(f"pair must be one of {sorted(_PAIRS)}")
    xi, lam = _amplitudes_at(sol, t)
    psi = ww_pair_state(theta, xi, subset.chi_prime(lam))
    rho = reduced_state(psi, _PAIRS[pair])
    m = rho.matrix
    if max(max(abs(m[i, j]), abs(m[j, i])) for i, j in _OFF_X) > 1e-12:
        raise RuntimeError("reduced state is not of X form")
    return rho


# ------------------------------------------------------------- timing


def esd_death_time(theta: float, Gamma: float = 1.0) -> float:
    """Closed-form death time; ``math.inf`` for robust states (theta <= pi/4)."""
    _check_theta(theta)
    if theta <= _QUARTER:
        return math.inf
    return -math.log(1.0 - 1.0 / math.tan(theta)) / Gamma


def esb_birth_time(theta: float, Gamma: float = 1.0) -> float:
    """Closed-form birth time of photon entanglement (|xi|^2 = cot theta).

    Robust states have photon entanglement from t = 0+, reported as 0.0;
    theta = pi/2 never produces it in finite time (``math.inf``).
    """
    _check_theta(theta)
    if theta <= _QUARTER:
        return 0.0
    if theta >= _HALF - 1e-15:
        return math.inf
    cot = math.cos(theta) / math.sin(theta)
    return -math.log(cot) / Gamma


def _bracketed_root(f: Callable[[float], float], t_guess: float, t_max: float, xtol: float) -> float:
    lo, hi = 0.0, t_guess
    f_lo = f(lo)
    while (f(hi) > 0) == (f_lo > 0):
        lo, hi = hi, 2 * hi
        if hi > t_max:
            raise RuntimeError("no sign change found within the valid time horizon")
    return optimize.bisect(f, lo, hi, xtol=xtol)


def _ww_q(model: WWModel, theta: float, pair: str) -> Callable[[float], float]:
    full = ModeSubset.all_modes(model.params)

    def q(t: float) -> float:
        return q_auxiliary(two_atom_ww_reduced(theta, model, full, t, pair))

    return q


def esd_death_time_numeric(theta: float, model: WWModel) -> float:
    """Bisection on the atom-atom concurrence of the discretised bath."""
    _check_theta(theta)
    if theta <= _QUARTER:
        return math.inf
    g = model.params.Gamma
    guess = 0.25 / g
    return _bracketed_root(_ww_q(model, theta, "atoms"), guess, model.params.horizon / 2, 1e-8 / g)


def esb_birth_time_numeric(theta: float, model: WWModel) -> float:
    """Bisection on the collective photon-photon concurrence of the discretised bath."""
    _check_theta(theta)
    if theta <= _QUARTER:
        return 0.0
    if theta >= _HALF - 1e-15:
        return math.inf
    g = model.params.Gamma
    q = _ww_q(model, theta, "photons")
    # Q_PP starts at 0 and dips negative before the birth; bracket from just after t=0
    lo = 1e-3 / g
    hi = 0.25 / g
    while q(hi) <= 0:
        lo, hi = hi, 2 * hi
        if hi > model.params.horizon / 2:
            raise RuntimeError("no photon entanglement birth within the valid time horizon")
    return optimize.bisect(q, lo, hi, xtol=1e-8 / g)


# --------------------------------------------------------- invariant


def invariant_sigma_components(theta: float, t: float, model: str | WWModel = "jc") -> SigmaComponents:
    if isinstance(model, WWModel):
        xi, lam = model.amplitudes(t)
        chi = ModeSubset.all_modes(model.params).chi_prime(lam)
        psi = ww_four_qubit_state(theta, xi, chi)
    elif model == "jc":
        psi = jc_state(theta, t)
    else:
        raise ValueError(f"unknown model {model!r}")
    return sigma_components(psi, ATOMS, PHOTONS)


def invariant_sigma(theta: float, t: float, model: str | WWModel = "jc") -> float:
    """Q_AA + Q_PP + C_4; equals sin(2 theta) at every time.

    For ``model="jc"`` the time argument is the dimensionless ``Jt``.
    """
    return invariant_sigma_components(theta, t, model).sigma


# ------------------------------------------------------------ spectra


def spectrum(nu, gamma: float, E: float = 0.0):
    """Lorentzian with half-width ``gamma`` centred on ``E``, normalised to 1."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    nu = np.asarray(nu, dtype=float)
    out = (gamma / math.pi) / ((E - nu) ** 2 + gamma**2)
    return float(out) if out.ndim == 0 else out


def detection_probability(delta_nu: float, gamma: float) -> float:
    """Weight of the Lorentzian inside E +/- delta_nu."""
    if delta_nu < 0:
        raise ValueError("delta_nu must be >= 0")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return 2.0 / math.pi * math.atan(delta_nu / gamma)


def detection_probability_quadrature(delta_nu: float, gamma: float, E: float = 0.0) -> float:
    val, _ = integrate.quad(spectrum, E - delta_nu, E + delta_nu, args=(gamma, E), epsabs=1e-13, epsrel=1e-12)
    return val


def bandwidth_threshold(theta: float) -> float:
    """Minimum delta_nu / gamma for collective-mode entanglement of a fragile pair."""
    if not (_QUARTER - 1e-15 <= theta < _HALF):
        raise ValueError(f"theta={theta!r} outside [pi/4, pi/2)")
    cot = math.cos(theta) / math.sin(theta)
    return math.tan(_HALF * (1.0 - min(1.0, cot)))


def emission_linewidth(p: WWParams) -> float:
    """Half-width of the emitted Lorentzian for population decay rate Gamma."""
    return p.Gamma / 2


@dataclass(frozen=True)
class ScanRow:
    delta_nu: float
    chi_sq: float
    c_pp: float
    q_pp: float
    product_form: float


def long_time(p: WWParams, target: float = 1e-4) -> float:
    """A time at which |xi|^2 has decayed below ``target`` (with 10% margin)."""
    t = 1.1 * -math.log(target) / p.Gamma
    if t > p.horizon / 2:
        raise ValueError("bath discretisation too coarse for the long-time limit")
    return t


def partition_scan(
    theta: float, model: WWModel, delta_nus: Sequence[float], t: float | None = None
) -> list[ScanRow]:
    """Collective-mode concurrence versus the half-bandwidth of the kept modes."""
    p = model.params
    dn = np.asarray(delta_nus, dtype=float)
    if dn.size == 0 or dn.min() < 0 or dn.max() > p.W + 1e-12:
        raise ValueError(f"delta_nu grid must lie inside [0, W={p.W}]")
    t = long_time(p) if t is None else t
    xi, lam = model.amplitudes(t)
    if abs(xi) ** 2 > 1e-3:
        log.warning("|xi|^2=%.3g at t=%.3g: not in the long-time limit", abs(xi) ** 2, t)
    rows = []
    for d in dn:
        sub = ModeSubset.window(p, float(d))
        rho = reduced_state(ww_pair_state(theta, xi, sub.chi_prime(lam)), _PAIRS["photons"])
        q = q_auxiliary(rho)
        rows.append(ScanRow(float(d), sub.chi_sq(lam), max(0.0, q), q, sub.product_form(lam)))
    return rows


def scan_transition(rows: Sequence[ScanRow]) -> float | None:
    """Smallest delta_nu from which the collective concurrence stays positive."""
    pos = [r.c_pp > 0 for r in rows]
    for i in range(len(rows)):
        if all(pos[i:]):
            return rows[i].delta_nu
    return None


def concurrence_pair(theta: float, sol, subset: ModeSubset, t: float, pair: str) -> float:
    return concurrence_mixed(two_atom_ww_reduced(theta, sol, subset, t, pair))
