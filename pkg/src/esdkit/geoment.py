"""Geometric entanglement: best product-state overlaps and the K-hierarchy.

The overlap with a product state is maximised by alternating (block
coordinate) ascent: fixing every factor but one, the optimal remaining
factor is the normalised contraction of the state with the conjugates of
the others, so each update is exact and the overlap never decreases. All
restarts run together as one batched tensor contraction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qcore import Partition, PureState, enumerate_partitions

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GEOptions:
    restarts: int = 32
    max_iter: int = 500
    tol: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True, eq=False)
class GEResult:
    lambda_sq: float
    partition: Partition
    factors: tuple[np.ndarray, ...]
    converged: bool
    iterations: int
    history: np.ndarray = field(repr=False, default=None)

    @property
    def energy(self) -> float:
        return 1.0 - self.lambda_sq

    def product_state(self, dims: Sequence[int]) -> np.ndarray:
        """Best product state as an amplitude vector in the original subsystem order."""
        t = self.factors[0]
        for f in self.factors[1:]:
            t = np.multiply.outer(t, f)
        order = [i for b in self.partition.blocks for i in b]
        t = np.asarray(t).reshape([dims[i] for i in order])
        return t.transpose(np.argsort(order)).reshape(-1)


def _block_tensor(psi: PureState, partition: Partition) -> np.ndarray:
    if partition.n != psi.layout.n:
        raise ValueError(
            f"partition covers {partition.n} subsystems, state has {psi.layout.n}"
        )
    order = [i for b in partition.blocks for i in b]
    bdims = [int(np.prod([psi.layout.dims[i] for i in b])) for b in partition.blocks]
    return psi.tensor().transpose(order).reshape(bdims)


def _haar_vectors(dims: Sequence[int], rng: np.random.Generator) -> list[np.ndarray]:
    out = []
    for d in dims:
        z = rng.normal(size=d) + 1j * rng.normal(size=d)
        out.append(z / np.linalg.norm(z))
    return out


def _contract_except(t: np.ndarray, factors: list[np.ndarray], skip: int) -> np.ndarray:
    """Contract batched tensor ``t`` (axis 0 = restart) with conj factors on all blocks but ``skip``."""
    K = len(factors)
    letters = "abcdefghijklmnop"[:K]
    ops = [f"z{letters}"]
    args = [t]
    for b in range(K):
        if b == skip:
            continue
        ops.append(f"z{letters[b]}")
        args.append(factors[b].conj())
    return np.einsum(",".join(ops) + f"->z{letters[skip]}", *args, optimize=False)


def best_product_overlap(
    psi: PureState,
    partition: Partition,
    opts: GEOptions | None = None,
    initial: Sequence[Sequence[np.ndarray]] = (),
) -> GEResult:
    """Maximise |<phi_1 x ... x phi_K|psi>|^2 over product states for ``partition``.

    ``initial`` adds extra starting points (one factor per block) on top of
    the seeded Haar-random restarts; restart ``r`` draws from
    ``default_rng([seed, r])`` so results do not depend on scheduling.
    """
    opts = opts or GEOptions()
    t = _block_tensor(psi, partition)
    bdims = t.shape
    K = len(bdims)

    starts = [_haar_vectors(bdims, np.random.default_rng([opts.seed, r])) for r in range(opts.restarts)]
    for init in initial:
        if len(init) != K or any(np.asarray(f).shape != (d,) for f, d in zip(init, bdims)):
            raise ValueError("initial factors do not match the partition block dimensions")
        starts.append([np.asarray(f, dtype=complex) / np.linalg.norm(f) for f in init])
    R = len(starts)
    factors = [np.stack([s[b] for s in starts]) for b in range(K)]
    tb = np.broadcast_to(t, (R,) + bdims)

    if K == 1:
        v = t.reshape(-1)
        return GEResult(1.0, partition, (v / np.linalg.norm(v),), True, 0, np.array([1.0]))

    overlap = np.full(R, -np.inf)
    active = np.ones(R, dtype=bool)
    iters = np.zeros(R, dtype=int)
    history = []
    for it in range(opts.max_iter):
        for b in range(K):
            v = _contract_except(tb, factors, b)
            nrm = np.linalg.norm(v, axis=1)
            ok = nrm > 1e-300
            upd = active & ok
            factors[b][upd] = v[upd] / nrm[upd, None]
        new = nrm**2
        drop = new < overlap - 1e-12
        if np.any(drop & active):
            raise RuntimeError("alternating optimizer decreased the overlap; this is a bug")
        delta = new - overlap
        overlap = np.where(active, new, overlap)
        iters[active] += 1
        history.append(overlap.max())
        active &= delta >= opts.tol
        if not active.any():
            break

    converged = not active.any()
    best = int(np.argmax(overlap))  # first maximum: lowest restart index wins ties
    if not converged:
        log.debug("GE optimizer: %d/%d restarts unconverged", int(active.sum()), R)
    return GEResult(
        float(min(1.0, overlap[best])),
        partition,
        tuple(f[best].copy() for f in factors),
        bool(not active[best]),
        int(iters[best]),
        np.asarray(history),
    )


def relative_ge(psi: PureState, partition: Partition, opts: GEOptions | None = None, **kw) -> GEResult:
    """Partition-dependent geometric entanglement; read ``.energy`` for 1 - Lambda^2."""
    return best_product_overlap(psi, partition, opts, **kw)


def absolute_ge(psi: PureState, K: int, opts: GEOptions | None = None) -> GEResult:
    n = psi.layout.n
    if not 2 <= K <= n:
        raise ValueError(f"need 2 <= K <= {n}, got {K}")
    best = None
    for p in enumerate_partitions(n, K):
        res = best_product_overlap(psi, p, opts)
        if best is None or res.lambda_sq > best.lambda_sq:
            best = res
    return best


@dataclass(frozen=True, eq=False)
class HierarchyReport:
    age: dict[int, float]
    rge: dict[int, dict[Partition, float]]
    winners: dict[int, Partition]
    converged: bool
    tol: float = 1e-6

    @property
    def differences(self) -> dict[int, float]:
        """E^(K) - E^(K-1) for K = 3..N, clamped at -tol."""
        ks = sorted(self.age)
        return {k: max(-self.tol, self.age[k] - self.age[k - 1]) for k in ks[1:]}

    def is_monotone(self) -> bool:
        ks = sorted(self.age)
        return all(self.age[b] >= self.age[a] - self.tol for a, b in zip(ks, ks[1:]))


def _merge_factors(res: GEResult, coarse: Partition, dims: Sequence[int]) -> list[np.ndarray]:
    """Product factors of a finer result regrouped onto the blocks of ``coarse``."""
    fine = res.partition
    by_member = {}
    for block, f in zip(fine.blocks, res.factors):
        by_member[block] = f
    out = []
    for cb in coarse.blocks:
        parts = [b for b in fine.blocks if set(b) <= set(cb)]
        t = by_member[parts[0]]
        order = list(parts[0])
        for b in parts[1:]:
            t = np.multiply.outer(t.reshape([dims[i] for i in order]), by_member[b].reshape([dims[i] for i in b]))
            order += list(b)
        t = np.asarray(t).reshape([dims[i] for i in order])
        t = t.transpose([order.index(i) for i in cb]).reshape(-1)
        out.append(t)
    return out


def hierarchy(psi: PureState, opts: GEOptions | None = None, tol: float = 1e-6) -> HierarchyReport:
    """E_AGE^(K) for K = 2..N plus every per-partition E_RGE.

    Levels are computed from K = N downwards. Each coarser partition also
    starts from the merged optimum of every finer partition refining it,
    which makes the ladder monotone by construction rather than by luck.
    """
    opts = opts or GEOptions()
    n = psi.layout.n
    if n < 2:
        raise ValueError("hierarchy needs at least two subsystems")
    dims = psi.layout.dims
    rge: dict[int, dict[Partition, float]] = {}
    age: dict[int, float] = {}
    winners: dict[int, Partition] = {}
    converged = True
    finer: list[GEResult] = []
    for K in range(n, 1, -1):
        level: list[GEResult] = []
        for p in enumerate_partitions(n, K):
            seeds = [_merge_factors(r, p, dims) for r in finer if r.partition.refines(p)]
            res = best_product_overlap(psi, p, opts, initial=seeds)
            converged &= res.converged
            level.append(res)
        rge[K] = {r.partition: r.energy for r in level}
        top = max(level, key=lambda r: r.lambda_sq)  # max() keeps the first on ties
        age[K] = top.energy
        winners[K] = top.partition
        finer = level
    return HierarchyReport(
        dict(sorted(age.items())), dict(sorted(rge.items())), dict(sorted(winners.items())), converged, tol
    )
