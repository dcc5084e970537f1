"""State containers and tensor algebra over small multi-qudit layouts.

Index convention: basis states are enumerated row-major over the layout,
first label most significant. For a layout ``A1 P1 A2 P2`` of qubits the
basis state ``|g0e0>`` (g=0, e=1) therefore sits at index ``0b0010 = 2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = -1e-10


@dataclass(frozen=True)
class SubsystemLayout:
    dims: tuple[int, ...]
    labels: tuple[str, ...]

    def __init__(self, dims: Sequence[int], labels: Sequence[str] | None = None):
        dims = tuple(int(d) for d in dims)
        if labels is None:
            labels = tuple(f"q{i}" for i in range(len(dims)))
        labels = tuple(str(lb) for lb in labels)
        if not dims:
            raise ValueError("layout needs at least one subsystem")
        if any(d < 2 for d in dims):
            raise ValueError(f"every local dimension must be >= 2, got {dims}")
        if len(labels) != len(dims):
            raise ValueError("labels and dims differ in length")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate labels in {labels}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def indices(self, items: Iterable[int | str]) -> tuple[int, ...]:
        """Resolve a mix of labels and integer positions to positions."""
        out = []
        for it in items:
            i = self.index(it) if isinstance(it, str) else int(it)
            if not 0 <= i < self.n:
                raise ValueError(f"subsystem index {i} outside layout of size {self.n}")
            out.append(i)
        return tuple(out)

    def restrict(self, keep: Sequence[int]) -> "SubsystemLayout":
        return SubsystemLayout([self.dims[i] for i in keep], [self.labels[i] for i in keep])

    def concat(self, other: "SubsystemLayout") -> "SubsystemLayout":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise ValueError(f"label collision: {sorted(clash)}")
        return SubsystemLayout(self.dims + other.dims, self.labels + other.labels)

    @classmethod
    def qubits(cls, n_or_labels: int | Sequence[str]) -> "SubsystemLayout":
        if isinstance(n_or_labels, int):
            return cls([2] * n_or_labels)
        return cls([2] * len(n_or_labels), n_or_labels)


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray
    layout: SubsystemLayout

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.layout.total_dim:
            raise ValueError(
                f"amplitude vector has length {amps.size}, layout needs {self.layout.total_dim}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm={norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amps, layout: SubsystemLayout, normalize: bool = True) -> "PureState":
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise ValueError("cannot normalize the zero vector")
            amps = amps / norm
        return cls(amps, layout)

    @classmethod
    def basis(cls, digits: Sequence[int], layout: SubsystemLayout) -> "PureState":
        idx = np.ravel_multi_index(tuple(digits), layout.dims)
        amps = np.zeros(layout.total_dim, dtype=complex)
        amps[idx] = 1.0
        return cls(amps, layout)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.layout)

    def __repr__(self) -> str:
        return f"PureState(layout={self.layout.labels}, dim={self.layout.total_dim})"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray
    layout: SubsystemLayout

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = self.layout.total_dim
        if m.shape != (d, d):
            raise ValueError(f"density matrix has shape {m.shape}, layout needs {(d, d)}")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace is {tr!r}, expected 1")
        if np.linalg.eigvalsh(m).min() < PSD_TOL:
            raise ValueError("density matrix has negative eigenvalues")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def eigvals(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def __repr__(self) -> str:
        return f"DensityMatrix(layout={self.layout.labels}, dim={self.layout.total_dim})"


@dataclass(frozen=True)
class Partition:
    """Set partition of subsystem indices into ``K`` blocks.

    Blocks are stored sorted internally and ordered by their smallest member,
    so two partitions describing the same grouping compare equal.
    """

    blocks: tuple[tuple[int, ...], ...]

    def __init__(self, blocks: Iterable[Iterable[int]], n: int | None = None):
        canon = tuple(sorted((tuple(sorted(set(b))) for b in blocks), key=lambda b: b[0] if b else -1))
        if any(len(b) == 0 for b in canon):
            raise ValueError("partition blocks must be nonempty")
        members = [i for b in canon for i in b]
        if len(members) != len(set(members)):
            raise ValueError("partition blocks overlap")
        n = len(members) if n is None else n
        if sorted(members) != list(range(n)):
            raise ValueError(f"blocks {canon} do not cover 0..{n - 1} exactly once")
        object.__setattr__(self, "blocks", canon)

    @property
    def K(self) -> int:
        return len(self.blocks)

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    def label(self, layout: SubsystemLayout | None = None) -> str:
        if layout is None:
            return "|".join("".join(str(i) for i in b) for b in self.blocks)
        return "|".join("".join(layout.labels[i] for i in b) for b in self.blocks)

    def refines(self, other: "Partition") -> bool:
        """True when every block of ``self`` sits inside a block of ``other``."""
        return all(any(set(b) <= set(o) for o in other.blocks) for b in self.blocks)

    @classmethod
    def from_labels(cls, spec: str, layout: SubsystemLayout) -> "Partition":
        """Parse ``"A1P1|A2P2"``-style notation (labels matched greedily)."""
        blocks = []
        for chunk in spec.split("|"):
            block, rest = [], chunk.strip()
            while rest:
                match = max((lb for lb in layout.labels if rest.startswith(lb)), key=len, default=None)
                if match is None:
                    raise ValueError(f"cannot parse {chunk!r} against labels {layout.labels}")
                block.append(layout.index(match))
                rest = rest[len(match):]
            blocks.append(block)
        return cls(blocks, n=layout.n)

    def __str__(self) -> str:
        return self.label()


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    coefficients: np.ndarray
    left: np.ndarray  # columns are left Schmidt vectors
    right: np.ndarray  # columns are right Schmidt vectors
    partition: Partition = field(default=None)

    def reconstruct(self) -> np.ndarray:
        """Amplitude matrix of the state with rows over block 0 and columns over block 1."""
        return (self.left * self.coefficients) @ self.right.T


def tensor_product(a: PureState, b: PureState) -> PureState:
    layout = a.layout.concat(b.layout)
    return PureState.from_amplitudes(np.kron(a.amplitudes, b.amplitudes), layout)


def kron_all(states: Sequence[PureState]) -> PureState:
    return reduce(tensor_product, states)


def _reduce_tensor(psi: PureState, keep: Sequence[int]) -> np.ndarray:
    n = psi.layout.n
    drop = [i for i in range(n) if i not in keep]
    t = psi.tensor().transpose(list(keep) + drop)
    dk = int(np.prod([psi.layout.dims[i] for i in keep]))
    return t.reshape(dk, -1)


def reduced_state(psi: PureState, keep: Iterable[int | str]) -> DensityMatrix:
    """Partial trace of ``|psi><psi|`` onto ``keep`` (order of ``keep`` is kept)."""
    keep = psi.layout.indices(keep)
    if not keep:
        raise ValueError("keep set must be nonempty")
    if len(set(keep)) != len(keep):
        raise ValueError("keep set has repeated subsystems")
    m = _reduce_tensor(psi, keep)
    rho = m @ m.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho, psi.layout.restrict(keep))


def partial_trace(rho: DensityMatrix, keep: Iterable[int | str]) -> DensityMatrix:
    keep = rho.layout.indices(keep)
    if not keep:
        raise ValueError("keep set must be nonempty")
    n = rho.layout.n
    dims = rho.layout.dims
    drop = [i for i in range(n) if i not in keep]
    t = rho.matrix.reshape(dims + dims)
    perm = list(keep) + drop
    t = t.transpose(perm + [p + n for p in perm])
    dk = int(np.prod([dims[i] for i in keep]))
    dd = rho.layout.total_dim // dk
    t = t.reshape(dk, dd, dk, dd)
    return DensityMatrix(np.einsum("ajbj->ab", t), rho.layout.restrict(keep))


def schmidt(psi: PureState, bipartition: Partition) -> SchmidtDecomposition:
    if bipartition.K != 2:
        raise ValueError(f"Schmidt decomposition needs exactly 2 blocks, got {bipartition.K}")
    if bipartition.n != psi.layout.n:
        raise ValueError("partition does not match the state layout")
    m = _reduce_tensor(psi, bipartition.blocks[0])
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    return SchmidtDecomposition(s, u, vh.T, bipartition)


def enumerate_partitions(n: int, K: int) -> list[Partition]:
    """All set partitions of ``range(n)`` into exactly ``K`` blocks.

    Restricted growth strings: element ``i`` joins an existing block or opens
    the next one, which visits each partition once in canonical order.
    """
    if n < 1 or not 1 <= K <= n:
        raise ValueError(f"need 1 <= K <= n, got n={n}, K={K}")
    out: list[Partition] = []

    def grow(i: int, assign: list[int], used: int):
        if n - i < K - used:
            return
        if i == n:
            if used == K:
                blocks = [[j for j in range(n) if assign[j] == b] for b in range(K)]
                out.append(Partition(blocks, n=n))
            return
        for b in range(used):
            grow(i + 1, assign + [b], used)
        if used < K:
            grow(i + 1, assign + [used], used + 1)

    grow(0, [], 0)
    return out


def _entropy_from_eigs(p: np.ndarray) -> float:
    p = p[p > 1e-15]
    return float(max(0.0, -np.sum(p * np.log2(p))))


def von_neumann_entropy(rho: DensityMatrix | np.ndarray) -> float:
    """Entropy in bits. Accepts a raw matrix for internal callers."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    p = np.linalg.eigvalsh(m)
    if p.min() < PSD_TOL:
        raise ValueError("matrix is not positive semidefinite")
    return _entropy_from_eigs(np.clip(p, 0.0, None))


def binary_entropy(p: float) -> float:
    return _entropy_from_eigs(np.array([p, 1.0 - p]))


def random_pure_state(layout: SubsystemLayout, rng: np.random.Generator) -> PureState:
    """Haar-random pure state."""
    z = rng.normal(size=layout.total_dim) + 1j * rng.normal(size=layout.total_dim)
    return PureState.from_amplitudes(z, layout)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def apply_local(psi: PureState, ops: dict[int, np.ndarray]) -> PureState:
    """Apply single-subsystem operators ``{position: matrix}`` to ``psi``."""
    t = psi.tensor()
    for i, u in ops.items():
        t = np.moveaxis(np.tensordot(u, t, axes=([1], [i])), 0, i)
    return PureState.from_amplitudes(t.reshape(-1), psi.layout)


def ghz(n: int) -> PureState:
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = amps[-1] = 1 / np.sqrt(2)
    return PureState(amps, SubsystemLayout.qubits(n))


def bell_pair(labels: Sequence[str] = ("q0", "q1")) -> PureState:
    return PureState.from_amplitudes([1, 0, 0, 1], SubsystemLayout.qubits(labels))
