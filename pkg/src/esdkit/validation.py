"""Input checking in the spirit of ``sklearn.utils.check_array``."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .qcore import DensityMatrix, PureState, SubsystemLayout


def as_layout(dims: Sequence[int] | SubsystemLayout, labels: Sequence[str] | None = None) -> SubsystemLayout:
    if isinstance(dims, SubsystemLayout):
        return dims
    return SubsystemLayout(dims, labels)


def check_state(x, layout: SubsystemLayout, normalize: bool = False) -> PureState:
    if isinstance(x, PureState):
        if x.layout.dims != layout.dims:
            raise ValueError(f"state layout {x.layout.dims} does not match {layout.dims}")
        return x
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-d amplitude vector, got shape {arr.shape}")
    if normalize:
        return PureState.from_amplitudes(arr, layout)
    return PureState(arr, layout)


def check_states(X, layout: SubsystemLayout, normalize: bool = False) -> list[PureState]:
    """Accept a list of PureState or an (n_samples, dim) amplitude array."""
    if isinstance(X, PureState):
        X = [X]
    if not isinstance(X, (list, tuple)):
        X = np.asarray(X)
        if X.ndim == 1:
            raise ValueError(
                "expected 2-d input (n_samples, dim); reshape a single state with x.reshape(1, -1)"
            )
        if X.ndim != 2:
            raise ValueError(f"expected 2-d input, got shape {X.shape}")
        if X.shape[0] == 0:
            raise ValueError("need at least one sample")
    return [check_state(x, layout, normalize) for x in X]


def check_density_matrix(x, layout: SubsystemLayout) -> DensityMatrix:
    if isinstance(x, DensityMatrix):
        if x.layout.dims != layout.dims:
            raise ValueError(f"density matrix layout {x.layout.dims} does not match {layout.dims}")
        return x
    if isinstance(x, PureState):
        return check_density_matrix(x.density(), layout)
    arr = np.asarray(x)
    if arr.ndim == 1:
        return check_state(arr, layout).density()
    return DensityMatrix(arr, layout)


def check_density_matrices(X, layout: SubsystemLayout) -> list[DensityMatrix]:
    """Accept density matrices (n, d, d), pure amplitudes (n, d), or a list of either."""
    if isinstance(X, (DensityMatrix, PureState)):
        X = [X]
    if not isinstance(X, (list, tuple)):
        X = np.asarray(X)
        if X.ndim not in (2, 3) or X.shape[0] == 0:
            raise ValueError(f"expected (n, d) or (n, d, d) input, got shape {X.shape}")
    return [check_density_matrix(x, layout) for x in X]


def check_is_fitted(est, attr: str = "layout_"):
    from sklearn.exceptions import NotFittedError

    if not hasattr(est, attr):
        raise NotFittedError(f"{type(est).__name__} is not fitted yet; call fit first")
