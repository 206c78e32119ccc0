import numpy as np
import pytest

from crm import distortion as D


@pytest.fixture(scope="session")
def measure_zoo():
    """One representative of every supported measure family."""
    return {
        "tail": D.tail(0.35),
        "beta": D.beta(6, 2),
        "alpha": D.alpha(5),
        "mixture": D.mixture([(0.25, 0.4), (0.6, 0.35), (1.0, 0.25)]),
    }


def gauss_grid_panel(n_per_dim: int, dim: int, chol=None):
    """Deterministic discrete approximation of a centered Gaussian law.

    Tensor grid of per-dimension quantile midpoints with equal product
    weights; an optional Cholesky factor correlates the columns. Exact
    evaluation on this panel approximates Gaussian closed forms to O(1/n^2)
    without Monte Carlo noise.
    """
    from scipy.special import ndtri

    z = ndtri((np.arange(n_per_dim) + 0.5) / n_per_dim)
    grids = np.meshgrid(*([z] * dim), indexing="ij")
    panel = np.column_stack([g.ravel() for g in grids])
    if chol is not None:
        panel = panel @ np.asarray(chol, dtype=float).T
    probs = np.full(panel.shape[0], 1.0 / panel.shape[0])
    return panel, probs
