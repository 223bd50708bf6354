import numpy as np
import pytest

from jtt.dataset import GroupData, GroupDataset


def random_dataset(rng, m=None, p=None, n_max=30, shared_pairs=()):
    """Small random instance for oracle comparisons.

    ``shared_pairs`` lists edges whose two groups get identical coefficients.
    """
    m = m if m is not None else int(rng.integers(3, 7))
    p = p if p is not None else int(rng.integers(1, 6))
    betas = {j: rng.normal(size=p) for j in range(1, m + 1)}
    for k, l in shared_pairs:
        betas[l] = betas[k]
    groups = []
    for j in range(1, m + 1):
        n_j = int(rng.integers(p + 2, n_max + 1))
        X = rng.normal(size=(n_j, p))
        y = X @ betas[j] + rng.normal(size=n_j)
        groups.append(GroupData(index=j, y=y, X=X))
    return GroupDataset(groups=tuple(groups))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
