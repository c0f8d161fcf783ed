import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# Published Villiers (47/2 balkline) matrices.
DIAGONAL = np.array([[0.407, 0.0], [0.0, 0.980]])
SECOND = np.array([[0.435, 0.048], [0.322, 0.952]])
CENTER = np.array([[0.409, 0.012], [0.115, 0.978]])
# Fixed-p0 intervals as (center, half-width), in percent.
INTERVALS = {
    (0, 0): (40.9, 0.2),
    (0, 1): (1.2, 1.2),
    (1, 0): (11.5, 1.2),
    (1, 1): (97.8, 0.2),
}


def matrix_power_survival(k, p_start, n):
    """Oracle: 1' K^n p via numpy's matrix_power."""
    return float(np.ones(len(p_start)) @ np.linalg.matrix_power(np.asarray(k), n) @ np.asarray(p_start))


def random_substochastic(rng, min_gap=0.05, positive_det=True):
    """Random 2x2 matrix with column sums in (0, 1) and distinct eigenvalues."""
    while True:
        k = rng.random((2, 2))
        k = k / k.sum(axis=0) * rng.uniform(0.05, 0.97, size=2)
        if positive_det and np.linalg.det(k) <= 0:
            continue
        ev = np.sort(np.linalg.eigvals(k).real)
        if ev[1] - ev[0] >= min_gap:
            return k


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
