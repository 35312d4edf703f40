import numpy as np
import pytest

from mapbench.trajectory import Pose, Trajectory


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random rotation matrix via QR of a Gaussian matrix."""
    A = rng.standard_normal((3, 3))
    Q, R = np.linalg.qr(A)
    Q = Q @ np.diag(np.sign(np.diag(R)))
    if np.linalg.det(Q) < 0:
        Q[:, 2] = -Q[:, 2]
    return Q


def random_quaternion(rng: np.random.Generator):
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    return tuple(q)


def random_trajectory(rng: np.random.Generator, n: int = 50, t0: float = 0.0, dt: float = 0.1) -> Trajectory:
    samples = []
    pos = rng.standard_normal(3)
    for i in range(n):
        pos = pos + 0.3 * rng.standard_normal(3)
        samples.append((t0 + i * dt, Pose(t=tuple(pos), q=random_quaternion(rng))))
    return Trajectory(samples=tuple(samples))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
