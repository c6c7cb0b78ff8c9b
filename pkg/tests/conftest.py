import os

import numpy as np
import pytest

from haarrect.groups import AmbientSets, normalize_algebra_norm
from haarrect.harness import ConstantsSpec, constants_for

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CONFIG_DIR = os.path.join(REPO_ROOT, "configs")


@pytest.fixture(scope="session")
def algebras():
    return {
        "U1": normalize_algebra_norm("u1"),
        "SO2": normalize_algebra_norm("so2"),
        "SO3": normalize_algebra_norm("so3"),
        "SU2": normalize_algebra_norm("su2"),
    }


@pytest.fixture(scope="session")
def default_sets():
    return AmbientSets(1.5, 2.5)


@pytest.fixture(scope="session")
def constants(algebras):
    """Constants per group at the default ambient radii (memoized)."""
    return {
        tag: constants_for(algebras[tag], ConstantsSpec(seed=101))
        for tag in ("U1", "SO3", "SU2")
    }


# ---------------------------------------------------------------------------
# independent oracles (deliberately not using package code paths)
# ---------------------------------------------------------------------------

def quat_mul(a, b):
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_exp(v):
    """Unit quaternion of the rotation vector v."""
    th = np.linalg.norm(v)
    if th < 1e-300:
        return np.array([1.0, 0.0, 0.0, 0.0])
    return np.concatenate([[np.cos(th / 2)], np.sin(th / 2) * np.asarray(v) / th])


def quat_log(q):
    """Rotation vector of a unit quaternion (principal: angle in [0, 2pi))."""
    v = q[1:]
    s = np.linalg.norm(v)
    if s < 1e-300:
        return np.zeros(3)
    return 2 * np.arctan2(s, q[0]) * v / s


def quat_to_su2(q):
    w, x, y, z = q
    return np.array([[w + 1j * z, y + 1j * x], [-y + 1j * x, w - 1j * z]])


def quat_to_so3(q):
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def rodrigues(w):
    """Closed-form SO(3) exponential."""
    w = np.asarray(w, dtype=float)
    th = np.linalg.norm(w)
    K = np.array([[0, -w[2], w[1]], [w[2], 0, -w[0]], [-w[1], w[0], 0]])
    if th < 1e-14:
        return np.eye(3) + K + 0.5 * (K @ K)
    return np.eye(3) + np.sin(th) / th * K + (1 - np.cos(th)) / th ** 2 * (K @ K)


@pytest.fixture(scope="session")
def oracles():
    return {
        "quat_mul": quat_mul,
        "quat_exp": quat_exp,
        "quat_log": quat_log,
        "quat_to_su2": quat_to_su2,
        "quat_to_so3": quat_to_so3,
        "rodrigues": rodrigues,
    }
