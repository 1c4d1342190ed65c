"""Ready-made eigenvalue measures, one per support class."""

import numpy as np

from .charfn import orbital_measure
from .stable_core import InvariantError, SpectralMeasureEig

PRESETS = ("orbital", "full-basis", "traceless", "identity", "degenerate")


def full_basis(n):
    """``+-e_j`` with weight ``1/(2N)`` each; symmetric, spans R^N."""
    eye = np.eye(n)
    return SpectralMeasureEig(np.vstack([eye, -eye]), np.full(2 * n, 1.0 / (2 * n)))


def traceless_pairs(n):
    """``+-(e_j - e_{j+1})/sqrt(2)``; spans the sum-zero hyperplane."""
    diffs = (np.eye(n)[:-1] - np.eye(n)[1:]) / np.sqrt(2.0)
    return SpectralMeasureEig(np.vstack([diffs, -diffs]), np.full(2 * (n - 1), 1.0 / (2 * (n - 1))))


def identity_line(n):
    ones = np.ones((1, n)) / np.sqrt(n)
    return SpectralMeasureEig(np.vstack([ones, -ones]), [0.5, 0.5])


def degenerate(n):
    """``+-e_1`` only: a one-dimensional span that is none of the invariant cases."""
    e1 = np.eye(n)[:1]
    return SpectralMeasureEig(np.vstack([e1, -e1]), [0.5, 0.5])


def preset(name, n, t=0.5):
    if name == "orbital":
        return orbital_measure(t, n)
    if name == "full-basis":
        return full_basis(n)
    if name == "traceless":
        return traceless_pairs(n)
    if name == "identity":
        return identity_line(n)
    if name == "degenerate":
        return degenerate(n)
    raise InvariantError("preset is one of " + ", ".join(PRESETS), f"got {name!r}")
