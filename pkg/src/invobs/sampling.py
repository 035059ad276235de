"""Seeded samplers for sphere points, rotations, and tangent directions.

All draws go through numpy Generators so sweeps replay bit-identically from a
seed.  Rotations are Haar-uniform via QR of a Gaussian matrix with the usual
sign fix; sphere points are normalised Gaussian triples.
"""

from __future__ import annotations

import numpy as np


def random_unit(rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    """Uniform point(s) on the unit sphere, shape (3,) or (n, 3)."""
    shape = (3,) if n is None else (n, 3)
    v = rng.standard_normal(shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def random_rotation(rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    """Haar-uniform rotation(s), shape (3, 3) or (n, 3, 3)."""
    shape = (3, 3) if n is None else (n, 3, 3)
    Q, R = np.linalg.qr(rng.standard_normal(shape))
    Q = Q * np.sign(np.diagonal(R, axis1=-2, axis2=-1))[..., None, :]
    det = np.linalg.det(Q)
    if n is None:
        if det < 0.0:
            Q[:, 0] *= -1.0
    else:
        Q[det < 0.0, :, 0] *= -1.0
    return Q


def random_tangent(rng: np.random.Generator, base: np.ndarray) -> np.ndarray:
    """Unit vector tangent to the sphere at ``base``."""
    base = np.asarray(base, dtype=float)
    while True:
        v = rng.standard_normal(3)
        v = v - base * float(base @ v)
        norm = float(np.linalg.norm(v))
        if norm > 1e-12:
            return v / norm
