"""Shared model builders and independent oracles for the test suite.

The scalar RK4 here integrates the single-mode ODE directly and is the
oracle the closed-form mode responses are checked against; it must stay
independent of the package's own kernels.
"""

from __future__ import annotations

import math

import numpy as np

import nadirwc as nw


def ring_laplacian(n: int, weight: float) -> np.ndarray:
    lap = np.zeros((n, n))
    if n < 2:
        return lap
    edges = [(0, 1)] if n == 2 else [(i, (i + 1) % n) for i in range(n)]
    for i, j in edges:
        lap[i, j] -= weight
        lap[j, i] -= weight
        lap[i, i] += weight
        lap[j, j] += weight
    return lap


def complete_laplacian(n: int, weight: float) -> np.ndarray:
    lap = -weight * np.ones((n, n))
    np.fill_diagonal(lap, weight * (n - 1))
    return lap


def homogeneous_model(
    n: int, laplacian: np.ndarray, m: float = 4.38, d: float = 16.0, f0: float = 50.0
) -> nw.NetworkModel:
    return nw.NetworkModel.from_buses(np.full(n, m), np.full(n, d), laplacian, f0)


def strong_ring_model(
    n: int, m: float = 4.38, d: float = 16.0, margin: float = 1.05
) -> nw.NetworkModel:
    """Homogeneous ring with algebraic connectivity margin times the
    even-disturbance threshold (n - 0.75) d^2 / m."""
    threshold = (n - 0.75) * d * d / m
    weight = margin * threshold / (2.0 * (1.0 - math.cos(2.0 * math.pi / n)))
    return homogeneous_model(n, ring_laplacian(n, weight), m, d)


def random_model(
    n: int, seed: int, weight_scale: float = 20.0, inertia_range=(1.0, 10.0)
) -> nw.NetworkModel:
    return nw.generate_random_network(
        n,
        seed=seed,
        inertia_range=inertia_range,
        weight_scale=weight_scale,
        topology="random-tree-plus-edges",
    )


def rk4_mode_oracle(
    lam: float, m: float, d: float, step: float, n_steps: int
) -> np.ndarray:
    """Fixed-step RK4 on m y'' + d y' + lam y = 0, y(0) = 0, y'(0) = 1/m.

    Returns y on the grid 0, step, ..., n_steps * step.
    """
    y, v = 0.0, 1.0 / m
    out = np.empty(n_steps + 1)
    out[0] = 0.0

    def rhs(y, v):
        return v, (-d * v - lam * y) / m

    for k in range(n_steps):
        k1y, k1v = rhs(y, v)
        k2y, k2v = rhs(y + 0.5 * step * k1y, v + 0.5 * step * k1v)
        k3y, k3v = rhs(y + 0.5 * step * k2y, v + 0.5 * step * k2v)
        k4y, k4v = rhs(y + step * k3y, v + step * k3v)
        y += step / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        v += step / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        out[k + 1] = y
    return out


def aligned_indices(coarse: np.ndarray, fine_step: float) -> np.ndarray:
    """Indices of the coarse grid times on a fine grid starting at 0."""
    idx = np.round(coarse / fine_step).astype(int)
    assert np.allclose(idx * fine_step, coarse, rtol=0, atol=1e-12)
    return idx
