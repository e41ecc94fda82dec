"""Shared instance generators for the randomized suites."""

import numpy as np
import pytest


def complex_normal(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def conditioned_invertible(rng, n, cond_cap=1e3):
    """Random invertible matrix with condition number at most cond_cap."""
    z = complex_normal(rng, (n, n))
    u, s, vh = np.linalg.svd(z)
    s = np.maximum(s, s[0] / cond_cap)
    return (u * s) @ vh


def random_sectorial(rng, n, spread_max=2.4, cond_cap=1e3, center_range=np.pi):
    """Random sectorial matrix built as T* D T with prescribed phase spread."""
    center = rng.uniform(-center_range, center_range)
    spread = rng.uniform(0.1, min(spread_max, np.pi - 0.1))
    phases = center + rng.uniform(-spread / 2, spread / 2, n)
    phases[0] = center + spread / 2
    phases[-1] = center - spread / 2
    t = conditioned_invertible(rng, n, cond_cap)
    a = t.conj().T @ np.diag(np.exp(1j * phases)) @ t
    return a, np.sort(phases)[::-1]


def spectrum_to_pair(rng, eigvals, cond_cap=1e3):
    """Factor X diag(eigvals) X^-1 into a random invertible A and B = A^-1 M."""
    n = len(eigvals)
    x = conditioned_invertible(rng, n, cond_cap)
    m = x @ np.diag(eigvals) @ np.linalg.inv(x)
    a = conditioned_invertible(rng, n, cond_cap)
    return a, np.linalg.solve(a, m)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)
