"""Shared test utilities."""

import numpy as np

from onebit_precoding import PrecodingProblem

QPSK_POINTS = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2.0)


def rayleigh_problem(rng, B, U, N0):
    """Random i.i.d. Rayleigh channel with a uniform QPSK data vector."""
    H = np.sqrt(0.5) * (rng.standard_normal((U, B)) + 1j * rng.standard_normal((U, B)))
    s = QPSK_POINTS[rng.integers(0, 4, size=U)]
    return PrecodingProblem(H, s, N0)
