"""Shared test helpers: finite-difference oracles and warm-up."""

from __future__ import annotations

import numpy as np
import pytest

import sharmonic
from sharmonic import _kernels

# central difference stencils of second-order accuracy, by derivative order
_STENCILS = {
    0: ((0.0, 1.0),),
    1: ((1.0, 0.5), (-1.0, -0.5)),
    2: ((1.0, 1.0), (0.0, -2.0), (-1.0, 1.0)),
    3: ((2.0, 0.5), (1.0, -1.0), (-1.0, 1.0), (-2.0, -0.5)),
    4: ((2.0, 1.0), (1.0, -4.0), (0.0, 6.0), (-1.0, -4.0), (-2.0, 1.0)),
}


def central_difference(f, x: float, order: int, h: float) -> float:
    acc = 0.0
    for offset, weight in _STENCILS[order]:
        acc += weight * float(f(x + offset * h))
    return acc / h**order


def richardson_derivative(f, x: float, order: int, h: float = 1e-2,
                          levels: int = 5) -> float:
    """Richardson-extrapolated central difference, error O(h^(2*levels)).

    Independent of every closed-form derivative in the package: only
    function values enter.
    """
    table = [central_difference(f, x, order, h / 2**k) for k in range(levels)]
    for m in range(1, levels):
        factor = 4.0**m
        table = [(factor * table[i + 1] - table[i]) / (factor - 1.0)
                 for i in range(len(table) - 1)]
    return table[0]


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger JIT compilation once so timed tests measure the algorithms."""
    x = np.linspace(-1.0, 1.0, 8)
    _kernels.combo_values(np.array([2.0]), np.array([1.0]), np.array([1.0]), 0.5, x)
    _kernels.combo_derivatives(np.array([2.0]), np.array([1.0]), np.array([1.0]),
                               0.5, x, 2)
    _kernels.power_series_eval(np.array([2, 5]), np.array([1.0, -0.5]), x, 1)
    params = sharmonic.FracParams(0.5)
    sharmonic.frac_laplacian(np.cos, 0.0, params)
    yield
