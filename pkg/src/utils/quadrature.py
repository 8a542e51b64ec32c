"""Gauss-Legendre panel rules."""

import math
from functools import lru_cache
from typing import Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss


@lru_cache(maxsize=32)
def _reference_rule(degree: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = leggauss(degree)  # Interval [-1, 1]
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def panel_mesh(a: float, b: float, width: float, degree: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of equal Gauss-Legendre panels covering [a, b].

    Panels are no wider than ``width``.
    """
    if b <= a:
        return np.empty(0), np.empty(0)
    count = panel_count(a, b, width)
    h = (b - a) / count
    ref_nodes, ref_weights = _reference_rule(degree)
    left = a + h * np.arange(count)
    # Convert from interval [-1, 1] to each panel
    nodes = (left[:, None] + 0.5 * h * (ref_nodes[None, :] + 1.0)).ravel()
    weights = np.tile(0.5 * h * ref_weights, count)
    return nodes, weights


def panel_count(a: float, b: float, width: float) -> int:
    return max(1, math.ceil((b - a) / width))
