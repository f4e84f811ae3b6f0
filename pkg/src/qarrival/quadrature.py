"""Panel-based Gauss-Legendre quadrature with refinement checks."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import ToleranceError


@lru_cache(maxsize=32)
def _gl_rule(order: int):
    return np.polynomial.legendre.leggauss(order)


def panel_nodes(edges, order: int = 16):
    """Gauss-Legendre nodes/weights for the panels defined by ``edges``."""
    edges = np.asarray(edges, dtype=float)
    x, w = _gl_rule(order)
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def integrate_panels(f, edges, order: int = 16):
    """Integrate ``f`` over the panel decomposition.

    ``f`` must accept a 1-D node array and return values whose last axis
    matches the nodes (extra leading axes are allowed for batched
    integrands).
    """
    nodes, weights = panel_nodes(edges, order)
    return np.asarray(f(nodes)) @ weights


def refine_edges(edges):
    """Split every panel at its midpoint."""
    edges = np.asarray(edges, dtype=float)
    mids = 0.5 * (edges[:-1] + edges[1:])
    out = np.empty(2 * len(edges) - 1)
    out[0::2] = edges
    out[1::2] = mids
    return out


def integrate_checked(f, edges, order: int = 16, rtol: float = 1e-8, atol: float = 0.0):
    """Panel integral with a one-step refinement error check.

    Raises :class:`ToleranceError` (carrying the refined estimate) when the
    two resolutions disagree beyond ``rtol``/``atol``.
    """
    coarse = integrate_panels(f, edges, order)
    fine = integrate_panels(f, refine_edges(edges), order)
    err = np.max(np.abs(fine - coarse))
    bound = rtol * max(np.max(np.abs(fine)), 1e-300) + atol
    if err > bound:
        raise ToleranceError(
            f"quadrature refinement changed the result by {err:.3e} (> {bound:.3e})",
            estimate=fine,
            achieved=err,
        )
    return fine


def uniform_edges(a: float, b: float, n_panels: int):
    return np.linspace(a, b, n_panels + 1)


def geometric_edges(a: float, b: float, per_decade: int = 8):
    """Logarithmically spaced panel edges on [a, b], a > 0."""
    if not 0.0 < a < b:
        raise ValueError("geometric edges need 0 < a < b")
    n = max(1, int(np.ceil(np.log10(b / a) * per_decade)))
    return a * (b / a) ** np.linspace(0.0, 1.0, n + 1)


def oscillatory_edges(a: float, b: float, max_phase_rate: float,
                      phase_per_panel: float = 2.0 * np.pi,
                      min_panels: int = 8, max_panels: int = 20000,
                      breakpoints=()):
    """Uniform panels sized so each spans roughly ``phase_per_panel`` radians.

    ``breakpoints`` inside (a, b) are snapped onto the edge set, which keeps
    kinks of the integrand on panel boundaries.
    """
    total = abs(max_phase_rate) * (b - a)
    n = int(np.ceil(total / phase_per_panel)) + min_panels
    n = min(n, max_panels)
    edges = np.linspace(a, b, n + 1)
    inner = [p for p in breakpoints if a < p < b]
    if inner:
        edges = np.unique(np.concatenate([edges, np.asarray(inner, float)]))
    return edges
