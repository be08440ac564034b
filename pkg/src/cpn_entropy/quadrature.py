"""Deterministic quadrature over CP^N in chart-0 coordinates.

The chart integral of F against the volume density sigma^{-(N+1)} compactifies
under t_0 = 1/sigma, t_j = |w_j|^2/sigma, theta_j = arg w_j into

    int F dV = 2^{-N} int_{Delta^N} int_{T^N} F(w(t, theta)) dtheta dt,

where Delta^N is the Euclidean simplex {t_j >= 0, sum t_j <= 1} and T^N the
torus of relative phases.  The simplex uses stick-breaking Gauss-Legendre
rules and the torus uniform grids, both spectrally accurate; low-degree
circle-invariant polynomial integrands are integrated exactly at small
orders.  Sphere Monte Carlo is the fallback oracle.
"""

from __future__ import annotations

import math

import numpy as np


def _gauss_legendre_01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def simplex_rule(N: int, n_u: int):
    """Stick-breaking product rule for the Euclidean simplex Delta^N.

    Returns (t, weights) with t of shape (n_u^N, N+1); column 0 is
    t_0 = 1 - sum of the rest.  Weights sum to 1/N! (simplex volume).
    """
    x, w = _gauss_legendre_01(n_u)
    grids = np.meshgrid(*([x] * N), indexing="ij")
    wgrids = np.meshgrid(*([w] * N), indexing="ij")
    u = np.stack([g.ravel() for g in grids], axis=1)
    weight = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    b = u.shape[0]
    t = np.empty((b, N + 1))
    remaining = np.ones(b)
    for j in range(N):
        t[:, j + 1] = remaining * u[:, j]
        weight = weight * remaining
        remaining = remaining * (1.0 - u[:, j])
    t[:, 0] = remaining
    return t, weight


def torus_grid(N: int, n_theta: int):
    """Uniform product grid on T^N with per-node weight (2 pi / n)^N."""
    theta = 2.0 * math.pi * np.arange(n_theta) / n_theta
    grids = np.meshgrid(*([theta] * N), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    return pts, (2.0 * math.pi / n_theta) ** N


def chart_nodes(N: int, n_u: int, n_theta: int, max_chunk: int = 8192):
    """Chart-0 nodes and absolute dV weights, in vectorized chunks.

    Yields (w, weights) pairs with w complex of shape (B, N) and
    B <= max(max_chunk, n_u^N); the union of all chunks is the full
    simplex x torus product rule.
    """
    t, tw = simplex_rule(N, n_u)
    theta, theta_weight = torus_grid(N, n_theta)
    radial = np.sqrt(t[:, 1:] / t[:, :1])
    scale = 2.0 ** (-N) * theta_weight
    n_simplex = radial.shape[0]
    group = max(1, max_chunk // n_simplex)
    for start in range(0, theta.shape[0], group):
        phase = np.exp(1j * theta[start:start + group])
        w = (radial[None, :, :] * phase[:, None, :]).reshape(-1, N)
        weights = np.broadcast_to(tw * scale, (phase.shape[0], n_simplex)).ravel()
        yield w, weights


def cpn_integral(func, N: int, n_u: int, n_theta: int) -> float:
    """int_{CP^N} func dV with func acting on (B, N) complex chart batches."""
    total = 0.0
    for w, weights in chart_nodes(N, n_u, n_theta):
        total += float(np.dot(weights, np.asarray(func(w), dtype=float)))
    return total


def cpn_average_quad(func, N: int, n_u: int, n_theta: int) -> float:
    total = 0.0
    wsum = 0.0
    for w, weights in chart_nodes(N, n_u, n_theta):
        total += float(np.dot(weights, np.asarray(func(w), dtype=float)))
        wsum += float(np.sum(weights))
    return total / wsum


def level_orders(level: int) -> tuple[int, int]:
    """Refinement schedule: (Gauss-Legendre order, torus points per angle)."""
    return 3 + level, 4 + 2 * level


class QuadratureNonConvergence(RuntimeError):
    def __init__(self, message, value, error):
        super().__init__(message)
        self.value = value
        self.error = error


def adaptive_cpn_integral(func, N: int, tol: float = 1e-6, max_level: int = 6,
                          min_level: int = 1, raise_on_failure: bool = False):
    """Refine until two consecutive levels agree to ``tol`` (relative).

    Returns (value, error_estimate); the estimate is the achieved relative
    difference between the last two levels.
    """
    prev = None
    value = None
    err = math.inf
    for level in range(min_level, max_level + 1):
        n_u, n_theta = level_orders(level)
        value = cpn_integral(func, N, n_u, n_theta)
        if prev is not None:
            scale = max(abs(value), abs(prev), 1e-30)
            err = abs(value - prev) / scale
            if err < tol:
                return value, err
        prev = value
    if raise_on_failure:
        raise QuadratureNonConvergence(
            f"quadrature did not reach tol={tol:g}; achieved {err:g}", value, err)
    return value, err


def mc_sphere_average(func_z, N: int, samples: int, seed: int,
                      chunk: int = 200_000):
    """Monte Carlo average over S^{2N+1} of a circle-invariant integrand.

    ``func_z`` acts on (B, N+1) complex unit vectors.  Fallback oracle for
    the chart quadrature; returns (mean, standard_error).
    """
    seq = np.random.SeedSequence(seed)
    n_chunks = (samples + chunk - 1) // chunk
    children = seq.spawn(n_chunks)
    total = 0.0
    total_sq = 0.0
    count = 0
    for i in range(n_chunks):
        size = min(chunk, samples - count)
        rng = np.random.default_rng(children[i])
        g = rng.standard_normal((size, N + 1)) + 1j * rng.standard_normal((size, N + 1))
        z = g / np.linalg.norm(g, axis=1, keepdims=True)
        vals = np.asarray(func_z(z), dtype=float)
        total += float(np.sum(vals))
        total_sq += float(np.sum(vals ** 2))
        count += size
    mean = total / count
    var = max(total_sq / count - mean ** 2, 0.0)
    return mean, math.sqrt(var / count)
