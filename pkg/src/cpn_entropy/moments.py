"""Exact averages of bihomogeneous monomials over odd-dimensional spheres.

All sphere integrals are reported as averages (integral divided by sphere
volume); the certificate multiplies by the CP^N volume explicitly where an
integral is needed.  Monomial averages over S^{2m-1} in C^m follow the
Dirichlet moment identity

    avg(prod |z_i|^{2 a_i}) = prod(a_i!) * (m-1)! / (m-1+sum a_i)!,

and vanish whenever the holomorphic and antiholomorphic exponents differ
(rotations z_j -> e^{i t} z_j are measure-preserving).  The Monte Carlo
estimator is the independent oracle for every derived value.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .polynomials import BihomogeneousPolynomial


def monomial_average(m: int, a, b) -> Fraction:
    """Average of z^a zbar^b over the unit sphere of C^m, exact."""
    if m < 1:
        raise ValueError("m must be >= 1")
    a = tuple(int(x) for x in a)
    b = tuple(int(x) for x in b)
    if len(a) != m or len(b) != m:
        raise ValueError("exponent tuples must have length m")
    if any(x < 0 for x in a + b):
        raise ValueError("exponents must be nonnegative")
    if a != b:
        return Fraction(0)
    total = sum(a)
    num = math.prod(math.factorial(x) for x in a) * math.factorial(m - 1)
    return Fraction(num, math.factorial(m - 1 + total))


def polynomial_average(m: int, p: BihomogeneousPolynomial) -> Fraction:
    """Linear extension of ``monomial_average``; exact rational."""
    if p.m != m:
        raise ValueError("polynomial lives on a different C^m")
    total_re = Fraction(0)
    total_im = Fraction(0)
    for (a, b), c in p.terms.items():
        avg = monomial_average(m, a, b)
        if avg:
            total_re += c.re * avg
            total_im += c.im * avg
    if total_im != 0:
        raise ArithmeticError("average of a real-valued polynomial must be real")
    return total_re


def apply_symmetry(p: BihomogeneousPolynomial, sym) -> BihomogeneousPolynomial:
    """Transform P under z_j -> -z_j (kind 'negate') or z_j -> i z_j ('rotate')."""
    kind, j = sym
    out = BihomogeneousPolynomial(p.m)
    i_pow = [1, 1j, -1, -1j]
    for (a, b), c in p.terms.items():
        if kind == "negate":
            sign = -1 if (a[j] + b[j]) % 2 else 1
            out._accumulate((a, b), c * sign)
        elif kind == "rotate":
            # z_j -> i z_j multiplies the term by i^{a_j} (-i)^{b_j}
            k = (a[j] - b[j]) % 4
            factor = i_pow[k]
            from .polynomials import QC, QC_I

            if factor == 1:
                fac = QC(Fraction(1))
            elif factor == -1:
                fac = QC(Fraction(-1))
            elif factor == 1j:
                fac = QC_I
            else:
                fac = QC(Fraction(0), Fraction(-1))
            out._accumulate((a, b), c * fac)
        else:
            raise ValueError(f"unknown symmetry kind {kind!r}")
    return out


def symmetry_vanishing(p: BihomogeneousPolynomial, sym) -> bool:
    """True iff P is odd under the sphere isometry, forcing zero average."""
    transformed = apply_symmetry(p, sym)
    return transformed == p.scaled(Fraction(-1))


def cpn_average(q: int, form, N: int) -> Fraction:
    """Exact average of phi_A^q over CP^N (q in {1,2,3}).

    phi_A^q lifts to the circle-invariant restriction of (z* A z)^q to the
    unit sphere of C^{N+1}; the quotient map preserves normalized averages,
    so the CP^N average equals the sphere average, computed exactly.
    """
    if q not in (1, 2, 3):
        raise ValueError("q must be 1, 2, or 3")
    p = BihomogeneousPolynomial.from_form(form)
    return polynomial_average(N + 1, p.power(q))


def cpn_volume_closed_form(N: int) -> float:
    """pi^N / N!, the volume of CP^N in this normalization."""
    return math.pi ** N / math.factorial(N)


def cpn_volume(N: int, tol: float = 1e-6, max_level: int = 6):
    """Volume by chart quadrature; returns (value, error_estimate).

    Cross-check target is the closed form pi^N/N!; a failure to converge is
    reported through the returned error estimate exceeding ``tol``.
    """
    from .quadrature import adaptive_cpn_integral

    def one(w):
        return np.ones(w.shape[0])

    return adaptive_cpn_integral(one, N, tol=tol, max_level=max_level)


def monte_carlo_average(p: BihomogeneousPolynomial, m: int, samples: int,
                        seed: int, chunk: int = 200_000):
    """Unbiased sphere-average estimate via normalized complex Gaussians.

    Returns (mean, standard_error).  Per-shard seeds are spawned from the
    master seed, so the estimate is deterministic for fixed seed and chunk.
    """
    if samples < 10_000:
        raise ValueError("samples must be >= 10^4")
    if p.m != m:
        raise ValueError("polynomial lives on a different C^m")
    seq = np.random.SeedSequence(seed)
    n_chunks = (samples + chunk - 1) // chunk
    children = seq.spawn(n_chunks)
    total = 0.0
    total_sq = 0.0
    count = 0
    for i in range(n_chunks):
        size = min(chunk, samples - count)
        rng = np.random.default_rng(children[i])
        g = rng.standard_normal((size, m)) + 1j * rng.standard_normal((size, m))
        z = g / np.linalg.norm(g, axis=1, keepdims=True)
        vals = np.real(p.evaluate(z))
        total += float(np.sum(vals))
        total_sq += float(np.sum(vals ** 2))
        count += size
    mean = total / count
    var = max(total_sq / count - mean ** 2, 0.0)
    stderr = math.sqrt(var / count)
    return mean, stderr
