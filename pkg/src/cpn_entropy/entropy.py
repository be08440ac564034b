"""Stability operators and entropy variations at the Einstein point.

For a conformal perturbation h = psi * g_FS the module evaluates:

* the auxiliary potential v solving (Delta + 1/(2 tau)) v = div div h with
  zero mean, which equals 2 psi when psi is a first eigenfunction;
* the stability operator
      Ntilde(h) = (1/2) Delta h + Rm(h, *) + div* div h + (1/2) Hess v,
  assembled literally term by term in chart coordinates (it vanishes
  pointwise for h = phi g_FS), and N(h) = Ntilde(h) - (Hbar/(2 n tau)) g;
* first variations tau', V', Hbar' along g(s) = g_FS + s h;
* the second variation (tau/V) int <N(h), h> dV (zero for the eigen
  direction) and the third variation
      (n-2) (4 pi tau)^{-n/2} int phi^3 dV,
  with the integral supplied exactly by the moments engine and
  cross-checked by chart quadrature;
* ``certify``, which packages everything into a machine-checkable
  instability certificate.

Documentation note: on trace-free divergence-free tensors the stability
operator satisfies 2 N = lap_L - 1/tau, where lap_L is the Lichnerowicz
Laplacian; nothing here uses that identity, since the conformal direction
is handled directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .charts import sample_w
from .eigenfunctions import (HermitianForm, identity_form, phi_jet_batch,
                             phi_values_batch, special_phi)
from .geometry import (Tau, covariant_hessian_arrays, curvature_batch,
                       einstein_tau)
from .moments import cpn_average, cpn_volume_closed_form, polynomial_average
from .polynomials import BihomogeneousPolynomial
from .quadrature import adaptive_cpn_integral, chart_nodes


class NotEigenError(RuntimeError):
    """psi fails the eigen-equation, so v = 2 psi is not valid."""


@dataclass
class ConformalPerturbation:
    """h = psi * g_FS with psi = phi_A for a Hermitian form A."""

    form: HermitianForm
    N: int

    def __post_init__(self):
        if self.form.size != self.N + 1:
            raise ValueError("form size must be N+1")

    @classmethod
    def special(cls, N: int) -> "ConformalPerturbation":
        return cls(special_phi(N), N)

    @classmethod
    def constant_one(cls, N: int) -> "ConformalPerturbation":
        """psi = 1 (trace Hbar = n); plumbing for the mean-trace term."""
        return cls(identity_form(N), N)

    def psi_jet(self, w: np.ndarray):
        return phi_jet_batch(self.form, 0, w)

    def psi_values(self, w: np.ndarray) -> np.ndarray:
        return phi_values_batch(self.form, 0, w)

    def exact_average(self, q: int) -> Fraction:
        """Average of psi^q over CP^N, exact (any Hermitian form)."""
        p = BihomogeneousPolynomial.from_form(self.form)
        return polynomial_average(self.N + 1, p.power(q))

    def trace_mean_exact(self) -> Fraction:
        """Hbar = mean of tr_g h = n * avg(psi), exact."""
        return 2 * self.N * self.exact_average(1)

    def scaled(self, c) -> "ConformalPerturbation":
        return ConformalPerturbation(self.form.scaled(c), self.N)

    def eigen_residual(self, tau: Tau, points: int = 50, seed: int = 7) -> float:
        w = sample_w(self.N, points, seed)
        jet = self.psi_jet(w)
        geom = curvature_batch(w)
        hess = covariant_hessian_arrays(jet.grad, jet.hess, geom.Gamma)
        lap = np.einsum("bij,bij->b", geom.g_inv, hess)
        return float(np.max(np.abs(lap + jet.val / tau.tau)))


# ---------------------------------------------------------------------------
# v of h


@dataclass
class VSolution:
    """v = scale * psi, with the recorded residual of its defining equation."""

    perturbation: ConformalPerturbation
    scale: float
    residual: float

    def jet(self, w: np.ndarray):
        return self.perturbation.psi_jet(w) * self.scale


def v_of(h: ConformalPerturbation, tau: Tau | None = None,
         points: int = 50, seed: int = 7, tol: float = 1e-8) -> VSolution:
    """Solve (Delta + 1/(2 tau)) v = div div h, zero mean, for eigen psi.

    For h = psi g_FS, div div h = Delta psi, and v = 2 psi satisfies the
    equation exactly when Delta psi = -psi/tau; the returned residual is the
    max over sample points of |(Delta + 1/(2 tau))(2 psi) - Delta psi|.
    """
    tau = tau or einstein_tau(h.N)
    w = sample_w(h.N, points, seed)
    jet = h.psi_jet(w)
    geom = curvature_batch(w)
    hess = covariant_hessian_arrays(jet.grad, jet.hess, geom.Gamma)
    lap = np.einsum("bij,bij->b", geom.g_inv, hess)
    resid = float(np.max(np.abs(
        2.0 * lap + jet.val / tau.tau - lap)))
    if resid > tol:
        raise NotEigenError(
            f"eigen residual {resid:.3e} exceeds {tol:g}; v = 2 psi invalid")
    return VSolution(perturbation=h, scale=2.0, residual=resid)


# ---------------------------------------------------------------------------
# the stability operators, assembled literally


def n_tilde_batch(h: ConformalPerturbation, w: np.ndarray,
                  geom=None, include_v_term: bool = True) -> np.ndarray:
    """Ntilde(h)_ij over a batch of chart-0 points, all four terms explicit.

    ``include_v_term=False`` drops (1/2) Hess v (mutation check: the result
    is then -Hess psi instead of ~0).
    """
    w = np.asarray(w, dtype=complex)
    if geom is None:
        geom = curvature_batch(w)
    psi = h.psi_jet(w)
    psi_hess = covariant_hessian_arrays(psi.grad, psi.hess, geom.Gamma)
    psi_lap = np.einsum("bij,bij->b", geom.g_inv, psi_hess)
    h_ij = psi.val[:, None, None] * geom.g

    # (1/2)(Delta h)_ij: the rough Laplacian of psi g is (Delta psi) g.
    term_lap = 0.5 * psi_lap[:, None, None] * geom.g
    # Rm(h,*)_ij = R_kij^l g^{km} h_{ml}
    term_rm = np.einsum("blkij,bkm,bml->bij", geom.Riem, geom.g_inv, h_ij)
    # -(1/2) g^{kl} (grad_i grad_l h_kj + grad_j grad_l h_ki);
    # grad_i grad_l h_kj = (Hess psi)_il g_kj for conformal h.
    term_div = -0.5 * (np.einsum("bkl,bil,bkj->bij", geom.g_inv, psi_hess, geom.g)
                       + np.einsum("bkl,bjl,bki->bij", geom.g_inv, psi_hess, geom.g))
    total = term_lap + term_rm + term_div
    if include_v_term:
        # (1/2) Hess v with v = 2 psi.
        total = total + psi_hess
    return total


def n_operator_batch(h: ConformalPerturbation, w: np.ndarray,
                     geom=None) -> np.ndarray:
    """N(h) = Ntilde(h) - (Hbar / (2 n tau)) g."""
    w = np.asarray(w, dtype=complex)
    if geom is None:
        geom = curvature_batch(w)
    n = 2 * h.N
    tau = einstein_tau(h.N)
    hbar = float(h.trace_mean_exact())
    nt = n_tilde_batch(h, w, geom)
    return nt - (hbar / (2 * n * tau.tau)) * geom.g


def n_tilde_at(h: ConformalPerturbation, p) -> np.ndarray:
    """Ntilde(h) at a single chart point, as a symmetric 2N x 2N matrix."""
    return n_tilde_batch(h, p.w[None, :])[0]


def n_operator_at(h: ConformalPerturbation, p) -> np.ndarray:
    """N(h) at a single chart point."""
    return n_operator_batch(h, p.w[None, :])[0]


def n_tilde_max(h: ConformalPerturbation, points: int = 100,
                seed: int = 7) -> float:
    w = sample_w(h.N, points, seed)
    return float(np.max(np.abs(n_tilde_batch(h, w))))


# ---------------------------------------------------------------------------
# quadrature passes


def _entropy_quad_levels(N: int) -> tuple[int, int]:
    """Fixed (simplex, torus) orders for geometry-heavy integrals.

    These integrals either verify quantities that vanish pointwise (the
    nu'' integrand) or are exactly integrated at low order (psi against the
    constant scalar curvature), so modest orders suffice; runtime scales as
    (n_u * n_theta)^N.
    """
    return {2: (8, 8), 3: (4, 5)}.get(N, (3, 4))


def _scalar_quad_levels(N: int) -> tuple[int, int]:
    """Orders that integrate the (1 + s psi)^N family exactly."""
    return {2: (5, 7), 3: (5, 6)}.get(N, (5, 6))


def _geometry_sweep(h: ConformalPerturbation, N: int,
                    n_u: int, n_theta: int) -> dict:
    """One pass over quadrature nodes collecting the curvature integrals."""
    tau = einstein_tau(N)
    hbar = float(h.trace_mean_exact())
    n = 2 * N
    acc = {"ric_h": 0.0, "scal": 0.0, "nh_h": 0.0, "volume": 0.0}
    for w, weights in chart_nodes(N, n_u, n_theta):
        geom = curvature_batch(w)
        psi = h.psi_jet(w)
        h_ij = psi.val[:, None, None] * geom.g
        h_up = np.einsum("bip,bjq,bpq->bij", geom.g_inv, geom.g_inv, h_ij)
        ric_h = np.einsum("bij,bij->b", h_up, geom.Ric)
        nt = n_tilde_batch(h, w, geom)
        n_op = nt - (hbar / (2 * n * tau.tau)) * geom.g
        nh_h = np.einsum("bij,bij->b", h_up, n_op)
        acc["ric_h"] += float(np.dot(weights, ric_h))
        acc["scal"] += float(np.dot(weights, geom.R))
        acc["nh_h"] += float(np.dot(weights, nh_h))
        acc["volume"] += float(np.sum(weights))
    return acc


def first_variations(h: ConformalPerturbation, fd_step: float = 1e-3) -> dict:
    """tau', V', Hbar' along g(s) = g_FS + s h.

    tau' and V' come from quadrature (both must vanish for eigen psi);
    Hbar' is computed from the closed form n(n-2)/(2V) ||psi||^2 and by
    finite differences of (int H dV)/V in s.
    """
    N = h.N
    n = 2 * N
    tau = einstein_tau(N)
    n_u, n_theta = _entropy_quad_levels(N)
    sweep = _geometry_sweep(h, N, n_u, n_theta)
    tau_prime = tau.tau * sweep["ric_h"] / sweep["scal"]
    psi_avg_exact = h.exact_average(1)

    def v_prime_integrand(w):
        return (n / 2.0) * h.psi_values(w)

    volume_prime, _ = adaptive_cpn_integral(v_prime_integrand, N, tol=1e-10,
                                            max_level=3)
    hbar_prime_closed = float(n * (n - 2) * Fraction(1, 2) * h.exact_average(2))
    s_u, s_theta = _scalar_quad_levels(N)

    def hbar_at(s: float) -> float:
        num = 0.0
        den = 0.0
        for w, weights in chart_nodes(N, s_u, s_theta):
            psi = h.psi_values(w)
            conf = 1.0 + s * psi
            num += float(np.dot(weights, n * psi * conf ** (N - 1)))
            den += float(np.dot(weights, conf ** N))
        return num / den

    def d1(step):
        return (hbar_at(step) - hbar_at(-step)) / (2 * step)

    hbar_prime_fd = (4.0 * d1(fd_step / 2) - d1(fd_step)) / 3.0
    return {
        "tau_prime": tau_prime,
        "volume_prime": volume_prime,
        "hbar_prime_closed": hbar_prime_closed,
        "hbar_prime_fd": hbar_prime_fd,
        "psi_mean_exact": psi_avg_exact,
    }


def second_variation(h: ConformalPerturbation) -> tuple[float, float]:
    """(tau/V) int <N(h), h> dV by quadrature; returns (value, error_estimate).

    The error estimate is the difference against one coarser level.
    """
    N = h.N
    tau = einstein_tau(N)
    n_u, n_theta = _entropy_quad_levels(N)
    fine = _geometry_sweep(h, N, n_u, n_theta)
    coarse = _geometry_sweep(h, N, max(n_u - 1, 2), max(n_theta - 1, 3))
    value = tau.tau * fine["nh_h"] / fine["volume"]
    value_coarse = tau.tau * coarse["nh_h"] / coarse["volume"]
    return value, abs(value - value_coarse)


# ---------------------------------------------------------------------------
# the third variation


def third_variation_exact_rational(N: int) -> Fraction:
    """(n-2)(4 pi tau)^{-n/2} int phi^3 dV in closed form.

    With tau = 1/(4(N+1)) one has (4 pi tau)^{-N} = ((N+1)/pi)^N and
    V = pi^N/N!, so the pi powers cancel and the third variation is the
    rational number (2N-2) (N+1)^N avg(phi^3) / N!.
    """
    avg3 = cpn_average(3, special_phi(N), N)
    return Fraction(2 * N - 2) * Fraction((N + 1) ** N, math.factorial(N)) * avg3


@dataclass
class ThirdVariation:
    N: int
    phi3_average: Fraction
    phi3_integral_exact: float      # avg * V (V = pi^N/N!)
    phi3_integral_quadrature: float
    quadrature_rel_diff: float
    exact_rational: Fraction | None
    value: float                    # measured-tau float path
    tau_used: float


def third_variation(N: int, form: HermitianForm | None = None,
                    quad_tol: float = 1e-8) -> ThirdVariation:
    """Third variation along h = phi g_FS, exact and quadrature paths."""
    if N < 2:
        raise ValueError("third_variation requires N >= 2")
    form = form if form is not None else special_phi(N)
    n = 2 * N
    tau = einstein_tau(N)
    avg3 = cpn_average(3, form, N)
    vol = cpn_volume_closed_form(N)
    integral_exact = float(avg3) * vol
    pert = ConformalPerturbation(form, N)

    def phi3(w):
        return pert.psi_values(w) ** 3

    integral_quad, _ = adaptive_cpn_integral(phi3, N, tol=quad_tol, max_level=4)
    rel = abs(integral_quad - integral_exact) / max(abs(integral_exact), 1e-30)
    value = (n - 2) * (4 * math.pi * tau.tau) ** (-N) * integral_exact
    exact_rational = None
    tau_rational = Fraction(1, 4 * (N + 1))
    if abs(tau.tau - float(tau_rational)) < 1e-9:
        exact_rational = (Fraction(n - 2)
                          * Fraction((N + 1) ** N, math.factorial(N)) * avg3)
    return ThirdVariation(
        N=N, phi3_average=avg3, phi3_integral_exact=integral_exact,
        phi3_integral_quadrature=integral_quad, quadrature_rel_diff=rel,
        exact_rational=exact_rational, value=value, tau_used=tau.tau)


def minimizer_identity_coefficient() -> Fraction:
    """Coefficient of phi in -2 f' + H with f' = ((n-2)/2) phi and H = n phi.

    Symbolic in n: -2 (n-2)/2 + n = 2, matching v = 2 phi; exact check used
    by the certificate.
    """
    from .rewrite import Coef

    minus_two_fprime = Coef.from_n_linear(Fraction(-1), Fraction(2))  # -(n-2)
    trace = Coef.from_n_linear(Fraction(1), Fraction(0))              # n
    total = minus_two_fprime + trace
    expected = Coef.constant(Fraction(2))
    if total != expected:
        raise ArithmeticError("minimizer identity failed symbolically")
    return Fraction(2)


# ---------------------------------------------------------------------------
# the certificate


@dataclass
class StabilityCertificate:
    N: int
    tau: float
    eigen_residual: float
    v_residual: float
    n_tilde_max: float
    first_variations: dict
    second_variation: float
    second_variation_error: float
    third_variation: ThirdVariation
    prefactor_ratio: float
    minimizer_identity: Fraction
    verdict: str
    failures: list = field(default_factory=list)
    thresholds: dict = field(default_factory=dict)
    normalization: str = (
        "metric from the potential log(1+|w|^2) with identity chart-origin "
        "metric; phi is the unit-coefficient form restriction")


def certify(N: int, points: int = 100, seed: int = 7,
            eigen_tol: float = 1e-8, nu2_tol: float = 1e-7,
            nu3_floor: float = 1e-3) -> StabilityCertificate:
    """Run the full stability pipeline and assemble the certificate.

    Verdict ``not_local_max`` iff the eigen residual is below ``eigen_tol``,
    |nu''| below ``nu2_tol``, and |nu'''| above ``nu3_floor``.
    """
    if N < 2:
        raise ValueError("requires N >= 2")
    n = 2 * N
    tau = einstein_tau(N)
    h = ConformalPerturbation.special(N)
    eigen_res = h.eigen_residual(tau, points=points, seed=seed)
    v_sol = v_of(h, tau, points=points, seed=seed)
    nt_max = n_tilde_max(h, points=points, seed=seed)
    firsts = first_variations(h)
    nu2, nu2_err = second_variation(h)
    nu3 = third_variation(N)
    vol = cpn_volume_closed_form(N)
    prefactor_ratio = vol / (4 * math.pi * tau.tau) ** (n / 2)
    ident = minimizer_identity_coefficient()

    failures = []
    if eigen_res >= eigen_tol:
        failures.append(f"eigen residual {eigen_res:.3e} >= {eigen_tol:g}")
    if abs(nu2) >= nu2_tol:
        failures.append(f"|nu''| = {abs(nu2):.3e} >= {nu2_tol:g}")
    if abs(nu3.value) <= nu3_floor:
        failures.append(f"|nu'''| = {abs(nu3.value):.3e} <= {nu3_floor:g}")
    if nu3.quadrature_rel_diff >= 1e-5:
        failures.append(
            f"phi^3 quadrature/exact mismatch {nu3.quadrature_rel_diff:.3e}")
    verdict = "not_local_max" if not failures else "inconclusive"
    return StabilityCertificate(
        N=N, tau=tau.tau, eigen_residual=eigen_res, v_residual=v_sol.residual,
        n_tilde_max=nt_max, first_variations=firsts,
        second_variation=nu2, second_variation_error=nu2_err,
        third_variation=nu3, prefactor_ratio=prefactor_ratio,
        minimizer_identity=ident, verdict=verdict, failures=failures,
        thresholds={"eigen": eigen_tol, "nu2": nu2_tol, "nu3_floor": nu3_floor})
