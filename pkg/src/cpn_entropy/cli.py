"""Command-line front end: verification suites and the instability certificate.

Verbs: geometry | eigen | moments | variation | algebra | certify.
Common flags: --N, --points, --seed, --mc-samples, --tol, --out, --config.
Flags override a plain-text key=value config file.  Exit codes: 0 pass,
1 verification failure, 2 usage/config error.  Reports are deterministic
for a fixed config (timings are segregated into a field the determinism
contract excludes).
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import __version__
from .charts import ChartPoint, sample_w, transition_map
from .eigenfunctions import (basis_first_eigenspace, phi_values_batch,
                             special_phi, verify_eigen)
from .entropy import certify
from .geometry import (NormalizationError, curvature_batch, curvature_from_arrays,
                       einstein_tau, fd_metric_arrays, metric_arrays,
                       potential_metric_arrays, pullback_mismatch)
from .moments import (cpn_volume, cpn_volume_closed_form, monomial_average,
                      monte_carlo_average, polynomial_average, symmetry_vanishing)
from .polynomials import (BihomogeneousPolynomial, full_harmonic_expansion,
                          special_cubic_polynomial)
from .quadrature import chart_nodes
from .report import (build_report, certificate_to_dict, check, report_bytes,
                     strip_timings)
from .rewrite import (IntegralExpr, PHI3, confluence_check,
                      expected_final_coefficient, reduce_third_variation,
                      ricci_second_variation_coefficients,
                      second_variation_symbolic_zero, solve_f_second_integrals)
from .variation import (QUANTITIES, conformal_change_mismatch,
                        default_coefficients, failing_quantities,
                        verify_lemma_suite)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

SPHERE_NOTE = ("sphere averages are taken over the unit sphere S^(2N+1) of "
               "C^(N+1), the total space of the circle bundle over CP^N")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    N: int = 2
    points: int = 100
    seed: int = 7
    mc_samples: int = 1_000_000
    tol: float = 1e-6
    out: str | None = None
    n_symbol: str = "symbolic"
    orders: int = 100
    mutate: str | None = None

    def as_dict(self) -> dict:
        return {
            "N": self.N, "points": self.points, "seed": self.seed,
            "mc_samples": self.mc_samples, "tol": self.tol,
            "out": self.out, "n": self.n_symbol, "orders": self.orders,
            "mutate": self.mutate,
        }


def _load_config_file(path: str) -> dict:
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"bad config line: {line!r}")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    return values


_CONFIG_TYPES = {
    "N": int, "points": int, "seed": int, "mc_samples": int,
    "tol": float, "out": str, "n": str, "orders": int, "mutate": str,
}


def make_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    file_values: dict = {}
    if getattr(args, "config", None):
        raw = _load_config_file(args.config)
        for key, text in raw.items():
            if key not in _CONFIG_TYPES:
                raise UsageError(f"unknown config key {key!r}")
            file_values[key] = _CONFIG_TYPES[key](text)
    merged = {
        "N": args.N, "points": args.points, "seed": args.seed,
        "mc_samples": getattr(args, "mc_samples", None),
        "tol": args.tol, "out": args.out,
        "n": getattr(args, "n", None), "orders": getattr(args, "orders", None),
        "mutate": getattr(args, "mutate", None),
    }
    for key, flag_value in merged.items():
        value = flag_value if flag_value is not None else file_values.get(key)
        if value is None:
            continue
        attr = "n_symbol" if key == "n" else key
        setattr(cfg, attr, value)
    if cfg.points < 1:
        raise UsageError("points must be >= 1")
    if cfg.tol <= 0:
        raise UsageError("tol must be positive")
    if cfg.orders < 1:
        raise UsageError("orders must be >= 1")
    if cfg.n_symbol != "symbolic":
        try:
            int(cfg.n_symbol)
        except ValueError:
            raise UsageError("--n must be 'symbolic' or an even integer")
    return cfg


# ---------------------------------------------------------------------------
# command implementations


def cmd_geometry(cfg: RunConfig) -> list[dict]:
    if cfg.N < 1:
        raise UsageError("geometry requires N >= 1")
    N, n = cfg.N, 2 * cfg.N
    w = sample_w(N, cfg.points, cfg.seed)
    geo = curvature_batch(w)
    checks = []
    gg = np.einsum("bij,bjk->bik", geo.g, geo.g_inv) - np.eye(n)
    checks.append(check("metric_inverse", "g g^(-1) = I", np.max(np.abs(gg)) < 1e-12,
                        float(np.max(np.abs(gg))), 1e-12, "pointwise"))
    min_eig = float(np.min(np.linalg.eigvalsh(geo.g)))
    checks.append(check("metric_positive_definite", "g > 0", min_eig > 0.0,
                        provenance="pointwise", detail={"min_eigenvalue": min_eig}))
    try:
        tau = einstein_tau(N, samples=min(cfg.points, 20), seed=cfg.seed)
        ein = float(np.max(np.abs(geo.Ric - geo.g / (2 * tau.tau))))
        checks.append(check("einstein", "ric = g/(2 tau)", ein < 1e-9,
                            ein, 1e-9, "pointwise",
                            detail={"tau": tau.tau}))
        tau_dev = abs(tau.tau - 1 / (4 * (N + 1)))
        checks.append(check("tau_closed_form", "tau = 1/(4(N+1))", tau_dev < 1e-9,
                            tau_dev, 1e-9, "pointwise",
                            detail={"closed_form": Fraction(1, 4 * (N + 1))}))
    except NormalizationError as exc:
        checks.append(check("einstein", "ric = g/(2 tau)", False,
                            provenance="pointwise", detail={"error": str(exc)}))
    spread = float(np.max(geo.R) - np.min(geo.R))
    checks.append(check("scalar_constant", "R = n/(2 tau) constant", spread < 1e-9,
                        spread, 1e-9, "pointwise",
                        detail={"R": float(np.mean(geo.R))}))
    antisym = float(np.max(np.abs(geo.Riem + geo.Riem.transpose(0, 1, 3, 2, 4))))
    checks.append(check("riemann_antisymmetry", "R_ijk^l = -R_jik^l",
                        antisym < 1e-12, antisym, 1e-12, "pointwise"))
    w_few = w[: min(cfg.points, 4)]
    g_ex, dg_ex, d2g_ex = metric_arrays(w_few)
    dg_fd, d2g_fd = fd_metric_arrays(w_few)
    geo_fd = curvature_from_arrays(g_ex, dg_fd, d2g_fd)
    geo_ex = curvature_from_arrays(g_ex, dg_ex, d2g_ex)
    fd_dev = float(np.max(np.abs(geo_fd.Riem - geo_ex.Riem)))
    checks.append(check("curvature_fd_oracle",
                        "exact-jet curvature = finite-difference curvature",
                        fd_dev < 1e-6, fd_dev, 1e-6, "finite differences"))
    gp, dgp, d2gp = potential_metric_arrays(w[0])
    dual_dev = max(float(np.max(np.abs(gp - g_ex[:1]))),
                   float(np.max(np.abs(dgp - dg_ex[:1]))),
                   float(np.max(np.abs(d2gp - d2g_ex[:1]))))
    checks.append(check("metric_dual_oracle",
                        "jet metric derivatives = nested-dual potential derivatives",
                        dual_dev < 1e-12, dual_dev, 1e-12, "nested duals"))
    shifted = w[: min(cfg.points, 10)] + 0.1
    pull = max(pullback_mismatch(shifted, 0, target) for target in range(1, N + 1))
    checks.append(check("transition_isometry", "chart transitions are isometries",
                        pull < 1e-10, pull, 1e-10, "pointwise"))
    p = ChartPoint(0, shifted[0])
    q = transition_map(transition_map(p, 1), 0)
    rt = float(np.max(np.abs(q.w - p.w)))
    checks.append(check("transition_roundtrip", "chart 0 -> 1 -> 0 = identity",
                        rt < 1e-14, rt, 1e-14, "pointwise"))
    return checks


def cmd_eigen(cfg: RunConfig) -> list[dict]:
    if cfg.N < 1:
        raise UsageError("eigen requires N >= 1")
    N = cfg.N
    basis = basis_first_eigenspace(N)
    tau = einstein_tau(N, seed=cfg.seed)
    w = sample_w(N, cfg.points, cfg.seed)
    checks = []
    dim = N * (N + 2)
    checks.append(check("eigenspace_dimension", "dim = (N+1)^2 - 1 = N(N+2)",
                        len(basis) == dim, provenance="exact",
                        detail={"count": len(basis), "expected": dim}))
    traces = max(abs(f.trace) for f in basis)
    checks.append(check("trace_free", "tr A = 0", traces == 0.0,
                        float(traces), 1e-300, "exact"))
    resid = max(verify_eigen(f, tau, w) for f in basis)
    checks.append(check("eigen_residual", "(lap + 1/tau) phi = 0", resid < 1e-8,
                        resid, 1e-8, "pointwise",
                        detail={"eigenvalue": 1.0 / tau.tau}))
    vals = []
    weights_all = []
    for wq, wts in chart_nodes(N, 5, 6):
        vals.append(np.stack([phi_values_batch(f, 0, wq) for f in basis], axis=1))
        weights_all.append(wts)
    v = np.concatenate(vals, axis=0)
    wts = np.concatenate(weights_all)
    gram = np.einsum("bi,b,bj->ij", v, wts, v) / np.sum(wts)
    min_gram = float(np.min(np.linalg.eigvalsh(gram)))
    checks.append(check("gram_rank", "quadrature Gram matrix has full rank",
                        min_gram > 1e-8, provenance="quadrature",
                        detail={"min_eigenvalue": min_gram, "rank_required": dim}))
    zero_mean = max(abs(polynomial_average(
        N + 1, BihomogeneousPolynomial.from_form(f))) for f in basis)
    checks.append(check("zero_mean", "int phi dV = 0", zero_mean == 0,
                        float(zero_mean), 1e-300, "exact"))
    p = ChartPoint(0, w[0] + 0.1)
    inv_dev = 0.0
    for f in basis:
        base = phi_values_batch(f, 0, p.w[None, :])[0]
        for target in range(1, N + 1):
            q = transition_map(p, target)
            inv_dev = max(inv_dev, abs(
                phi_values_batch(f, q.chart, q.w[None, :])[0] - base))
    checks.append(check("chart_invariance", "phi([z]) independent of chart",
                        inv_dev < 1e-12, inv_dev, 1e-12, "pointwise"))
    return checks


def cmd_moments(cfg: RunConfig) -> list[dict]:
    if cfg.N < 2:
        raise UsageError("moments requires N >= 2")
    if cfg.mc_samples < 10_000:
        raise UsageError("mc_samples must be >= 10^4")
    N, m = cfg.N, cfg.N + 1
    f = special_cubic_polynomial(N)
    checks = []
    avg3 = polynomial_average(m, f.power(3))
    expected3 = Fraction(12, (N + 1) * (N + 2) * (N + 3))
    checks.append(check("cubic_average", "avg f^3 = 12/((N+1)(N+2)(N+3))",
                        avg3 == expected3 and avg3 > 0, provenance="exact",
                        detail={"value": avg3, "expected": expected3}))
    third = monomial_average(3, (1, 1, 1), (1, 1, 1))
    checks.append(check("monomial_example", "avg |z1 z2 z3|^2 = 1/60 on S^5",
                        third == Fraction(1, 60), provenance="exact",
                        detail={"value": third}))
    mean, se = monte_carlo_average(f.power(3), m, cfg.mc_samples, cfg.seed)
    z_score = abs(mean - float(avg3)) / se if se > 0 else 0.0
    checks.append(check("monte_carlo_oracle", "MC average within 3 sigma of exact",
                        z_score < 3.0, z_score, 3.0, "monte_carlo",
                        detail={"mean": mean, "stderr": se,
                                "samples": cfg.mc_samples}))
    zm = polynomial_average(m, f)
    checks.append(check("zero_mean", "avg f = 0", zm == 0, float(zm),
                        1e-300, "exact"))
    f1 = BihomogeneousPolynomial(m, {
        (tuple([1] + [0] * N), tuple([0, 1] + [0] * (N - 1))): 1,
        (tuple([0, 1] + [0] * (N - 1)), tuple([1] + [0] * N)): 1})
    checks.append(check("negation_symmetry", "f1 odd under z_1 -> -z_1",
                        symmetry_vanishing(f1, ("negate", 0)), provenance="exact"))
    ezz = [0] * m
    ezz[1] = 2
    e3 = [0] * m
    e3[2] = 2
    e1 = [0] * m
    e1[0] = 1
    cross = BihomogeneousPolynomial.monomial(m, ezz, e3, 1) \
        * BihomogeneousPolynomial.monomial(m, e1, e1, 1)
    checks.append(check("rotation_symmetry",
                        "z_2^2 zbar_3^2 |z_1|^2 odd under z_2 -> i z_2",
                        symmetry_vanishing(cross, ("rotate", 1)),
                        provenance="exact"))
    avg2 = polynomial_average(m, f.power(2))
    expected2 = Fraction(6, (N + 1) * (N + 2))
    checks.append(check("square_average", "avg f^2 = 6/((N+1)(N+2))",
                        avg2 == expected2, provenance="exact",
                        detail={"value": avg2, "expected": expected2}))
    vol, vol_err = cpn_volume(N, tol=cfg.tol)
    vol_closed = cpn_volume_closed_form(N)
    vol_rel = abs(vol - vol_closed) / vol_closed
    checks.append(check("volume_quadrature", "Vol(CP^N) = pi^N/N!",
                        vol_rel < max(cfg.tol, 1e-6), vol_rel, max(cfg.tol, 1e-6),
                        "quadrature", detail={"quadrature": vol,
                                              "closed_form": vol_closed,
                                              "error_estimate": vol_err}))
    if N <= 3:
        constant_part = full_harmonic_expansion(f.power(3), 3)[-1]
        const_coef = constant_part.terms.get(
            (tuple([0] * m), tuple([0] * m)))
        ok = const_coef is not None and const_coef.im == 0 \
            and const_coef.re == avg3
        checks.append(check("harmonic_constant_component",
                            "flat-harmonic expansion of f^3 has constant part"
                            " avg f^3 > 0",
                            ok, provenance="exact",
                            detail={"constant": const_coef.re if const_coef else 0}))
    return checks


def _parse_mutation(text: str):
    try:
        quantity, order, coef = text.split(":")
        return {(quantity, int(order)): {coef: None}}
    except ValueError:
        raise UsageError("--mutate expects QUANTITY:ORDER:COEFFICIENT")


def cmd_variation(cfg: RunConfig) -> list[dict]:
    if cfg.N < 2:
        raise UsageError("variation requires N >= 2")
    N, n = cfg.N, 2 * cfg.N
    mutations = None
    if cfg.mutate:
        parsed = _parse_mutation(cfg.mutate)
        defaults = default_coefficients(n)
        mutations = {}
        for key, coefs in parsed.items():
            if key not in defaults:
                raise UsageError(f"unknown formula {key}")
            mutations[key] = {}
            for name in coefs:
                if name not in defaults[key]:
                    raise UsageError(f"unknown coefficient {name!r} of {key}")
                mutations[key][name] = defaults[key][name] + Fraction(1, 2)
    reports = verify_lemma_suite(N, cfg.points, cfg.seed, mutations=mutations)
    checks = []
    for quantity, order in QUANTITIES:
        rs = [r for r in reports if (r.quantity, r.order) == (quantity, order)]
        worst = max(r.rel_residual for r in rs)
        checks.append(check(f"{quantity}_order{order}",
                            f"closed-form d^{order}/ds^{order} {quantity} "
                            "matches finite differences",
                            all(r.passed for r in rs), worst, 1e-5,
                            "finite differences"))
    if not cfg.mutate:
        defaults = default_coefficients(n)
        undetected = []
        for key, coefs in defaults.items():
            for name, value in coefs.items():
                mut = {key: {name: value + Fraction(1, 2)}}
                reps = verify_lemma_suite(N, min(cfg.points, 4), cfg.seed,
                                          mutations=mut)
                if key not in failing_quantities(reps):
                    undetected.append(f"{key[0]}:{key[1]}:{name}")
        checks.append(check("mutation_sensitivity",
                            "every single-coefficient mutation is detected",
                            not undetected, provenance="finite differences",
                            detail={"undetected": undetected}))
        conf = conformal_change_mismatch(N, min(cfg.points, 10), cfg.seed)
        checks.append(check("conformal_change_oracle",
                            "family geometry matches e^(2u) conformal formulas",
                            conf < 1e-8, conf, 1e-8, "pointwise"))
    return checks


def cmd_algebra(cfg: RunConfig) -> list[dict]:
    n_mode = "symbolic" if cfg.n_symbol == "symbolic" else int(cfg.n_symbol)
    checks = []
    result = reduce_third_variation(n_mode, "classical")
    checks.append(check("checkpoint",
                        "integrand reduces to 2(n-1) I[phi^2 lap] + I[phi lapf2]"
                        " after zero-mean",
                        result.checkpoint_matches, provenance="exact"))
    expected_nf = IntegralExpr.single(
        PHI3, expected_final_coefficient(result.n_value).mul_monomial(0, 1, -1)
    ).canonical()
    checks.append(check("normal_form", "normal form is -(n-2)/tau * I[phi^3]",
                        result.normal_form_text == expected_nf,
                        provenance="exact",
                        detail={"normal_form": result.normal_form_text,
                                "expected": expected_nf,
                                "final": result.final_text}))
    checks.append(check("final_coefficient",
                        "third variation = (n-2) (4 pi tau)^(-n/2) int phi^3 dV",
                        result.matches_expected and result.phi2_coefficient_zero
                        and result.tau2_absent,
                        provenance="exact",
                        detail={"phi2_zero": result.phi2_coefficient_zero,
                                "tau2_absent": result.tau2_absent}))
    corrected = reduce_third_variation(n_mode, "corrected")
    checks.append(check("corrected_route",
                        "corrected second-variation tensors reduce to the same"
                        " normal form",
                        corrected.normal_form_text == result.normal_form_text
                        and corrected.matches_expected, provenance="exact"))
    conf = confluence_check(n_mode, "classical", orders=cfg.orders, seed=cfg.seed)
    checks.append(check("confluence",
                        f"{cfg.orders} random rule orders reach one normal form",
                        conf, provenance="exact"))
    pf2, plf2 = solve_f_second_integrals("classical")
    from .rewrite import Coef
    ok_f2 = pf2 == IntegralExpr.single(PHI3, -Coef.n_var())
    ok_lf2 = plf2 == IntegralExpr.single(PHI3, Coef.n_var().mul_monomial(0, 1, 1))
    checks.append(check("f_second_elimination",
                        "int phi f'' = -n int phi^3; "
                        "int phi lap f'' = (n/tau) int phi^3",
                        ok_f2 and ok_lf2, provenance="exact"))
    checks.append(check("nu2_symbolic", "<h, Ntilde(h)> reduces to 0",
                        second_variation_symbolic_zero(), provenance="exact"))
    mutated = reduce_third_variation(
        n_mode, "classical",
        ric_overrides={"g_grad": ricci_second_variation_coefficients(
            "classical")["g_grad"] + Coef.constant(Fraction(1, 2))})
    checks.append(check("mutation_flagged",
                        "perturbing a tensor coefficient breaks the normal form",
                        not mutated.matches_expected
                        and not mutated.deviation.is_zero(),
                        provenance="exact",
                        detail={"deviation": mutated.deviation.canonical()}))
    return checks


def cmd_certify(cfg: RunConfig) -> tuple[list[dict], dict | None]:
    cert = certify(cfg.N, points=cfg.points, seed=cfg.seed)
    cert_dict = certificate_to_dict(cert)
    fv = cert.first_variations
    checks = [
        check("eigen_residual", "(lap + 1/tau) phi = 0",
              cert.eigen_residual < 1e-8, cert.eigen_residual, 1e-8, "pointwise"),
        check("v_solution", "v = 2 phi solves (lap + 1/(2 tau)) v = div div h",
              cert.v_residual < 1e-8, cert.v_residual, 1e-8, "pointwise"),
        check("n_tilde_vanishes", "Ntilde(phi g) = 0",
              cert.n_tilde_max < 1e-7, cert.n_tilde_max, 1e-7, "pointwise"),
        check("tau_prime", "tau' = 0", abs(fv["tau_prime"]) < 1e-8,
              abs(fv["tau_prime"]), 1e-8, "quadrature"),
        check("volume_prime", "V' = 0", abs(fv["volume_prime"]) < 1e-8,
              abs(fv["volume_prime"]), 1e-8, "quadrature"),
        check("hbar_prime", "Hbar' = n(n-2)/(2V) ||phi||^2",
              abs(fv["hbar_prime_fd"] - fv["hbar_prime_closed"])
              < 1e-5 * max(1.0, abs(fv["hbar_prime_closed"])),
              abs(fv["hbar_prime_fd"] - fv["hbar_prime_closed"]),
              1e-5 * max(1.0, abs(fv["hbar_prime_closed"])), "both"),
        check("second_variation", "nu'' = 0 along h = phi g",
              abs(cert.second_variation) < 1e-7, abs(cert.second_variation),
              1e-7, "quadrature"),
        check("third_variation_cross_check",
              "exact and quadrature int phi^3 agree",
              cert.third_variation.quadrature_rel_diff < 1e-5,
              cert.third_variation.quadrature_rel_diff, 1e-5, "both"),
        check("third_variation_nonzero",
              "nu''' = (n-2)(4 pi tau)^(-n/2) int phi^3 dV > 0",
              abs(cert.third_variation.value) > 1e-3,
              provenance="both",
              detail={"value": cert.third_variation.value,
                      "exact_rational": cert.third_variation.exact_rational}),
        check("verdict", "not a local maximum of the shrinker entropy",
              cert.verdict == "not_local_max", provenance="both",
              detail={"verdict": cert.verdict}),
    ]
    return checks, cert_dict


# ---------------------------------------------------------------------------
# driver


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--N", type=int, default=None,
                        help="complex dimension of CP^N")
    parser.add_argument("--points", type=int, default=None,
                        help="number of seeded sample points")
    parser.add_argument("--seed", type=int, default=None, help="master seed")
    parser.add_argument("--mc-samples", dest="mc_samples", type=int, default=None,
                        help="Monte Carlo sample count (>= 10^4)")
    parser.add_argument("--tol", type=float, default=None,
                        help="quadrature relative tolerance")
    parser.add_argument("--out", type=str, default=None,
                        help="write the JSON report to this path")
    parser.add_argument("--config", type=str, default=None,
                        help="key=value config file (flags take precedence)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpn-entropy",
        description="verification suites for the conformal entropy "
                    "instability of the Fubini-Study metric")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("geometry", "Einstein and curvature suite"),
            ("eigen", "eigenspace dimension and residual suite"),
            ("moments", "exact vs Monte Carlo sphere moments"),
            ("variation", "first/second variation formula suite"),
            ("algebra", "symbolic third-variation reduction"),
            ("certify", "emit the instability certificate")):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name == "algebra":
            p.add_argument("--n", type=str, default=None,
                           help="'symbolic' or an even integer dimension")
            p.add_argument("--orders", type=int, default=None,
                           help="random rule orders for the confluence check")
        if name == "variation":
            p.add_argument("--mutate", type=str, default=None,
                           help="QUANTITY:ORDER:COEFFICIENT to perturb by 1/2 "
                                "(the suite must then fail)")
    return parser


def run_command(command: str, cfg: RunConfig) -> tuple[dict, int]:
    t0 = time.perf_counter()
    certificate = None
    notes = None
    if command == "geometry":
        checks = cmd_geometry(cfg)
    elif command == "eigen":
        checks = cmd_eigen(cfg)
    elif command == "moments":
        checks = cmd_moments(cfg)
        notes = [SPHERE_NOTE,
                 "all sphere integrals are reported as averages; integrals "
                 "multiply by the CP^N volume explicitly"]
    elif command == "variation":
        checks = cmd_variation(cfg)
    elif command == "algebra":
        checks = cmd_algebra(cfg)
    elif command == "certify":
        try:
            checks, certificate = cmd_certify(cfg)
        except ValueError as exc:
            checks = [check("certify", "instability certificate", False,
                            provenance="pipeline",
                            detail={"reason": str(exc)})]
    else:  # pragma: no cover
        raise UsageError(f"unknown command {command!r}")
    timings = {"total_seconds": time.perf_counter() - t0}
    report = build_report(command, cfg.as_dict(), checks,
                          certificate=certificate, notes=notes,
                          timings=timings)
    code = EXIT_PASS if report["status"] == "pass" else EXIT_FAIL
    return report, code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = make_config(args)
        report, code = run_command(args.command, cfg)
    except (UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    payload = report_bytes(report)
    sys.stdout.write(payload.decode("utf-8"))
    if cfg.out:
        with open(cfg.out, "wb") as fh:
            fh.write(payload)
    return code


if __name__ == "__main__":
    sys.exit(main())
