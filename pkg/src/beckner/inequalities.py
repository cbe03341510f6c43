"""Deficit engine for the Cauchy-side functional inequalities.

Every inequality instance is reduced to a DeficitReport: left and right
hand sides as error-bounded estimates, with a certification policy that
turns analysis claims into crisp verdicts (certified iff the deficit is
no more negative than the summed error bounds; saturated iff additionally
the deficit is within ten error bounds of zero).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import sympy as sp

from .errors import (AdmissibilityError, DomainError, IllConditioned,
                     ParamError)
from .fields import DifferentiableField, coords
from .measures import CauchyMeasure
from .numerics import Estimate, QuadratureConfig, integrate_rd
from .qtm import QtmParams, qtm_quadrature


@dataclass(frozen=True)
class DeficitReport:
    lhs: Estimate
    rhs: Estimate
    params: dict = field(default_factory=dict)

    @property
    def deficit(self) -> float:
        return self.rhs.value - self.lhs.value

    @property
    def error_budget(self) -> float:
        return self.lhs.error_bound + self.rhs.error_bound

    @property
    def certified(self) -> bool:
        return self.deficit >= -self.error_budget

    @property
    def saturated(self) -> bool:
        return self.certified and abs(self.deficit) <= 10.0 * self.error_budget

    @property
    def verdict(self) -> str:
        if not self.certified:
            return "fail"
        return "saturated" if self.saturated else "pass"


def growth_degree(f: DifferentiableField) -> float:
    """Polynomial growth bound of |f| at infinity.

    Exact total degree for polynomials; otherwise measured along the
    diagonal at two large radii and rounded up (0 for bounded fields).
    """
    if f.expr.is_polynomial(*f.syms):
        return float(sp.total_degree(f.expr, *f.syms))
    direc = np.ones(f.dim) / math.sqrt(f.dim)
    r1, r2 = 1e3, 1e6
    v1 = abs(float(f.value(r1 * direc)))
    v2 = abs(float(f.value(r2 * direc)))
    if v2 <= 1e-300 or v1 <= 1e-300:
        return 0.0
    slope = math.log(v2 / v1) / math.log(r2 / r1)
    return max(math.ceil(slope - 1e-6), 0.0)


def _beckner_lhs(p: float, sq: Estimate, frac: Estimate):
    """(p/(p-1))[I(f^2) - I(f^{2/p})^p] with a propagated error bound."""
    c = p / (p - 1.0)
    base = max(frac.value, 0.0)
    val = c * (sq.value - base ** p)
    err = c * (sq.error_bound + p * base ** (p - 1.0) * frac.error_bound)
    return val, err, sq.n_evals + frac.n_evals


def beckner_qt_deficit(f: DifferentiableField, m: float, p: float, t: float,
                       x, cfg: QuadratureConfig | None = None,
                       probe: bool = False) -> DeficitReport:
    """Deficit of the extension-operator interpolation inequality.

    (p/(p-1))(Q_t^m(f^2) - Q_t^m(f^{2/p})^p) <= (2t^2/(m-2)) Q_t^{m-2}(|grad f|^2)
    """
    d = f.dim
    if m < d + 2:
        raise ParamError("need m >= d + 2")
    p_lo = 1.0 + 2.0 / (m - d)
    if not (p_lo <= p <= 2.0) and not probe:
        raise ParamError(f"p must lie in [{p_lo}, 2]; pass probe=True to record anyway")
    if not f.positive:
        raise DomainError("f must be a positive field")
    cfg = cfg or QuadratureConfig()
    x = tuple(np.atleast_1d(np.asarray(x, dtype=float)))
    sq = qtm_quadrature(f.power(2), QtmParams(m, d, t, x), cfg)
    frac = qtm_quadrature(f.power(2.0 / p), QtmParams(m, d, t, x), cfg)
    energy = qtm_quadrature(f.grad_norm_squared(), QtmParams(m - 2.0, d, t, x), cfg)
    lv, le, ln = _beckner_lhs(p, sq, frac)
    c = 2.0 * t ** 2 / (m - 2.0)
    return DeficitReport(
        lhs=Estimate(lv, le, ln),
        rhs=Estimate(c * energy.value, c * energy.error_bound, energy.n_evals),
        params={"check": "beckner-qt", "d": d, "m": m, "p": p, "t": t,
                "x": list(x), "probe": probe},
    )


def _weighted_energy(f: DifferentiableField, nu: CauchyMeasure,
                     cfg: QuadratureConfig) -> Estimate:
    """Integral of |grad f|^2 (1+|y|^2) against the measure."""
    gsq = f.grad_norm_squared()
    g_deg = growth_degree(f)

    def g(pts):
        r2 = np.sum(pts * pts, axis=1)
        return gsq.value(pts) * (1.0 + r2)

    return nu.integrate(g, cfg, growth=2.0 * g_deg)


def beckner_cauchy_deficit(f: DifferentiableField, b: float, p: float, d: int,
                           cfg: QuadratureConfig | None = None,
                           probe: bool = False) -> DeficitReport:
    """Deficit of the Cauchy-measure interpolation inequality.

    (p/(p-1))[nu(f^2) - nu(f^{2/p})^p] <= (1/(b-1)) nu(|grad f|^2 (1+|y|^2))
    """
    if b < d + 1:
        raise ParamError("need b >= d + 1")
    p_lo = 1.0 + 1.0 / (b - d)
    if not (p_lo <= p <= 2.0) and not probe:
        raise ParamError(f"p must lie in [{p_lo}, 2]; pass probe=True to record anyway")
    if not f.positive:
        raise DomainError("f must be a positive field")
    cfg = cfg or QuadratureConfig()
    nu = CauchyMeasure(d, b)
    g_deg = growth_degree(f)
    sq = nu.integrate(f.power(2).value, cfg, growth=2.0 * g_deg)
    frac = nu.integrate(f.power(2.0 / p).value, cfg, growth=2.0 * g_deg / p)
    energy = _weighted_energy(f, nu, cfg)
    lv, le, ln = _beckner_lhs(p, sq, frac)
    c = 1.0 / (b - 1.0)
    return DeficitReport(
        lhs=Estimate(lv, le, ln),
        rhs=Estimate(c * energy.value, c * energy.error_bound, energy.n_evals),
        params={"check": "beckner-cauchy", "d": d, "b": b, "p": p, "probe": probe},
    )


def poincare_cauchy_deficit(f: DifferentiableField, b: float, d: int,
                            cfg: QuadratureConfig | None = None) -> DeficitReport:
    """Variance bound Var(f) <= (1/(2(b-1))) nu(|grad f|^2 (1+|y|^2))."""
    if b < d + 1:
        raise ParamError("need b >= d + 1")
    cfg = cfg or QuadratureConfig()
    nu = CauchyMeasure(d, b)
    g_deg = growth_degree(f)
    sq = nu.integrate(lambda pts: np.asarray(f.value(pts)) ** 2, cfg,
                      growth=2.0 * g_deg)
    mean = nu.integrate(f.value, cfg, growth=g_deg)
    energy = _weighted_energy(f, nu, cfg)
    var = sq.value - mean.value ** 2
    var_err = sq.error_bound + 2.0 * abs(mean.value) * mean.error_bound
    c = 1.0 / (2.0 * (b - 1.0))
    return DeficitReport(
        lhs=Estimate(var, var_err, sq.n_evals + mean.n_evals),
        rhs=Estimate(c * energy.value, c * energy.error_bound, energy.n_evals),
        params={"check": "poincare-cauchy", "d": d, "b": b},
    )


@dataclass(frozen=True)
class PhiEntropySpec:
    """Convex profile for the entropy inequality, given as a sympy expression.

    ``expr`` is a function of ``var``; derivatives to order four are taken
    symbolically.  ``n`` is the (negative) effective dimension against which
    admissibility is judged.
    """
    expr: sp.Expr
    var: sp.Symbol
    n: float

    def __post_init__(self):
        if self.n >= 0:
            raise DomainError("the entropy family runs at negative n")

    def derivative(self, order: int):
        dexpr = sp.diff(self.expr, self.var, order)
        fn = sp.lambdify(self.var, dexpr, modules="numpy")
        return lambda v: np.broadcast_to(np.asarray(fn(np.asarray(v, dtype=float)),
                                                    dtype=float), np.shape(v)).copy()


def admissibility_check(spec: PhiEntropySpec, grid):
    """Pointwise admissibility verdicts and the worst margin.

    Conditions: Phi'' > 0 and 2((n-1)/n)(Phi''')^2 <= Phi'' Phi''''.
    Returns (all_pass, worst_margin, per-point margins); the margin is the
    slack of the second condition where the first holds, else -inf.
    """
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    d2 = spec.derivative(2)(grid)
    d3 = spec.derivative(3)(grid)
    d4 = spec.derivative(4)(grid)
    margins = d2 * d4 - 2.0 * (spec.n - 1.0) / spec.n * d3 ** 2
    scale = np.abs(d2 * d4) + np.abs(d3) ** 2 + 1e-30
    margins = np.where(d2 > 0, margins, -np.inf)
    ok = bool(np.all(d2 > 0) and np.all(margins >= -1e-11 * scale))
    return ok, float(np.min(margins)), margins


def phi_entropy_deficit(f: DifferentiableField, spec: PhiEntropySpec,
                        m: float, t: float, x,
                        cfg: QuadratureConfig | None = None) -> DeficitReport:
    """Deficit of the entropy inequality for the extension operator.

    Q_t^m(Phi(f)) - Phi(Q_t^m f) <= (t^2/(2(m-2))) Q_t^{m-2}(Phi''(f) |grad f|^2)
    """
    d = f.dim
    if m < d + 2:
        raise ParamError("need m >= d + 2")
    if abs(spec.n - (d - m + 2.0)) > 1e-12:
        raise ParamError("spec.n must equal d - m + 2 for these indices")
    cfg = cfg or QuadratureConfig()
    x = tuple(np.atleast_1d(np.asarray(x, dtype=float)))
    # admissibility over the observed range of f near the evaluation point
    rng_pts = np.asarray(x, dtype=float) + np.linspace(-6, 6, 41)[:, None] * np.ones(d)
    vals = np.asarray(f.value(rng_pts), dtype=float)
    lo, hi = float(vals.min()), float(vals.max())
    pad = 0.05 * (hi - lo) + 1e-9
    grid = np.linspace(lo - pad, hi + pad, 101)
    ok, worst, _ = admissibility_check(spec, grid)
    if not ok:
        raise AdmissibilityError(
            f"profile fails admissibility on [{lo:.3g}, {hi:.3g}] (margin {worst:.3g})")
    phi_of_f = f.compose_scalar(spec.expr, spec.var)
    ent_first = qtm_quadrature(phi_of_f, QtmParams(m, d, t, x), cfg)
    mean = qtm_quadrature(f, QtmParams(m, d, t, x), cfg)
    phi_fn = spec.derivative(0)
    phi_at_mean = float(phi_fn(mean.value))
    dphi_at_mean = abs(float(spec.derivative(1)(mean.value)))
    lhs_val = ent_first.value - phi_at_mean
    lhs_err = ent_first.error_bound + dphi_at_mean * mean.error_bound
    weight = f.compose_scalar(sp.diff(spec.expr, spec.var, 2), spec.var) \
        * f.grad_norm_squared()
    energy = qtm_quadrature(weight, QtmParams(m - 2.0, d, t, x), cfg)
    c = t ** 2 / (2.0 * (m - 2.0))
    return DeficitReport(
        lhs=Estimate(lhs_val, lhs_err, ent_first.n_evals + mean.n_evals),
        rhs=Estimate(c * energy.value, c * energy.error_bound, energy.n_evals),
        params={"check": "phi-entropy", "d": d, "m": m, "t": t, "x": list(x),
                "n": spec.n},
    )


def rayleigh_basis_tags(b: float, d: int, basis_size: int):
    """Trial-field tags: coordinates (when square-integrable) plus radial
    powers (1+|y|^2)^{s/2} with s increasing toward the critical decay,
    which approximate the slow-decay extremals of the low-b regime.
    """
    tags = []
    if 2.0 * b - d > 2.0:
        tags.extend(("coord", i) for i in range(d))
    k = 1
    while len(tags) < basis_size:
        tags.append(("radial", 0.5 - 2.0 ** (-k)))
        k += 1
    return tags[:basis_size]


def radial_moment(b: float, d: int, sigma: float) -> float:
    """nu_b-average of (1+|y|^2)^{sigma/2}, as a norm-constant ratio."""
    if 2.0 * b - sigma - d <= 0:
        raise DomainError("radial moment diverges")
    from .measures import log_norm_const
    return math.exp(log_norm_const(2.0 * b - sigma - d, d)
                    - log_norm_const(2.0 * b - d, d))


def optimal_constant_rayleigh(b: float, d: int, basis_size: int = 9,
                              drop_tol: float = 1e-10) -> float:
    """Best constant C in Var(f) <= C nu(|grad f|^2 (1+|y|^2)) over a span.

    The variance and energy Gram matrices for this basis reduce to
    norm-constant ratios (Beta integrals), evaluated in closed form --
    quadrature cannot resolve the near-critical radial tails at small b.
    The energy form is eigendecomposed, the numerically null directions
    dropped, and the largest generalized eigenvalue returned; this is a
    variational lower bound on the true constant.
    """
    if 2.0 * b - d < 1.0:
        raise DomainError("need 2b - d >= 1 so the trial fields have finite variance")
    tags = rayleigh_basis_tags(b, d, basis_size)
    nb = len(tags)
    B = np.zeros((nb, nb))
    E = np.zeros((nb, nb))
    for i, (kind_i, a_i) in enumerate(tags):
        for j in range(i, nb):
            kind_j, a_j = tags[j]
            if kind_i == "coord" and kind_j == "coord":
                if a_i == a_j:
                    B[i, j] = 1.0 / (2.0 * b - 2.0 - d)
                    E[i, j] = radial_moment(b, d, 2.0)
            elif kind_i == "radial" and kind_j == "radial":
                sig = a_i + a_j
                B[i, j] = radial_moment(b, d, sig) \
                    - radial_moment(b, d, a_i) * radial_moment(b, d, a_j)
                E[i, j] = a_i * a_j * (radial_moment(b, d, sig)
                                       - radial_moment(b, d, sig - 2.0))
            # coordinate x radial entries vanish by parity
            B[j, i] = B[i, j]
            E[j, i] = E[i, j]
    ev, U = scipy.linalg.eigh(E)
    keep = ev > drop_tol * ev.max()
    if not np.any(keep):
        raise IllConditioned("energy Gram matrix numerically rank zero")
    P = U[:, keep] / np.sqrt(ev[keep])
    return float(np.max(scipy.linalg.eigvalsh(P.T @ B @ P)))


def _gaussian_integrate(g, d: int, cfg: QuadratureConfig) -> Estimate:
    log_c = 0.5 * d * math.log(2.0 * math.pi)

    def h(pts):
        r2 = np.sum(pts * pts, axis=1)
        return np.asarray(g(pts), dtype=float) * np.exp(-0.5 * r2 - log_c)

    return integrate_rd(h, d, cfg, cutoff=12.0)


def gaussian_beckner_deficit(f: DifferentiableField, p: float,
                             cfg: QuadratureConfig | None = None) -> DeficitReport:
    """(p/(p-1))[gamma(f^2) - gamma(f^{2/p})^p] <= 2 gamma(|grad f|^2)."""
    if not 1.0 < p <= 2.0:
        raise ParamError("p must lie in (1, 2]")
    cfg = cfg or QuadratureConfig()
    d = f.dim
    sq = _gaussian_integrate(f.power(2).value, d, cfg)
    frac = _gaussian_integrate(f.power(2.0 / p).value, d, cfg)
    energy = _gaussian_integrate(f.grad_norm_squared().value, d, cfg)
    lv, le, ln = _beckner_lhs(p, sq, frac)
    return DeficitReport(
        lhs=Estimate(lv, le, ln),
        rhs=Estimate(2.0 * energy.value, 2.0 * energy.error_bound, energy.n_evals),
        params={"check": "beckner-gaussian", "d": d, "p": p},
    )


def gaussian_limit_probe(f: DifferentiableField, b_list, p: float, d: int,
                         cfg: QuadratureConfig | None = None):
    """Rescaled Cauchy inequality terms against their Gaussian limit.

    For each b the field x -> f(sqrt(2b) x) is fed to the Cauchy inequality;
    as b grows both sides converge to the Gaussian interpolation inequality.
    Returns (per-b reports, gaussian report, gap records).
    """
    cfg = cfg or QuadratureConfig()
    b_list = list(b_list)
    if any(b2 <= b1 for b1, b2 in zip(b_list, b_list[1:])):
        raise ParamError("b_list must be increasing")
    gauss = gaussian_beckner_deficit(f, p, cfg)
    reports, gaps = [], []
    y = coords(d)
    for b in b_list:
        if b < d + 1:
            raise ParamError("each b must be >= d + 1")
        scale = math.sqrt(2.0 * b)
        sub = {s: scale * s for s in y}
        g = DifferentiableField(f.expr.subs(sub, simultaneous=True), y,
                                positive=f.positive)
        rep = beckner_cauchy_deficit(g, b, p, d, cfg, probe=True)
        reports.append(rep)
        gaps.append({"b": b,
                     "lhs_gap": abs(rep.lhs.value - gauss.lhs.value),
                     "rhs_gap": abs(rep.rhs.value - gauss.rhs.value)})
    return reports, gauss, gaps


def limit_rate(gaps, key: str = "rhs_gap") -> float:
    """Empirical convergence exponent: slope of log(gap) against log(1/b)."""
    bs = np.array([g["b"] for g in gaps], dtype=float)
    vals = np.array([g[key] for g in gaps], dtype=float)
    if np.any(vals <= 0):
        raise DomainError("gaps must be positive to fit a rate")
    return float(np.polyfit(np.log(1.0 / bs), np.log(vals), 1)[0])


def p_grid(b: float, d: int, n_points: int = 9):
    """Evenly spaced admissible exponents from the left endpoint to 2."""
    return np.linspace(1.0 + 1.0 / (b - d), 2.0, n_points)
