"""Exact per-user and sum rates for CDF-based scheduling with best-M feedback.

The closed form is a triple sum: an alternating binomial sum over ell, a
multinomial expansion over interferer exponent vectors, and a partial
fraction expansion whose residues feed the half-line integrals I1/I2.  The
alternating outer sum loses roughly 0.3 * eps decimal digits, so the
closed-form engine runs on mpmath with working precision chosen adaptively
from measured cancellation; the public entry points return floats.

For rate assembly at large user counts the conditioned expectation is
evaluated by direct quadrature of the scheduler-side CDF power instead of
the xi2 expansion, whose coefficients grow without bound in tau0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath as mp
import numpy as np

from . import specfun
from .channel import (
    GENERAL,
    INTERFERENCE_LIMITED,
    NOISE_LIMITED,
    LinkProfile,
    sinr_cdf,
    sinr_pdf,
    varpi_weights,
)
from .errors import CancellationError, DomainError
from .feedback import BestMPoly, feedback_count_pmf_exact, xi2_vector
from .specfun import QuadratureConfig, adaptive_quad_halfline, exp_e1

#: largest eps for which the general-kind closed form is attempted
CLOSED_FORM_MAX_EPS = 64

#: largest interferer count handled by the multinomial expansion
CLOSED_FORM_MAX_INTERFERERS = 4

_LN2 = math.log(2.0)

_MAX_DPS = 600


def varpi(p: LinkProfile, b: int) -> float:
    """Partial-fraction weight of interferer b (1-based)."""
    if not 1 <= b <= p.num_interferers:
        raise DomainError(f"interferer index {b} out of range")
    return float(varpi_weights(p.rho_int)[b - 1])


def _psi_table(betas, j_vector, b):
    """Coefficients psi_i, i = 0..j_b, of the partial-fraction expansion of
    prod_c (x + beta_c)^(-j_c) at the pole -beta_b.

    psi_i is the Taylor coefficient a_(j_b - i) of
    prod_{c != b} (x + beta_c)^(-j_c) about x = -beta_b, computed through
    the exponential of the log-series; psi_0 is identically zero.
    Works for float or mpf inputs.
    """
    jb = j_vector[b]
    others = [(betas[c], j_vector[c])
              for c in range(len(betas)) if c != b and j_vector[c] > 0]
    zero = betas[b] * 0
    if not others:
        # the off-pole product is identically 1
        return [zero] * jb + [1 + zero]
    ds = [bc - betas[b] for bc, _ in others]
    order = jb - 1
    if len(others) == 1:
        # single off-pole factor: binomial series, no exp-log machinery
        (_, jc), = others
        d = ds[0]
        a = [d ** (-jc)]
        for p in range(1, order + 1):
            a.append(a[-1] * (-(jc + p - 1)) / (p * d))
        psi = [zero] * (jb + 1)
        for i in range(1, jb + 1):
            psi[i] = a[jb - i]
        return psi
    a0 = 1 + zero
    for (bc, jc), d in zip(others, ds):
        a0 *= d ** (-jc)
    L = [zero]
    for q in range(1, order + 1):
        acc = zero
        for (bc, jc), d in zip(others, ds):
            acc += -jc * (-1) ** (q + 1) / (q * d**q)
        L.append(acc)
    a = [a0]
    for q in range(1, order + 1):
        acc = zero
        for r in range(1, q + 1):
            acc += r * L[r] * a[q - r]
        a.append(acc / q)
    psi = [zero] * (jb + 1)
    for i in range(1, jb + 1):
        psi[i] = a[jb - i]
    return psi


def psi_coefficients(p: LinkProfile, j_vector, b: int, i: int) -> float:
    """Residue coefficient psi_{i}^{(b)} of Lemma-style expansion (b 1-based)."""
    j_vector = tuple(int(j) for j in j_vector)
    if len(j_vector) != p.num_interferers:
        raise DomainError("j_vector length must equal the interferer count")
    if not 1 <= b <= len(j_vector):
        raise DomainError(f"pole index {b} out of range")
    if not 0 <= i <= j_vector[b - 1]:
        raise DomainError(f"power index {i} out of range for j_b={j_vector[b - 1]}")
    if i == 0:
        return 0.0
    betas = [p.rho0 / r for r in p.rho_int]
    return float(_psi_table(betas, j_vector, b - 1)[i])


@dataclass(frozen=True)
class ExpansionTerm:
    j_vector: tuple[int, ...]
    b: int       # interferer index, 1-based
    i: int       # pole order
    psi: float
    scale: float  # prod_b (varpi_b * rho0 / rho_b)^(j_b)


def expansion_terms(p: LinkProfile, ell: int):
    """Enumerate the nonzero terms of the PDF-power expansion at level ell."""
    J = p.num_interferers
    betas = [p.rho0 / r for r in p.rho_int]
    w = varpi_weights(p.rho_int)
    scales = [w[b] * betas[b] for b in range(J)]
    for comp in _compositions(ell + 1, J):
        scale = 1.0
        for b in range(J):
            scale *= scales[b] ** comp[b]
        for b in range(J):
            if comp[b] == 0:
                continue
            psi = _psi_table(betas, comp, b)
            for i in range(1, comp[b] + 1):
                yield ExpansionTerm(j_vector=comp, b=b + 1, i=i,
                                    psi=float(psi[i]), scale=scale)


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _multinomial(comp) -> int:
    out = math.factorial(sum(comp))
    for j in comp:
        out //= math.factorial(j)
    return out


# ---------------------------------------------------------------------------
# the I1 / I2 half-line integrals (float path with cancellation guard)

def integral_I2(alpha: float, beta: float, gamma: int) -> float:
    """int_0^inf exp(-alpha x) / (beta + x)^gamma dx.

    Upward recursion seeded by I2(1) = e^(alpha beta) E1(alpha beta); falls
    back to adaptive quadrature when the running cancellation estimate
    exceeds 1e-9 relative.
    """
    if alpha <= 0 or beta <= 0:
        raise DomainError("integral_I2 requires alpha, beta > 0")
    if gamma < 1 or gamma != int(gamma):
        raise DomainError(f"gamma must be a positive integer, got {gamma}")
    gamma = int(gamma)
    val = exp_e1(alpha * beta)
    err = abs(val) * 1e-15
    for g in range(2, gamma + 1):
        lead = beta ** (1 - g)
        err = (lead * 1e-16 + alpha * err) / (g - 1)
        val = (lead - alpha * val) / (g - 1)
        if val <= 0.0 or err > 1e-9 * abs(val):
            return _i2_quad(alpha, beta, gamma)
    return val


def _i2_quad(alpha: float, beta: float, gamma: int) -> float:
    return adaptive_quad_halfline(
        lambda xs: np.exp(-alpha * xs) / (beta + xs) ** gamma,
        QuadratureConfig(abs_tol=1e-300, rel_tol=1e-12, max_subdivisions=4000),
        vectorized=True,
    )


def integral_I1(alpha: float, beta: float, gamma: int) -> float:
    """int_0^inf exp(-alpha x) / ((1 + x)(beta + x)^gamma) dx.

    gamma = 0 collapses to I2(alpha, 1, 1); beta within 1e-6 of 1 reroutes
    through the merged-pole branch; otherwise the partial-fraction
    combination of I2 terms.
    """
    if alpha <= 0 or beta <= 0:
        raise DomainError("integral_I1 requires alpha, beta > 0")
    if gamma < 0 or gamma != int(gamma):
        raise DomainError(f"gamma must be a nonnegative integer, got {gamma}")
    gamma = int(gamma)
    if gamma == 0:
        return integral_I2(alpha, 1.0, 1)
    if abs(beta - 1.0) < 1e-6:
        return integral_I2(alpha, 1.0, gamma + 1)
    total = integral_I2(alpha, 1.0, 1) / (beta - 1.0) ** gamma
    biggest = abs(total)
    for i in range(1, gamma + 1):
        term = (-1.0) ** (i - 1) / (1.0 - beta) ** i \
            * integral_I2(alpha, beta, gamma - i + 1)
        total += term
        biggest = max(biggest, abs(term))
    if total <= 0.0 or biggest * 1e-15 > 1e-9 * abs(total):
        return adaptive_quad_halfline(
            lambda xs: np.exp(-alpha * xs) / ((1.0 + xs) * (beta + xs) ** gamma),
            QuadratureConfig(abs_tol=1e-300, rel_tol=1e-12,
                             max_subdivisions=4000),
            vectorized=True,
        )
    return total


# ---------------------------------------------------------------------------
# arbitrary-precision closed-form engine

def _i2_mp(alpha, beta, gamma_max):
    """I2(alpha, beta, gamma) for gamma = 1..gamma_max as (values, lost-digit
    estimates), via the stable-seeded upward recursion in mpf arithmetic."""
    seed = mp.exp(alpha * beta) * mp.e1(alpha * beta)
    vals = [seed]
    errs = [abs(seed) * mp.mpf(10) ** (-mp.mp.dps + 1)]
    losses = [0.0]
    for g in range(2, gamma_max + 1):
        lead = beta ** (1 - g)
        err = (lead * mp.mpf(10) ** (-mp.mp.dps + 1) + alpha * errs[-1]) / (g - 1)
        val = (lead - alpha * vals[-1]) / (g - 1)
        vals.append(val)
        errs.append(err)
        if val == 0:
            losses.append(float(mp.mp.dps))
        else:
            losses.append(max(
                0.0, mp.mp.dps - 1 + 0.30103 * (mp.mag(err) - mp.mag(val))
            ))
    return vals, losses


def _lost_digits(biggest, total) -> float:
    """Decimal digits cancelled between the largest term and the sum."""
    if total == 0:
        return float(mp.mp.dps)
    return 0.30103 * max(0, mp.mag(biggest) - mp.mag(total) + 1)


class _ClosedFormEngine:
    """Per-profile evaluator of the closed-form rate integral in mpf
    arithmetic with cancellation-aware precision escalation."""

    def __init__(self, profile: LinkProfile):
        self.p = profile
        self._t_cache: dict[int, tuple[int, mp.mpf, float]] = {}

    # -- level integrals --------------------------------------------------

    def t(self, ell: int, dps: int):
        cached = self._t_cache.get(ell)
        if cached is not None and cached[0] >= dps:
            return cached[1], cached[2]
        with mp.workdps(dps):
            val, lost = self._compute_t(ell)
        self._t_cache[ell] = (dps, val, lost)
        return val, lost

    def _compute_t(self, ell: int):
        p = self.p
        if p.kind == NOISE_LIMITED:
            a = mp.mpf(ell + 1) / mp.mpf(p.rho0)
            return mp.exp(a) * mp.e1(a), 0.0
        if p.kind == INTERFERENCE_LIMITED:
            ratio = mp.mpf(p.rho0) / mp.mpf(p.rho_int[0])
            z = 1 - ratio
            return ratio / (ell + 1) * mp.hyp2f1(1, 1, ell + 2, z), 0.0
        return self._compute_t_general(ell)

    def _compute_t_general(self, ell: int):
        p = self.p
        J = p.num_interferers
        rho0 = mp.mpf(p.rho0)
        rhos = [mp.mpf(r) for r in p.rho_int]
        betas = [rho0 / r for r in rhos]
        w = []
        for b in range(J):
            acc = mp.mpf(1)
            for i in range(J):
                if i != b:
                    acc *= rhos[b] / (rhos[b] - rhos[i])
            w.append(acc)
        scales = [w[b] * betas[b] for b in range(J)]
        alpha = mp.mpf(ell + 1) / rho0
        i2_one = mp.exp(alpha) * mp.e1(alpha)
        gmax = ell + 1
        # full I2 tables per distinct pole, computed once; vals[g-1] = I2(g)
        i2_tabs: dict = {}

        def i2_table(key, beta, size):
            hit = i2_tabs.get(key)
            if hit is None:
                hit = i2_tabs[key] = _i2_mp(alpha, beta, size)
            return hit

        i1_cache: dict = {}

        def i1(b: int, gamma: int):
            hit = i1_cache.get((b, gamma))
            if hit is None:
                hit = i1_cache[(b, gamma)] = _i1(b, gamma)
            return hit

        def _i1(b: int, gamma: int):
            beta = betas[b]
            if gamma == 0:
                return i2_one, 0.0
            if abs(beta - 1) < mp.mpf("1e-6"):
                vals, losses = i2_table("merged", mp.mpf(1), gmax + 1)
                return vals[gamma], losses[gamma]
            vals, losses = i2_table(b, beta, gmax)
            total = i2_one / (beta - 1) ** gamma
            biggest = abs(total)
            lost_in = 0.0
            inv = 1 / (1 - beta)
            fac = mp.mpf(1)
            for i in range(1, gamma + 1):
                fac *= inv
                term = fac * vals[gamma - i] if i % 2 == 1 \
                    else -fac * vals[gamma - i]
                lost_in = max(lost_in, losses[gamma - i])
                total += term
                biggest = max(biggest, abs(term))
            return total, lost_in + _lost_digits(biggest, total)

        total = mp.mpf(0)
        maxmag = mp.mpf(0)
        lost_inner = 0.0
        for comp in _compositions(ell + 1, J):
            mn = _multinomial(comp)
            pscale = mp.mpf(1)
            for b in range(J):
                if comp[b]:
                    pscale *= scales[b] ** comp[b]
            inner = mp.mpf(0)
            for b in range(J):
                if comp[b] == 0:
                    continue
                psi = _psi_table(betas, comp, b)
                for i in range(1, comp[b] + 1):
                    v, lost = i1(b, i)
                    contrib = psi[i] * v
                    inner += contrib
                    lost_inner = max(lost_inner, lost)
                    maxmag = max(maxmag, abs(mn * pscale * contrib))
            term = mn * pscale * inner
            total += term
            maxmag = max(maxmag, abs(term))
        return total, lost_inner + _lost_digits(maxmag, total)

    # -- the rate integral -------------------------------------------------

    def g(self, eps: int, min_digits: float = 14.0):
        """G(eps) = int log2(1+x) d(F^eps) as an mpf with at least
        min_digits accurate decimal digits."""
        if eps < 1 or eps != int(eps):
            raise DomainError(f"eps must be a positive integer, got {eps}")
        eps = int(eps)
        p = self.p
        if p.kind == GENERAL:
            if eps > CLOSED_FORM_MAX_EPS:
                raise CancellationError(
                    f"closed form limited to eps <= {CLOSED_FORM_MAX_EPS} for "
                    f"general profiles (got eps={eps}); use the quadrature path"
                )
            if p.num_interferers > CLOSED_FORM_MAX_INTERFERERS:
                raise CancellationError(
                    "closed form limited to profiles with at most "
                    f"{CLOSED_FORM_MAX_INTERFERERS} interferers; use the "
                    "quadrature path"
                )
        dps = int(max(30, min_digits + 12 + 0.302 * eps))
        while True:
            with mp.workdps(dps):
                total = mp.mpf(0)
                maxmag = mp.mpf(0)
                lost_inner = 0.0
                for ell in range(eps):
                    tval, tlost = self.t(ell, dps)
                    coef = mp.mpf(math.comb(eps - 1, ell)) / (ell + 1)
                    term = coef * tval if ell % 2 == 0 else -coef * tval
                    total += term
                    maxmag = max(maxmag, abs(term))
                    lost_inner = max(lost_inner, tlost)
                if total <= 0:
                    lost = float(dps)
                else:
                    lost = lost_inner + _lost_digits(maxmag, total)
                if dps - lost >= min_digits + 2:
                    return total * eps / mp.log(2)
            dps = int(lost + min_digits + 15)
            if dps > _MAX_DPS:
                raise CancellationError(
                    f"closed form for eps={eps} needs more than {_MAX_DPS} "
                    "digits of working precision; use the quadrature path"
                )


@lru_cache(maxsize=128)
def _engine(p: LinkProfile) -> _ClosedFormEngine:
    return _ClosedFormEngine(p)


def g_k(p: LinkProfile, eps: int) -> float:
    """Closed-form G(eps) = int_0^inf log2(1+x) d(F_Z(x))^eps in bits/s/Hz."""
    return float(_engine(p).g(eps))


def g_k_quadrature(p: LinkProfile, eps: int,
                   config: QuadratureConfig | None = None) -> float:
    """Quadrature evaluation of G(eps); the independent oracle for g_k and
    the production path where the closed form cancels."""
    if eps < 1 or eps != int(eps):
        raise DomainError(f"eps must be a positive integer, got {eps}")
    eps = int(eps)
    if config is None:
        config = QuadratureConfig(abs_tol=1e-300, rel_tol=1e-11,
                                  max_subdivisions=6000)

    def integrand(xs):
        F = sinr_cdf(p, xs)
        f = sinr_pdf(p, xs)
        if eps == 1:
            w = f
        else:
            w = eps * F ** (eps - 1) * f
        return w * np.log1p(xs) / _LN2

    return adaptive_quad_halfline(integrand, config, vectorized=True)


# ---------------------------------------------------------------------------
# rate assembly

@dataclass(frozen=True)
class RateBreakdown:
    per_user: tuple[float, ...]
    sum_rate: float
    terms_audit: int


@lru_cache(maxsize=4096)
def selected_rate_conditional(p: LinkProfile, N: int, M: int,
                              tau0: int) -> float:
    """E[log2(1 + X) | tau0 users fed the block back] by direct quadrature
    of the scheduler-side CDF power (no xi2 cancellation)."""
    if tau0 < 1:
        raise DomainError(f"tau0 must be >= 1, got {tau0}")
    poly = BestMPoly.build(N, M)

    def integrand(xs):
        F = sinr_cdf(p, xs)
        FY = poly.eval_in_f(F)
        fY = poly.derivative_in_f(F) * sinr_pdf(p, xs)
        if tau0 == 1:
            w = fY
        else:
            w = tau0 * FY ** (tau0 - 1) * fY
        return np.maximum(w, 0.0) * np.log1p(xs) / _LN2

    return adaptive_quad_halfline(
        integrand,
        QuadratureConfig(abs_tol=1e-300, rel_tol=1e-10, max_subdivisions=6000),
        vectorized=True,
    )


def _conditional_rate_series(p: LinkProfile, N: int, M: int, tau0: int):
    """The xi2-expansion route to the same conditional expectation, in mpf."""
    coeffs = xi2_vector(N, M, tau0)
    biggest = max(abs(c) for c in coeffs)
    min_digits = 14.0 + (math.log10(float(biggest)) if biggest > 1 else 0.0)
    eng = _engine(p)
    with mp.workdps(int(min_digits + 12)):
        total = mp.mpf(0)
        for m, c in enumerate(coeffs):
            if c == 0:
                continue
            gval = eng.g(N * tau0 - m, min_digits=min_digits)
            total += mp.mpf(c.numerator) / c.denominator * gval
        return total


def _series_budget(p: LinkProfile) -> int:
    """Largest CDF-power exponent worth running through the closed form.

    The multinomial expansion cost grows steeply with the interferer count,
    while the quadrature path is exponent-independent, so the crossover
    moves down as J grows.
    """
    if p.kind != GENERAL or p.num_interferers <= 1:
        return CLOSED_FORM_MAX_EPS
    if p.num_interferers == 2:
        return 32
    if p.num_interferers <= CLOSED_FORM_MAX_INTERFERERS:
        return 16
    return 0


@lru_cache(maxsize=8192)
def _rate_quadrature(p: LinkProfile, K0: int, N: int, M: int) -> float:
    """Scheduled-rate integral with the feedback-count binomial collapsed.

    Averaging tau0 * F_Y^(tau0-1) over the Binomial(K0, M/N) feedback count
    telescopes to K0 * (M/N) * (1 - M/N + (M/N) F_Y)^(K0-1), leaving one
    smooth positive integral per (user, K0, N, M).
    """
    poly = BestMPoly.build(N, M)
    prob = M / N

    def integrand(xs):
        F = sinr_cdf(p, xs)
        FY = poly.eval_in_f(F)
        fY = poly.derivative_in_f(F) * sinr_pdf(p, xs)
        mix = (1.0 - prob + prob * FY) ** (K0 - 1)
        return np.maximum(fY, 0.0) * mix * np.log1p(xs) / _LN2

    val = adaptive_quad_halfline(
        integrand,
        QuadratureConfig(abs_tol=1e-300, rel_tol=1e-10, max_subdivisions=6000),
        vectorized=True,
    )
    return prob * val


def user_rate_exact(p: LinkProfile, K0: int, N: int, M: int,
                    closed_form_max_eps: int = CLOSED_FORM_MAX_EPS) -> float:
    """Individual user rate under CDF scheduling with best-M feedback.

    Uses the xi2 series with the closed-form G when every exponent in the
    expansion stays within the closed-form budget, and the collapsed
    quadrature otherwise.
    """
    if K0 < 1:
        raise DomainError(f"K0 must be >= 1, got {K0}")
    if not 1 <= M <= N:
        raise DomainError(f"need 1 <= M <= N, got M={M}, N={N}")
    if N * K0 <= min(closed_form_max_eps, _series_budget(p)):
        total = 0.0
        for tau0 in range(1, K0 + 1):
            w = feedback_count_pmf_exact(K0, M, N, tau0)
            if w == 0:
                continue
            total += float(w) * float(_conditional_rate_series(p, N, M, tau0))
        return total / K0
    # the 1/K0 scheduling share cancels against the K0 from the collapsed sum
    return _rate_quadrature(p, K0, N, M)


def sum_rate_exact(profiles, N: int, M: int) -> RateBreakdown:
    """Cell sum rate: the sum of the individual user rates (the scheduler is
    equiprobable across users, so the per-user rates add)."""
    profiles = list(profiles)
    if not profiles:
        raise DomainError("need at least one profile")
    K0 = len(profiles)
    per_user = tuple(user_rate_exact(p, K0, N, M) for p in profiles)
    audit = K0 * sum(
        tau0 * (M - 1) + 1 for tau0 in range(1, K0 + 1)
    )
    return RateBreakdown(per_user=per_user, sum_rate=float(sum(per_user)),
                         terms_audit=audit)
