"""Extreme-value approximation of scheduled rates.

With K users each feeding back best-M of N blocks, roughly K*M/N CQI values
compete per block, so the scheduled rate behaves like the maximum of K*M/N
draws from the per-user rate distribution.  The location/scale constants of
that limit give a two-moment rate approximation that is far cheaper than the
exact expansion and tightens quickly in K.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np
from scipy.optimize import brentq

from .channel import (
    INTERFERENCE_LIMITED,
    NOISE_LIMITED,
    LinkProfile,
    sinr_cdf,
    sinr_cdf_inv,
    sinr_pdf,
    varpi_weights,
)
from .errors import DomainError, PreconditionError
from .feedback import BestMPoly, xi1_vector
from .specfun import EULER_GAMMA


@dataclass(frozen=True)
class NormalizingConstants:
    """Location (a) and scale (b) of the limiting rate maximum, bits/s/Hz."""

    a: float
    b: float


def bestm_cdf_inv(p: LinkProfile, N: int, M: int, q: float) -> float:
    """Quantile of the scheduler-side (best-M) CQI distribution.

    Inverts the monotone polynomial in F on [0, 1], then maps through the
    SINR quantile function.
    """
    if not 0.0 < q < 1.0:
        raise DomainError(f"quantile argument must be in (0, 1), got {q}")
    poly = BestMPoly.build(N, M)
    if M == 1:
        u = q ** (1.0 / N)
    elif M == N:
        u = q
    else:
        u = brentq(lambda v: float(poly.eval_in_f(v)) - q, 0.0, 1.0,
                   xtol=1e-300, rtol=8.9e-16, maxiter=200)
    return sinr_cdf_inv(p, u)


def normalizing_constants(p: LinkProfile, K: float, N: int,
                          M: int) -> NormalizingConstants:
    """Location/scale constants for the maximum of the K*M/N effective
    competitors per resource block.  K may be non-integer."""
    if not 1 <= M <= N:
        raise DomainError(f"need 1 <= M <= N, got M={M}, N={N}")
    q1 = 1.0 - N / (K * M)
    if q1 <= 0.0:
        raise PreconditionError(
            f"quantile argument 1 - N/(K*M) = {q1:.4g} is not in (0, 1); "
            "need K*M/N > 1 for the extreme-value regime"
        )
    q2 = 1.0 - N / (K * M * math.e)
    x1 = bestm_cdf_inv(p, N, M, q1)
    x2 = bestm_cdf_inv(p, N, M, q2)
    a = math.log2(1.0 + x1)
    b = math.log2((1.0 + x2) / (1.0 + x1))
    return NormalizingConstants(a=a, b=b)


def normalizing_constants_closed(kind: str, rho_params, K: float, N: int,
                                 M: int) -> NormalizingConstants:
    """Closed-form constants for the simplified SINR kinds at M = N (full
    feedback) and M = 1 (best-1 feedback)."""
    if kind == NOISE_LIMITED:
        rho0 = rho_params if np.isscalar(rho_params) else rho_params[0]
        ratio = None
    elif kind == INTERFERENCE_LIMITED:
        rho0, rho1 = rho_params
        ratio = rho0 / rho1
    else:
        raise DomainError(f"no closed form for kind {kind!r}")
    if rho0 <= 0:
        raise DomainError("rho0 must be positive")

    if M == N:
        if K <= 1:
            raise PreconditionError(f"need K > 1 for full feedback, got K={K}")
        if kind == INTERFERENCE_LIMITED:
            a = math.log2(1.0 + ratio * (K - 1.0))
            b = math.log2((1.0 + ratio * (K * math.e - 1.0))
                          / (1.0 + ratio * (K - 1.0)))
        else:
            a = math.log2(1.0 + rho0 * math.log(K))
            b = math.log2(1.0 + rho0 / (1.0 + rho0 * math.log(K)))
        return NormalizingConstants(a=a, b=b)

    if M == 1:
        if K <= N:
            raise PreconditionError(
                f"best-1 closed form needs K > N, got K={K}, N={N}"
            )
        root = 1.0 / N

        def inv_plus_one(Keff: float) -> float:
            top = (Keff - N) ** root
            gap = Keff**root - top
            if kind == INTERFERENCE_LIMITED:
                return 1.0 + ratio * top / gap
            return 1.0 + rho0 * math.log(Keff**root / gap)

        a = math.log2(inv_plus_one(K))
        b = math.log2(inv_plus_one(K * math.e) / inv_plus_one(K))
        return NormalizingConstants(a=a, b=b)

    raise DomainError(f"closed forms exist only for M in {{1, N}}, got M={M}")


def user_rate_asymptotic(p: LinkProfile, K0: int, N: int, M: int) -> float:
    """Two-moment extreme-value approximation of the individual user rate."""
    nc = normalizing_constants(p, K0, N, M)
    outage_factor = 1.0 - (1.0 - M / N) ** K0
    return outage_factor * (nc.a + EULER_GAMMA * nc.b) / K0


def sum_rate_asymptotic(profiles, N: int, M: int) -> float:
    """Extreme-value approximation of the cell sum rate."""
    profiles = list(profiles)
    if not profiles:
        raise DomainError("need at least one profile")
    K0 = len(profiles)
    outage_factor = 1.0 - (1.0 - M / N) ** K0
    total = 0.0
    for p in profiles:
        nc = normalizing_constants(p, K0, N, M)
        total += nc.a + EULER_GAMMA * nc.b
    return outage_factor * total / K0


# ---------------------------------------------------------------------------
# empirical tail diagnostics

GUMBEL = "gumbel"
FRECHET = "frechet"


@dataclass(frozen=True)
class TailDiagnosticReport:
    """Numerical check of which extreme-value family the scheduler-side CQI
    tail approaches.

    For the gumbel family the functional is d/dx[(1-F_Y)/f_Y], which should
    tend to 0; for the frechet family it is x*f_Y/(1-F_Y), which should tend
    to a positive constant.
    """

    family: str
    x_grid: tuple[float, ...]
    values: tuple[float, ...]
    trend_decreasing: bool
    limit_estimate: float


@lru_cache(maxsize=512)
def _tail_polys(N: int, M: int):
    """Coefficients of S_Y and f_Y/f in powers of the base survival s = 1-F.

    Working in s avoids the catastrophic 1 - F_Y cancellation deep in the
    tail.  Returns (q, r) with S_Y(x) = sum_j q[j] s^j (q[0] = 0) and
    F_Y'(F) = sum_j r[j] s^j.
    """
    c = xi1_vector(N, M)
    q = [Fraction(0)] * (N + 1)
    r = [Fraction(0)] * N
    for m, cm in enumerate(c):
        e = N - m
        # (1-s)^e = sum_j C(e, j) (-s)^j
        for j in range(1, e + 1):
            q[j] -= cm * comb(e, j) * (-1) ** j
        for j in range(0, e):
            r[j] += cm * e * comb(e - 1, j) * (-1) ** j
    return tuple(float(v) for v in q), tuple(float(v) for v in r)


def _sinr_sf(p: LinkProfile, x: float) -> float:
    """Survival function of the base SINR, accurate deep in the tail."""
    if x <= 0:
        return 1.0
    if p.kind == NOISE_LIMITED:
        return math.exp(-x / p.rho0)
    if p.kind == INTERFERENCE_LIMITED:
        return p.rho0 / (p.rho_int[0] * x + p.rho0)
    w = varpi_weights(p.rho_int)
    e = math.exp(-x / p.rho0)
    return float(sum(
        w[b] * e * p.rho0 / (p.rho0 + rho_b * x)
        for b, rho_b in enumerate(p.rho_int)
    ))


def _horner(coeffs, s: float) -> float:
    out = 0.0
    for c in reversed(coeffs):
        out = out * s + c
    return out


def tail_convergence_diagnostic(p: LinkProfile, N: int,
                                M: int) -> TailDiagnosticReport:
    """Evaluate the domain-of-attraction functional on a geometric grid.

    Interference-limited profiles have a polynomial tail (frechet family);
    noise-limited and general profiles an exponential one (gumbel family).
    """
    if not 1 <= M <= N:
        raise DomainError(f"need 1 <= M <= N, got M={M}, N={N}")
    q_coef, r_coef = _tail_polys(N, M)

    def hazard_inverse(x: float) -> float:
        # (1 - F_Y) / f_Y
        s = _sinr_sf(p, x)
        f = float(sinr_pdf(p, x))
        return _horner(q_coef, s) / (_horner(r_coef, s) * f)

    if p.kind == INTERFERENCE_LIMITED:
        family = FRECHET
        scale = p.rho0 / p.rho_int[0]
        grid = np.geomspace(scale, 1e4 * scale, 33)
        values = tuple(float(x / hazard_inverse(x)) for x in grid)
    else:
        family = GUMBEL
        grid = np.geomspace(p.rho0, 300.0 * p.rho0, 33)
        values = []
        for x in grid:
            # Richardson-extrapolated central difference, relative step 1e-4
            h = 1e-4 * x
            d_h = (hazard_inverse(x + h) - hazard_inverse(x - h)) / (2 * h)
            d_h2 = (hazard_inverse(x + h / 2)
                    - hazard_inverse(x - h / 2)) / h
            values.append(float((4.0 * d_h2 - d_h) / 3.0))
        values = tuple(values)

    # compare mean magnitude over the last decade against the one before it
    logs = np.log10(grid)
    last = np.abs(values)[logs > logs[-1] - 1.0]
    prev = np.abs(values)[(logs > logs[-1] - 2.0) & (logs <= logs[-1] - 1.0)]
    if family == FRECHET:
        arr = np.asarray(values)
        last = np.abs(arr - arr[-1])[logs > logs[-1] - 1.0]
        prev = np.abs(arr - arr[-1])[
            (logs > logs[-1] - 2.0) & (logs <= logs[-1] - 1.0)
        ]
    trend = bool(last.mean() < prev.mean())
    return TailDiagnosticReport(
        family=family,
        x_grid=tuple(float(x) for x in grid),
        values=values,
        trend_decreasing=trend,
        limit_estimate=float(values[-1]),
    )
