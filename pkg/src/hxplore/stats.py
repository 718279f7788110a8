"""Statistical utilities for the Monte Carlo layer: standard normal CDF and
quantile, Kolmogorov-Smirnov distance, Pearson chi-square goodness of fit
with a regularized-incomplete-gamma tail, Wilson score intervals, and
mergeable streaming moments.

All of it is self-contained (math + numpy); nothing here depends on the
simulation modules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "normal_cdf",
    "normal_quantile",
    "ks_distance",
    "gamma_q",
    "chi_square_sf",
    "chi_square_gof",
    "wilson_interval",
    "Moments",
    "BivariateMoments",
]

_SQRT2 = math.sqrt(2.0)


def normal_cdf(x: float) -> float:
    """Standard normal distribution function via the complementary error
    function, Phi(x) = erfc(-x / sqrt 2) / 2; accurate to ~1e-15."""
    return 0.5 * math.erfc(-x / _SQRT2)


# Coefficients of Wichura's PPND16 rational approximations (AS 241).
_PPND_A = (
    3.3871328727963666080, 1.3314166789178437745e2, 1.9715909503065514427e3,
    1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
    3.3430575583588128105e4, 2.5090809287301226727e3,
)
_PPND_B = (
    1.0, 4.2313330701600911252e1, 6.8718700749205790830e2,
    5.3941960214247511077e3, 2.1213794301586595867e4, 3.9307895800092710610e4,
    2.8729085735721942674e4, 5.2264952788528545610e3,
)
_PPND_C = (
    1.42343711074968357734, 4.63033784615654529590, 5.76949722146069140550,
    3.64784832476320460504, 1.27045825245236838258, 2.41780725177450611770e-1,
    2.27238449892691845833e-2, 7.74545014278341407640e-4,
)
_PPND_D = (
    1.0, 2.05319162663775882187, 1.67638483018380384940,
    6.89767334985100004550e-1, 1.48103976427480074590e-1,
    1.51986665636164571966e-2, 5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
_PPND_E = (
    6.65790464350110377720, 5.46378491116411436990, 1.78482653991729133580,
    2.96560571828504891230e-1, 2.65321895265761230930e-2,
    1.24266094738807843860e-3, 2.71155556874348757815e-5,
    2.01033439929228813265e-7,
)
_PPND_F = (
    1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1,
    1.48753612908506148525e-2, 7.86869131145613259100e-4,
    1.84631831751005468180e-5, 1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)


def _poly(coeffs, x):
    out = 0.0
    for c in reversed(coeffs):
        out = out * x + c
    return out


def normal_quantile(p: float) -> float:
    """Inverse standard normal distribution function (Wichura's AS 241,
    double-precision branch); |error| below ~1e-15 on (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile argument must lie in (0, 1), got {p}")
    q = p - 0.5
    if abs(q) <= 0.425:
        s = 0.180625 - q * q
        return q * _poly(_PPND_A, s) / _poly(_PPND_B, s)
    r = p if q < 0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        val = _poly(_PPND_C, r) / _poly(_PPND_D, r)
    else:
        r -= 5.0
        val = _poly(_PPND_E, r) / _poly(_PPND_F, r)
    return -val if q < 0 else val


def ks_distance(samples, cdf=normal_cdf) -> float:
    """Kolmogorov-Smirnov distance between the empirical law of `samples`
    and a continuous reference distribution function."""
    xs = np.sort(np.asarray(samples, dtype=np.float64))
    n = xs.shape[0]
    if n == 0:
        raise ValueError("need at least one sample")
    f = np.array([cdf(float(x)) for x in xs])
    i = np.arange(1, n + 1, dtype=np.float64)
    return float(np.max(np.maximum(i / n - f, f - (i - 1.0) / n)))


def _gamma_q_series(a: float, x: float) -> float:
    # P(a, x) lower series; returns Q = 1 - P
    term = 1.0 / a
    total = term
    k = a
    for _ in range(500):
        k += 1.0
        term *= x / k
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    logp = a * math.log(x) - x - math.lgamma(a)
    return max(0.0, 1.0 - total * math.exp(logp))


def _gamma_q_cf(a: float, x: float) -> float:
    # Q(a, x) continued fraction, modified Lentz
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    logp = a * math.log(x) - x - math.lgamma(a)
    return math.exp(logp) * h


def gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = Gamma(a, x)/Gamma(a)."""
    if a <= 0.0 or x < 0.0:
        raise ValueError("gamma_q needs a > 0 and x >= 0")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return _gamma_q_series(a, x)
    return _gamma_q_cf(a, x)


def chi_square_sf(stat: float, dof: int) -> float:
    """Upper tail probability of the chi-square distribution."""
    if dof < 1:
        raise ValueError(f"dof must be >= 1, got {dof}")
    return gamma_q(0.5 * dof, 0.5 * stat)


def chi_square_gof(observed: dict, probs: dict, min_expected: float = 5.0):
    """Pearson chi-square of observed category counts against exact category
    probabilities.

    Categories are merged greedily in sorted-key order until each bin's
    expected count reaches `min_expected` (the trailing bin is folded into
    its neighbor if it ends short); any probability mass absent from
    `observed` still contributes to the expectation.  Returns
    (stat, dof, p_value).
    """
    keys = sorted(probs)
    total = sum(observed.values())
    if total <= 0:
        raise ValueError("need a positive number of observations")
    bins = []
    acc_o, acc_e = 0.0, 0.0
    for key in keys:
        acc_o += observed.get(key, 0)
        acc_e += probs[key] * total
        if acc_e >= min_expected:
            bins.append((acc_o, acc_e))
            acc_o, acc_e = 0.0, 0.0
    if acc_e > 0.0 or acc_o > 0.0:
        if bins:
            o, e = bins[-1]
            bins[-1] = (o + acc_o, e + acc_e)
        else:
            bins.append((acc_o, acc_e))
    stray = total - sum(o for o, _ in bins)
    if stray:
        raise ValueError(f"{stray} observations fall outside the reference support")
    if len(bins) < 2:
        raise ValueError("fewer than two usable bins; enlarge the sample")
    stat = sum((o - e) ** 2 / e for o, e in bins)
    dof = len(bins) - 1
    return stat, dof, chi_square_sf(stat, dof)


_Z95 = 1.959963984540054


def wilson_interval(successes: int, trials: int, z: float = _Z95):
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2.0 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z2 / (4.0 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass
class Moments:
    """Streaming univariate moments (Welford / Chan), associatively mergeable."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def add(self, x: float) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    def merge(self, other: "Moments") -> None:
        if other.count == 0:
            return
        if self.count == 0:
            self.count, self.mean, self.m2 = other.count, other.mean, other.m2
            return
        n1, n2 = self.count, other.count
        delta = other.mean - self.mean
        n = n1 + n2
        self.mean += delta * n2 / n
        self.m2 += other.m2 + delta * delta * n1 * n2 / n
        self.count = n

    @property
    def variance(self):
        """Sample variance (ddof = 1); None when undefined."""
        if self.count < 2:
            return None
        return self.m2 / (self.count - 1)


@dataclass
class BivariateMoments:
    """Streaming bivariate moments: means, M2s, and the cross co-moment."""

    count: int = 0
    mean_x: float = 0.0
    mean_y: float = 0.0
    m2x: float = 0.0
    m2y: float = 0.0
    cxy: float = 0.0

    def add(self, x: float, y: float) -> None:
        self.count += 1
        dx = x - self.mean_x
        dy = y - self.mean_y
        self.mean_x += dx / self.count
        self.mean_y += dy / self.count
        self.m2x += dx * (x - self.mean_x)
        self.m2y += dy * (y - self.mean_y)
        self.cxy += dx * (y - self.mean_y)

    def merge(self, other: "BivariateMoments") -> None:
        if other.count == 0:
            return
        if self.count == 0:
            for f in ("count", "mean_x", "mean_y", "m2x", "m2y", "cxy"):
                setattr(self, f, getattr(other, f))
            return
        n1, n2 = self.count, other.count
        n = n1 + n2
        dx = other.mean_x - self.mean_x
        dy = other.mean_y - self.mean_y
        self.m2x += other.m2x + dx * dx * n1 * n2 / n
        self.m2y += other.m2y + dy * dy * n1 * n2 / n
        self.cxy += other.cxy + dx * dy * n1 * n2 / n
        self.mean_x += dx * n2 / n
        self.mean_y += dy * n2 / n
        self.count = n

    @property
    def var_x(self):
        return None if self.count < 2 else self.m2x / (self.count - 1)

    @property
    def var_y(self):
        return None if self.count < 2 else self.m2y / (self.count - 1)

    @property
    def cov(self):
        return None if self.count < 2 else self.cxy / (self.count - 1)

    @property
    def corr(self):
        if self.count < 2 or self.m2x <= 0.0 or self.m2y <= 0.0:
            return None
        return self.cxy / math.sqrt(self.m2x * self.m2y)
