"""Gaussian value-distribution functions and their gradients.

A plan ``x`` (quantities of products, ``x >= 0``) is valued by a sum of
independent one-product components and complete sets. A single component
with target ``m``, tolerance ``sigma`` and exact-fulfillment value ``lam`` has
value density (price)

    f(x) = 2 lam / (sigma sqrt(2 pi)) * exp(-((x - m) / sigma)^2 / 2)

and value ``F(x) = integral of f over [0, x]``. A complete set values the
joint delivery through the Gaussian probability of the rectangle
``[0, x]`` scaled by ``2 lam``.

All functions accept a single plan of shape ``(n,)`` or a batch of plans of
shape ``(k, n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, special

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)


class DomainError(ValueError):
    """Input outside the economic domain (negative quantity, bad shape, ...)."""


class UnsupportedCorrelationError(DomainError):
    """Set covariance structure the evaluator cannot integrate."""


# --------------------------------------------------------------------------
# primitives


def normal_cdf(z):
    """Standard normal CDF, ``0.5 * erfc(-z / sqrt(2))``.

    Accurate to a few ulp over the whole real line, including the far left
    tail where ``1 + erf`` would cancel.
    """
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("normal_cdf requires finite input")
    out = 0.5 * special.erfc(-arr / SQRT2)
    return float(out) if out.ndim == 0 else out


def normal_pdf(z):
    arr = np.asarray(z, dtype=float)
    out = np.exp(-0.5 * arr * arr) / SQRT2PI
    return float(out) if out.ndim == 0 else out


def _cdf(z):
    # unchecked array version for inner loops
    return 0.5 * special.erfc(-z / SQRT2)


# --------------------------------------------------------------------------
# model types


@dataclass(frozen=True)
class GaussianComponent:
    """One independently valued product."""

    variable_index: int
    m: float
    sigma: float
    lam: float

    def __post_init__(self):
        if int(self.variable_index) != self.variable_index or self.variable_index < 0:
            raise DomainError(f"variable_index must be a non-negative integer, got {self.variable_index!r}")
        for name in ("m", "sigma", "lam"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v!r}")
        if self.m <= 0:
            raise DomainError(f"m must be > 0, got {self.m}")
        if self.sigma <= 0:
            raise DomainError(f"sigma must be > 0, got {self.sigma}")
        # lam == 0 is a flat (worthless) product, produced by zero LP prices
        if self.lam < 0:
            raise DomainError(f"lam must be >= 0, got {self.lam}")

    @property
    def exact_value(self) -> float:
        return self.lam


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SetComponent:
    """A complete set of ``k >= 2`` products valued jointly.

    ``covariance`` must be symmetric positive definite. Diagonal covariances
    factorize exactly; a full covariance is supported only for ``k == 2``.
    """

    variable_indices: tuple
    mean: np.ndarray
    covariance: np.ndarray
    lam: float
    is_diagonal: bool = field(init=False)
    sigmas: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        idx = tuple(int(i) for i in self.variable_indices)
        if len(idx) < 2:
            raise DomainError("a set needs at least two products")
        if len(set(idx)) != len(idx) or min(idx) < 0:
            raise DomainError(f"set variable indices must be distinct and non-negative: {idx}")
        k = len(idx)
        mean = _frozen(self.mean)
        cov = _frozen(self.covariance)
        if mean.shape != (k,):
            raise DomainError(f"mean must have length {k}")
        if cov.shape != (k, k):
            raise DomainError(f"covariance must be {k}x{k}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise DomainError("set parameters must be finite")
        if np.any(mean <= 0):
            raise DomainError("set mean entries must be > 0")
        if not np.allclose(cov, cov.T, rtol=1e-12, atol=0.0):
            raise DomainError("covariance must be symmetric")
        if np.any(np.diag(cov) <= 0):
            raise DomainError("covariance diagonal entries must be > 0")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise DomainError("covariance must be positive definite") from None
        if not math.isfinite(self.lam) or self.lam < 0:
            raise DomainError(f"lam must be finite and >= 0, got {self.lam}")
        object.__setattr__(self, "variable_indices", idx)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        off = cov - np.diag(np.diag(cov))
        object.__setattr__(self, "is_diagonal", bool(np.all(off == 0.0)))
        object.__setattr__(self, "sigmas", _frozen(np.sqrt(np.diag(cov))))

    @classmethod
    def diagonal(cls, variable_indices: Sequence[int], mean, sigma, lam: float) -> "SetComponent":
        sigma = np.asarray(sigma, dtype=float)
        return cls(tuple(variable_indices), mean, np.diag(sigma**2), lam)

    @property
    def size(self) -> int:
        return len(self.variable_indices)

    @property
    def exact_value(self) -> float:
        return self.lam

    @property
    def correlation(self) -> float:
        """Correlation coefficient of a two-product set."""
        if self.size != 2:
            raise DomainError("correlation is defined here for two-product sets only")
        return float(self.covariance[0, 1] / (self.sigmas[0] * self.sigmas[1]))


@dataclass(frozen=True, eq=False)
class ValueModel:
    """Mixed collection of independent components and sets over ``dimension`` variables."""

    dimension: int
    independents: tuple = ()
    sets: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "independents", tuple(self.independents))
        object.__setattr__(self, "sets", tuple(self.sets))
        n = int(self.dimension)
        if n < 1:
            raise DomainError("model dimension must be >= 1")
        seen = [0] * n
        for c in self.independents:
            if c.variable_index >= n:
                raise DomainError(f"component index {c.variable_index} out of range for dimension {n}")
            seen[c.variable_index] += 1
        for s in self.sets:
            for j in s.variable_indices:
                if j >= n:
                    raise DomainError(f"set index {j} out of range for dimension {n}")
                seen[j] += 1
        bad = [j for j, cnt in enumerate(seen) if cnt != 1]
        if bad:
            raise DomainError(f"every variable must belong to exactly one component; offending indices {bad}")

    @property
    def total_exact_value(self) -> float:
        return float(sum(c.lam for c in self.independents) + sum(s.lam for s in self.sets))

    def scaled(self, t: float) -> "ValueModel":
        """Same model with every exact-fulfillment value multiplied by ``t``."""
        inds = [GaussianComponent(c.variable_index, c.m, c.sigma, c.lam * t) for c in self.independents]
        sets = [SetComponent(s.variable_indices, s.mean, s.covariance, s.lam * t) for s in self.sets]
        return ValueModel(self.dimension, inds, sets)


# --------------------------------------------------------------------------
# one-product functions


def _check_quantity(x):
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError("quantity is NaN")
    if np.any(arr < 0):
        raise DomainError("quantities must be non-negative")
    return arr


def component_price(x, c: GaussianComponent):
    """Value density (price per unit) of component ``c`` at quantity ``x``."""
    arr = _check_quantity(x)
    z = (arr - c.m) / c.sigma
    out = 2.0 * c.lam / (c.sigma * SQRT2PI) * np.exp(-0.5 * z * z)
    return float(out) if out.ndim == 0 else out


def _unit_mass(x, m, sigma):
    # P(0 <= X <= x) for X ~ N(m, sigma^2); the lower limit is kept exactly
    return _cdf((x - m) / sigma) - _cdf(-m / sigma)


def component_value(x, c: GaussianComponent):
    """Value of delivering ``x`` units: ``2 lam (Phi((x-m)/sigma) - Phi(-m/sigma))``."""
    arr = _check_quantity(x)
    out = 2.0 * c.lam * _unit_mass(arr, c.m, c.sigma)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# plan-vector functions


def _as_plan(x, n: int | None = None, *, check: bool = True) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim not in (1, 2):
        raise DomainError("plan must be a vector or a batch of vectors")
    if n is not None and arr.shape[-1] != n:
        raise DomainError(f"plan has length {arr.shape[-1]}, model dimension is {n}")
    if check:
        _check_quantity(arr)
    return arr


def independent_value(x, comps: Sequence[GaussianComponent]):
    """Sum of independent component values at plan ``x``."""
    arr = _as_plan(x)
    n = arr.shape[-1]
    total = np.zeros(arr.shape[:-1])
    for c in comps:
        if c.variable_index >= n:
            raise DomainError(f"component index {c.variable_index} out of range for plan of length {n}")
        total = total + 2.0 * c.lam * _unit_mass(arr[..., c.variable_index], c.m, c.sigma)
    return float(total) if total.ndim == 0 else total


def _bivariate_rect(x1: float, x2: float, s: SetComponent) -> float:
    """P(0 <= Z <= (x1, x2)) for a correlated pair, by adaptive 1-D quadrature.

    Conditioning on the first coordinate leaves a closed-form inner integral
    in the second.
    """
    if x1 <= 0.0 or x2 <= 0.0:
        return 0.0
    m1, m2 = s.mean
    s1, s2 = s.sigmas
    rho = s.correlation
    cs = s2 * math.sqrt(1.0 - rho * rho)

    def integrand(t):
        mu = m2 + rho * s2 * (t - m1) / s1
        inner = _cdf((x2 - mu) / cs) - _cdf(-mu / cs)
        return normal_pdf((t - m1) / s1) / s1 * inner

    lo = max(0.0, m1 - 12.0 * s1)
    hi = min(x1, m1 + 12.0 * s1)
    if hi <= lo:
        return 0.0
    pts = [p for p in (m1,) if lo < p < hi]
    val, _ = integrate.quad(integrand, lo, hi, epsabs=1e-10, epsrel=1e-12, limit=200, points=pts or None)
    return min(max(val, 0.0), 1.0)


def _bivariate_rect_grad(x1: float, x2: float, s: SetComponent) -> tuple[float, float]:
    m1, m2 = s.mean
    s1, s2 = s.sigmas
    rho = s.correlation
    c2 = s2 * math.sqrt(1.0 - rho * rho)
    c1 = s1 * math.sqrt(1.0 - rho * rho)
    mu2 = m2 + rho * s2 * (x1 - m1) / s1
    mu1 = m1 + rho * s1 * (x2 - m2) / s2
    d1 = normal_pdf((x1 - m1) / s1) / s1 * (_cdf((x2 - mu2) / c2) - _cdf(-mu2 / c2))
    d2 = normal_pdf((x2 - m2) / s2) / s2 * (_cdf((x1 - mu1) / c1) - _cdf(-mu1 / c1))
    return float(d1), float(d2)


def _check_set_supported(s: SetComponent):
    if not s.is_diagonal and s.size > 2:
        raise UnsupportedCorrelationError(
            f"unsupported correlation structure: set over {s.variable_indices} has a full "
            f"{s.size}x{s.size} covariance; only diagonal sets or correlated pairs can be evaluated"
        )


def set_value(x, s: SetComponent):
    """Value of a complete set: ``2 lam * P(0 <= Z <= x)`` with ``Z ~ N(mean, covariance)``."""
    _check_set_supported(s)
    arr = _as_plan(x)
    n = arr.shape[-1]
    if max(s.variable_indices) >= n:
        raise DomainError(f"set indices {s.variable_indices} out of range for plan of length {n}")
    sub = arr[..., list(s.variable_indices)]
    if s.is_diagonal:
        out = 2.0 * s.lam * np.prod(_unit_mass(sub, s.mean, s.sigmas), axis=-1)
    else:
        flat = sub.reshape(-1, 2)
        probs = np.array([_bivariate_rect(a, b, s) for a, b in flat])
        out = 2.0 * s.lam * probs.reshape(sub.shape[:-1])
    return float(out) if np.ndim(out) == 0 else out


def total_value(x, model: ValueModel):
    """Total value of plan ``x``: sum over sets plus sum over independent products."""
    arr = _as_plan(x, model.dimension)
    total = np.asarray(independent_value(arr, model.independents), dtype=float)
    for s in model.sets:
        total = total + set_value(arr, s)
    return float(total) if total.ndim == 0 else total


def gradient(x, model: ValueModel) -> np.ndarray:
    """Analytic gradient of :func:`total_value` (the gradient price vector)."""
    arr = _as_plan(x, model.dimension)
    g = np.zeros_like(arr)
    for c in model.independents:
        z = (arr[..., c.variable_index] - c.m) / c.sigma
        g[..., c.variable_index] = 2.0 * c.lam / (c.sigma * SQRT2PI) * np.exp(-0.5 * z * z)
    for s in model.sets:
        _check_set_supported(s)
        idx = list(s.variable_indices)
        sub = arr[..., idx]
        if s.is_diagonal:
            z = (sub - s.mean) / s.sigmas
            dens = np.exp(-0.5 * z * z) / (SQRT2PI * s.sigmas)
            mass = _unit_mass(sub, s.mean, s.sigmas)
            for pos, j in enumerate(idx):
                others = np.prod(np.delete(mass, pos, axis=-1), axis=-1)
                g[..., j] = 2.0 * s.lam * dens[..., pos] * others
        else:
            flat = sub.reshape(-1, 2)
            grads = np.array([_bivariate_rect_grad(a, b, s) for a, b in flat]).reshape(sub.shape)
            g[..., idx] = 2.0 * s.lam * grads
    return g


def gradient_cost(x, model: ValueModel):
    """Plan cost at its own gradient prices, ``gradient(x) . x``."""
    arr = _as_plan(x, model.dimension)
    out = np.sum(gradient(arr, model) * arr, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def saturation_limit(model: ValueModel) -> float:
    """Supremum of :func:`total_value` as every quantity grows without bound."""
    total = 0.0
    for c in model.independents:
        total += 2.0 * c.lam * _cdf(c.m / c.sigma)
    for s in model.sets:
        _check_set_supported(s)
        if s.is_diagonal:
            total += 2.0 * s.lam * float(np.prod(_cdf(s.mean / s.sigmas)))
        else:
            big = s.mean + 40.0 * s.sigmas
            total += 2.0 * s.lam * _bivariate_rect(big[0], big[1], s)
    return float(total)


class CompiledModel:
    """Unchecked fast evaluators for a fixed model, for optimizer inner loops.

    ``value`` takes one plan and uses scalar ``math`` calls, which beat numpy
    dispatch for the handful of variables these models have. Callers are
    responsible for passing non-negative plans of the right length.
    """

    def __init__(self, model: ValueModel):
        for s in model.sets:
            _check_set_supported(s)
        self.model = model
        # lower limits use the same expression as value(), so x = 0 cancels exactly
        lower = lambda m, sd: 0.5 * math.erfc(m / (sd * SQRT2))
        self._ind = [(c.variable_index, c.m, c.sigma, 2.0 * c.lam, lower(c.m, c.sigma)) for c in model.independents]
        self._diag = [
            (list(s.variable_indices), [float(v) for v in s.mean], [float(v) for v in s.sigmas], 2.0 * s.lam,
             [lower(float(mu), float(sd)) for mu, sd in zip(s.mean, s.sigmas)])
            for s in model.sets if s.is_diagonal
        ]
        self._corr = [s for s in model.sets if not s.is_diagonal]

    def value(self, x) -> float:
        erfc = math.erfc
        total = 0.0
        for j, m, sd, two_lam, lo in self._ind:
            total += two_lam * (0.5 * erfc((m - x[j]) / (sd * SQRT2)) - lo)
        for idx, ms, sds, two_lam, los in self._diag:
            prod = two_lam
            for j, m, sd, lo in zip(idx, ms, sds, los):
                prod *= 0.5 * erfc((m - x[j]) / (sd * SQRT2)) - lo
            total += prod
        for s in self._corr:
            i, j = s.variable_indices
            total += 2.0 * s.lam * _bivariate_rect(float(x[i]), float(x[j]), s)
        return total

    def values(self, X) -> np.ndarray:
        return np.asarray(total_value(X, self.model), dtype=float)

    def __call__(self, x):
        x = np.asarray(x)
        return self.values(x) if x.ndim == 2 else self.value(x)

    def gradient(self, x) -> np.ndarray:
        return gradient(x, self.model)
