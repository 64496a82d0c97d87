"""Black-Scholes put pricing in log-moneyness coordinates, plus inversion.

Everything is expressed in ``x = ln(S/K)`` with zero rates:

    put(tau, x; sigma) = K N(-d2) - K e^x N(-d1),
    d1 = (x + sigma^2 tau / 2) / (sigma sqrt(tau)),   d2 = d1 - sigma sqrt(tau).

The x-derivatives up to third order and the vega are closed-form; the
identity e^x pdf(d1) = pdf(d2) collapses them to

    d/dx   = -K e^x N(-d1)
    d2/dx2 = d/dx + K pdf(d2) / (sigma sqrt(tau))
    d3/dx3 = d2/dx2 - K d2 pdf(d2) / (sigma^2 tau)
    vega   = K pdf(d2) sqrt(tau).

The cumulative normal goes through erfc (scipy.special.ndtr), which keeps
relative accuracy in the tails where the derivative formulas are touchy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import ndtr

from .errors import NoConvergence, OutOfBand

_SQRT_2PI = math.sqrt(2.0 * math.pi)

#: search interval and tolerances for implied-vol inversion
VOL_FLOOR = 1e-8
VOL_CEILING = 5.0
MAX_ITERATIONS = 200


def _pdf(z: float) -> float:
    return math.exp(-0.5 * z * z) / _SQRT_2PI


def _d12(tau: float, x: float, sigma: float) -> tuple[float, float]:
    srt = sigma * math.sqrt(tau)
    d1 = x / srt + 0.5 * srt
    return d1, d1 - srt


def bs_put(tau: float, x: float, strike: float, sigma: float) -> float:
    """Put price; collapses to the payoff ``max(K - K e^x, 0)`` at tau = 0."""
    if tau == 0.0:
        return max(strike - strike * math.exp(x), 0.0)
    d1, d2 = _d12(tau, x, sigma)
    return strike * ndtr(-d2) - strike * math.exp(x) * ndtr(-d1)


@dataclass(frozen=True)
class PutDxDerivatives:
    d1x: float  # d/dx
    d2x: float  # d^2/dx^2
    d3x: float  # d^3/dx^3


def bs_put_dx_derivatives(tau: float, x: float, strike: float, sigma: float) -> PutDxDerivatives:
    """Analytic first three x-derivatives of the put price (tau > 0)."""
    if tau <= 0 or sigma <= 0:
        raise ValueError("x-derivatives need tau > 0 and sigma > 0")
    d1, d2 = _d12(tau, x, sigma)
    srt = sigma * math.sqrt(tau)
    d1x = -strike * math.exp(x) * ndtr(-d1)
    d2x = d1x + strike * _pdf(d2) / srt
    d3x = d2x - strike * d2 * _pdf(d2) / (sigma * sigma * tau)
    return PutDxDerivatives(d1x=d1x, d2x=d2x, d3x=d3x)


def bs_vega(tau: float, x: float, strike: float, sigma: float) -> float:
    """d(price)/d(sigma); strictly positive for tau > 0."""
    if tau <= 0 or sigma <= 0:
        raise ValueError("vega needs tau > 0 and sigma > 0")
    _, d2 = _d12(tau, x, sigma)
    return strike * _pdf(d2) * math.sqrt(tau)


def no_arbitrage_band(x: float, strike: float) -> tuple[float, float]:
    """Open interval of attainable put prices: (intrinsic, K)."""
    return max(strike - strike * math.exp(x), 0.0), strike


def implied_vol(price: float, tau: float, x: float, strike: float) -> float:
    """Invert the put price for sigma by bisection plus a Newton polish.

    The price must lie strictly inside the no-arbitrage band.  Converges
    to |price error| < 1e-10 K; the bracket guarantees progress, Newton
    supplies the terminal rate.
    """
    lo_price, hi_price = no_arbitrage_band(x, strike)
    if not (lo_price < price < hi_price):
        raise OutOfBand(
            f"price {price!r} outside the attainable band ({lo_price!r}, {hi_price!r})"
        )
    tol = 1e-10 * strike
    lo, hi = VOL_FLOOR, VOL_CEILING
    sigma = 0.5 * (lo + hi)
    for _ in range(MAX_ITERATIONS):
        diff = bs_put(tau, x, strike, sigma) - price
        if diff > 0.0:
            hi = sigma
        else:
            lo = sigma
        vega = bs_vega(tau, x, strike, sigma)
        if vega > 0.0:
            newton = sigma - diff / vega
            nxt = newton if lo < newton < hi else 0.5 * (lo + hi)
        else:
            nxt = 0.5 * (lo + hi)
        # converge on the price residual, then polish until sigma settles
        if abs(diff) < tol and abs(nxt - sigma) < 1e-12 * max(1.0, sigma):
            return nxt
        sigma = nxt
    raise NoConvergence(f"implied vol did not converge in {MAX_ITERATIONS} iterations")
