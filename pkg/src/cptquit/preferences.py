"""Gambler preferences: power utility, inverse-S probability weighting and
the prospect value of integer-supported exit laws.

Gains and losses are measured against the initial bankroll (reference
point 0), in units of one bet.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

GAIN = "gain"
LOSS = "loss"

_TAIL_TOL = 1e-9


@dataclass(frozen=True)
class CptParams:
    """Preference parameters.

    alpha_plus / alpha_minus are the utility curvature exponents on gains
    and losses, delta_plus / delta_minus the probability-weighting
    exponents, all in (0, 1]; lam >= 1 scales losses (loss aversion).
    """

    alpha_plus: float = 0.95
    alpha_minus: float = 0.95
    delta_plus: float = 0.5
    delta_minus: float = 0.5
    lam: float = 1.5

    def __post_init__(self):
        for name in ("alpha_plus", "alpha_minus", "delta_plus", "delta_minus"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        if self.lam < 1.0:
            raise ValueError(f"lam must be >= 1, got {self.lam}")


def utility(n: int, side: str, params: CptParams) -> float:
    """Utility magnitude of an n-unit gain or loss, n >= 0.

    Returns n ** alpha for the requested side; the sign and the loss
    multiplier are applied by the aggregation in cpt_value.
    """
    if n < 0:
        raise ValueError(f"utility magnitude must be >= 0, got {n}")
    if side == GAIN:
        a = params.alpha_plus
    elif side == LOSS:
        a = params.alpha_minus
    else:
        raise ValueError(f"side must be {GAIN!r} or {LOSS!r}, got {side!r}")
    if n == 0:
        return 0.0
    return float(n) ** a


def weight(p: float, side: str, params: CptParams) -> float:
    """Decision weight of cumulative probability p for the given side."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability out of range: {p}")
    if side == GAIN:
        d = params.delta_plus
    elif side == LOSS:
        d = params.delta_minus
    else:
        raise ValueError(f"side must be {GAIN!r} or {LOSS!r}, got {side!r}")
    if p == 0.0 or p == 1.0:
        return p
    a = p**d
    b = (1.0 - p) ** d
    return a / (a + b) ** (1.0 / d)


def weight_derivative(p: float, side: str, params: CptParams) -> float:
    """Slope of the weighting function at p in (0, 1).

    At p = 0 the one-sided limit is returned: +inf for delta < 1, 1 for
    delta = 1.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"probability out of range for slope: {p}")
    if side == GAIN:
        d = params.delta_plus
    elif side == LOSS:
        d = params.delta_minus
    else:
        raise ValueError(f"side must be {GAIN!r} or {LOSS!r}, got {side!r}")
    if d == 1.0:
        return 1.0
    if p == 0.0:
        return float("inf")
    a = p**d
    b = (1.0 - p) ** d
    den = a + b
    # d/dp [a * den**(-1/d)] with a' = d p**(d-1), den' = d (p**(d-1) - (1-p)**(d-1))
    return den ** (-1.0 / d - 1.0) * (
        d * p ** (d - 1.0) * den - a * (p ** (d - 1.0) - (1.0 - p) ** (d - 1.0))
    )


@dataclass
class ExitDistribution:
    """Centred exit law of a stopped +-1 bet sequence.

    mass maps state -> probability on [-horizon, horizon]; probabilities
    sum to one and the mean is zero (both within 1e-9).  Zero-mass states
    are dropped on construction; tiny negative rounding (>= -1e-12) is
    clipped.
    """

    horizon: int
    mass: dict

    def __post_init__(self):
        T = self.horizon
        if T < 1:
            raise ValueError(f"horizon must be >= 1, got {T}")
        clean = {}
        for s, q in self.mass.items():
            s = int(s)
            if abs(s) > T:
                raise ValueError(f"state {s} outside [-{T}, {T}]")
            if q < 0.0:
                if q < -1e-12:
                    raise ValueError(f"negative mass {q} at state {s}")
                q = 0.0
            if q != 0.0:
                clean[s] = float(q)
        total = sum(clean.values())
        if abs(total - 1.0) > _TAIL_TOL:
            raise ValueError(f"masses sum to {total}, not 1")
        mean = sum(s * q for s, q in clean.items())
        if abs(mean) > _TAIL_TOL:
            raise ValueError(f"mean is {mean}, not 0")
        self.mass = clean

    def as_array(self):
        """Dense mass array over states -horizon..horizon."""
        import numpy as np

        out = np.zeros(2 * self.horizon + 1)
        for s, q in self.mass.items():
            out[s + self.horizon] = q
        return out

    @classmethod
    def from_array(cls, arr, horizon: int) -> "ExitDistribution":
        return cls(horizon, {i - horizon: float(q) for i, q in enumerate(arr)})


def cpt_value(dist, params: CptParams) -> float:
    """Prospect value of a finite integer-supported distribution.

    dist is an ExitDistribution or a plain state -> probability mapping;
    it need not be centred (used for shifted and empirical laws).  Gains
    aggregate from the best outcome down, losses from the worst up, and
    the loss side carries the lam multiplier.  Zero-mass states do not
    change the result.
    """
    mass: Mapping[int, float] = (
        dist.mass if isinstance(dist, ExitDistribution) else dist
    )
    total = 0.0
    tail = 0.0
    wprev = 0.0
    for s in sorted((s for s, q in mass.items() if s > 0 and q != 0.0), reverse=True):
        tail += mass[s]
        w = weight(min(tail, 1.0), GAIN, params)
        total += (w - wprev) * utility(s, GAIN, params)
        wprev = w
    tail = 0.0
    wprev = 0.0
    for s in sorted(s for s, q in mass.items() if s < 0 and q != 0.0):
        tail += mass[s]
        w = weight(min(tail, 1.0), LOSS, params)
        total -= params.lam * (w - wprev) * utility(-s, LOSS, params)
        wprev = w
    return total


def _check_tails(x: Sequence[float], y: Sequence[float]) -> int:
    H = len(x)
    if len(y) != H or H < 1:
        raise ValueError("tail vectors must share a positive length")
    for name, v in (("gain", x), ("loss", y)):
        prev = 1.0 + _TAIL_TOL
        for n, t in enumerate(v, start=1):
            if t > prev + _TAIL_TOL or t < -_TAIL_TOL:
                raise ValueError(
                    f"{name} tails not a monotone [0, 1] chain at index {n}"
                )
            prev = t
    if x[0] + y[0] > 1.0 + _TAIL_TOL:
        raise ValueError("first tails exceed unit mass")
    return H


def reconstruct_mass(x: Sequence[float], y: Sequence[float]) -> dict:
    """Point masses of the centred law with gain tails x and loss tails y.

    x[n-1] is the mass at >= n, y[n-1] the mass at <= -n; the remainder
    sits at 0.  Differences are clipped at 0 against rounding.
    """
    H = _check_tails(x, y)
    mass = {}
    for n in range(1, H + 1):
        up = x[n - 1] - (x[n] if n < H else 0.0)
        dn = y[n - 1] - (y[n] if n < H else 0.0)
        if up > 0.0:
            mass[n] = up
        if dn > 0.0:
            mass[-n] = dn
    center = 1.0 - x[0] - y[0]
    if center > 0.0:
        mass[0] = center
    return mass


def objective_from_tails(
    x: Sequence[float], y: Sequence[float], shift: int, params: CptParams
) -> float:
    """Prospect value of the exit law encoded by tail vectors.

    The law's support is moved by `shift` before valuation, which is how
    subgames started at a nonzero bankroll are scored.  For shift 0 this
    reduces to weighting each tail directly with the marginal utility of
    its rank.
    """
    H = _check_tails(x, y)
    if shift == 0:
        total = 0.0
        for n in range(1, H + 1):
            du = utility(n, GAIN, params) - utility(n - 1, GAIN, params)
            total += du * weight(min(max(x[n - 1], 0.0), 1.0), GAIN, params)
            du = utility(n, LOSS, params) - utility(n - 1, LOSS, params)
            total -= params.lam * du * weight(
                min(max(y[n - 1], 0.0), 1.0), LOSS, params
            )
        return total
    mass = reconstruct_mass(x, y)
    return cpt_value({s + shift: q for s, q in mass.items()}, params)
