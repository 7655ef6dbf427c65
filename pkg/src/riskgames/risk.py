"""Entropic and extreme risk of finite payoff distributions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .game import OPTIMIST, PESSIMIST, parse_rational


@dataclass(frozen=True)
class FinitePayoffDistribution:
    """Finitely supported lottery with exact, strictly positive probabilities."""

    atoms: tuple  # ((payoff, probability), ...)

    def __post_init__(self):
        merged = {}
        for x, p in self.atoms:
            x, p = Fraction(x), Fraction(p)
            if p <= 0:
                raise ValueError("probabilities must be strictly positive")
            merged[x] = merged.get(x, Fraction(0)) + p
        if sum(merged.values()) != 1:
            raise ValueError(f"probabilities sum to {sum(merged.values())}, not 1")
        object.__setattr__(self, "atoms", tuple(sorted(merged.items())))

    @classmethod
    def of(cls, mapping) -> "FinitePayoffDistribution":
        return cls(tuple((parse_rational(x), parse_rational(p)) for x, p in dict(mapping).items()))

    @property
    def support(self) -> tuple:
        return tuple(x for x, _ in self.atoms)

    def shifted(self, c) -> "FinitePayoffDistribution":
        c = Fraction(c)
        return FinitePayoffDistribution(tuple((x + c, p) for x, p in self.atoms))

    def expectation(self) -> Fraction:
        return sum((x * p for x, p in self.atoms), Fraction(0))


def log_base(base) -> float:
    """Natural log of a base given as a rational > 1 or the token ``"e"``."""
    if base == "e":
        return 1.0
    b = Fraction(base) if not isinstance(base, float) else base
    if b <= 1:
        raise ValueError("base must exceed 1")
    return math.log(b)


def extreme_risk(d: FinitePayoffDistribution, mode) -> Fraction:
    if mode == PESSIMIST:
        return min(d.support)
    if mode == OPTIMIST:
        return max(d.support)
    raise ValueError(f"unknown mode {mode!r}")


def entropic_risk(d: FinitePayoffDistribution, base, rho) -> float:
    """``-(1/rho) log_base E[base^(-rho X)]``; ``rho == 0`` gives the expectation."""
    rho = Fraction(rho)
    if rho == 0:
        return float(d.expectation())
    lb = log_base(base)
    r = float(rho)
    expo = [(-r * float(x) * lb, float(p)) for x, p in d.atoms]
    top = max(a for a, _ in expo)
    if max(abs(a) for a, _ in expo) < 1.0:
        # small exponents: log1p/expm1 keeps the digits that cancel otherwise
        log_mgf = math.log1p(math.fsum(p * math.expm1(a) for a, p in expo))
    else:
        log_mgf = top + math.log(math.fsum(p * math.exp(a - top) for a, p in expo))
    return -log_mgf / (r * lb)


def modified_reward(x, base, rho, shift=0.0) -> float:
    """Order-preserving reward whose expectation decides entropic comparisons.

    ``1 - base^(-rho x)`` when ``rho > 0`` and ``base^(-rho x) - 1`` when
    ``rho < 0``; both vanish at ``x = 0``. A positive ``shift`` (natural-log
    units, see :func:`reward_shift`) divides the result by ``e^shift`` so
    large exponents do not overflow.
    """
    rho = Fraction(rho)
    if rho == 0:
        raise ValueError("rho must be non-zero")
    a = -float(rho) * float(x) * log_base(base)
    if shift:
        e = math.exp(a - shift) - math.exp(-shift)
    else:
        try:
            e = math.expm1(a)
        except OverflowError:
            e = math.inf
    return -e if rho > 0 else e


def reward_shift(payoffs, base, rho) -> float:
    """Largest positive exponent ``-rho x ln(base)`` over ``payoffs``, or 0."""
    lb = log_base(base)
    return max([0.0] + [-float(rho) * float(x) * lb for x in payoffs])


def threshold_reward(r, base, rho) -> float:
    """Value of ``modified_reward`` at ``r``: the expected-reward cut-off for risk ``r``."""
    return modified_reward(r, base, rho)


def invert_modified_reward(y: float, base, rho, shift=0.0) -> float:
    """Entropic value whose (shifted) modified reward has expectation ``y``."""
    rho = Fraction(rho)
    lb = log_base(base)
    sy = -y if rho > 0 else y
    if shift:
        inner = math.exp(-shift) + sy
        log_mgf = shift + math.log(inner) if inner > 0 else None
    else:
        log_mgf = math.log1p(sy) if sy > -1 else None
    if log_mgf is None:
        return math.inf if rho > 0 else -math.inf
    return -log_mgf / (float(rho) * lb)
