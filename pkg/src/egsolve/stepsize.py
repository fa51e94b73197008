"""Step-size policies for the extragradient iteration.

Covers the norm-adaptive rules per operator class (each driven by the root of
a scalar transcendental equation), their fractional-exponent variants built on
the derived K constants, and the comparison baselines (constant step, general
adaptive denominator, the capped baseline of Vankov et al., the
residual-adaptive update of Pethick et al., and EG+ with halved updates).
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from typing import Callable, Optional

from .core import (
    BracketFailure,
    InvalidAlpha,
    MissingConstant,
    MonotoneClass,
    MonotonicityParams,
    SmoothnessParams,
    ZeroOperatorAtExtrapolation,
)


# ---------------------------------------------------------------------------
# scalar equation roots
# ---------------------------------------------------------------------------

class NuKind(enum.Enum):
    """The scalar equations whose roots set the adaptive step coefficients."""
    STRONG_MONO = "strong-mono"                    # 1 - 2v - v^2 e^{2v} = 0
    STRONG_MONO_DESCENT = "strong-mono-descent"    # 1 - 4v - 2v^2 e^{2v} = 0
    STRONG_MONO_FRAC = "strong-mono-frac"          # 1 - v - v^2 = 0
    MONO = "mono"                                  # v e^v = 1/sqrt(2)
    WEAK_MINTY = "weak-minty"                      # v e^v = 1


_RESIDUALS: dict = {
    NuKind.STRONG_MONO: lambda v: 1.0 - 2.0 * v - v * v * math.exp(2.0 * v),
    NuKind.STRONG_MONO_DESCENT: lambda v: 1.0 - 4.0 * v - 2.0 * v * v * math.exp(2.0 * v),
    NuKind.STRONG_MONO_FRAC: lambda v: 1.0 - v - v * v,
    NuKind.MONO: lambda v: v * math.exp(v) - 1.0 / math.sqrt(2.0),
    NuKind.WEAK_MINTY: lambda v: v * math.exp(v) - 1.0,
}


def nu_residual(kind: NuKind, v: float) -> float:
    return _RESIDUALS[kind](v)


def bisect(fn: Callable[[float], float], lo: float, hi: float, tol: float = 1e-15) -> float:
    """Plain bisection; the bracket must straddle a sign change."""
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise BracketFailure(f"no sign change on [{lo}, {hi}]: f(lo)={flo:g}, f(hi)={fhi:g}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if flo * fm < 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


@functools.lru_cache(maxsize=None)
def solve_nu(kind: NuKind, tol: float = 1e-15) -> float:
    """Root of the kind's equation in (0, 1), by bisection on [1e-9, 1]."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return bisect(_RESIDUALS[kind], 1e-9, 1.0, tol=tol)


# ---------------------------------------------------------------------------
# derived constants for fractional exponents
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KConstants:
    K0: float
    K1: float
    K2: float
    alpha: float


def k_constants(s: SmoothnessParams) -> KConstants:
    """Closed-form segment-free constants for alpha in (0, 1).

    K0 = L0 (2^{a^2/(1-a)} + 1); K1 = L1 2^{a^2/(1-a)};
    K2 = L1^{1/(1-a)} 2^{a^2/(1-a)} 3^a (1-a)^{a/(1-a)}; L1 = 0 forces
    K1 = K2 = 0 exactly.
    """
    a = s.alpha
    if not (0.0 < a < 1.0):
        raise InvalidAlpha(f"k_constants requires alpha in (0, 1), got {a}")
    t = 2.0 ** (a * a / (1.0 - a))
    K0 = s.L0 * (t + 1.0)
    if s.L1 == 0.0:
        return KConstants(K0, 0.0, 0.0, a)
    K1 = s.L1 * t
    K2 = s.L1 ** (1.0 / (1.0 - a)) * t * 3.0 ** a * (1.0 - a) ** (a / (1.0 - a))
    return KConstants(K0, K1, K2, a)


def pow_alpha(value: float, alpha: float) -> float:
    """value**alpha with the 0**alpha = 0 convention, via exp(alpha*log)."""
    if value < 0:
        raise ValueError(f"pow_alpha expects a nonnegative base, got {value}")
    if value == 0.0:
        return 0.0
    return math.exp(alpha * math.log(value))


# ---------------------------------------------------------------------------
# policies
# ---------------------------------------------------------------------------

class PolicyKind(enum.Enum):
    CONSTANT = "const"
    ADAPTIVE = "adaptive"
    STRONG_MONO = "strong-mono"               # alpha = 1, equal steps
    STRONG_MONO_DESCENT = "strong-mono-descent"
    STRONG_MONO_FRAC = "strong-mono-frac"     # alpha < 1 via K constants
    MONO = "mono"
    MONO_FRAC = "mono-frac"
    WEAK_MINTY = "weak-minty"                 # halved update step
    WEAK_MINTY_FRAC = "weak-minty-frac"
    VANKOV = "vankov"
    PETHICK = "pethick"
    EGPLUS = "egplus"


class OmegaRule(enum.Enum):
    EQUAL = "equal-gamma"
    HALF = "half-gamma"
    PETHICK = "pethick"


# update rule is dictated by the convergence argument behind each kind
_OMEGA_RULE: dict = {
    PolicyKind.CONSTANT: OmegaRule.EQUAL,
    PolicyKind.ADAPTIVE: OmegaRule.EQUAL,
    PolicyKind.STRONG_MONO: OmegaRule.EQUAL,
    PolicyKind.STRONG_MONO_DESCENT: OmegaRule.EQUAL,
    PolicyKind.STRONG_MONO_FRAC: OmegaRule.EQUAL,
    PolicyKind.MONO: OmegaRule.EQUAL,
    PolicyKind.MONO_FRAC: OmegaRule.EQUAL,
    PolicyKind.VANKOV: OmegaRule.EQUAL,
    PolicyKind.WEAK_MINTY: OmegaRule.HALF,
    PolicyKind.WEAK_MINTY_FRAC: OmegaRule.HALF,
    PolicyKind.EGPLUS: OmegaRule.HALF,
    PolicyKind.PETHICK: OmegaRule.PETHICK,
}

_NU_FOR_KIND: dict = {
    PolicyKind.STRONG_MONO: NuKind.STRONG_MONO,
    PolicyKind.STRONG_MONO_DESCENT: NuKind.STRONG_MONO_DESCENT,
    PolicyKind.STRONG_MONO_FRAC: NuKind.STRONG_MONO_FRAC,
    PolicyKind.MONO: NuKind.MONO,
    PolicyKind.WEAK_MINTY: NuKind.WEAK_MINTY,
}

# monotonicity classes each kind's guarantee covers; None entry = any class
_ALLOWED_CLASSES: dict = {
    PolicyKind.STRONG_MONO: {MonotoneClass.STRONGLY_MONOTONE},
    PolicyKind.STRONG_MONO_DESCENT: {MonotoneClass.STRONGLY_MONOTONE},
    PolicyKind.STRONG_MONO_FRAC: {MonotoneClass.STRONGLY_MONOTONE},
    PolicyKind.VANKOV: {MonotoneClass.STRONGLY_MONOTONE},
    PolicyKind.MONO: {MonotoneClass.STRONGLY_MONOTONE, MonotoneClass.MONOTONE},
    PolicyKind.MONO_FRAC: {MonotoneClass.STRONGLY_MONOTONE, MonotoneClass.MONOTONE},
    PolicyKind.WEAK_MINTY: {MonotoneClass.STRONGLY_MONOTONE, MonotoneClass.MONOTONE,
                            MonotoneClass.WEAK_MINTY},
    PolicyKind.WEAK_MINTY_FRAC: {MonotoneClass.STRONGLY_MONOTONE, MonotoneClass.MONOTONE,
                                 MonotoneClass.WEAK_MINTY},
    PolicyKind.PETHICK: {MonotoneClass.STRONGLY_MONOTONE, MonotoneClass.MONOTONE,
                         MonotoneClass.WEAK_MINTY},
    PolicyKind.CONSTANT: None,
    PolicyKind.ADAPTIVE: None,
    PolicyKind.EGPLUS: None,
}


@dataclass(frozen=True)
class StepSizePolicy:
    """A step-size rule plus optional per-policy parameter overrides.

    `smoothness`, `mu` and `rho` override the operator's declared values when
    set; that is how experiment configs run a rule with constants that differ
    from the declared ones (for example locally valid constants).
    """
    kind: PolicyKind
    step: Optional[float] = None          # Constant / EG+ / Pethick extrapolation step
    c0: Optional[float] = None            # general adaptive denominator
    c1: Optional[float] = None
    alpha: Optional[float] = None
    smoothness: Optional[SmoothnessParams] = None
    mu: Optional[float] = None
    rho: Optional[float] = None

    def __post_init__(self):
        if self.kind in (PolicyKind.CONSTANT, PolicyKind.EGPLUS, PolicyKind.PETHICK):
            if self.step is None or not (self.step > 0):
                raise ValueError(f"{self.kind.value} policy needs a positive step, got {self.step}")
        if self.kind is PolicyKind.ADAPTIVE:
            if self.c0 is None or self.c1 is None:
                raise ValueError("adaptive policy needs c0 and c1")
            if not (self.c0 > 0):
                raise ValueError(f"adaptive policy needs c0 > 0, got {self.c0}")
            if self.c1 < 0:
                raise ValueError(f"adaptive policy needs c1 >= 0, got {self.c1}")
            a = 1.0 if self.alpha is None else self.alpha
            if not (0.0 < a <= 1.0):
                raise InvalidAlpha(f"adaptive policy alpha must be in (0, 1], got {a}")

    @property
    def omega_rule(self) -> OmegaRule:
        return _OMEGA_RULE[self.kind]

    def allowed_classes(self):
        return _ALLOWED_CLASSES[self.kind]


def _resolve_smoothness(policy: StepSizePolicy, s: Optional[SmoothnessParams]) -> SmoothnessParams:
    eff = policy.smoothness if policy.smoothness is not None else s
    if eff is None:
        raise MissingConstant(f"{policy.kind.value} policy needs smoothness constants")
    return eff


def gamma(policy: StepSizePolicy, normF: float,
          s: Optional[SmoothnessParams] = None,
          m: Optional[MonotonicityParams] = None) -> float:
    """Extrapolation step gamma_k as a function of ||F(x_k)||."""
    if not math.isfinite(normF) or normF < 0:
        raise ValueError(f"normF must be finite and nonnegative, got {normF}")
    kind = policy.kind

    if kind is PolicyKind.CONSTANT or kind is PolicyKind.EGPLUS or kind is PolicyKind.PETHICK:
        return float(policy.step)

    if kind is PolicyKind.ADAPTIVE:
        a = 1.0 if policy.alpha is None else policy.alpha
        return 1.0 / (policy.c0 + policy.c1 * pow_alpha(normF, a))

    if kind in (PolicyKind.STRONG_MONO, PolicyKind.STRONG_MONO_DESCENT,
                PolicyKind.MONO, PolicyKind.WEAK_MINTY):
        eff = _resolve_smoothness(policy, s)
        if eff.alpha != 1.0:
            raise InvalidAlpha(f"{kind.value} rule applies at alpha = 1, operator declares {eff.alpha}")
        nu = solve_nu(_NU_FOR_KIND[kind])
        den = eff.L0 + eff.L1 * normF
        if den == 0.0:
            raise MissingConstant(f"{kind.value} step undefined: L0 = 0 and ||F|| = 0")
        return nu / den

    if kind in (PolicyKind.STRONG_MONO_FRAC, PolicyKind.MONO_FRAC, PolicyKind.WEAK_MINTY_FRAC):
        eff = _resolve_smoothness(policy, s)
        kc = k_constants(eff)  # raises InvalidAlpha at alpha = 1
        a = eff.alpha
        fa = pow_alpha(normF, a)
        if kind is PolicyKind.STRONG_MONO_FRAC:
            nu = solve_nu(NuKind.STRONG_MONO_FRAC)
            den = 2.0 * kc.K0 + (2.0 * kc.K1 + 2.0 ** (1.0 - a) * kc.K2 ** (1.0 - a)) * fa
        else:
            nu = 1.0
            den = (2.0 * math.sqrt(2.0) * kc.K0
                   + (2.0 * math.sqrt(2.0) * kc.K1
                      + 2.0 ** (1.5 * (1.0 - a)) * kc.K2 ** (1.0 - a)) * fa)
        if den == 0.0:
            raise MissingConstant(f"{kind.value} step undefined: all constants and ||F|| are 0")
        return nu / den

    if kind is PolicyKind.VANKOV:
        eff = _resolve_smoothness(policy, s)
        mu = policy.mu
        if mu is None and m is not None and m.kind is MonotoneClass.STRONGLY_MONOTONE:
            mu = m.mu
        if mu is None or mu <= 0:
            raise MissingConstant("Vankov baseline needs mu > 0 (policy override or declared)")
        cap = min(1.0 / (4.0 * mu), 1.0 / (2.0 * math.sqrt(2.0) * math.e * eff.L0)
                  if eff.L0 > 0 else math.inf)
        third = eff.L1 * normF
        if third > 0:
            cap = min(cap, 1.0 / (2.0 * math.sqrt(2.0) * math.e * third))
        if not math.isfinite(cap):
            raise MissingConstant("Vankov baseline needs L0 > 0 or L1*normF > 0")
        return cap

    raise MissingConstant(f"no gamma formula for kind {kind}")


def omega(policy: StepSizePolicy, gamma_k: float,
          F_xhat=None, x_minus_xhat=None, rho: Optional[float] = None) -> float:
    """Update step omega_k from the policy's rule.

    The residual-adaptive rule scales with gamma_k:
    omega = gamma_k * (rho + <F(xhat), x - xhat>/||F(xhat)||^2). Taken as an
    absolute step that expression is nonconvergent on weak-Minty problems
    whenever gamma < rho, so the relative form is used throughout.
    """
    if not (gamma_k > 0):
        raise ValueError(f"gamma_k must be positive, got {gamma_k}")
    rule = policy.omega_rule
    if rule is OmegaRule.EQUAL:
        return gamma_k
    if rule is OmegaRule.HALF:
        return 0.5 * gamma_k
    # Pethick rule
    if F_xhat is None or x_minus_xhat is None:
        raise ValueError("Pethick rule needs F(xhat) and x - xhat")
    r = policy.rho if policy.rho is not None else rho
    if r is None:
        raise MissingConstant("Pethick rule needs rho (policy override or declared)")
    n2 = float(F_xhat @ F_xhat)
    if n2 == 0.0:
        raise ZeroOperatorAtExtrapolation("||F(xhat)|| = 0 in the adaptive update rule")
    return gamma_k * (r + float(F_xhat @ x_minus_xhat) / n2)


# ---------------------------------------------------------------------------
# text keys
# ---------------------------------------------------------------------------

_KEY_ALIASES: dict = {
    "thm3": PolicyKind.STRONG_MONO,
    "strong-mono": PolicyKind.STRONG_MONO,
    "cor1": PolicyKind.STRONG_MONO_DESCENT,
    "strong-mono-descent": PolicyKind.STRONG_MONO_DESCENT,
    "strongly-monotone": PolicyKind.STRONG_MONO_DESCENT,  # user-facing preset
    "thm4": PolicyKind.STRONG_MONO_FRAC,
    "strong-mono-frac": PolicyKind.STRONG_MONO_FRAC,
    "thm5": PolicyKind.MONO,
    "mono": PolicyKind.MONO,
    "thm7": PolicyKind.MONO_FRAC,
    "mono-frac": PolicyKind.MONO_FRAC,
    "thm8": PolicyKind.WEAK_MINTY,
    "weak-minty": PolicyKind.WEAK_MINTY,
    "thm9": PolicyKind.WEAK_MINTY_FRAC,
    "weak-minty-frac": PolicyKind.WEAK_MINTY_FRAC,
}

POLICY_KEY_HELP = (
    "const:STEP, adaptive:C0:C1[:ALPHA], thm3|strong-mono, cor1|strong-mono-descent, "
    "thm4|strong-mono-frac, thm5|mono, thm7|mono-frac, thm8|weak-minty, "
    "thm9|weak-minty-frac, vankov[:MU], pethick:STEP[:RHO], egplus:STEP"
)


def parse_policy(text: str) -> StepSizePolicy:
    """Build a policy from its stable text key (see POLICY_KEY_HELP)."""
    parts = text.strip().split(":")
    head = parts[0].lower()
    args = parts[1:]

    def _f(i: int, name: str) -> float:
        try:
            return float(args[i])
        except (IndexError, ValueError):
            raise ValueError(f"policy '{text}': expected numeric {name}") from None

    if head in _KEY_ALIASES:
        if args:
            raise ValueError(f"policy '{text}': '{head}' takes no parameters")
        return StepSizePolicy(kind=_KEY_ALIASES[head])
    if head == "const":
        return StepSizePolicy(kind=PolicyKind.CONSTANT, step=_f(0, "step"))
    if head == "egplus":
        return StepSizePolicy(kind=PolicyKind.EGPLUS, step=_f(0, "step"))
    if head == "adaptive":
        c0, c1 = _f(0, "c0"), _f(1, "c1")
        alpha = _f(2, "alpha") if len(args) > 2 else 1.0
        return StepSizePolicy(kind=PolicyKind.ADAPTIVE, c0=c0, c1=c1, alpha=alpha)
    if head == "vankov":
        mu = _f(0, "mu") if args else None
        return StepSizePolicy(kind=PolicyKind.VANKOV, mu=mu)
    if head == "pethick":
        if not args:
            raise ValueError("policy 'pethick' needs a step: pethick:STEP[:RHO]")
        step = _f(0, "step")
        rho = _f(1, "rho") if len(args) > 1 else None
        return StepSizePolicy(kind=PolicyKind.PETHICK, step=step, rho=rho)
    raise ValueError(f"unknown policy key '{text}'; valid keys: {POLICY_KEY_HELP}")
