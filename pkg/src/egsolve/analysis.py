"""Empirical smoothness tooling: Jacobian-vs-residual scatters, grid and
sampling checks of the norm-growth condition, constant fitting, and closed-form
iteration-bound evaluation."""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .core import (
    DegenerateSamples,
    DimensionMismatch,
    EmptyTrace,
    InvalidAlpha,
    MissingConstant,
    MissingSolution,
    MonotoneClass,
    OperatorInstance,
    SmoothnessParams,
    SolveTrace,
    norm,
    spectral_norm,
    vec,
)
from .stepsize import NuKind, PolicyKind, k_constants, pow_alpha, solve_nu

BoxLike = Union[float, Tuple[float, float], Sequence[Tuple[float, float]]]


def box_bounds(box: BoxLike, dim: int) -> Tuple[np.ndarray, np.ndarray]:
    """Normalize a box spec: halfwidth h, one (lo, hi) pair, or per-axis pairs."""
    if isinstance(box, (int, float)):
        h = float(box)
        if not (h > 0):
            raise ValueError(f"box halfwidth must be positive, got {h}")
        return -h * np.ones(dim), h * np.ones(dim)
    arr = np.asarray(box, dtype=np.float64)
    if arr.shape == (2,):
        arr = np.tile(arr, (dim, 1))
    if arr.shape != (dim, 2):
        raise DimensionMismatch(f"box must give (lo, hi) per axis for dim {dim}, got shape {arr.shape}")
    if np.any(arr[:, 0] >= arr[:, 1]):
        raise ValueError("box must have lo < hi on every axis")
    return arr[:, 0].copy(), arr[:, 1].copy()


# ---------------------------------------------------------------------------
# scatter samples and fits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScatterSample:
    norm_F: float
    norm_J: float
    iterate_index: int = -1   # -1 marks a grid sample

    def __post_init__(self):
        if not (math.isfinite(self.norm_F) and self.norm_F >= 0):
            raise ValueError(f"norm_F must be finite and >= 0, got {self.norm_F}")
        if not (math.isfinite(self.norm_J) and self.norm_J >= 0):
            raise ValueError(f"norm_J must be finite and >= 0, got {self.norm_J}")


@dataclass
class SmoothnessFit:
    """Constants plus the worst slack of ||J|| <= L0 + L1 ||F||^alpha.

    max_violation is the minimum of L0 + L1 ||F||^alpha - ||J|| over the
    samples; negative means the bound fails somewhere.
    """
    alpha_hat: float
    L0_hat: float
    L1_hat: float
    max_violation: float
    samples: List[ScatterSample] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.max_violation >= -1e-9


def _slack(s_alpha: float, L0: float, L1: float, sample: ScatterSample) -> float:
    return L0 + L1 * pow_alpha(sample.norm_F, s_alpha) - sample.norm_J


def scatter_from_trace(F: OperatorInstance, trace: SolveTrace) -> List[ScatterSample]:
    """One (||F(x_k)||, ||J(x_k)||) sample per recorded iterate."""
    rows = [r for r in trace.rows if r.x_k is not None]
    if not rows:
        raise EmptyTrace("trace has no recorded iterate vectors")
    out = []
    for r in rows:
        nj = spectral_norm(F.jacobian_at(r.x_k))
        out.append(ScatterSample(norm_F=r.norm_F_x, norm_J=nj, iterate_index=r.k))
    return out


def verify_condition(F: OperatorInstance, s: SmoothnessParams, box: BoxLike,
                     grid_n: int) -> SmoothnessFit:
    """Grid check of ||J(x)|| <= L0 + L1 ||F(x)||^alpha over the box.

    Returns a fit echoing s whose max_violation is the grid minimum of the
    slack; the minimum location enters the sample list with index -1.
    """
    if grid_n < 2:
        raise ValueError(f"grid_n must be >= 2, got {grid_n}")
    lo, hi = box_bounds(box, F.dim)
    axes = [np.linspace(lo[i], hi[i], grid_n) for i in range(F.dim)]
    worst = math.inf
    worst_sample = None
    samples = []
    for pt in itertools.product(*axes):
        x = np.array(pt)
        nf = norm(F(x))
        nj = spectral_norm(F.jacobian_at(x))
        sm = ScatterSample(norm_F=nf, norm_J=nj)
        g = _slack(s.alpha, s.L0, s.L1, sm)
        if g < worst:
            worst, worst_sample = g, sm
    if worst_sample is not None:
        samples.append(worst_sample)
    return SmoothnessFit(alpha_hat=s.alpha, L0_hat=s.L0, L1_hat=s.L1,
                         max_violation=worst, samples=samples)


@dataclass
class PairCheckReport:
    """Sampled-pair verdict for a two-point inequality."""
    n_pairs: int
    n_violations: int
    min_slack: float
    route: str

    @property
    def passed(self) -> bool:
        return self.n_violations == 0


def verify_segment_condition(F: OperatorInstance, s: SmoothnessParams, pairs: int,
                             theta_grid: int = 101, box: BoxLike = 50.0,
                             seed: int = 0) -> PairCheckReport:
    """Sampled check of the two-point bound with the segment maximum.

    For seeded uniform pairs (x, y) in the box, approximates
    max_theta ||F(theta x + (1-theta) y)|| on a uniform theta grid and checks
    ||F(x) - F(y)|| <= (L0 + L1 max^alpha) ||x - y|| + 1e-10.
    """
    if pairs < 1:
        raise ValueError(f"pairs must be >= 1, got {pairs}")
    if theta_grid < 2:
        raise ValueError(f"theta_grid must be >= 2, got {theta_grid}")
    lo, hi = box_bounds(box, F.dim)
    rng = np.random.default_rng(seed)
    thetas = np.linspace(0.0, 1.0, theta_grid)
    viol = 0
    min_slack = math.inf
    for _ in range(pairs):
        x = rng.uniform(lo, hi)
        y = rng.uniform(lo, hi)
        seg_max = max(norm(F(t * x + (1.0 - t) * y)) for t in thetas)
        lhs = norm(F(x) - F(y))
        rhs = (s.L0 + s.L1 * pow_alpha(seg_max, s.alpha)) * norm(x - y)
        slack = rhs + 1e-10 - lhs
        min_slack = min(min_slack, slack)
        if slack < 0:
            viol += 1
    return PairCheckReport(pairs, viol, min_slack, route="segment-max")


def prop1_rhs(s: SmoothnessParams, norm_Fx: float, dist: float) -> float:
    """Two-point bound free of the segment maximum, from the declared constants.

    alpha = 1: (L0 + L1 ||F(x)||) exp(L1 ||x-y||) ||x-y||.
    alpha < 1: (K0 + K1 ||F(x)||^alpha + K2 ||x-y||^{alpha/(1-alpha)}) ||x-y||.
    """
    if s.alpha == 1.0:
        return (s.L0 + s.L1 * norm_Fx) * math.exp(s.L1 * dist) * dist
    kc = k_constants(s)
    a = s.alpha
    return (kc.K0 + kc.K1 * pow_alpha(norm_Fx, a)
            + kc.K2 * pow_alpha(dist, a / (1.0 - a))) * dist


def verify_proposition1(F: OperatorInstance, s: SmoothnessParams, pairs: int,
                        box: BoxLike = 3.0, seed: int = 0) -> PairCheckReport:
    """Sampled check of the segment-free two-point bound (see prop1_rhs)."""
    if pairs < 1:
        raise ValueError(f"pairs must be >= 1, got {pairs}")
    lo, hi = box_bounds(box, F.dim)
    rng = np.random.default_rng(seed)
    viol = 0
    min_slack = math.inf
    for _ in range(pairs):
        x = rng.uniform(lo, hi)
        y = rng.uniform(lo, hi)
        lhs = norm(F(x) - F(y))
        rhs = prop1_rhs(s, norm(F(x)), norm(x - y))
        slack = rhs + 1e-9 - lhs
        min_slack = min(min_slack, slack)
        if slack < 0:
            viol += 1
    route = "exp-bound" if s.alpha == 1.0 else "k-constants"
    return PairCheckReport(pairs, viol, min_slack, route=route)


def fit_constants(samples: Sequence[ScatterSample],
                  alpha_grid: Iterable[float]) -> SmoothnessFit:
    """Envelope fit of (L0, L1, alpha) to scatter samples.

    Per alpha: least squares of norm_J on (1, norm_F^alpha), coefficients
    clipped at 0, then L0 raised by the worst remaining deficit so every
    sample satisfies the bound. Returns the alpha with the smallest L0 + L1;
    ties keep the earlier grid entry. Heuristic, not a guarantee.
    """
    samples = list(samples)
    if len(samples) < 3:
        raise DegenerateSamples(f"need >= 3 samples to fit, got {len(samples)}")
    nf = np.array([sm.norm_F for sm in samples])
    nj = np.array([sm.norm_J for sm in samples])
    if np.all(nf == nf[0]):
        raise DegenerateSamples("all samples share one ||F|| value; constants are unidentifiable")
    best = None
    for a in alpha_grid:
        if not (0.0 < a <= 1.0):
            raise InvalidAlpha(f"alpha grid entries must lie in (0, 1], got {a}")
        col = np.array([pow_alpha(v, a) for v in nf])
        design = np.column_stack([np.ones_like(col), col])
        coef, *_ = np.linalg.lstsq(design, nj, rcond=None)
        L0, L1 = max(float(coef[0]), 0.0), max(float(coef[1]), 0.0)
        deficit = float(np.max(nj - (L0 + L1 * col)))
        L0 += max(deficit, 0.0)
        if best is None or L0 + L1 < best[0]:
            mv = float(np.min(L0 + L1 * col - nj))
            best = (L0 + L1, SmoothnessFit(alpha_hat=float(a), L0_hat=L0, L1_hat=L1,
                                           max_violation=mv, samples=samples))
    return best[1]


# ---------------------------------------------------------------------------
# closed-form bound evaluation
# ---------------------------------------------------------------------------

@dataclass
class BoundReport:
    """Plug-in values of the closed-form guarantees for one policy kind.

    Fields not applicable to the kind stay None. `sublinear_const` bounds
    min_{k<=K} ||F||^2 * (K+1); iteration counts and rates are per kind.
    guarantee_void flags a nonpositive step-minus-threshold margin (the
    weak-Minty guarantees need delta > 0).
    """
    kind: PolicyKind
    D: float
    zeta: Optional[float] = None
    rate: Optional[float] = None
    iters_to_eps: Optional[float] = None
    term1: Optional[float] = None
    term2: Optional[float] = None
    sublinear_const: Optional[float] = None
    delta: Optional[float] = None
    guarantee_void: bool = False


def theoretical_bounds(F: OperatorInstance, kind: PolicyKind, x0,
                       epsilon: Optional[float] = None,
                       s: Optional[SmoothnessParams] = None,
                       m=None) -> BoundReport:
    """Evaluate the closed-form guarantee constants for a policy kind at x0.

    s and m override the operator's declared constants (for bounds under
    locally valid constants, mirroring the policy-level overrides).
    """
    if F.solution is None:
        raise MissingSolution(f"{F.label or 'operator'} has no known root; distances undefined")
    s = s if s is not None else F.smoothness
    if s is None:
        raise MissingConstant(f"{F.label or 'operator'} declares no smoothness constants")
    m = m if m is not None else F.monotonicity
    x0 = vec(x0, F.dim, what="x0")
    D = norm(x0 - F.solution)
    L0, L1 = s.L0, s.L1
    amp = 1.0 + L1 * math.exp(L1 * D) * D   # growth factor over the radius-D ball
    rep = BoundReport(kind=kind, D=D)

    if kind in (PolicyKind.STRONG_MONO, PolicyKind.STRONG_MONO_DESCENT,
                PolicyKind.MONO, PolicyKind.WEAK_MINTY):
        if s.alpha != 1.0:
            raise InvalidAlpha(f"{kind.value} bound applies at alpha = 1, constants declare {s.alpha}")
        if L0 <= 0.0:
            raise MissingConstant(f"{kind.value} bound needs L0 > 0, constants declare {L0}")

    def _mu() -> float:
        if m is None or m.kind is not MonotoneClass.STRONGLY_MONOTONE:
            raise MissingConstant("this bound needs a declared strong monotonicity modulus")
        return m.mu

    def _rho() -> float:
        if m is None or m.kind is not MonotoneClass.WEAK_MINTY:
            raise MissingConstant("this bound needs a declared weak-Minty rho")
        return m.rho

    if kind is PolicyKind.STRONG_MONO:
        nu = solve_nu(NuKind.STRONG_MONO)
        rep.zeta = nu / (L0 * amp)
        rep.rate = 1.0 - rep.zeta * _mu()
        return rep

    if kind is PolicyKind.STRONG_MONO_DESCENT:
        if epsilon is None or not (epsilon > 0):
            raise ValueError("iteration-count bound needs epsilon > 0")
        nu = solve_nu(NuKind.STRONG_MONO_DESCENT)
        mu = _mu()
        rep.zeta = nu / (L0 * amp)
        rep.term1 = (2.0 * L0 / (nu * mu)) * math.log(D * D / epsilon)
        if L1 == 0.0:
            rep.term2 = 0.0   # no step-growth phase without the norm term
        else:
            arg = 2.0 * L1 * D * D / (rep.zeta ** 2 * L0)
            rep.term2 = max(math.log(arg) / (rep.zeta * mu), 0.0) if arg > 0 else 0.0
        rep.iters_to_eps = rep.term1 + rep.term2
        return rep

    if kind is PolicyKind.MONO:
        nu = solve_nu(NuKind.MONO)
        rep.zeta = nu / (L0 * amp)
        rep.sublinear_const = 2.0 * L0 * L0 * amp * amp * D * D / (nu * nu)
        return rep

    if kind is PolicyKind.WEAK_MINTY:
        nu = solve_nu(NuKind.WEAK_MINTY)
        rho = _rho()
        rep.zeta = nu / (L0 * amp)
        rep.delta = rep.zeta - 4.0 * rho
        if rep.delta <= 0:
            rep.guarantee_void = True
            return rep
        rep.sublinear_const = 4.0 * L0 * amp * D * D / (nu * rep.delta)
        return rep

    if kind is PolicyKind.WEAK_MINTY_FRAC:
        rho = _rho()
        kc = k_constants(s)   # raises InvalidAlpha at alpha = 1
        a = s.alpha
        M = ((kc.K1 + 2.0 ** -1.5 * kc.K2 ** (1.0 - a))
             * pow_alpha(kc.K0 + kc.K2 * pow_alpha(D, a / (1.0 - a)), a)
             * pow_alpha(D, a))
        denom = kc.K0 + M
        rep.zeta = 1.0 / (2.0 * math.sqrt(2.0) * denom)
        rep.delta = rep.zeta - 4.0 * rho
        if rep.delta <= 0:
            rep.guarantee_void = True
            return rep
        rep.sublinear_const = 4.0 * denom * D * D / rep.delta
        return rep

    raise MissingConstant(f"no closed-form bound implemented for kind {kind.value}")


# ---------------------------------------------------------------------------
# CSV round-trip
# ---------------------------------------------------------------------------

_SCATTER_HEADER = ["norm_F", "norm_J", "k"]
_FIT_HEADER = ["alpha", "L0", "L1", "max_violation"]


def write_scatter_csv(samples: Sequence[ScatterSample], path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_SCATTER_HEADER)
        for sm in samples:
            w.writerow([repr(sm.norm_F), repr(sm.norm_J), sm.iterate_index])


def read_scatter_csv(path: str) -> List[ScatterSample]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != _SCATTER_HEADER:
        raise ValueError(f"{path}: not a scatter CSV")
    return [ScatterSample(norm_F=float(a), norm_J=float(b), iterate_index=int(c))
            for a, b, c in rows[1:]]


def write_fit_csv(fit: SmoothnessFit, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_FIT_HEADER)
        w.writerow([repr(fit.alpha_hat), repr(fit.L0_hat), repr(fit.L1_hat),
                    repr(fit.max_violation)])


def read_fit_csv(path: str) -> SmoothnessFit:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) != 2 or rows[0] != _FIT_HEADER:
        raise ValueError(f"{path}: not a fit CSV")
    a, L0, L1, mv = map(float, rows[1])
    return SmoothnessFit(alpha_hat=a, L0_hat=L0, L1_hat=L1, max_violation=mv)
