"""
Scalar bound budget: approximation envelopes, the delta = m^{-2D}
schedule, the m-selection rule, the weak log-continuity certificate and the
exponent bootstrap.

Generic constants (C, A, C4) default to 1; only exponents and slopes are
meant to be compared across runs.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from logmodcert.errors import ParameterError

log = logging.getLogger(__name__)

POINTS_PER_DECADE = 40
DEFAULT_T_RANGE = (1e-12, 1e-2)
SLOPE_SLACK = 0.05
SWEEP_HEADER = ["t", "m", "term1", "term2", "term3", "envelope", "weighted"]


# ==========================================
# SCHEDULE
# ==========================================
@dataclass
class ApproxSchedule:
    n: int
    B: float
    D: float
    p: float = 1.0
    a0: float = 0.25
    C: float = 1.0
    A: float = 1.0
    C4: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"❌ Complex dimension must be >= 1, got {self.n}")
        if self.D < 1:
            raise ParameterError(f"❌ D must be >= 1, got {self.D}")
        if not 0 < self.a0 < 0.5:
            raise ParameterError(f"❌ a0 must lie in (0, 1/2), got {self.a0}")
        if self.p <= 0:
            raise ParameterError(f"❌ p must be positive, got {self.p}")

    @property
    def m0(self) -> int:
        return 2 * self.n + 3

    @property
    def gamma0(self) -> float:
        return self.p / (self.p + 2 * self.n + 1)

    @property
    def gamma(self) -> float:
        return self.p / (self.p + 2 * self.n + 2)

    def delta(self, m: float) -> float:
        return m ** (-2.0 * self.D)

    def admissible(self, m: float) -> bool:
        return m > self.m0 and self.delta(m) < self.a0 / m

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n, "B": self.B, "D": self.D, "p": self.p, "a0": self.a0,
            "C": self.C, "A": self.A, "C4": self.C4,
            "m0": self.m0, "gamma0": self.gamma0, "gamma": self.gamma,
        }


# ==========================================
# ENVELOPES
# ==========================================
def upper_envelope(m: float, delta: float, r: float, osc: float, sched: ApproxSchedule) -> float:
    """((m - m0)/m) osc + C r + C |log r| / m, with m0 and C from the schedule."""
    C = sched.C
    return (m - sched.m0) / m * osc + C * r + C * abs(math.log(r)) / m


def lower_envelope(m: float, delta: float, C: float = 1.0) -> float:
    """-(C + |log delta|) / (2m)."""
    return -(C + abs(math.log(delta))) / (2.0 * m)


def gradient_envelope(m: float, delta: float, r: float, osc: float, sched: ApproxSchedule) -> float:
    """C + C / (m delta^{1/2} r^{n+1}) exp((m - m0) osc + C (m - m0) r), with n, m0 and C from the schedule."""
    C, m0 = sched.C, sched.m0
    growth = math.exp((m - m0) * osc + C * (m - m0) * r)
    return C + C / (m * math.sqrt(delta) * r ** (sched.n + 1)) * growth


def lp_approx_bound(m: float, delta: float, C: float = 1.0) -> float:
    """C (|log delta| + log m) / m + C delta."""
    return C * (abs(math.log(delta)) + math.log(m)) / m + C * delta


def weak_logmod_terms(t: float, m: float, sched: ApproxSchedule, gamma: Optional[float] = None,
                      improved: bool = False) -> Tuple[float, float, float]:
    """
    The three terms m^{-gamma}, -D m^{-2D} log t and
    t m^D e^{m(B+1)} e^{-A D m^{1-2D} log t}. The improved route replaces
    m(B + 1) by C4 m^{1/(1+gamma)}.
    """
    if not 0 < t < 0.5:
        raise ParameterError(f"❌ Separation must lie in (0, 1/2), got {t}")
    return _terms_at_log(math.log(t), m, sched, sched.gamma if gamma is None else gamma, improved)


def _terms_at_log(logt: float, m: float, sched: ApproxSchedule, gamma: float,
                  improved: bool) -> Tuple[float, float, float]:
    # takes log t so separations below the float range stay usable
    D = sched.D
    term1 = m ** (-gamma)
    term2 = -D * m ** (-2.0 * D) * logt
    growth = sched.C4 * m ** (1.0 / (1.0 + gamma)) if improved else m * (sched.B + 1.0)
    log_term3 = logt + D * math.log(m) + growth - sched.A * D * m ** (1.0 - 2.0 * D) * logt
    term3 = math.exp(log_term3) if log_term3 < 700 else math.inf
    return term1, term2, term3


def weak_logmod_envelope(t: float, m: float, sched: ApproxSchedule, gamma: Optional[float] = None,
                         improved: bool = False) -> float:
    return sum(weak_logmod_terms(t, m, sched, gamma, improved))


def choose_m(t: float, gamma: float, B: float, m0: int) -> int:
    """max(m0 + 1, gamma |log t| / (3 (B + 1))), floored."""
    return max(m0 + 1, math.floor(gamma * abs(math.log(t)) / (3.0 * (B + 1.0))))


def choose_m_real(t: float, gamma: float, B: float, m0: int) -> float:
    return max(m0 + 1.0, gamma * abs(math.log(t)) / (3.0 * (B + 1.0)))


def choose_m_improved(t: float, gamma: float, C4: float, m0: int) -> int:
    """Improved route: max(m0 + 1, (gamma |log t| / (3 C4))^{1+gamma}), floored."""
    return max(m0 + 1, math.floor((gamma * abs(math.log(t)) / (3.0 * C4)) ** (1.0 + gamma)))


def log_t_grid(t_range: Sequence[float] = DEFAULT_T_RANGE, points_per_decade: int = POINTS_PER_DECADE) -> np.ndarray:
    lo, hi = math.log10(t_range[0]), math.log10(t_range[1])
    return np.logspace(lo, hi, int(round((hi - lo) * points_per_decade)) + 1)


def _selected_m(L: float, gamma: float, sched: ApproxSchedule, improved: bool) -> Tuple[int, float]:
    """Selection rule at |log t| = L: the floored m and its real-valued counterpart."""
    if improved:
        raw = (gamma * L / (3.0 * sched.C4)) ** (1.0 + gamma)
    else:
        raw = gamma * L / (3.0 * (sched.B + 1.0))
    return max(sched.m0 + 1, math.floor(raw)), max(sched.m0 + 1.0, raw)


def rule_onset(sched: ApproxSchedule, gamma: float, improved: bool = False) -> float:
    """Smallest |log t| at which the selection rule lifts m above its floor m0 + 1."""
    if improved:
        return 3.0 * sched.C4 * (sched.m0 + 1.0) ** (1.0 / (1.0 + gamma)) / gamma
    return 3.0 * (sched.B + 1.0) * (sched.m0 + 1.0) / gamma


def _fit_slope(L: np.ndarray, env: np.ndarray) -> float:
    return float(np.polyfit(np.log(L), np.log(env), 1)[0])


# ==========================================
# CERTIFICATE
# ==========================================
@dataclass
class WeakLogCertificate:
    c: float
    slope: float
    slope_sweep: float
    window: Tuple[float, float]
    gamma: float
    flooring_factor: float
    all_admissible: bool
    improved: bool
    passed: bool
    rows: List[List[float]] = field(default_factory=list, repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "c": self.c,
            "slope": self.slope,
            "slope_sweep": self.slope_sweep,
            "window_log_t": list(self.window),
            "gamma": self.gamma,
            "flooring_factor": self.flooring_factor,
            "all_admissible": self.all_admissible,
            "improved": self.improved,
            "passed": self.passed,
        }


def certify_weak_logmod(
    sched: ApproxSchedule,
    gamma: Optional[float] = None,
    t_range: Sequence[float] = DEFAULT_T_RANGE,
    improved: bool = False,
    points_per_decade: int = POINTS_PER_DECADE,
    window_points: int = 200,
) -> WeakLogCertificate:
    """
    c = max over a log t-grid of envelope(t, m(t)) |log t|^gamma, with m
    from the selection rule.

    The decay slope of log envelope against log |log t| is fitted on the
    decade of |log t| starting where the rule lifts m above m0 + 1; below
    that onset m is pinned and the envelope cannot decay. The slope over
    the requested t-range is kept as ``slope_sweep``. The flooring factor
    is the largest ratio between envelopes at floored and real m.
    """
    gamma = sched.gamma if gamma is None else gamma
    if not 0 < gamma < 1:
        raise ParameterError(f"❌ gamma must lie in (0, 1), got {gamma}")
    rows: List[List[float]] = []
    floor_ratio = 1.0
    admissible = True
    for t in log_t_grid(t_range, points_per_decade):
        t = float(t)
        m, m_real = _selected_m(abs(math.log(t)), gamma, sched, improved)
        terms = weak_logmod_terms(t, m, sched, gamma, improved)
        env = sum(terms)
        env_real = weak_logmod_envelope(t, m_real, sched, gamma, improved)
        floor_ratio = max(floor_ratio, env / env_real, env_real / env)
        admissible = admissible and sched.admissible(m)
        rows.append([t, m, *terms, env, env * abs(math.log(t)) ** gamma])

    data = np.array(rows)
    c = float(np.max(data[:, 6]))
    slope_sweep = _fit_slope(np.abs(np.log(data[:, 0])), data[:, 5])

    onset = rule_onset(sched, gamma, improved)
    L = np.logspace(math.log10(onset), math.log10(onset) + 1.0, window_points)
    env_window = np.empty_like(L)
    for i, Li in enumerate(L):
        m, m_real = _selected_m(float(Li), gamma, sched, improved)
        env_window[i] = sum(_terms_at_log(-float(Li), m, sched, gamma, improved))
        env_real = sum(_terms_at_log(-float(Li), m_real, sched, gamma, improved))
        floor_ratio = max(floor_ratio, env_window[i] / env_real, env_real / env_window[i])
        admissible = admissible and sched.admissible(m)
    slope = _fit_slope(L, env_window)

    passed = math.isfinite(c) and slope <= -gamma + SLOPE_SLACK
    log.debug(f"weak log certificate: c={c:.4g}, slope={slope:.3f} on |log t| in [{onset:.4g}, {10 * onset:.4g}], "
              f"sweep slope={slope_sweep:.3f}, flooring factor={floor_ratio:.3f}")
    return WeakLogCertificate(
        c=c,
        slope=slope,
        slope_sweep=slope_sweep,
        window=(float(onset), float(10.0 * onset)),
        gamma=gamma,
        flooring_factor=floor_ratio,
        all_admissible=admissible,
        improved=improved,
        passed=passed,
        rows=rows,
    )


# ==========================================
# EXPONENTS
# ==========================================
def bootstrap_exponents(gamma_init: float, target: float, max_iter: int = 10_000) -> List[float]:
    """Iterate gamma -> gamma (1 + gamma) until the exponent exceeds target."""
    if gamma_init <= 0:
        raise ParameterError(f"❌ Initial exponent must be positive, got {gamma_init}")
    seq = [gamma_init]
    while seq[-1] <= target:
        if len(seq) > max_iter:
            raise ParameterError(f"❌ Bootstrap did not exceed {target} within {max_iter} steps")
        g = seq[-1]
        seq.append(g * (1.0 + g))
    return seq


def stability_exponent(n: float, beta: float, r: float) -> float:
    """beta r / (n + beta (n + r))."""
    if n <= 0 or beta <= 0 or r <= 0:
        raise ParameterError(f"❌ n, beta and r must be positive, got {n}, {beta}, {r}")
    return beta * r / (n + beta * (n + r))
