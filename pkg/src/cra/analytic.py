"""Closed-form throughput and stability model for two-stage random access.

Covers the three schemes:

* CRA-2: handshake variant whose data stage has one slot per detected
  preamble, so the session length varies with the detection outcome.
* CRA-1: grant-free variant with a fixed-length spread data stage.
* Multichannel ALOHA: orthogonal-preamble baseline (pool size = preamble
  length).

All functions are pure; rates are in users (or packets) per unit symbol
duration.
"""

import math
from dataclasses import dataclass, replace

from .specfun import lambert_w0, poisson_cdf, qfunc

__all__ = [
    "ProtocolParams",
    "SteadyState",
    "ErrorBoundInputs",
    "prob_singleton",
    "prob_unused",
    "mean_detected_split",
    "mean_active_cra2",
    "mean_detected_cra2",
    "steady_state_cra2",
    "throughput_cra1",
    "throughput_maloha",
    "backlog_drift",
    "instability_threshold",
    "detection_error_bounds",
    "support_error_prob",
]


@dataclass(frozen=True)
class ProtocolParams:
    """Scalar protocol constants shared by the model and the simulator.

    Lengths are in symbols (unit symbol duration normalized to 1):
    ``preamble_len`` is the Stage-1 length, ``payload_len`` the data-packet
    length, ``feedback_len`` the total feedback duration of a CRA-2 session.
    ``pool_size`` is the number of preambles and ``arrival_rate`` the mean
    number of newly active users per symbol.  ``p_md`` / ``p_fa`` are the
    per-preamble missed-detection and false-alarm probabilities.
    """

    preamble_len: int
    payload_len: int
    pool_size: int
    feedback_len: float
    arrival_rate: float
    p_md: float = 0.0
    p_fa: float = 0.0

    def __post_init__(self):
        if self.preamble_len < 1:
            raise ValueError("preamble_len must be >= 1")
        if self.payload_len < 1:
            raise ValueError("payload_len must be >= 1")
        if self.pool_size < 2:
            raise ValueError("pool_size must be >= 2")
        if self.feedback_len < 0:
            raise ValueError("feedback_len must be >= 0")
        if self.arrival_rate < 0:
            raise ValueError("arrival_rate must be >= 0")
        if not 0.0 <= self.p_md <= 1.0:
            raise ValueError("p_md must be in [0, 1]")
        if not 0.0 <= self.p_fa <= 1.0:
            raise ValueError("p_fa must be in [0, 1]")
        # keeps the Lambert W argument of the CRA-2 fixed point in [-1/e, 0]
        if self.p_md + self.p_fa > 1.0:
            raise ValueError("p_md + p_fa must not exceed 1")

    @property
    def overhead_len(self):
        """Stage-1 plus feedback duration of a CRA-2 session."""
        return self.preamble_len + self.feedback_len

    @property
    def txn_len(self):
        """Time to send one preamble plus one unspread packet (N + M)."""
        return self.preamble_len + self.payload_len

    @property
    def traffic_intensity(self):
        """Normalized load: expected arrivals per txn_len."""
        return self.arrival_rate * self.txn_len

    @property
    def fixed_session_len(self):
        """Session length of CRA-1 / multichannel ALOHA (constant)."""
        return self.preamble_len + self.feedback_len / 2.0 \
            + self.preamble_len * self.payload_len

    def with_traffic(self, traffic_intensity):
        """Copy with arrival_rate set from a normalized load value."""
        return replace(self, arrival_rate=traffic_intensity / self.txn_len)


@dataclass(frozen=True)
class SteadyState:
    """Solved CRA-2 operating point."""

    mean_active: float
    mean_detected: float
    mean_singleton: float
    throughput: float
    mean_session_len: float


@dataclass(frozen=True)
class ErrorBoundInputs:
    """Per-user effective SNRs (linear P|h|^2 / N0) for the ML error bounds.

    ``active_snrs`` covers the K active users; ``virtual_snrs`` the assumed
    receive SNRs of the pool_size - K untransmitted preambles.
    """

    active_snrs: tuple
    virtual_snrs: tuple
    pool_size: int

    def __post_init__(self):
        k = len(self.active_snrs)
        if not 1 <= k < self.pool_size:
            raise ValueError("need 1 <= len(active_snrs) < pool_size")
        if not self.virtual_snrs:
            raise ValueError("virtual_snrs must be nonempty")
        if any(s < 0 for s in self.active_snrs + self.virtual_snrs):
            raise ValueError("SNR values must be nonnegative")

    @classmethod
    def power_controlled(cls, snr, active_count, pool_size):
        """All users (real and virtual) at the same receive SNR."""
        return cls(
            active_snrs=(snr,) * active_count,
            virtual_snrs=(snr,) * (pool_size - active_count),
            pool_size=pool_size,
        )


def prob_singleton(n_active, pool_size):
    """Probability a given preamble is chosen by exactly one of K users."""
    if n_active == 0:
        return 0.0
    return n_active / pool_size * (1.0 - 1.0 / pool_size) ** (n_active - 1)


def prob_unused(n_active, pool_size):
    """Probability a given preamble is chosen by none of K users."""
    return (1.0 - 1.0 / pool_size) ** n_active


def mean_detected_split(n_active, params):
    """Expected detected-slot counts (singleton, collided, false) given K.

    Singleton and collided preambles survive detection with probability
    1 - p_md each; every unused preamble is falsely detected with
    probability p_fa.
    """
    L = params.pool_size
    a1 = prob_singleton(n_active, L)
    a2 = prob_unused(n_active, L)
    singleton = (1.0 - params.p_md) * L * a1
    collided = (1.0 - params.p_md) * L * (1.0 - a1 - a2)
    false = params.p_fa * L * a2
    return singleton, collided, false


def _fixed_point_coeffs(params):
    """Coefficients (c1, c2) of the CRA-2 mean-load fixed point x = c1 - c2*exp(-x)."""
    lam = params.arrival_rate
    c1 = lam * (params.overhead_len / params.pool_size
                + params.payload_len * (1.0 - params.p_md))
    c2 = lam * params.payload_len * (1.0 - params.p_md - params.p_fa)
    return c1, c2


def mean_active_cra2(params):
    """Steady-state mean number of active users per CRA-2 session.

    Solves x = c1 - c2*exp(-x) for x = mean_active / pool_size through the
    principal Lambert W branch.  Valid parameters guarantee c1 >= c2 >= 0,
    so the W argument -c2*exp(-c1) lies in [-1/e, 0].
    """
    c1, c2 = _fixed_point_coeffs(params)
    arg = -c2 * math.exp(-c1)
    assert arg >= -1.0 / math.e - 1e-12, "Lambert argument left [-1/e, 0]"
    return params.pool_size * (c1 + lambert_w0(arg))


def mean_detected_cra2(params):
    """Steady-state mean number of detected preambles (slots) per CRA-2 session."""
    c1, c2 = _fixed_point_coeffs(params)
    L = params.pool_size
    one_m_md = 1.0 - params.p_md
    via_w = L * (one_m_md
                 + lambert_w0(-c2 * math.exp(-c1))
                 / (params.arrival_rate * params.payload_len))
    x = mean_active_cra2(params) / L
    direct = L * (one_m_md - math.exp(-x) * (one_m_md - params.p_fa))
    assert math.isclose(via_w, direct, rel_tol=1e-9, abs_tol=1e-12), \
        "Lambert-form and direct-form detected-slot means disagree"
    return direct


def steady_state_cra2(params):
    """Full CRA-2 operating point: mean active/detected counts and throughput."""
    mean_active = mean_active_cra2(params)
    mean_detected = mean_detected_cra2(params)
    x = mean_active / params.pool_size
    mean_singleton = (1.0 - params.p_md) * mean_active * math.exp(-x)
    mean_len = params.overhead_len + params.payload_len * mean_detected
    throughput = params.arrival_rate * (1.0 - params.p_md) * math.exp(-x)
    return SteadyState(
        mean_active=mean_active,
        mean_detected=mean_detected,
        mean_singleton=mean_singleton,
        throughput=throughput,
        mean_session_len=mean_len,
    )


def mean_active_cra1(params):
    """Mean number of active users per fixed-length CRA-1 session."""
    return params.arrival_rate * params.fixed_session_len


def throughput_cra1(params):
    """CRA-1 throughput: multiuser detection fails outright when the
    active count reaches the spreading gain (preamble length)."""
    if params.preamble_len < 2:
        raise ValueError("throughput_cra1 needs preamble_len >= 2")
    lam = params.arrival_rate
    b1 = mean_active_cra1(params)
    L = params.pool_size
    cap_prob = poisson_cdf(params.preamble_len - 2, b1 * (1.0 - 1.0 / L))
    return lam * (1.0 - params.p_md) * math.exp(-b1 / L) * cap_prob


def throughput_maloha(params):
    """Multichannel ALOHA baseline: pool size equals preamble length and the
    receiver decodes at most preamble_len packets per session."""
    n = params.preamble_len
    lam = params.arrival_rate
    b1 = mean_active_cra1(params)
    cap_prob = poisson_cdf(n - 1, b1 * (1.0 - 1.0 / n))
    return lam * (1.0 - params.p_md) * math.exp(-b1 / n) * cap_prob


def backlog_drift(n_active, params):
    """Expected one-session change of the active count under fast retrial."""
    singleton, collided, false = mean_detected_split(n_active, params)
    lam = params.arrival_rate
    td = params.payload_len
    return (lam * (params.overhead_len + td * (collided + false))
            - (1.0 - lam * td) * singleton)


def instability_threshold(params, k_max=None):
    """Smallest K0 such that backlog_drift(K) > 0 for all K in [K0, k_max].

    Returns None if the drift is still nonpositive at k_max (no threshold
    found in range).  The drift limit for large K is
    arrival_rate * (overhead_len + payload_len * (1 - p_md) * pool_size) > 0,
    so a finite threshold always exists for arrival_rate > 0.
    """
    if k_max is None:
        k_max = 10 * params.pool_size
    k0 = None
    for k in range(0, k_max + 1):
        if backlog_drift(k, params) > 0:
            if k0 is None:
                k0 = k
        else:
            k0 = None
    return k0


def detection_error_bounds(inputs):
    """Union bounds on (p_md, p_fa) for pairwise-optimal ML preamble detection.

    Each pairwise error is a Gaussian tail Q(sqrt(snr/2)); the bounds are
    the means over active users (missed detection) and virtual users
    (false alarm).
    """
    md = sum(qfunc(math.sqrt(s / 2.0)) for s in inputs.active_snrs)
    fa = sum(qfunc(math.sqrt(s / 2.0)) for s in inputs.virtual_snrs)
    return md / len(inputs.active_snrs), fa / len(inputs.virtual_snrs)


def support_error_prob(pool_size, eps):
    """Probability the detected preamble set differs from the true one when
    every preamble independently errs with probability eps."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must be in [0, 1]")
    return 1.0 - math.exp(-pool_size * eps)
