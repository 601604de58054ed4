"""Session-level Monte Carlo engine for CRA-1, CRA-2 and multichannel ALOHA.

Each session draws the number of newly active users, lets every active user
pick a preamble uniformly at random, applies independent per-preamble
missed-detection / false-alarm coin flips, and books successes from detected
singleton preambles.  Two operating modes: ``drop`` (unsuccessful users
leave) and ``fast_retrial`` (they re-enter the next session with a fresh
preamble draw).

Randomness comes from numpy's default PCG64 bit generator seeded through
``numpy.random.SeedSequence``; replicas parallelize by spawning child seeds,
and a fixed (seed, config) pair reproduces the trace stream bit-exactly.
"""

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .analytic import ProtocolParams

__all__ = [
    "Scheme",
    "Mode",
    "SimConfig",
    "SessionTrace",
    "ThroughputEstimate",
    "stage1_outcome",
    "run_session",
    "SessionChain",
    "estimate_throughput",
    "simulate_stability",
]


class Scheme(enum.Enum):
    CRA1 = "cra1"
    CRA2 = "cra2"
    MC_ALOHA = "maloha"


class Mode(enum.Enum):
    DROP = "drop"
    FAST_RETRIAL = "fast_retrial"


@dataclass(frozen=True)
class SimConfig:
    params: ProtocolParams
    scheme: Scheme = Scheme.CRA2
    mode: Mode = Mode.DROP
    n_sessions: int = 100_000
    warmup_sessions: int = 1_000
    seed: int = 0

    def __post_init__(self):
        if self.n_sessions < 1:
            raise ValueError("n_sessions must be >= 1")
        if not 0 <= self.warmup_sessions < self.n_sessions:
            raise ValueError("need 0 <= warmup_sessions < n_sessions")
        if self.scheme is Scheme.MC_ALOHA \
                and self.params.pool_size != self.params.preamble_len:
            # orthogonal baseline: one channel per preamble
            object.__setattr__(
                self, "params",
                replace(self.params, pool_size=self.params.preamble_len))


@dataclass
class SessionTrace:
    """Realized random outcome of one session."""

    index: int
    active: int            # K
    occupied: int          # preambles chosen by >= 1 user
    singleton: int         # preambles chosen by exactly 1 user
    collided: int          # preambles chosen by >= 2 users
    detected_singleton: int
    detected_collided: int
    false_slots: int
    detected_total: int
    session_len: float
    successes: int
    backlog: int = 0       # fast-retrial mode only


@dataclass(frozen=True)
class ThroughputEstimate:
    """Ratio estimator sum(successes)/sum(session length) with batch-means
    standard error."""

    mean_throughput: float
    std_error: float
    sessions_run: int
    total_time: float
    mean_active: float
    mean_detected: float
    mean_session_len: float


def stage1_outcome(n_active, params, rng, picks=None):
    """One preamble round: occupancy counts and detection outcome given K.

    Returns (singleton, collided, detected_singleton, detected_collided,
    false_slots).  ``picks`` overrides the uniform preamble choices (used by
    tests to force collision patterns).
    """
    L = params.pool_size
    if picks is None:
        if n_active > 0:
            picks = rng.integers(0, L, size=n_active)
        else:
            picks = np.empty(0, dtype=np.int64)
    else:
        picks = np.asarray(picks)
        if picks.size != n_active:
            raise ValueError("picks must have one entry per active user")
    if picks.size:
        _, counts = np.unique(picks, return_counts=True)
        occupied = counts.size
        singleton = int(np.count_nonzero(counts == 1))
    else:
        occupied = 0
        singleton = 0
    collided = occupied - singleton

    p_det = 1.0 - params.p_md
    d1 = rng.binomial(singleton, p_det) if singleton else 0
    d2 = rng.binomial(collided, p_det) if collided else 0
    free = L - occupied
    d3 = rng.binomial(free, params.p_fa) if (free and params.p_fa > 0.0) else 0
    return singleton, collided, int(d1), int(d2), int(d3)


def run_session(cfg, rng, index, prev_len, backlog=0, forced_active=None,
                picks=None):
    """Run one session and return its trace.

    ``prev_len`` is the previous session length (sets the Poisson arrival
    mean); ``backlog`` holds fast-retrial re-entries.  ``forced_active`` and
    ``picks`` pin the randomness down for unit tests.
    """
    p = cfg.params
    if forced_active is not None:
        n_active = forced_active
    else:
        n_active = int(rng.poisson(p.arrival_rate * prev_len)) + backlog

    singleton, collided, d1, d2, d3 = stage1_outcome(n_active, p, rng, picks)
    detected = d1 + d2 + d3

    if cfg.scheme is Scheme.CRA2:
        session_len = p.overhead_len + p.payload_len * detected
        successes = d1
    elif cfg.scheme is Scheme.CRA1:
        session_len = p.fixed_session_len
        # multiuser detection of the spread packets fails outright once the
        # active count reaches the spreading gain
        successes = d1 if n_active <= p.preamble_len - 1 else 0
    else:  # MC_ALOHA
        session_len = p.fixed_session_len
        # orthogonal channels decode at most preamble_len packets
        successes = d1 if n_active <= p.preamble_len else 0

    new_backlog = n_active - d1 if cfg.mode is Mode.FAST_RETRIAL else 0
    return SessionTrace(
        index=index,
        active=n_active,
        occupied=singleton + collided,
        singleton=singleton,
        collided=collided,
        detected_singleton=d1,
        detected_collided=d2,
        false_slots=d3,
        detected_total=detected,
        session_len=session_len,
        successes=successes,
        backlog=new_backlog,
    )


class SessionChain:
    """Sequential session iterator; session t+1's arrivals depend on the
    length of session t (CRA-2) and on the backlog (fast retrial)."""

    def __init__(self, cfg, initial_backlog=0):
        self.cfg = cfg
        self.rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
        p = cfg.params
        if cfg.scheme is Scheme.CRA2:
            # neutral bootstrap; warmup makes the choice immaterial
            expected_slots = round(
                p.pool_size
                * (1.0 - math.exp(-p.arrival_rate * p.txn_len / p.pool_size)))
            self.prev_len = p.overhead_len + p.payload_len * expected_slots
        else:
            self.prev_len = p.fixed_session_len
        self.backlog = initial_backlog
        self.index = 0

    def next_session(self):
        trace = run_session(self.cfg, self.rng, self.index, self.prev_len,
                            self.backlog)
        self.prev_len = trace.session_len
        self.backlog = trace.backlog
        self.index += 1
        return trace


def estimate_throughput(cfg, min_batches=30):
    """Warm up, then measure: ratio estimator over the measured sessions
    with a batch-means standard error (>= min_batches batches)."""
    chain = SessionChain(cfg)
    for _ in range(cfg.warmup_sessions):
        chain.next_session()

    n = cfg.n_sessions
    n_batches = min(min_batches, n)
    batch_edges = [round(i * n / n_batches) for i in range(n_batches + 1)]

    tot_succ = 0
    tot_time = 0.0
    tot_active = 0
    tot_detected = 0
    batch_rates = []
    b_succ = 0
    b_time = 0.0
    edge = 1
    for i in range(n):
        tr = chain.next_session()
        tot_succ += tr.successes
        tot_time += tr.session_len
        tot_active += tr.active
        tot_detected += tr.detected_total
        b_succ += tr.successes
        b_time += tr.session_len
        if i + 1 == batch_edges[edge]:
            batch_rates.append(b_succ / b_time)
            b_succ = 0
            b_time = 0.0
            edge += 1

    rates = np.asarray(batch_rates)
    se = float(rates.std(ddof=1) / math.sqrt(rates.size)) if rates.size > 1 else 0.0
    return ThroughputEstimate(
        mean_throughput=tot_succ / tot_time,
        std_error=se,
        sessions_run=n,
        total_time=tot_time,
        mean_active=tot_active / n,
        mean_detected=tot_detected / n,
        mean_session_len=tot_time / n,
    )


def simulate_stability(cfg, horizon, initial_backlog=0, stop_backlog=None):
    """Backlog trajectory Z(t) = active(t) - detected_singleton(t) under
    fast retrial; no packets are dropped.

    Stops early once the backlog exceeds ``stop_backlog`` (trajectory is
    truncated there), which keeps diverging runs cheap.
    """
    if cfg.mode is not Mode.FAST_RETRIAL:
        raise ValueError("simulate_stability requires fast_retrial mode")
    chain = SessionChain(cfg, initial_backlog=initial_backlog)
    traj = []
    for _ in range(horizon):
        tr = chain.next_session()
        traj.append(tr.backlog)
        if stop_backlog is not None and tr.backlog > stop_backlog:
            break
    return np.asarray(traj, dtype=np.int64)
