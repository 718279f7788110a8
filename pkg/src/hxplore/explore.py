"""Step-by-step exploration of the random r-uniform hypergraph H^r(n, p).

At step t the minimum-index active vertex (else the minimum-index unseen
vertex) is explored, revealing every edge that contains it and no previously
explored vertex.  The walk X_t = A_t - C_t drops to a new record low exactly
when a component finishes.

Two modes produce identically distributed traces:

* implicit -- never materializes the hypergraph.  The number of edges found
  at step t is an exact Binomial(binom(n-t, r-1), p) draw, and each revealed
  edge's companion (r-1)-set is a uniform subset of the n-t unexplored
  "others" (resampled on within-step duplicates, so the revealed edges form
  a uniform subset of the tested r-sets).  Since vertices of equal status
  are exchangeable, the companions live in an abstract index space where
  indices below A'_t are active; everything observable in the trace is a
  function of counts alone.
* explicit -- materializes the full edge list up front and replays the same
  bookkeeping on real vertex identities; feasible while binom(n, r) <= 1e8.

A single run is strictly sequential; distinct runs with distinct seeds share
no state and may execute concurrently.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .randvar import sample_binomial, sample_binomial_array
from .theory import MAX_R, p_from_lambda
from .util import colex_unrank, comb0, comb_float

__all__ = [
    "ExplorationConfig",
    "StepRecord",
    "ComponentRecord",
    "ExplorationTrace",
    "Census",
    "RunResult",
    "ImplicitState",
    "sample_step",
    "run_exploration",
    "explore",
    "materialize",
    "census",
]

EXPLICIT_EDGE_LIMIT = 10**8
BRANCHING_LIMIT = 16.0  # cap on p * binom(n, r-1); keeps E_t means O(1)
_E_CHUNK = 4096
_U_CHUNK = 8192


@dataclass(frozen=True)
class ExplorationConfig:
    n: int
    r: int
    p: float
    seed: int
    mode: str = "implicit"
    stop_rule: str = "full"
    margin: int = 0
    census_t0: int | None = None  # cutoff anchoring Z / T_0 / T_1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not (2 <= self.r <= MAX_R):
            raise ValueError(f"r must be an integer in [2, {MAX_R}], got {self.r}")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")
        if self.mode not in ("implicit", "explicit"):
            raise ValueError(f"mode must be 'implicit' or 'explicit', got {self.mode!r}")
        if self.stop_rule not in ("full", "giant"):
            raise ValueError(f"stop_rule must be 'full' or 'giant', got {self.stop_rule!r}")
        if self.margin < 0:
            raise ValueError("margin must be nonnegative")
        if self.stop_rule == "giant" and self.census_t0 is None:
            raise ValueError("stop_rule 'giant' needs census_t0 to locate the giant window")
        if self.p * comb0(self.n, self.r - 1) > BRANCHING_LIMIT:
            raise ValueError("p binom(n, r-1) too large; the exploration assumes an O(1) branching factor")
        if self.mode == "explicit" and comb0(self.n, self.r) > EXPLICIT_EDGE_LIMIT:
            raise ValueError(f"explicit mode requires binom(n, r) <= {EXPLICIT_EDGE_LIMIT}")

    @classmethod
    def from_lambda(cls, n: int, r: int, lam: float, seed: int, **kw) -> "ExplorationConfig":
        return cls(n=n, r=r, p=p_from_lambda(n, r, lam), seed=seed, **kw)

    @classmethod
    def from_eps(cls, n: int, r: int, eps: float, seed: int, **kw) -> "ExplorationConfig":
        return cls.from_lambda(n, r, 1.0 + eps, seed, **kw)


@dataclass(frozen=True)
class StepRecord:
    t: int
    edge_count: int
    eta: int
    xi: int
    zeta: int
    nullity_inc: int
    A: int
    C: int
    X: int
    started_new_component: bool


@dataclass(frozen=True)
class ComponentRecord:
    index: int
    t_start: int  # close time of the previous component
    t_end: int  # record-low time of this component
    vertices: int
    edges: int
    nullity: int


@dataclass(frozen=True)
class Census:
    """Component summary of one run, anchored at the cutoff t0."""

    t0: int
    L1: int
    L2: int
    M1: int
    N1: int
    Z: int
    T0: int
    T1: int | None
    giant_nullity: int | None  # nullity gathered between T0 and T1
    component_count: int
    l1_tie: bool
    l2_is_lower_bound: bool


@dataclass
class RunResult:
    """Everything one exploration run produces; array fields depend on the
    requested record level ('none' < 'light' < 'full')."""

    config: ExplorationConfig
    n_steps: int
    complete: bool
    components_closed: int
    total_edges: int
    total_nullity: int
    L1: int
    L2: int
    M1: int
    N1: int
    l1_tie: bool
    Z: int
    T0: int
    T1: int | None
    c_t0p1: int | None  # C_{t0+1}
    giant_vertices: int | None
    giant_nullity: int | None
    A: np.ndarray | None = None
    xi: np.ndarray | None = None
    edge_counts: np.ndarray | None = None
    eta: np.ndarray | None = None
    zeta: np.ndarray | None = None
    nullity_inc: np.ndarray | None = None
    C: np.ndarray | None = None
    X: np.ndarray | None = None
    new_component: np.ndarray | None = None
    components: list = field(default_factory=list)


@dataclass
class ExplorationTrace:
    """Full per-step record of a run plus its component table."""

    config: ExplorationConfig
    edge_counts: np.ndarray
    eta: np.ndarray
    xi: np.ndarray
    zeta: np.ndarray
    nullity_inc: np.ndarray
    A: np.ndarray
    C: np.ndarray
    X: np.ndarray
    new_component: np.ndarray
    components: list
    complete: bool

    @property
    def n_steps(self) -> int:
        return int(self.edge_counts.shape[0])

    @property
    def total_edges(self) -> int:
        return int(self.edge_counts.sum())

    @property
    def total_nullity(self) -> int:
        return int(self.nullity_inc.sum())

    def step(self, t: int) -> StepRecord:
        """StepRecord for step t (1-based)."""
        i = t - 1
        return StepRecord(
            t=t,
            edge_count=int(self.edge_counts[i]),
            eta=int(self.eta[i]),
            xi=int(self.xi[i]),
            zeta=int(self.zeta[i]),
            nullity_inc=int(self.nullity_inc[i]),
            A=int(self.A[i]),
            C=int(self.C[i]),
            X=int(self.X[i]),
            started_new_component=bool(self.new_component[i]),
        )

    def steps(self):
        for t in range(1, self.n_steps + 1):
            yield self.step(t)


# ---------------------------------------------------------------------------
# implicit-mode sampling primitives
# ---------------------------------------------------------------------------


def _draw_distinct(rng, m: int, k: int) -> tuple:
    """Sorted tuple of k distinct uniform indices from range(m)."""
    if k == 1:
        return (int(rng.random() * m),)
    if k == 2:
        a = int(rng.random() * m)
        b = int(rng.random() * (m - 1))
        if b >= a:
            b += 1
        return (a, b) if a < b else (b, a)
    if m < 3 * k:
        pool = list(range(m))
        out = []
        for j in range(k):
            i = int(rng.random() * (m - j))
            out.append(pool.pop(i))
        return tuple(sorted(out))
    out = set()
    while len(out) < k:
        out.add(int(rng.random() * m))
    return tuple(sorted(out))


def _multi_edge_counts(rng, m: int, ap: int, rr: int, k: int):
    """(eta, xi, zeta) for a step revealing k >= 2 edges.

    Companion sets are resampled until the k sets are pairwise distinct, so
    conditional on the count they form a uniform k-subset of the tested
    r-sets.  Indices below `ap` are the active others.
    """
    sets = []
    seen = set()
    for _ in range(k):
        while True:
            s = _draw_distinct(rng, m, rr)
            if s not in seen:
                break
        seen.add(s)
        sets.append(frozenset(s))
    union = frozenset().union(*sets)
    xi = sum(1 for v in union if v < ap)
    eta = len(union) - xi
    zeta = 0
    for i in range(k - 1):
        for j in range(i + 1, k):
            zeta += len(sets[i] & sets[j])
    return eta, xi, zeta


def sample_step(rng, n: int, r: int, p: float, t: int, active_excl: int):
    """Sample one implicit exploration step outcome.

    Given t and the number `active_excl` of active vertices other than v_t,
    returns (edge_count, eta, xi, zeta) with the exact conditional law of
    the exploration of H^r(n, p).
    """
    m = n - t
    rr = r - 1
    k = sample_binomial(rng, comb0(m, rr), p)
    if k == 0:
        return 0, 0, 0, 0
    if k == 1:
        rem_act, rem_tot = active_excl, m
        xi = 0
        for _ in range(rr):
            if rng.random() * rem_tot < rem_act:
                xi += 1
                rem_act -= 1
            rem_tot -= 1
        return 1, rr - xi, xi, 0
    eta, xi, zeta = _multi_edge_counts(rng, m, active_excl, rr, k)
    return k, eta, xi, zeta


class ImplicitState:
    """Mutable count state of an implicit exploration, advanced one step at
    a time.  The fast path lives in run_exploration; this class exists for
    stepwise inspection and single-step replay tests."""

    def __init__(self, n: int, r: int, p: float, rng: np.random.Generator):
        self.n, self.r, self.p = n, r, p
        self.rng = rng
        self.t = 0
        self.A = 0
        self.C = 0
        self.X = 0
        self.nullity = 0

    def step(self) -> StepRecord:
        if self.t >= self.n:
            raise ValueError("exploration already complete")
        started = self.A == 0
        ap = 0 if started else self.A - 1
        if started:
            self.C += 1
        self.t += 1
        k, eta, xi, zeta = sample_step(self.rng, self.n, self.r, self.p, self.t, ap)
        nullinc = (self.r - 1) * k - eta
        self.A = ap + eta
        self.X += eta - 1
        self.nullity += nullinc
        return StepRecord(
            t=self.t, edge_count=k, eta=eta, xi=xi, zeta=zeta, nullity_inc=nullinc,
            A=self.A, C=self.C, X=self.X, started_new_component=started,
        )


# ---------------------------------------------------------------------------
# run engines
# ---------------------------------------------------------------------------


def run_exploration(config: ExplorationConfig, record: str = "none") -> RunResult:
    """Run one exploration to completion (or to the stop rule).

    record: 'none' keeps only the census summary, 'light' additionally
    stores the A_t and xi_t paths, 'full' stores every StepRecord column
    and the component table.
    """
    if record not in ("none", "light", "full"):
        raise ValueError(f"record must be 'none', 'light' or 'full', got {record!r}")
    if config.mode == "explicit":
        return _run_explicit(config, record)
    return _run_implicit(config, record)


def _run_implicit(config: ExplorationConfig, record: str) -> RunResult:
    n, r, p = config.n, config.r, config.p
    rr = r - 1
    rng = np.random.default_rng(config.seed)
    t0c = -1 if config.census_t0 is None else int(config.census_t0)
    stop_giant = config.stop_rule == "giant"
    margin = config.margin

    light = record != "none"
    full = record == "full"
    rec_A = [] if light else None
    rec_xi = [] if light else None
    rec_E = [] if full else None
    rec_eta = [] if full else None
    rec_zeta = [] if full else None
    rec_new = [] if full else None
    components = []

    # presampled randomness
    e_buf: list = []
    e_idx = 0
    u_buf = rng.random(_U_CHUNK).tolist()
    u_idx = 0

    A = 0
    X = 0
    C = 0
    total_edges = 0
    total_null = 0
    cur_v = cur_e = cur_null = 0
    cur_start = 0
    best_v = best_e = best_null = 0
    second_v = 0
    l1_tie = False
    closes = 0
    Z = 0
    T0 = 0
    T1 = None
    c_t0p1 = None
    giant_v = None
    giant_null = None

    t = 0
    while t < n:
        if e_idx == len(e_buf):
            lo = t + 1
            hi = min(n, t + _E_CHUNK)
            counts = comb_float(np.arange(n - lo, n - hi - 1, -1, dtype=np.float64), rr)
            e_buf = sample_binomial_array(rng, counts, p).tolist()
            e_idx = 0
        t += 1
        k = e_buf[e_idx]
        e_idx += 1
        if A == 0:
            C += 1
            ap = 0
            started = True
            cur_start = t - 1
        else:
            ap = A - 1
            started = False
        if t == t0c + 1:
            c_t0p1 = C
        if k == 0:
            eta = 0
            xi = 0
            zeta = 0
        elif k == 1:
            m = n - t
            if u_idx + rr > _U_CHUNK:
                u_buf = rng.random(_U_CHUNK).tolist()
                u_idx = 0
            xi = 0
            rem_act = ap
            rem_tot = m
            for _ in range(rr):
                if u_buf[u_idx] * rem_tot < rem_act:
                    xi += 1
                    rem_act -= 1
                u_idx += 1
                rem_tot -= 1
            eta = rr - xi
            zeta = 0
        else:
            eta, xi, zeta = _multi_edge_counts(rng, n - t, ap, rr, k)
        nullinc = rr * k - eta
        A = ap + eta
        X += eta - 1
        total_edges += k
        total_null += nullinc
        cur_v += 1
        cur_e += k
        cur_null += nullinc
        if light:
            rec_A.append(A)
            rec_xi.append(xi)
            if full:
                rec_E.append(k)
                rec_eta.append(eta)
                rec_zeta.append(zeta)
                rec_new.append(started)
        if A == 0:
            closes += 1
            if cur_v > best_v:
                second_v = best_v
                best_v, best_e, best_null = cur_v, cur_e, cur_null
                l1_tie = False
            elif cur_v == best_v:
                second_v = cur_v
                l1_tie = True
            elif cur_v > second_v:
                second_v = cur_v
            if full:
                components.append(
                    ComponentRecord(closes, cur_start, t, cur_v, cur_e, cur_null)
                )
            if t0c >= 0:
                if t <= t0c:
                    Z = closes
                    T0 = t
                elif T1 is None:
                    T1 = t
                    giant_v = cur_v
                    giant_null = cur_null
            cur_v = cur_e = cur_null = 0
        if stop_giant and T1 is not None and t - T1 >= margin:
            break

    complete = t >= n
    res = RunResult(
        config=config,
        n_steps=t,
        complete=complete,
        components_closed=closes,
        total_edges=total_edges,
        total_nullity=total_null,
        L1=best_v,
        L2=second_v,
        M1=best_e,
        N1=best_null,
        l1_tie=l1_tie,
        Z=Z,
        T0=T0,
        T1=T1,
        c_t0p1=c_t0p1,
        giant_vertices=giant_v,
        giant_nullity=giant_null,
    )
    if light:
        res.A = np.asarray(rec_A, dtype=np.int64)
        res.xi = np.asarray(rec_xi, dtype=np.int64)
    if full:
        res.edge_counts = np.asarray(rec_E, dtype=np.int64)
        res.eta = np.asarray(rec_eta, dtype=np.int64)
        res.zeta = np.asarray(rec_zeta, dtype=np.int64)
        res.nullity_inc = rr * res.edge_counts - res.eta
        res.new_component = np.asarray(rec_new, dtype=bool)
        res.C = np.cumsum(res.new_component).astype(np.int64)
        res.X = np.cumsum(res.eta - 1).astype(np.int64)
        res.components = components
    return res


def materialize(n: int, r: int, p: float, rng: np.random.Generator) -> list:
    """Materialize H^r(n, p): the edge count is an exact Binomial draw over
    all binom(n, r) possible edges, and the edges are a uniform subset of
    that size, returned as sorted r-tuples ordered by colex rank."""
    total = comb0(n, r)
    if total > EXPLICIT_EDGE_LIMIT:
        raise ValueError(f"binom(n, r) = {total} exceeds the explicit-mode limit {EXPLICIT_EDGE_LIMIT}")
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    m = sample_binomial(rng, total, p)
    chosen: set = set()
    for j in range(total - m, total):  # Floyd's uniform subset sampling
        pick = int(rng.integers(0, j + 1))
        chosen.add(pick if pick not in chosen else j)
    return [colex_unrank(rank, r) for rank in sorted(chosen)]


def _run_explicit(config: ExplorationConfig, record: str) -> RunResult:
    """Explicit engine: real vertex identities, a status bitmap, and a lazy
    min-heap over active vertices.  Always runs with full per-step records
    (n is small by the mode's edge-count guard) and derives the census
    post-hoc so both engines share one census code path."""
    n, r, p = config.n, config.r, config.p
    rng = np.random.default_rng(config.seed)
    edges = materialize(n, r, p, rng)
    incidence = [[] for _ in range(n)]
    for idx, e in enumerate(edges):
        for v in e:
            incidence[v].append(idx)
    alive = bytearray(b"\x01") * len(edges)
    status = bytearray(n)  # 0 unseen, 1 active, 2 explored
    heap: list = []
    cursor = 0

    rec = {k: [] for k in ("E", "eta", "xi", "zeta", "A", "new")}
    A = 0
    t = 0
    stop_giant = config.stop_rule == "giant"
    t0c = -1 if config.census_t0 is None else int(config.census_t0)
    T1 = None
    closes = 0
    X = 0
    while t < n:
        t += 1
        if A > 0:
            while status[heap[0]] != 1:
                heapq.heappop(heap)
            v = heapq.heappop(heap)
            ap = A - 1
            started = False
        else:
            while status[cursor] != 0:
                cursor += 1
            v = cursor
            ap = 0
            started = True
        revealed = []
        for idx in incidence[v]:
            if alive[idx]:
                alive[idx] = 0
                revealed.append(edges[idx])
        newly = set()
        hit_active = set()
        for e in revealed:
            for u in e:
                if u == v:
                    continue
                s = status[u]
                if s == 0:
                    newly.add(u)
                elif s == 1:
                    hit_active.add(u)
        zeta = 0
        for i in range(len(revealed) - 1):
            si = set(revealed[i])
            si.discard(v)
            for j in range(i + 1, len(revealed)):
                zeta += len(si.intersection(revealed[j]))
        status[v] = 2
        for u in newly:
            status[u] = 1
            heapq.heappush(heap, u)
        eta = len(newly)
        xi = len(hit_active)
        A = ap + eta
        X += eta - 1
        rec["E"].append(len(revealed))
        rec["eta"].append(eta)
        rec["xi"].append(xi)
        rec["zeta"].append(zeta)
        rec["A"].append(A)
        rec["new"].append(started)
        if A == 0:
            closes += 1
            if t0c >= 0 and t > t0c and T1 is None:
                T1 = t
        if stop_giant and T1 is not None and t - T1 >= config.margin:
            break

    E = np.asarray(rec["E"], dtype=np.int64)
    eta_a = np.asarray(rec["eta"], dtype=np.int64)
    new_a = np.asarray(rec["new"], dtype=bool)
    res = RunResult(
        config=config,
        n_steps=t,
        complete=t >= n,
        components_closed=closes,
        total_edges=int(E.sum()),
        total_nullity=int(((r - 1) * E - eta_a).sum()),
        L1=0, L2=0, M1=0, N1=0, l1_tie=False, Z=0, T0=0, T1=None,
        c_t0p1=None, giant_vertices=None, giant_nullity=None,
        A=np.asarray(rec["A"], dtype=np.int64),
        xi=np.asarray(rec["xi"], dtype=np.int64),
        edge_counts=E,
        eta=eta_a,
        zeta=np.asarray(rec["zeta"], dtype=np.int64),
        nullity_inc=(r - 1) * E - eta_a,
        C=np.cumsum(new_a).astype(np.int64),
        X=np.cumsum(eta_a - 1).astype(np.int64),
        new_component=new_a,
    )
    res.components = _components_from_arrays(res.A, res.edge_counts, res.nullity_inc)
    _fill_census_from_components(res, t0c)
    return res


def _components_from_arrays(A, edge_counts, nullity_inc) -> list:
    closes = np.nonzero(A == 0)[0] + 1  # 1-based close times
    out = []
    prev = 0
    ecum = np.concatenate([[0], np.cumsum(edge_counts)])
    ncum = np.concatenate([[0], np.cumsum(nullity_inc)])
    for i, tend in enumerate(closes, start=1):
        tend = int(tend)
        out.append(
            ComponentRecord(
                index=i,
                t_start=prev,
                t_end=tend,
                vertices=tend - prev,
                edges=int(ecum[tend] - ecum[prev]),
                nullity=int(ncum[tend] - ncum[prev]),
            )
        )
        prev = tend
    return out


def _fill_census_from_components(res: RunResult, t0c: int) -> None:
    best_v = best_e = best_null = 0
    second = 0
    tie = False
    Z = 0
    T0 = 0
    T1 = None
    giant_v = giant_null = None
    for comp in res.components:
        v = comp.vertices
        if v > best_v:
            second = best_v
            best_v, best_e, best_null = v, comp.edges, comp.nullity
            tie = False
        elif v == best_v:
            second = v
            tie = True
        elif v > second:
            second = v
        if t0c >= 0:
            if comp.t_end <= t0c:
                Z = comp.index
                T0 = comp.t_end
            elif T1 is None:
                T1 = comp.t_end
                giant_v = comp.vertices
                giant_null = comp.nullity
    res.L1, res.L2, res.M1, res.N1, res.l1_tie = best_v, second, best_e, best_null, tie
    res.Z, res.T0, res.T1 = Z, T0, T1
    res.giant_vertices, res.giant_nullity = giant_v, giant_null
    if t0c >= 0 and res.n_steps >= t0c + 1:
        res.c_t0p1 = int(res.C[t0c]) if res.C is not None else None


def explore(config: ExplorationConfig) -> ExplorationTrace:
    """Run to completion (or the stop rule) and return the full trace."""
    res = run_exploration(config, record="full")
    return ExplorationTrace(
        config=config,
        edge_counts=res.edge_counts,
        eta=res.eta,
        xi=res.xi,
        zeta=res.zeta,
        nullity_inc=res.nullity_inc,
        A=res.A,
        C=res.C,
        X=res.X,
        new_component=res.new_component,
        components=res.components,
        complete=res.complete,
    )


def census(trace: ExplorationTrace, t0: int) -> Census:
    """Component census of a trace anchored at cutoff t0: largest and
    second-largest component orders, the largest component's edge count and
    nullity (ties broken toward the earliest-explored component), and the
    window quantities Z, T_0, T_1 with the nullity collected between T_0
    and T_1."""
    if t0 < 0:
        raise ValueError("t0 must be nonnegative")
    res = RunResult(
        config=trace.config, n_steps=trace.n_steps, complete=trace.complete,
        components_closed=len(trace.components), total_edges=trace.total_edges,
        total_nullity=trace.total_nullity, L1=0, L2=0, M1=0, N1=0, l1_tie=False,
        Z=0, T0=0, T1=None, c_t0p1=None, giant_vertices=None, giant_nullity=None,
        C=trace.C,
    )
    res.components = trace.components
    _fill_census_from_components(res, t0)
    return Census(
        t0=t0,
        L1=res.L1,
        L2=res.L2,
        M1=res.M1,
        N1=res.N1,
        Z=res.Z,
        T0=res.T0,
        T1=res.T1,
        giant_nullity=res.giant_nullity,
        component_count=len(trace.components),
        l1_tie=res.l1_tie,
        l2_is_lower_bound=not trace.complete,
    )
