"""Exact ground truth at tiny scale by full enumeration.

enumerate_all iterates every edge subset of H^r(n, p) (a binary counter over
the colex-ranked r-sets), computes components and nullities, and returns the
exact joint law of (L1, N1, L2).  Subsets are binned into exact integer
strata by edge count, so the Bernoulli weights enter once per stratum in log
space and extreme p costs no accuracy.

enumerate_step iterates every subset of the r-sets tested in a single
exploration step and returns the exact joint law of (E_t, eta_t, xi_t,
zeta_t) -- the validation target for the implicit step sampler and for the
conditional-moment formulas.

Both enumerations are embarrassingly parallel over subset ranges; chunk
results are exact integer counts, so any summation order reproduces the
same distribution bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from multiprocessing import get_context

import numpy as np

from .util import colex_rank

__all__ = ["ExactDistribution", "StepLaw", "enumerate_all", "enumerate_step"]

MAX_EDGES_SMALL_N = 28  # n <= 8 uses the packed bit-matrix kernel
MAX_EDGES_GENERAL = 20
MAX_STEP_FAMILY = 22
_CHUNK = 1 << 21

_BYTE0 = np.uint64(0x0101010101010101)
_TZ8 = np.array([(i & -i).bit_length() - 1 if i else 8 for i in range(256)], dtype=np.uint8)


def _edge_weights(n_edges: int, p: float) -> np.ndarray:
    """Exact Bernoulli weight of one subset with e edges, per e."""
    e = np.arange(n_edges + 1, dtype=np.float64)
    if p == 0.0:
        w = np.zeros(n_edges + 1)
        w[0] = 1.0
    elif p == 1.0:
        w = np.zeros(n_edges + 1)
        w[-1] = 1.0
    else:
        w = np.exp(e * math.log(p) + (n_edges - e) * math.log1p(-p))
    return w


@dataclass
class ExactDistribution:
    """Exact joint law of (L1, N1, L2) over H^r(n, p)."""

    n: int
    r: int
    p: float
    support: list
    probability: np.ndarray
    strata: dict  # (edge_count, L1, N1, L2) -> exact subset count

    def as_dict(self) -> dict:
        return {key: float(q) for key, q in zip(self.support, self.probability)}

    def l1_marginal(self) -> dict:
        out: dict = {}
        for (l1, _, _), q in zip(self.support, self.probability):
            out[l1] = out.get(l1, 0.0) + float(q)
        return out

    def mean_l1(self) -> float:
        return float(sum(l1 * q for (l1, _, _), q in zip(self.support, self.probability)))

    def edge_count_marginal(self) -> np.ndarray:
        ne = max(k[0] for k in self.strata)
        w = _edge_weights(ne, self.p)
        out = np.zeros(ne + 1)
        for (e, *_), cnt in self.strata.items():
            out[e] += cnt * w[e]
        return out


def _colex_rsets(n: int, r: int) -> list:
    return sorted(combinations(range(n), r), key=colex_rank)


# ---------------------------------------------------------------------------
# packed kernel for n <= 8
# ---------------------------------------------------------------------------


def _small_tables(n: int, edges: list):
    ne = len(edges)
    masks = [sum(1 << v for v in e) for e in edges]
    ident = np.uint64(sum(1 << (8 * v + v) for v in range(n)))
    adds = []
    for em in masks:
        add = 0
        for v in range(n):
            if em >> v & 1:
                add |= em << (8 * v)
        adds.append(add)
    groups = []
    for off in range(0, ne, 8):
        bits = min(8, ne - off)
        table = np.zeros(1 << bits, dtype=np.uint64)
        for word in range(1 << bits):
            acc = 0
            for b in range(bits):
                if word >> b & 1:
                    acc |= adds[off + b]
            table[word] = acc
        groups.append((off, bits, table))
    inside = np.zeros(1 << n, dtype=np.uint32)
    for cmask in range(1 << n):
        acc = 0
        for b, em in enumerate(masks):
            if em & ~cmask == 0:
                acc |= 1 << b
        inside[cmask] = acc
    return ident, groups, inside


def _chunk_small(n: int, r: int, ne: int, tables, lo: int, hi: int, key_dims):
    ident, groups, inside = tables
    idx = np.arange(lo, hi, dtype=np.uint64)
    m = np.full(idx.shape, ident, dtype=np.uint64)
    for off, bits, table in groups:
        m |= table[((idx >> np.uint64(off)) & np.uint64((1 << bits) - 1)).astype(np.int64)]
    ecnt = np.bitwise_count(idx).astype(np.int64)
    # transitive closure of (adjacency | identity) by 3 squarings (paths <= 8)
    for _ in range(3):
        c = np.zeros_like(m)
        for j in range(n):
            colbit = (m >> np.uint64(j)) & _BYTE0
            rowj = (m >> np.uint64(8 * j)) & np.uint64(0xFF)
            c |= colbit * rowj
        m = c
    best = np.zeros(idx.shape, dtype=np.uint8)
    second = np.zeros(idx.shape, dtype=np.uint8)
    bestmask = np.zeros(idx.shape, dtype=np.uint8)
    for v in range(n):
        row = ((m >> np.uint64(8 * v)) & np.uint64(0xFF)).astype(np.uint8)
        sz = np.bitwise_count(row)
        better = sz > best
        second = np.where(better, best, second)
        bestmask = np.where(better, row, bestmask)
        best = np.where(better, sz, best)
        runner_up = ~better & (row != bestmask) & (sz > second)
        second = np.where(runner_up, sz, second)
    ein = np.bitwise_count(idx.astype(np.uint32) & inside[bestmask.astype(np.int64)]).astype(np.int64)
    l1 = best.astype(np.int64)
    n1 = 1 + (r - 1) * ein - l1
    l2 = second.astype(np.int64)
    de, dl, dn = key_dims
    key = ((ecnt * dl + l1) * dn + n1) * dl + l2
    return np.bincount(key, minlength=de * dl * dn * dl)


def _enum_all_worker(args):
    n, r, edges, lo, hi, key_dims = args
    tables = _small_tables(n, edges)
    return _chunk_small(n, r, len(edges), tables, lo, hi, key_dims)


# ---------------------------------------------------------------------------
# general (n > 8) kernel: plain bitmask peeling per subset
# ---------------------------------------------------------------------------


def _chunk_general(n: int, r: int, masks: list, lo: int, hi: int) -> dict:
    strata: dict = {}
    full = (1 << n) - 1
    for word in range(lo, hi):
        vertex_adj = [0] * n
        bits = word
        ecnt = 0
        while bits:
            b = (bits & -bits).bit_length() - 1
            bits &= bits - 1
            ecnt += 1
            em = masks[b]
            mm = em
            while mm:
                v = (mm & -mm).bit_length() - 1
                mm &= mm - 1
                vertex_adj[v] |= em
        remaining = full
        best = second = 0
        bestmask = 0
        while remaining:
            comp = remaining & -remaining
            while True:
                grow = comp
                mm = comp
                while mm:
                    v = (mm & -mm).bit_length() - 1
                    mm &= mm - 1
                    grow |= vertex_adj[v]
                if grow == comp:
                    break
                comp = grow
            sz = comp.bit_count()
            if sz > best:
                second = best
                best = sz
                bestmask = comp
            elif sz > second:
                second = sz
            remaining &= ~comp
        ein = 0
        bits = word
        while bits:
            b = (bits & -bits).bit_length() - 1
            bits &= bits - 1
            if masks[b] & ~bestmask == 0:
                ein += 1
        key = (ecnt, best, 1 + (r - 1) * ein - best, second)
        strata[key] = strata.get(key, 0) + 1
    return strata


def enumerate_all(n: int, r: int, p: float, workers: int = 1) -> ExactDistribution:
    """Exact joint law of (L1, N1, L2) by iterating all 2^binom(n, r) edge
    subsets.  Ties in L1 go to the component containing the smallest vertex.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if n < 1 or r < 2:
        raise ValueError("need n >= 1 and r >= 2")
    edges = _colex_rsets(n, r)
    ne = len(edges)
    limit = MAX_EDGES_SMALL_N if n <= 8 else MAX_EDGES_GENERAL
    if ne > limit:
        raise ValueError(f"binom(n, r) = {ne} exceeds the enumeration limit {limit} for n = {n}")

    total = 1 << ne
    if n <= 8:
        de, dl, dn = ne + 1, n + 1, 2 + (r - 1) * ne
        key_dims = (de, dl, dn)
        spans = [(lo, min(lo + _CHUNK, total)) for lo in range(0, total, _CHUNK)]
        args = [(n, r, edges, lo, hi, key_dims) for lo, hi in spans]
        if workers > 1 and len(spans) > 1:
            with get_context("fork").Pool(workers) as pool:
                parts = pool.map(_enum_all_worker, args, chunksize=1)
        else:
            parts = [_enum_all_worker(a) for a in args]
        counts = np.sum(parts, axis=0, dtype=np.int64)
        strata = {}
        nz = np.nonzero(counts)[0]
        for flat in nz:
            rest, l2 = divmod(int(flat), dl)
            rest, n1 = divmod(rest, dn)
            e, l1 = divmod(rest, dl)
            strata[(e, l1, n1, l2)] = int(counts[flat])
    else:
        masks = [sum(1 << v for v in e) for e in edges]
        strata = _chunk_general(n, r, masks, 0, total)

    w = _edge_weights(ne, p)
    probs: dict = {}
    for (e, l1, n1, l2), cnt in strata.items():
        key = (l1, n1, l2)
        probs[key] = probs.get(key, 0.0) + cnt * w[e]
    support = sorted(k for k, q in probs.items() if q > 0.0)
    probability = np.array([probs[k] for k in support])
    return ExactDistribution(n=n, r=r, p=p, support=support, probability=probability, strata=strata)


# ---------------------------------------------------------------------------
# single-step outcome enumeration
# ---------------------------------------------------------------------------


@dataclass
class StepLaw:
    """Exact joint law of (E_t, eta_t, xi_t, zeta_t) for one step."""

    n: int
    r: int
    p: float
    t: int
    v: int
    active_excl: int
    unseen_excl: int
    support: list
    probability: np.ndarray

    def as_dict(self) -> dict:
        return {key: float(q) for key, q in zip(self.support, self.probability)}

    def marginal(self, fields) -> dict:
        names = ("E", "eta", "xi", "zeta")
        pick = [names.index(f) for f in fields]
        out: dict = {}
        for key, q in zip(self.support, self.probability):
            sub = tuple(key[i] for i in pick)
            out[sub] = out.get(sub, 0.0) + float(q)
        return out

    def moments(self) -> dict:
        tot = {"eta": 0.0, "eta2": 0.0, "xi": 0.0, "xi2": 0.0, "xieta": 0.0, "zeta": 0.0}
        for (e, eta, xi, zeta), q in zip(self.support, self.probability):
            q = float(q)
            tot["eta"] += q * eta
            tot["eta2"] += q * eta * eta
            tot["xi"] += q * xi
            tot["xi2"] += q * xi * xi
            tot["xieta"] += q * xi * eta
            tot["zeta"] += q * zeta
        return {
            "mean_eta": tot["eta"],
            "var_eta": tot["eta2"] - tot["eta"] ** 2,
            "mean_xi": tot["xi"],
            "var_xi": tot["xi2"] - tot["xi"] ** 2,
            "cov_xi_eta": tot["xieta"] - tot["xi"] * tot["eta"],
            "mean_zeta": tot["zeta"],
        }


def enumerate_step(n: int, r: int, p: float, explored, active) -> StepLaw:
    """Exact outcome law of the next exploration step from a given prefix.

    `explored` is the ordered list of already-explored vertices and `active`
    the current active set; the stepped vertex is the minimum active vertex
    if any, else the minimum unseen vertex, and every subset of the
    binom(n - t, r - 1) tested r-sets is enumerated.
    """
    explored = list(explored)
    active = set(active)
    if len(set(explored)) != len(explored):
        raise ValueError("explored vertices must be distinct")
    if active & set(explored):
        raise ValueError("active set must be disjoint from explored vertices")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    unexplored = sorted(set(range(n)) - set(explored))
    unseen = sorted(set(unexplored) - active)
    v = min(active) if active else min(unseen)
    t = len(explored) + 1
    others = [u for u in unexplored if u != v]
    m = len(others)
    act_mask = 0
    for i, u in enumerate(others):
        if u in active:
            act_mask |= 1 << i
    family = sorted(combinations(range(m), r - 1), key=colex_rank) if m >= r - 1 else []
    fam_n = len(family)
    if fam_n > MAX_STEP_FAMILY:
        raise ValueError(f"binom(n - t, r - 1) = {fam_n} exceeds the step enumeration limit {MAX_STEP_FAMILY}")

    if fam_n == 0:
        support = [(0, 0, 0, 0)]
        probability = np.array([1.0])
        return StepLaw(n=n, r=r, p=p, t=t, v=v, active_excl=len(active - {v}),
                       unseen_excl=m - len(active - {v}), support=support, probability=probability)

    fam_masks = [sum(1 << i for i in s) for s in family]
    pair_overlap = []
    for i in range(fam_n - 1):
        si = set(family[i])
        for j in range(i + 1, fam_n):
            ov = len(si.intersection(family[j]))
            if ov:
                pair_overlap.append((i, j, ov))

    total = 1 << fam_n
    strata: dict = {}
    for lo in range(0, total, _CHUNK):
        hi = min(lo + _CHUNK, total)
        idx = np.arange(lo, hi, dtype=np.uint32)
        union = np.zeros(idx.shape, dtype=np.uint32)
        for b, fm in enumerate(fam_masks):
            has = -((idx >> np.uint32(b)) & np.uint32(1))  # 0 or all-ones
            union |= has & np.uint32(fm)
        e = np.bitwise_count(idx).astype(np.int64)
        xi = np.bitwise_count(union & np.uint32(act_mask)).astype(np.int64)
        eta = np.bitwise_count(union).astype(np.int64) - xi
        zeta = np.zeros(idx.shape, dtype=np.int64)
        for i, j, ov in pair_overlap:
            both = ((idx >> np.uint32(i)) & (idx >> np.uint32(j)) & np.uint32(1)).astype(np.int64)
            zeta += both * ov
        zmax = int(zeta.max()) + 1
        key = ((e * (m + 1) + eta) * (m + 1) + xi) * zmax + zeta
        cnt = np.bincount(key)
        for flat in np.nonzero(cnt)[0]:
            rest, zz = divmod(int(flat), zmax)
            rest, xx = divmod(rest, m + 1)
            ee, hh = divmod(rest, m + 1)
            k = (ee, hh, xx, zz)
            strata[k] = strata.get(k, 0) + int(cnt[flat])

    w = _edge_weights(fam_n, p)
    probs: dict = {}
    for (e, eta, xi, zeta), cnt in strata.items():
        key = (e, eta, xi, zeta)
        probs[key] = probs.get(key, 0.0) + cnt * w[e]
    support = sorted(k for k, q in probs.items() if q > 0.0)
    probability = np.array([probs[k] for k in support])
    ax = len(active - {v})
    return StepLaw(n=n, r=r, p=p, t=t, v=v, active_excl=ax, unseen_excl=m - ax,
                   support=support, probability=probability)
