"""Compiled repair engine for depth-3 extension-property demands.

The search state is the raw orientation bit vector.  Bookkeeping kept
incrementally per flip: the orientation pattern of every 4-set, and for
every 3-subset the histogram of extension traces its outside points
realize.  A demand is an (allowed) trace with histogram count zero.  The
engine runs a weighted local search (constraint weights bumped in local
minima, targeted random walk on unmet demands, per-point greedy sweeps)
until every 4-set lies in the class and no demand is missing, or the
budget runs out.  Deterministic for a fixed seed.
"""

from __future__ import annotations

import time
from itertools import combinations

import numpy as np
from numba import njit

from .core import CLASS_BY_MASK, FourClass, Hypertournament, triples


def _class_tables(classes) -> tuple[np.ndarray, np.ndarray]:
    allowed4 = np.array(
        [1 if CLASS_BY_MASK[m] in classes else 0 for m in range(16)], dtype=np.int8
    )
    forbid = np.zeros((2, 8), dtype=np.int8)
    for beta in range(2):
        for c in range(8):
            forbid[beta, c] = 0 if allowed4[beta | (c << 1)] else 1
    return allowed4, forbid


def _par3(seq) -> int:
    return sum(1 for i in range(3) for j in range(i + 1, 3) if seq[i] > seq[j]) & 1


def build_tables(n: int):
    tris = list(triples(n))
    tidx = {t: r for r, t in enumerate(tris)}
    nt = len(tris)
    foursets = list(combinations(range(n), 4))
    fs_ranks = np.zeros((len(foursets), 4), dtype=np.int32)
    for fid, (p0, p1, p2, p3) in enumerate(foursets):
        fs_ranks[fid] = [
            tidx[(p0, p1, p2)],
            tidx[(p0, p1, p3)],
            tidx[(p0, p2, p3)],
            tidx[(p1, p2, p3)],
        ]
    fs_of = np.zeros((nt, n - 3, 2), dtype=np.int32)
    fill = np.zeros(nt, dtype=np.int32)
    for fid in range(len(foursets)):
        for pos in range(4):
            r = fs_ranks[fid, pos]
            fs_of[r, fill[r], 0] = fid
            fs_of[r, fill[r], 1] = pos
            fill[r] += 1
    pairs_of = {tidx[t]: ((t[0], t[1]), (t[0], t[2]), (t[1], t[2])) for t in tris}
    flip_tr = np.zeros((nt, 3 * (n - 3), 3), dtype=np.int32)
    for t in tris:
        r = tidx[t]
        k = 0
        for p in t:
            q0, q1 = (x for x in t if x != p)
            for m in range(n):
                if m in t:
                    continue
                ar = tidx[tuple(sorted((q0, q1, m)))]
                flip_tr[r, k] = (p, ar, 1 << pairs_of[ar].index((q0, q1)))
                k += 1
    tr_src = np.zeros((nt, n, 3, 2), dtype=np.int32)
    pairs_rank = np.zeros((nt, n, 3), dtype=np.int32)
    outs = np.zeros((nt, n - 3), dtype=np.int32)
    for ar, t in enumerate(tris):
        outs[ar] = [p for p in range(n) if p not in t]
        for p in range(n):
            if p in t:
                continue
            for b, (u, v) in enumerate(pairs_of[ar]):
                key = tuple(sorted((u, v, p)))
                tr_src[ar, p, b] = (tidx[key], _par3((key.index(u), key.index(v), key.index(p))))
                pairs_rank[ar, p, b] = tidx[key]
    point_ranks = np.zeros((n, (n - 1) * (n - 2) // 2), dtype=np.int32)
    for p in range(n):
        k = 0
        for t in tris:
            if p in t:
                point_ranks[p, k] = tidx[t]
                k += 1
    return fs_ranks, fs_of, flip_tr, tr_src, pairs_rank, outs, point_ranks


def init_arrays(n: int, bits: np.ndarray, fs_ranks, tr_src):
    nt = bits.shape[0]
    fsmask = np.zeros(fs_ranks.shape[0], dtype=np.int8)
    for fid in range(fs_ranks.shape[0]):
        m = 0
        for pos in range(4):
            m |= int(bits[fs_ranks[fid, pos]]) << pos
        fsmask[fid] = m
    trace = np.zeros((n, nt), dtype=np.int8)
    counts = np.zeros((nt, 8), dtype=np.int32)
    tris = list(triples(n))
    for ar, t in enumerate(tris):
        for p in range(n):
            if p in t:
                continue
            c = 0
            for b in range(3):
                rk, pr = tr_src[ar, p, b]
                c |= (int(bits[rk]) ^ int(pr)) << b
            trace[p, ar] = c
            counts[ar, c] += 1
    return fsmask, trace, counts


@njit(cache=True, inline="always")
def _rng(s):
    s ^= s << np.uint64(13)
    s ^= s >> np.uint64(7)
    s ^= s << np.uint64(17)
    return s


@njit(cache=True)
def _flip(r, bits, fsmask, trace, counts, fs_of, flip_tr, forbid, allowed4, w4, wc, nout, acc):
    """Apply flip r; accumulate (weighted delta, class-violation delta, demand delta)."""
    dw = 0.0
    dh = 0
    dm = 0
    beta_old = bits[r]
    beta_new = beta_old ^ np.int8(1)
    bits[r] = beta_new
    for e in range(nout):
        fid = fs_of[r, e, 0]
        m = fsmask[fid]
        if allowed4[m] == 0:
            dw -= w4[fid]
            dh -= 1
        m ^= 1 << fs_of[r, e, 1]
        fsmask[fid] = m
        if allowed4[m] == 0:
            dw += w4[fid]
            dh += 1
    for c in range(8):
        if counts[r, c] == 0:
            if forbid[beta_old, c] == 0:
                dw -= wc[r, c]
                dm -= 1
            if forbid[beta_new, c] == 0:
                dw += wc[r, c]
                dm += 1
    for e in range(3 * nout):
        p = flip_tr[r, e, 0]
        ar = flip_tr[r, e, 1]
        mask = flip_tr[r, e, 2]
        old = trace[p, ar]
        new = old ^ mask
        b2 = bits[ar]
        if counts[ar, old] == 1 and forbid[b2, old] == 0:
            dw += wc[ar, old]
            dm += 1
        if counts[ar, new] == 0 and forbid[b2, new] == 0:
            dw -= wc[ar, new]
            dm -= 1
        counts[ar, old] -= 1
        counts[ar, new] += 1
        trace[p, ar] = new
    acc[0] += dw
    acc[1] += dh
    acc[2] += dm


@njit(cache=True)
def search_chunk(
    n,
    bits,
    fsmask,
    trace,
    counts,
    fs_of,
    flip_tr,
    fs_ranks,
    forbid,
    allowed4,
    pairs_rank,
    outs,
    point_ranks,
    w4,
    wc,
    state,  # [rng, h4, miss, best]
    best_bits,
    steps,
    noise_p,
    reloc_every,
):
    nt = bits.shape[0]
    nf = fsmask.shape[0]
    nout = n - 3
    acc = np.zeros(3, dtype=np.float64)
    s = np.uint64(state[0])
    h4 = np.int64(state[1])
    miss = np.int64(state[2])
    best = np.int64(state[3])
    for step in range(steps):
        if h4 + miss == 0:
            state[0] = s
            state[1] = h4
            state[2] = miss
            state[3] = 0
            return step
        if reloc_every > 0 and step % reloc_every == reloc_every - 1:
            s = _rng(s)
            p = np.int64(s % np.uint64(n))
            improved = True
            sweeps = 0
            while improved and sweeps < 2:
                improved = False
                sweeps += 1
                for e in range(point_ranks.shape[1]):
                    r = point_ranks[p, e]
                    acc[0] = 0.0
                    acc[1] = 0
                    acc[2] = 0
                    _flip(r, bits, fsmask, trace, counts, fs_of, flip_tr, forbid, allowed4, w4, wc, nout, acc)
                    if acc[0] < 0:
                        h4 += np.int64(acc[1])
                        miss += np.int64(acc[2])
                        improved = True
                    else:
                        _flip(r, bits, fsmask, trace, counts, fs_of, flip_tr, forbid, allowed4, w4, wc, nout, acc)
        else:
            s = _rng(s)
            u = np.float64(s >> np.uint64(11)) * (1.0 / 9007199254740992.0)
            if u < noise_p and (h4 > 0 or miss > 0):
                # random walk on a violated constraint
                s = _rng(s)
                if h4 > 0 and (miss == 0 or (s & np.uint64(1)) == np.uint64(0)):
                    s = _rng(s)
                    k = np.int64(s % np.uint64(h4))
                    cnt = 0
                    fid = -1
                    for f2 in range(nf):
                        if allowed4[fsmask[f2]] == 0:
                            if cnt == k:
                                fid = f2
                                break
                            cnt += 1
                    s = _rng(s)
                    r = fs_ranks[fid, np.int64(s % np.uint64(4))]
                    acc[0] = 0.0
                    acc[1] = 0
                    acc[2] = 0
                    _flip(r, bits, fsmask, trace, counts, fs_of, flip_tr, forbid, allowed4, w4, wc, nout, acc)
                    h4 += np.int64(acc[1])
                    miss += np.int64(acc[2])
                elif miss > 0:
                    s = _rng(s)
                    k = np.int64(s % np.uint64(miss))
                    cnt = 0
                    ar = -1
                    code = -1
                    for a2 in range(nt):
                        beta = bits[a2]
                        for c in range(8):
                            if forbid[beta, c] == 0 and counts[a2, c] == 0:
                                if cnt == k:
                                    ar = a2
                                    code = c
                                    break
                                cnt += 1
                        if ar >= 0:
                            break
                    s = _rng(s)
                    p = outs[ar, np.int64(s % np.uint64(nout))]
                    diff = trace[p, ar] ^ code
                    for b in range(3):
                        if (diff >> b) & 1:
                            acc[0] = 0.0
                            acc[1] = 0
                            acc[2] = 0
                            _flip(pairs_rank[ar, p, b], bits, fsmask, trace, counts, fs_of, flip_tr, forbid, allowed4, w4, wc, nout, acc)
                            h4 += np.int64(acc[1])
                            miss += np.int64(acc[2])
            else:
                bestr = -1
                bestd = np.float64(1e18)
                for r in range(nt):
                    acc[0] = 0.0
                    acc[1] = 0
                    acc[2] = 0
                    _flip(r, bits, fsmask, trace, counts, fs_of, flip_tr, forbid, allowed4, w4, wc, nout, acc)
                    if acc[0] < bestd:
                        bestd = acc[0]
                        bestr = r
                    _flip(r, bits, fsmask, trace, counts, fs_of, flip_tr, forbid, allowed4, w4, wc, nout, acc)
                s = _rng(s)
                u2 = np.float64(s >> np.uint64(11)) * (1.0 / 9007199254740992.0)
                if bestd < 0 or (bestd == 0.0 and u2 < 0.7):
                    acc[0] = 0.0
                    acc[1] = 0
                    acc[2] = 0
                    _flip(bestr, bits, fsmask, trace, counts, fs_of, flip_tr, forbid, allowed4, w4, wc, nout, acc)
                    h4 += np.int64(acc[1])
                    miss += np.int64(acc[2])
                else:
                    # local minimum: bump the weight of every violated constraint
                    for fid in range(nf):
                        if allowed4[fsmask[fid]] == 0:
                            w4[fid] += 1.0
                    for ar in range(nt):
                        beta = bits[ar]
                        for c in range(8):
                            if forbid[beta, c] == 0 and counts[ar, c] == 0:
                                wc[ar, c] += 1.0
        if h4 == 0 and miss < best:
            best = miss
            for r in range(nt):
                best_bits[r] = bits[r]
    state[0] = s
    state[1] = h4
    state[2] = miss
    state[3] = best
    return steps


def repair_depth3(
    ht: Hypertournament, classes, seed: int, t0: float, time_budget: float
) -> tuple[Hypertournament, int]:
    """Drive the compiled search in chunks until success or the time budget."""
    n = ht.n
    allowed4, forbid = _class_tables(classes)
    fs_ranks, fs_of, flip_tr, tr_src, pairs_rank, outs, point_ranks = build_tables(n)
    bits = np.frombuffer(ht.bits, dtype=np.uint8).astype(np.int8).copy()
    fsmask, trace, counts = init_arrays(n, bits, fs_ranks, tr_src)
    w4 = np.ones(fs_ranks.shape[0], dtype=np.float64)
    wc = np.ones((bits.shape[0], 8), dtype=np.float64)
    h4 = sum(1 for m in fsmask if allowed4[m] == 0)
    miss = 0
    for ar in range(bits.shape[0]):
        beta = bits[ar]
        for c in range(8):
            if forbid[beta, c] == 0 and counts[ar, c] == 0:
                miss += 1
    state = np.array([seed * 2654435761 + 12345, h4, miss, 1 << 30], dtype=np.uint64)
    best_bits = bits.copy()
    total_steps = 0
    chunk = 2000
    while True:
        done = search_chunk(
            n, bits, fsmask, trace, counts, fs_of, flip_tr, fs_ranks, forbid, allowed4,
            pairs_rank, outs, point_ranks, w4, wc, state, best_bits, chunk, 0.10, 7,
        )
        total_steps += int(done)
        if int(state[1]) + int(state[2]) == 0:
            best_bits = bits.copy()
            break
        if time.time() - t0 > time_budget:
            break
    if int(state[3]) >= (1 << 30):
        best_bits = bits  # never saw a class-clean state; return the working state
    result = Hypertournament(n, bytes(int(b) & 1 for b in best_bits))
    return result, total_steps
