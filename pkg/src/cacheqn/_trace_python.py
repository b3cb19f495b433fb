"""Pure-Python policy machines, twins of `_trace_numba`.

Each kernel replays a key trace against one eviction policy over a
doubly-linked list held in flat arrays (sentinel nodes at fixed slots) plus
a key -> node table.  Hit/miss and policy-specific counters are accumulated
from `measure_from` onward; every eviction is appended to the log so tests
can compare full eviction sequences against brute-force references.

Keep bodies in lockstep with the numba twins.
"""

from __future__ import annotations

MASK = (1 << 64) - 1
U01 = 2.0 ** -53


def lru_kernel(trace, cap, universe, measure_from):
    HEAD, TAIL = 0, 1
    nxt = [0] * (cap + 2)
    prv = [0] * (cap + 2)
    key_of = [0] * (cap + 2)
    node_of = [-1] * universe
    nxt[HEAD] = TAIL
    prv[TAIL] = HEAD
    size = 0
    next_slot = 2
    hits = 0
    misses = 0
    evict_log = [-1] * len(trace)
    n_ev = 0
    for i in range(len(trace)):
        k = int(trace[i])
        measured = i >= measure_from
        n = node_of[k]
        if n >= 0:
            if measured:
                hits += 1
            p = prv[n]
            q = nxt[n]
            nxt[p] = q
            prv[q] = p
            f = nxt[HEAD]
            nxt[HEAD] = n
            prv[n] = HEAD
            nxt[n] = f
            prv[f] = n
        else:
            if measured:
                misses += 1
            if size == cap:
                v = prv[TAIL]
                p = prv[v]
                nxt[p] = TAIL
                prv[TAIL] = p
                node_of[key_of[v]] = -1
                evict_log[n_ev] = key_of[v]
                n_ev += 1
                slot = v
            else:
                slot = next_slot
                next_slot += 1
                size += 1
            key_of[slot] = k
            node_of[k] = slot
            f = nxt[HEAD]
            nxt[HEAD] = slot
            prv[slot] = HEAD
            nxt[slot] = f
            prv[f] = slot
    return hits, misses, size, evict_log, n_ev


def fifo_kernel(trace, cap, universe, measure_from):
    HEAD, TAIL = 0, 1
    nxt = [0] * (cap + 2)
    prv = [0] * (cap + 2)
    key_of = [0] * (cap + 2)
    node_of = [-1] * universe
    nxt[HEAD] = TAIL
    prv[TAIL] = HEAD
    size = 0
    next_slot = 2
    hits = 0
    misses = 0
    evict_log = [-1] * len(trace)
    n_ev = 0
    for i in range(len(trace)):
        k = int(trace[i])
        measured = i >= measure_from
        n = node_of[k]
        if n >= 0:
            if measured:
                hits += 1
        else:
            if measured:
                misses += 1
            if size == cap:
                v = prv[TAIL]
                p = prv[v]
                nxt[p] = TAIL
                prv[TAIL] = p
                node_of[key_of[v]] = -1
                evict_log[n_ev] = key_of[v]
                n_ev += 1
                slot = v
            else:
                slot = next_slot
                next_slot += 1
                size += 1
            key_of[slot] = k
            node_of[k] = slot
            f = nxt[HEAD]
            nxt[HEAD] = slot
            prv[slot] = HEAD
            nxt[slot] = f
            prv[f] = slot
    return hits, misses, size, evict_log, n_ev


def problru_kernel(trace, cap, universe, measure_from, q, rng_state):
    HEAD, TAIL = 0, 1
    nxt = [0] * (cap + 2)
    prv = [0] * (cap + 2)
    key_of = [0] * (cap + 2)
    node_of = [-1] * universe
    nxt[HEAD] = TAIL
    prv[TAIL] = HEAD
    size = 0
    next_slot = 2
    hits = 0
    misses = 0
    evict_log = [-1] * len(trace)
    n_ev = 0
    s0 = int(rng_state[0])
    s1 = int(rng_state[1])
    s2 = int(rng_state[2])
    s3 = int(rng_state[3])
    for i in range(len(trace)):
        k = int(trace[i])
        measured = i >= measure_from
        n = node_of[k]
        if n >= 0:
            if measured:
                hits += 1
            res = ((((s1 * 5) & MASK) << 7 | ((s1 * 5) & MASK) >> 57) & MASK) * 9 & MASK
            t = (s1 << 17) & MASK
            s2 ^= s0
            s3 ^= s1
            s1 ^= s2
            s0 ^= s3
            s2 ^= t
            s3 = ((s3 << 45) | (s3 >> 19)) & MASK
            u = (res >> 11) * U01
            if u >= q:  # with probability 1-q follow LRU and move to the head
                p = prv[n]
                w = nxt[n]
                nxt[p] = w
                prv[w] = p
                f = nxt[HEAD]
                nxt[HEAD] = n
                prv[n] = HEAD
                nxt[n] = f
                prv[f] = n
        else:
            if measured:
                misses += 1
            if size == cap:
                v = prv[TAIL]
                p = prv[v]
                nxt[p] = TAIL
                prv[TAIL] = p
                node_of[key_of[v]] = -1
                evict_log[n_ev] = key_of[v]
                n_ev += 1
                slot = v
            else:
                slot = next_slot
                next_slot += 1
                size += 1
            key_of[slot] = k
            node_of[k] = slot
            f = nxt[HEAD]
            nxt[HEAD] = slot
            prv[slot] = HEAD
            nxt[slot] = f
            prv[f] = slot
    return hits, misses, size, evict_log, n_ev


def clock_kernel(trace, cap, universe, measure_from):
    # eviction scan: inspect the tail item, then the two above it, evicting
    # the first 0-bit; a skipped item spends its second chance (bit cleared)
    # but keeps its position; if all three carried a 1 bit the fourth-from-
    # tail item is evicted regardless of its bit
    HEAD, TAIL = 0, 1
    nxt = [0] * (cap + 2)
    prv = [0] * (cap + 2)
    key_of = [0] * (cap + 2)
    bit = [0] * (cap + 2)
    node_of = [-1] * universe
    nxt[HEAD] = TAIL
    prv[TAIL] = HEAD
    size = 0
    next_slot = 2
    hits = 0
    misses = 0
    scan_sum = 0
    scan_n = 0
    evict_log = [-1] * len(trace)
    n_ev = 0
    for i in range(len(trace)):
        k = int(trace[i])
        measured = i >= measure_from
        n = node_of[k]
        if n >= 0:
            if measured:
                hits += 1
            bit[n] = 1
        else:
            if measured:
                misses += 1
            if size == cap:
                v = prv[TAIL]
                depth = 1
                if bit[v] != 0:
                    bit[v] = 0
                    v = prv[v]
                    depth = 2
                    if bit[v] != 0:
                        bit[v] = 0
                        v = prv[v]
                        depth = 3
                        if bit[v] != 0:
                            bit[v] = 0
                            v = prv[v]
                            depth = 4
                p = prv[v]
                w = nxt[v]
                nxt[p] = w
                prv[w] = p
                node_of[key_of[v]] = -1
                evict_log[n_ev] = key_of[v]
                n_ev += 1
                if measured:
                    scan_sum += depth
                    scan_n += 1
                slot = v
            else:
                slot = next_slot
                next_slot += 1
                size += 1
            key_of[slot] = k
            node_of[k] = slot
            bit[slot] = 0
            f = nxt[HEAD]
            nxt[HEAD] = slot
            prv[slot] = HEAD
            nxt[slot] = f
            prv[f] = slot
    return hits, misses, size, scan_sum, scan_n, evict_log, n_ev


def slru_kernel(trace, cap, t_cap, universe, measure_from):
    # protected (T) and probationary (B) lists; inserts land on B, a B hit
    # promotes to the T head (demoting T's tail back to the B head when T
    # overflows), a T hit moves within T; only B-tail evictions leave the
    # cache.  t_cap == 0 degenerates to plain LRU on B with no T hits.
    TH, TT, BH, BT = 0, 1, 2, 3
    n_slots = cap + 6
    nxt = [0] * n_slots
    prv = [0] * n_slots
    key_of = [0] * n_slots
    seg = [0] * n_slots  # 0 = T, 1 = B
    node_of = [-1] * universe
    nxt[TH] = TT
    prv[TT] = TH
    nxt[BH] = BT
    prv[BT] = BH
    b_cap = cap - t_cap
    t_size = 0
    b_size = 0
    next_slot = 4
    free = [0] * n_slots
    n_free = 0
    hits = 0
    misses = 0
    t_hits = 0
    evict_log = [-1] * len(trace)
    n_ev = 0
    for i in range(len(trace)):
        k = int(trace[i])
        measured = i >= measure_from
        n = node_of[k]
        if n >= 0:
            if measured:
                hits += 1
            p = prv[n]
            w = nxt[n]
            nxt[p] = w
            prv[w] = p
            if seg[n] == 0:  # T hit: move to T head
                if measured:
                    t_hits += 1
                f = nxt[TH]
                nxt[TH] = n
                prv[n] = TH
                nxt[n] = f
                prv[f] = n
            elif t_cap == 0:  # degenerate: keep LRU order within B
                b_size -= 1
                f = nxt[BH]
                nxt[BH] = n
                prv[n] = BH
                nxt[n] = f
                prv[f] = n
                b_size += 1
            else:  # B hit: promote to T head
                b_size -= 1
                seg[n] = 0
                f = nxt[TH]
                nxt[TH] = n
                prv[n] = TH
                nxt[n] = f
                prv[f] = n
                t_size += 1
                if t_size > t_cap:  # demote T tail to B head
                    d = prv[TT]
                    p = prv[d]
                    nxt[p] = TT
                    prv[TT] = p
                    t_size -= 1
                    seg[d] = 1
                    f = nxt[BH]
                    nxt[BH] = d
                    prv[d] = BH
                    nxt[d] = f
                    prv[f] = d
                    b_size += 1
                    if b_size > b_cap:
                        e = prv[BT]
                        p = prv[e]
                        nxt[p] = BT
                        prv[BT] = p
                        b_size -= 1
                        node_of[key_of[e]] = -1
                        evict_log[n_ev] = key_of[e]
                        n_ev += 1
                        free[n_free] = e
                        n_free += 1
        else:
            if measured:
                misses += 1
            if n_free > 0:
                n_free -= 1
                slot = free[n_free]
            else:
                slot = next_slot
                next_slot += 1
            key_of[slot] = k
            node_of[k] = slot
            seg[slot] = 1
            f = nxt[BH]
            nxt[BH] = slot
            prv[slot] = BH
            nxt[slot] = f
            prv[f] = slot
            b_size += 1
            if b_size > b_cap:
                e = prv[BT]
                p = prv[e]
                nxt[p] = BT
                prv[BT] = p
                b_size -= 1
                node_of[key_of[e]] = -1
                evict_log[n_ev] = key_of[e]
                n_ev += 1
                free[n_free] = e
                n_free += 1
    return hits, misses, t_size + b_size, t_hits, evict_log, n_ev


def s3fifo_kernel(trace, cap, universe, measure_from):
    # Small (10% of items) and Main FIFO lists plus a ghost of the last x
    # missed keys, x = Main's current item count.  Ghost hits admit misses
    # straight to Main; Small-tail victims with the bit set are promoted to
    # Main (bit cleared), others leave the cache; Main-tail evictions are
    # unconditional and never return to Small.
    SH, ST, MH, MT = 0, 1, 2, 3
    n_slots = cap + 6
    nxt = [0] * n_slots
    prv = [0] * n_slots
    key_of = [0] * n_slots
    bit = [0] * n_slots
    node_of = [-1] * universe
    nxt[SH] = ST
    prv[ST] = SH
    nxt[MH] = MT
    prv[MT] = MH
    s_cap = cap // 10
    if s_cap < 1:
        s_cap = 1
    s_size = 0
    m_size = 0
    next_slot = 4
    free = [0] * n_slots
    n_free = 0
    ring_len = cap + 2
    gq = [0] * ring_len
    ghead = 0
    gcount = 0
    gcnt = [0] * universe
    hits = 0
    misses = 0
    ghost_admits = 0
    stail = 0
    stail_bit1 = 0
    evict_log = [-1] * len(trace)
    n_ev = 0
    m_cap = cap - s_cap
    for i in range(len(trace)):
        k = int(trace[i])
        measured = i >= measure_from
        n = node_of[k]
        if n >= 0:
            if measured:
                hits += 1
            bit[n] = 1
        else:
            if measured:
                misses += 1
            in_ghost = gcnt[k] > 0
            if n_free > 0:
                n_free -= 1
                slot = free[n_free]
            else:
                slot = next_slot
                next_slot += 1
            key_of[slot] = k
            node_of[k] = slot
            bit[slot] = 0
            if in_ghost:
                if measured:
                    ghost_admits += 1
                f = nxt[MH]
                nxt[MH] = slot
                prv[slot] = MH
                nxt[slot] = f
                prv[f] = slot
                m_size += 1
                if m_size > m_cap:
                    e = prv[MT]
                    p = prv[e]
                    nxt[p] = MT
                    prv[MT] = p
                    m_size -= 1
                    node_of[key_of[e]] = -1
                    evict_log[n_ev] = key_of[e]
                    n_ev += 1
                    free[n_free] = e
                    n_free += 1
            else:
                f = nxt[SH]
                nxt[SH] = slot
                prv[slot] = SH
                nxt[slot] = f
                prv[f] = slot
                s_size += 1
                if s_size > s_cap:
                    v = prv[ST]
                    p = prv[v]
                    nxt[p] = ST
                    prv[ST] = p
                    s_size -= 1
                    if measured:
                        stail += 1
                    if bit[v] != 0:
                        if measured:
                            stail_bit1 += 1
                        bit[v] = 0
                        f = nxt[MH]
                        nxt[MH] = v
                        prv[v] = MH
                        nxt[v] = f
                        prv[f] = v
                        m_size += 1
                        if m_size > m_cap:
                            e = prv[MT]
                            p = prv[e]
                            nxt[p] = MT
                            prv[MT] = p
                            m_size -= 1
                            node_of[key_of[e]] = -1
                            evict_log[n_ev] = key_of[e]
                            n_ev += 1
                            free[n_free] = e
                            n_free += 1
                    else:
                        node_of[key_of[v]] = -1
                        evict_log[n_ev] = key_of[v]
                        n_ev += 1
                        free[n_free] = v
                        n_free += 1
            # record this miss in the ghost, then trim to Main's item count
            gq[(ghead + gcount) % ring_len] = k
            gcount += 1
            gcnt[k] += 1
            while gcount > m_size:
                old = gq[ghead]
                ghead = (ghead + 1) % ring_len
                gcount -= 1
                gcnt[old] -= 1
    return hits, misses, s_size + m_size, ghost_admits, stail, stail_bit1, evict_log, n_ev
