"""Pure-Python event loop twin of the numba simulator kernel.

Keep this file line-for-line parallel with `_sim_numba.py`: same event
ordering, same RNG consumption order, same accumulation order.  The
equivalence test asserts identical outputs from both lanes.
"""

from __future__ import annotations

import math

MASK = (1 << 64) - 1
U01 = 2.0 ** -53

THINK_DONE = 0
SERVICE_DONE = 1
JOB_READY = 2


def sim_kernel(
    leaf_cum,
    leaf_start,
    v_station,
    v_kind,
    v_p0,
    v_p1,
    v_p2,
    n_stations,
    mpl,
    warmup,
    cycles,
    rng_state,
    debug,
    hot_start,
):
    leaf_cum = [float(x) for x in leaf_cum]
    leaf_start = [int(x) for x in leaf_start]
    v_station = [int(x) for x in v_station]
    v_kind = [int(x) for x in v_kind]
    v_p0 = [float(x) for x in v_p0]
    v_p1 = [float(x) for x in v_p1]
    v_p2 = [float(x) for x in v_p2]
    n_leaves = len(leaf_cum)

    s0 = int(rng_state[0])
    s1 = int(rng_state[1])
    s2 = int(rng_state[2])
    s3 = int(rng_state[3])

    # binary heap ordered by (time, seq)
    cap = mpl + n_stations + 4
    h_t = [0.0] * cap
    h_seq = [0] * cap
    h_kind = [0] * cap
    h_who = [0] * cap
    heap_n = 0
    seq = 0

    job_leaf = [0] * mpl
    job_pos = [-1] * mpl
    job_end = [0] * mpl
    job_started = [False] * mpl
    job_cstart = [0.0] * mpl
    job_r = [0.0] * mpl
    job_z = [0.0] * mpl
    job_qenter = [0.0] * mpl

    st_busy_job = [-1] * n_stations
    st_serv_start = [0.0] * n_stations
    st_q = [0] * (n_stations * mpl)
    st_qhead = [0] * n_stations
    st_qlen = [0] * n_stations
    st_last_t = [0.0] * n_stations
    st_comp = [0] * n_stations
    st_busy = [0.0] * n_stations
    st_area = [0.0] * n_stations

    measuring = warmup == 0
    t0 = 0.0
    t1 = 0.0
    meas = 0
    total = 0
    r_sum = 0.0
    z_sum = 0.0
    c_sum = 0.0
    think_out = 0
    violations = 0
    q_start = 0  # jobs at queue stations (incl. in service) when measuring begins
    done = False

    for j in range(mpl):
        # JOB_READY at t=0 in job order starts the closed loop
        i = heap_n
        heap_n += 1
        h_t[i] = 0.0
        h_seq[i] = seq
        h_kind[i] = JOB_READY
        h_who[i] = j
        seq += 1
        while i > 0:
            p = (i - 1) >> 1
            if h_t[p] > h_t[i] or (h_t[p] == h_t[i] and h_seq[p] > h_seq[i]):
                h_t[p], h_t[i] = h_t[i], h_t[p]
                h_seq[p], h_seq[i] = h_seq[i], h_seq[p]
                h_kind[p], h_kind[i] = h_kind[i], h_kind[p]
                h_who[p], h_who[i] = h_who[i], h_who[p]
                i = p
            else:
                break
        think_out += 1  # READY events count as "job not at a station"

    while not done and heap_n > 0:
        now = h_t[0]
        kind = h_kind[0]
        who = h_who[0]
        heap_n -= 1
        m = heap_n
        h_t[0] = h_t[m]
        h_seq[0] = h_seq[m]
        h_kind[0] = h_kind[m]
        h_who[0] = h_who[m]
        i = 0
        while True:
            l = 2 * i + 1
            if l >= m:
                break
            r = l + 1
            c = l
            if r < m and (h_t[r] < h_t[l] or (h_t[r] == h_t[l] and h_seq[r] < h_seq[l])):
                c = r
            if h_t[c] < h_t[i] or (h_t[c] == h_t[i] and h_seq[c] < h_seq[i]):
                h_t[c], h_t[i] = h_t[i], h_t[c]
                h_seq[c], h_seq[i] = h_seq[i], h_seq[c]
                h_kind[c], h_kind[i] = h_kind[i], h_kind[c]
                h_who[c], h_who[i] = h_who[i], h_who[c]
                i = c
            else:
                break

        if kind == SERVICE_DONE:
            s = who
            jb = st_busy_job[s]
            if measuring:
                start = st_serv_start[s]
                if start < t0:
                    start = t0
                st_busy[s] += now - start
                st_comp[s] += 1
                last = st_last_t[s]
                if last < t0:
                    last = t0
                st_area[s] += (st_qlen[s] + 1) * (now - last)
            st_last_t[s] = now
            job_r[jb] += now - job_qenter[jb]
            if st_qlen[s] > 0:
                k = st_q[s * mpl + st_qhead[s]]
                st_qhead[s] = (st_qhead[s] + 1) % mpl
                st_qlen[s] -= 1
                st_busy_job[s] = k
                st_serv_start[s] = now
                v = job_pos[k]
                dk = v_kind[v]
                if dk == 0:
                    dur = v_p0[v]
                else:
                    res = ((((s1 * 5) & MASK) << 7 | ((s1 * 5) & MASK) >> 57) & MASK) * 9 & MASK
                    t = (s1 << 17) & MASK
                    s2 ^= s0
                    s3 ^= s1
                    s1 ^= s2
                    s0 ^= s3
                    s2 ^= t
                    s3 = ((s3 << 45) | (s3 >> 19)) & MASK
                    u = (res >> 11) * U01
                    if dk == 1:
                        dur = -v_p0[v] * math.log(1.0 - u)
                    else:
                        dur = v_p0[v] / (1.0 - u * v_p1[v]) ** v_p2[v]
                i = heap_n
                heap_n += 1
                h_t[i] = now + dur
                h_seq[i] = seq
                h_kind[i] = SERVICE_DONE
                h_who[i] = s
                seq += 1
                while i > 0:
                    p = (i - 1) >> 1
                    if h_t[p] > h_t[i] or (h_t[p] == h_t[i] and h_seq[p] > h_seq[i]):
                        h_t[p], h_t[i] = h_t[i], h_t[p]
                        h_seq[p], h_seq[i] = h_seq[i], h_seq[p]
                        h_kind[p], h_kind[i] = h_kind[i], h_kind[p]
                        h_who[p], h_who[i] = h_who[i], h_who[p]
                        i = p
                    else:
                        break
            else:
                st_busy_job[s] = -1
            job_pos[jb] += 1
        elif kind == THINK_DONE:
            jb = who
            think_out -= 1
            job_pos[jb] += 1
        else:  # JOB_READY
            jb = who
            think_out -= 1

        # advance job jb until it blocks at an event
        while True:
            if job_pos[jb] < 0:  # begin a new cycle
                res = ((((s1 * 5) & MASK) << 7 | ((s1 * 5) & MASK) >> 57) & MASK) * 9 & MASK
                t = (s1 << 17) & MASK
                s2 ^= s0
                s3 ^= s1
                s1 ^= s2
                s0 ^= s3
                s2 ^= t
                s3 = ((s3 << 45) | (s3 >> 19)) & MASK
                u = (res >> 11) * U01
                leaf = n_leaves - 1
                for li in range(n_leaves - 1):
                    if u < leaf_cum[li]:
                        leaf = li
                        break
                job_leaf[jb] = leaf
                job_pos[jb] = leaf_start[leaf]
                job_end[jb] = leaf_start[leaf + 1]
                job_cstart[jb] = now
                job_r[jb] = 0.0
                job_z[jb] = 0.0
                if hot_start and not job_started[jb]:
                    # first cycle jumps to the first queue visit so queues
                    # begin near their steady level; warmup erases the rest
                    while job_pos[jb] < job_end[jb] and v_station[job_pos[jb]] < 0:
                        job_pos[jb] += 1
                job_started[jb] = True
            if job_pos[jb] >= job_end[jb]:  # cycle completed
                total += 1
                if measuring:
                    meas += 1
                    r_sum += job_r[jb]
                    z_sum += job_z[jb]
                    c_sum += now - job_cstart[jb]
                    if meas >= cycles:
                        t1 = now
                        done = True
                        break
                elif total >= warmup:
                    measuring = True
                    t0 = now
                    for s in range(n_stations):
                        q_start += st_qlen[s]
                        if st_busy_job[s] >= 0:
                            q_start += 1
                job_pos[jb] = -1
                continue
            v = job_pos[jb]
            s = v_station[v]
            dk = v_kind[v]
            if s < 0:  # think visit: pure delay
                if dk == 0:
                    dur = v_p0[v]
                else:
                    res = ((((s1 * 5) & MASK) << 7 | ((s1 * 5) & MASK) >> 57) & MASK) * 9 & MASK
                    t = (s1 << 17) & MASK
                    s2 ^= s0
                    s3 ^= s1
                    s1 ^= s2
                    s0 ^= s3
                    s2 ^= t
                    s3 = ((s3 << 45) | (s3 >> 19)) & MASK
                    u = (res >> 11) * U01
                    if dk == 1:
                        dur = -v_p0[v] * math.log(1.0 - u)
                    else:
                        dur = v_p0[v] / (1.0 - u * v_p1[v]) ** v_p2[v]
                job_z[jb] += dur
                think_out += 1
                i = heap_n
                heap_n += 1
                h_t[i] = now + dur
                h_seq[i] = seq
                h_kind[i] = THINK_DONE
                h_who[i] = jb
                seq += 1
                while i > 0:
                    p = (i - 1) >> 1
                    if h_t[p] > h_t[i] or (h_t[p] == h_t[i] and h_seq[p] > h_seq[i]):
                        h_t[p], h_t[i] = h_t[i], h_t[p]
                        h_seq[p], h_seq[i] = h_seq[i], h_seq[p]
                        h_kind[p], h_kind[i] = h_kind[i], h_kind[p]
                        h_who[p], h_who[i] = h_who[i], h_who[p]
                        i = p
                    else:
                        break
                break
            # queue visit
            job_qenter[jb] = now
            if measuring:
                last = st_last_t[s]
                if last < t0:
                    last = t0
                occ = st_qlen[s]
                if st_busy_job[s] >= 0:
                    occ += 1
                st_area[s] += occ * (now - last)
            st_last_t[s] = now
            if st_busy_job[s] < 0:
                st_busy_job[s] = jb
                st_serv_start[s] = now
                if dk == 0:
                    dur = v_p0[v]
                else:
                    res = ((((s1 * 5) & MASK) << 7 | ((s1 * 5) & MASK) >> 57) & MASK) * 9 & MASK
                    t = (s1 << 17) & MASK
                    s2 ^= s0
                    s3 ^= s1
                    s1 ^= s2
                    s0 ^= s3
                    s2 ^= t
                    s3 = ((s3 << 45) | (s3 >> 19)) & MASK
                    u = (res >> 11) * U01
                    if dk == 1:
                        dur = -v_p0[v] * math.log(1.0 - u)
                    else:
                        dur = v_p0[v] / (1.0 - u * v_p1[v]) ** v_p2[v]
                i = heap_n
                heap_n += 1
                h_t[i] = now + dur
                h_seq[i] = seq
                h_kind[i] = SERVICE_DONE
                h_who[i] = s
                seq += 1
                while i > 0:
                    p = (i - 1) >> 1
                    if h_t[p] > h_t[i] or (h_t[p] == h_t[i] and h_seq[p] > h_seq[i]):
                        h_t[p], h_t[i] = h_t[i], h_t[p]
                        h_seq[p], h_seq[i] = h_seq[i], h_seq[p]
                        h_kind[p], h_kind[i] = h_kind[i], h_kind[p]
                        h_who[p], h_who[i] = h_who[i], h_who[p]
                        i = p
                    else:
                        break
            else:
                st_q[s * mpl + (st_qhead[s] + st_qlen[s]) % mpl] = jb
                st_qlen[s] += 1
            break

        if debug and not done:
            # closed-network conservation: every job is thinking/ready, in
            # service, or waiting in some queue
            n_acc = think_out
            for s in range(n_stations):
                n_acc += st_qlen[s]
                if st_busy_job[s] >= 0:
                    n_acc += 1
            if n_acc != mpl:
                violations += 1

    # flush in-flight busy time and queue-length area at the window edge
    q_end = 0
    for s in range(n_stations):
        if st_busy_job[s] >= 0:
            start = st_serv_start[s]
            if start < t0:
                start = t0
            st_busy[s] += t1 - start
        last = st_last_t[s]
        if last < t0:
            last = t0
        occ = st_qlen[s]
        if st_busy_job[s] >= 0:
            occ += 1
        q_end += occ
        st_area[s] += occ * (t1 - last)

    stats = [t0, t1, float(meas), r_sum, z_sum, c_sum, float(total), float(violations),
             float(q_start), float(q_end)]
    return stats, st_comp, st_busy, st_area
