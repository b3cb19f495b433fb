"""numba kernel lane of the event-driven simulator.

Line-for-line twin of `_sim_python.sim_kernel`; see that module for the
algorithm.  Division of labor: this file owns the @njit compilation details,
the Python twin owns readability.  Any behavioral edit must land in both.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

U5 = np.uint64(5)
U7 = np.uint64(7)
U9 = np.uint64(9)
U11 = np.uint64(11)
U17 = np.uint64(17)
U19 = np.uint64(19)
U45 = np.uint64(45)
U57 = np.uint64(57)
U01 = 2.0 ** -53

THINK_DONE = 0
SERVICE_DONE = 1
JOB_READY = 2


@njit(cache=True, nogil=True)
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
    n_leaves = leaf_cum.shape[0]

    s0 = rng_state[0]
    s1 = rng_state[1]
    s2 = rng_state[2]
    s3 = rng_state[3]

    cap = mpl + n_stations + 4
    h_t = np.zeros(cap, dtype=np.float64)
    h_seq = np.zeros(cap, dtype=np.int64)
    h_kind = np.zeros(cap, dtype=np.int64)
    h_who = np.zeros(cap, dtype=np.int64)
    heap_n = 0
    seq = 0

    job_leaf = np.zeros(mpl, dtype=np.int64)
    job_pos = np.full(mpl, -1, dtype=np.int64)
    job_end = np.zeros(mpl, dtype=np.int64)
    job_started = np.zeros(mpl, dtype=np.uint8)
    job_cstart = np.zeros(mpl, dtype=np.float64)
    job_r = np.zeros(mpl, dtype=np.float64)
    job_z = np.zeros(mpl, dtype=np.float64)
    job_qenter = np.zeros(mpl, dtype=np.float64)

    st_busy_job = np.full(n_stations, -1, dtype=np.int64)
    st_serv_start = np.zeros(n_stations, dtype=np.float64)
    st_q = np.zeros(n_stations * mpl, dtype=np.int64)
    st_qhead = np.zeros(n_stations, dtype=np.int64)
    st_qlen = np.zeros(n_stations, dtype=np.int64)
    st_last_t = np.zeros(n_stations, dtype=np.float64)
    st_comp = np.zeros(n_stations, dtype=np.int64)
    st_busy = np.zeros(n_stations, dtype=np.float64)
    st_area = np.zeros(n_stations, dtype=np.float64)

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
        think_out += 1

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
                    r0 = s1 * U5
                    res = (((r0 << U7) | (r0 >> U57)) * U9)
                    t = s1 << U17
                    s2 ^= s0
                    s3 ^= s1
                    s1 ^= s2
                    s0 ^= s3
                    s2 ^= t
                    s3 = (s3 << U45) | (s3 >> U19)
                    u = (res >> U11) * U01
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
        else:
            jb = who
            think_out -= 1

        while True:
            if job_pos[jb] < 0:
                r0 = s1 * U5
                res = (((r0 << U7) | (r0 >> U57)) * U9)
                t = s1 << U17
                s2 ^= s0
                s3 ^= s1
                s1 ^= s2
                s0 ^= s3
                s2 ^= t
                s3 = (s3 << U45) | (s3 >> U19)
                u = (res >> U11) * U01
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
                if hot_start and job_started[jb] == 0:
                    # first cycle jumps to the first queue visit so queues
                    # begin near their steady level; warmup erases the rest
                    while job_pos[jb] < job_end[jb] and v_station[job_pos[jb]] < 0:
                        job_pos[jb] += 1
                job_started[jb] = 1
            if job_pos[jb] >= job_end[jb]:
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
            if s < 0:
                if dk == 0:
                    dur = v_p0[v]
                else:
                    r0 = s1 * U5
                    res = (((r0 << U7) | (r0 >> U57)) * U9)
                    t = s1 << U17
                    s2 ^= s0
                    s3 ^= s1
                    s1 ^= s2
                    s0 ^= s3
                    s2 ^= t
                    s3 = (s3 << U45) | (s3 >> U19)
                    u = (res >> U11) * U01
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
                    r0 = s1 * U5
                    res = (((r0 << U7) | (r0 >> U57)) * U9)
                    t = s1 << U17
                    s2 ^= s0
                    s3 ^= s1
                    s1 ^= s2
                    s0 ^= s3
                    s2 ^= t
                    s3 = (s3 << U45) | (s3 >> U19)
                    u = (res >> U11) * U01
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
            n_acc = think_out
            for s in range(n_stations):
                n_acc += st_qlen[s]
                if st_busy_job[s] >= 0:
                    n_acc += 1
            if n_acc != mpl:
                violations += 1

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

    stats = np.empty(10, dtype=np.float64)
    stats[0] = t0
    stats[1] = t1
    stats[2] = meas
    stats[3] = r_sum
    stats[4] = z_sum
    stats[5] = c_sum
    stats[6] = total
    stats[7] = violations
    stats[8] = q_start
    stats[9] = q_end
    return stats, st_comp, st_busy, st_area
