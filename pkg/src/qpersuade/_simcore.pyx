# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Cython event-loop kernel for the queue simulator.

Line-for-line twin of ``_simcore_py.simulate``; every floating-point
expression appears in the same order so both backends produce
bit-identical accumulators. Edit the two files together.
"""

import numpy as np

from libc.math cimport log

cdef unsigned long long _GOLD = 0x9E3779B97F4A7C15
cdef double _TWO_NEG53 = 1.0 / 9007199254740992.0

OCC_CAP = 65536
cdef int _OCC_CAP = 65536
cdef int _N_BATCH = 20


cdef inline unsigned long long _next(unsigned long long state) nogil:
    return state + _GOLD


cdef inline unsigned long long _mix64(unsigned long long z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _out(unsigned long long state) nogil:
    cdef unsigned long long z = _mix64(state)
    return <double> ((z >> 11) + 1) * _TWO_NEG53


def simulate(double lam_l, double lam_h, double horizon, double warmup,
             unsigned long long seed, double[:] p, double tail_join,
             double[:] u_ltab, double u_lslope,
             double[:] u_htab, double u_hslope, int track_realized,
             double linear_c):
    """See ``_simcore_py.simulate``; same contract, same bit patterns."""
    occ_a = np.zeros(_OCC_CAP)
    lsum_a = np.zeros(_N_BATCH)
    rsum_a = np.zeros(_N_BATCH)
    hsum_a = np.zeros(_N_BATCH)
    jsum_a = np.zeros(_N_BATCH)
    jcnt_a = np.zeros(_N_BATCH, dtype=np.int64)
    vsum_a = np.zeros(_N_BATCH)
    vcnt_a = np.zeros(_N_BATCH, dtype=np.int64)
    arr_l_a = np.zeros(_OCC_CAP, dtype=np.int64)
    join_l_a = np.zeros(_OCC_CAP, dtype=np.int64)
    fifo_t_a = np.zeros(_OCC_CAP)
    fifo_flag_a = np.zeros(_OCC_CAP, dtype=np.uint8)

    cdef double[:] occ = occ_a
    cdef double[:] lsum = lsum_a
    cdef double[:] rsum = rsum_a
    cdef double[:] hsum = hsum_a
    cdef double[:] jsum = jsum_a
    cdef long long[:] jcnt = jcnt_a
    cdef double[:] vsum = vsum_a
    cdef long long[:] vcnt = vcnt_a
    cdef long long[:] arr_l = arr_l_a
    cdef long long[:] join_l = join_l_a
    cdef double[:] fifo_t = fifo_t_a
    cdef unsigned char[:] fifo_flag = fifo_flag_a

    cdef int n_p = p.shape[0]
    cdef int n_ul = u_ltab.shape[0]
    cdef double ul_last = u_ltab[n_ul - 1]
    cdef int n_uh = u_htab.shape[0]
    cdef double uh_last = u_htab[n_uh - 1]

    cdef int head = 0
    cdef int size = 0

    cdef double blen = (horizon - warmup) / (<double> _N_BATCH)
    cdef double inf = float("inf")

    cdef unsigned long long s_l = _mix64(seed + 1 * _GOLD)
    cdef unsigned long long s_h = _mix64(seed + 2 * _GOLD)
    cdef unsigned long long s_s = _mix64(seed + 3 * _GOLD)
    cdef unsigned long long s_c = _mix64(seed + 4 * _GOLD)

    cdef double t = 0.0
    cdef int n = 0
    cdef int max_n = 0
    cdef long long h_count = 0
    cdef long long event_count = 0

    cdef double t_l, t_h, t_s, t_next, lo, u, pj, un
    cdef int kind, ib, counted

    if lam_l > 0.0:
        s_l = _next(s_l)
        u = _out(s_l)
        t_l = -log(u) / lam_l
    else:
        t_l = inf
    if lam_h > 0.0:
        s_h = _next(s_h)
        u = _out(s_h)
        t_h = -log(u) / lam_h
    else:
        t_h = inf
    t_s = inf

    while True:
        t_next = t_l
        kind = 0
        if t_h < t_next:
            t_next = t_h
            kind = 1
        if t_s < t_next:
            t_next = t_s
            kind = 2
        if t_next > horizon:
            break
        lo = t if t > warmup else warmup
        if t_next > lo:
            occ[n] += t_next - lo
        t = t_next
        event_count += 1
        counted = t >= warmup
        if counted:
            ib = <int> ((t - warmup) / blen)
            if ib >= _N_BATCH:
                ib = _N_BATCH - 1
        else:
            ib = 0
        if kind == 0:
            pj = p[n] if n < n_p else tail_join
            s_c = _next(s_c)
            u = _out(s_c)
            un = u_ltab[n] if n < n_ul else ul_last - u_lslope * (n - (n_ul - 1))
            if counted:
                arr_l[n] += 1
            if u <= pj:
                if counted:
                    join_l[n] += 1
                    lsum[ib] += un
                    jsum[ib] += un
                    jcnt[ib] += 1
                fifo_t[(head + size) % _OCC_CAP] = t
                fifo_flag[(head + size) % _OCC_CAP] = track_realized
                size += 1
                n += 1
                if n > max_n:
                    max_n = n
                if n >= _OCC_CAP - 1:
                    raise RuntimeError(
                        "queue length reached the tracking cap; the "
                        "mechanism is not stable at these rates")
                if n == 1:
                    s_s = _next(s_s)
                    u = _out(s_s)
                    t_s = t + (-log(u))
            else:
                if counted:
                    vsum[ib] += un
                    vcnt[ib] += 1
            s_l = _next(s_l)
            u = _out(s_l)
            t_l = t + (-log(u) / lam_l)
        elif kind == 1:
            un = u_htab[n] if n < n_uh else uh_last - u_hslope * (n - (n_uh - 1))
            if counted:
                h_count += 1
                hsum[ib] += un
            fifo_t[(head + size) % _OCC_CAP] = t
            fifo_flag[(head + size) % _OCC_CAP] = 0
            size += 1
            n += 1
            if n > max_n:
                max_n = n
            if n >= _OCC_CAP - 1:
                raise RuntimeError(
                    "queue length reached the tracking cap; the "
                    "mechanism is not stable at these rates")
            if n == 1:
                s_s = _next(s_s)
                u = _out(s_s)
                t_s = t + (-log(u))
            s_h = _next(s_h)
            u = _out(s_h)
            t_h = t + (-log(u) / lam_h)
        else:
            n -= 1
            if fifo_flag[head] and counted:
                rsum[ib] += 1.0 - linear_c * (t - fifo_t[head])
            head = (head + 1) % _OCC_CAP
            size -= 1
            if n > 0:
                s_s = _next(s_s)
                u = _out(s_s)
                t_s = t + (-log(u))
            else:
                t_s = inf
    lo = t if t > warmup else warmup
    if horizon > lo:
        occ[n] += horizon - lo
    return (occ_a, lsum_a, rsum_a, hsum_a, jsum_a, jcnt_a, vsum_a, vcnt_a,
            arr_l_a, join_l_a, h_count, event_count, max_n)
