"""Pure Python event-loop kernel for the queue simulator.

This module and the Cython twin ``_simcore.pyx`` implement the same
``simulate`` function with identical arithmetic, so a run produces
bit-identical accumulators on either backend. Keep every floating-point
expression in the same order in both files when editing.

Randomness comes from four splitmix64 streams, one per exponential clock
(low-need arrivals, high-need arrivals, service) plus one for the join
coin. Stream k's initial state is the splitmix64 output mix of
``seed + k * golden`` where golden is the 64-bit golden-ratio constant,
so the four starting points are scattered pseudo-randomly around the
common state orbit. (Starting the streams at raw fixed offsets would
make each one a lagged copy of the others, since every stream advances
by the same golden increment.) Each draw advances splitmix64 once and
maps to the uniform ``((z >> 11) + 1) * 2**-53`` in (0, 1], so logs never
see zero and a join probability of exactly 0 or 1 is honored exactly.

Simultaneous clock ties (measure zero, but fixed for determinism) break
in the order: low-need arrival, high-need arrival, service completion.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1
_GOLD = 0x9E3779B97F4A7C15
_TWO_NEG53 = 1.0 / 9007199254740992.0

# Hard cap on the tracked queue length; runs that reach it are not
# meaningfully stationary and abort loudly.
OCC_CAP = 65536

_N_BATCH = 20


def _mix64(z):
    """The splitmix64 output scramble of a 64-bit state."""
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _u01(state):
    """Advance one splitmix64 step; return (new_state, uniform in (0,1])."""
    state = (state + _GOLD) & _MASK
    z = _mix64(state)
    return state, ((z >> 11) + 1) * _TWO_NEG53


def simulate(lam_l, lam_h, horizon, warmup, seed,
             p, tail_join, u_ltab, u_lslope, u_htab, u_hslope,
             track_realized, linear_c):
    """Run the event loop; return raw post-warmup accumulators.

    Array ``p`` gives the join probability by queue length with
    ``tail_join`` past its end; ``u_ltab``/``u_htab`` give each type's
    joining utility, extended linearly with the matching slope past the
    table. When ``track_realized`` is nonzero, each
    joining low-need user's realized utility 1 - linear_c * sojourn is
    credited at departure.

    Returns (occ, lsum, rsum, hsum, jsum, jcnt, vsum, vcnt, arr_l,
    join_l, h_count, event_count, max_n): time in each state, per-batch
    welfare and obedience sums and counts, per-length low-need arrival
    and join counts, the post-warmup high-need arrival count, the total
    event count, and the largest queue length seen.
    """
    occ = np.zeros(OCC_CAP)
    lsum = np.zeros(_N_BATCH)
    rsum = np.zeros(_N_BATCH)
    hsum = np.zeros(_N_BATCH)
    jsum = np.zeros(_N_BATCH)
    jcnt = np.zeros(_N_BATCH, dtype=np.int64)
    vsum = np.zeros(_N_BATCH)
    vcnt = np.zeros(_N_BATCH, dtype=np.int64)
    arr_l = np.zeros(OCC_CAP, dtype=np.int64)
    join_l = np.zeros(OCC_CAP, dtype=np.int64)

    n_p = len(p)
    n_ul = len(u_ltab)
    ul_last = u_ltab[n_ul - 1]
    n_uh = len(u_htab)
    uh_last = u_htab[n_uh - 1]

    # FIFO of in-system customers: arrival time and whether the realized
    # estimator tracks them (joined low-need users only)
    fifo_t = np.zeros(OCC_CAP)
    fifo_flag = np.zeros(OCC_CAP, dtype=np.uint8)
    head = 0
    size = 0

    blen = (horizon - warmup) / float(_N_BATCH)
    inf = math.inf

    s_l = _mix64((seed + 1 * _GOLD) & _MASK)
    s_h = _mix64((seed + 2 * _GOLD) & _MASK)
    s_s = _mix64((seed + 3 * _GOLD) & _MASK)
    s_c = _mix64((seed + 4 * _GOLD) & _MASK)

    t = 0.0
    n = 0
    max_n = 0
    h_count = 0
    event_count = 0

    if lam_l > 0.0:
        s_l, u = _u01(s_l)
        t_l = -math.log(u) / lam_l
    else:
        t_l = inf
    if lam_h > 0.0:
        s_h, u = _u01(s_h)
        t_h = -math.log(u) / lam_h
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
        # time credit for the interval [t, t_next) in state n
        lo = t if t > warmup else warmup
        if t_next > lo:
            occ[n] += t_next - lo
        t = t_next
        event_count += 1
        counted = t >= warmup
        if counted:
            ib = int((t - warmup) / blen)
            if ib >= _N_BATCH:
                ib = _N_BATCH - 1
        else:
            ib = 0
        if kind == 0:
            # low-need arrival: coin versus the advice probability
            pj = p[n] if n < n_p else tail_join
            s_c, u = _u01(s_c)
            un = u_ltab[n] if n < n_ul else ul_last - u_lslope * (n - (n_ul - 1))
            if counted:
                arr_l[n] += 1
            if u <= pj:
                if counted:
                    join_l[n] += 1
                    lsum[ib] += un
                    jsum[ib] += un
                    jcnt[ib] += 1
                fifo_t[(head + size) % OCC_CAP] = t
                fifo_flag[(head + size) % OCC_CAP] = track_realized
                size += 1
                n += 1
                if n > max_n:
                    max_n = n
                if n >= OCC_CAP - 1:
                    raise RuntimeError(
                        "queue length reached the tracking cap; the "
                        "mechanism is not stable at these rates")
                if n == 1:
                    s_s, u = _u01(s_s)
                    t_s = t + (-math.log(u))
            else:
                if counted:
                    vsum[ib] += un
                    vcnt[ib] += 1
            s_l, u = _u01(s_l)
            t_l = t + (-math.log(u) / lam_l)
        elif kind == 1:
            # high-need arrival: joins unconditionally
            un = u_htab[n] if n < n_uh else uh_last - u_hslope * (n - (n_uh - 1))
            if counted:
                h_count += 1
                hsum[ib] += un
            fifo_t[(head + size) % OCC_CAP] = t
            fifo_flag[(head + size) % OCC_CAP] = 0
            size += 1
            n += 1
            if n > max_n:
                max_n = n
            if n >= OCC_CAP - 1:
                raise RuntimeError(
                    "queue length reached the tracking cap; the "
                    "mechanism is not stable at these rates")
            if n == 1:
                s_s, u = _u01(s_s)
                t_s = t + (-math.log(u))
            s_h, u = _u01(s_h)
            t_h = t + (-math.log(u) / lam_h)
        else:
            # service completion: departure of the FIFO head
            n -= 1
            if fifo_flag[head] and counted:
                rsum[ib] += 1.0 - linear_c * (t - fifo_t[head])
            head = (head + 1) % OCC_CAP
            size -= 1
            if n > 0:
                s_s, u = _u01(s_s)
                t_s = t + (-math.log(u))
            else:
                t_s = inf
    # flush the final interval [t, horizon)
    lo = t if t > warmup else warmup
    if horizon > lo:
        occ[n] += horizon - lo
    return (occ, lsum, rsum, hsum, jsum, jcnt, vsum, vcnt,
            arr_l, join_l, h_count, event_count, max_n)
