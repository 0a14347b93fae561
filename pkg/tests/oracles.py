"""Brute-force reference computations used to validate closed forms.

Everything here works on plain callables and truncated summation with a
large explicit state space, deliberately sharing no code with the package
internals it checks. Truncation depth is chosen so the neglected geometric
tail is far below the comparison tolerances (ratios are bounded away from
1 in all tests that use these helpers).
"""

import math

TRUNC = 20_000


def brute_threshold_pi(lam_l, lam_h, x, n_states=TRUNC):
    """Stationary distribution of threshold advice x, by direct recursion."""
    lam = lam_l + lam_h
    if math.isinf(x):
        ratios = [lam] * (n_states - 1)
    else:
        m = int(math.floor(x))
        a = x - m
        ratios = []
        for n in range(n_states - 1):
            if n < m:
                ratios.append(lam)
            elif n == m:
                ratios.append(lam_h + a * lam_l)
            else:
                ratios.append(lam_h)
    pi = [1.0]
    for r in ratios:
        pi.append(pi[-1] * r)
    z = sum(pi)
    return [v / z for v in pi]


def brute_mechanism_pi(lam_l, lam_h, p_of_n, n_states=TRUNC):
    """Stationary distribution of arbitrary advice probabilities p_of_n(n)."""
    pi = [1.0]
    for n in range(n_states - 1):
        pi.append(pi[-1] * (lam_h + lam_l * p_of_n(n)))
    z = sum(pi)
    return [v / z for v in pi]


def brute_join_value(lam_l, lam_h, u_l, pi):
    return sum((pi[n + 1] - lam_h * pi[n]) * u_l(n) for n in range(len(pi) - 1))


def brute_leave_value(lam_l, lam_h, u_l, pi):
    lam = lam_l + lam_h
    return sum((lam * pi[n] - pi[n + 1]) * u_l(n) for n in range(len(pi) - 1))


def brute_welfare_h(lam_h, u_h, pi):
    return lam_h * sum(pi[n] * u_h(n) for n in range(len(pi)))


def brute_g(u, q, n_terms=TRUNC):
    """Truncated sum_{k} q**k u(k)."""
    return sum(q ** k * u(k) for k in range(n_terms))


def brute_series_from(u, q, start, n_terms=TRUNC):
    """Truncated sum_{j} q**j u(start + j)."""
    return sum(q ** j * u(start + j) for j in range(n_terms))


def linear_u(c):
    return lambda n: 1.0 - c * (n + 1)


def tabulated_u(values, d):
    k = len(values) - 1

    def u(n):
        if n <= k:
            return values[n]
        return values[k] - d * (n - k)

    return u
