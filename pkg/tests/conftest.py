"""Brute-force oracles written independently of the library.

Everything here loops over ``itertools.product`` assignments in pure Python
so that the vectorized library code is checked against a second, naive
implementation.
"""

import itertools
import math

import numpy as np
import pytest

from netestimands import biclique


def assignments(n):
    """All 0/1 tuples; index k of the result has bit i equal to z[i]."""
    out = [None] * (1 << n)
    for z in itertools.product((0, 1), repeat=n):
        out[sum(b << i for i, b in enumerate(z))] = z
    return out


def oracle_pmf(kind, n, param):
    def pmf(z):
        t = sum(z)
        if kind == "bern":
            return math.prod(param if b else 1 - param for b in z)
        if kind == "hbern":
            return math.prod(p if b else 1 - p for p, b in zip(param, z))
        if kind == "cr":
            return 1 / math.comb(n, param) if t == param else 0.0
        if kind == "aon":
            return param if t == n else (1 - param if t == 0 else 0.0)
        raise ValueError(kind)

    return pmf


def oracle_table(g, fn):
    """``y[i, mask] = fn(i, z)`` over all assignments."""
    zs = assignments(g.n)
    return np.array([[fn(i, z) for z in zs] for i in range(g.n)], dtype=float)


def treated_neighbors(g, i, z):
    return sum(z[j] for j in g.neighbors[i])


def cond_mean(zs, pmf, value, event=lambda z: True):
    num = den = 0.0
    for z in zs:
        w = pmf(z)
        if w and event(z):
            num += w * value(z)
            den += w
    return num / den


def oracle_efao(y, pmf, focal):
    """E[ mean_{i in N_S} Y_i | N_S nonempty ] by enumeration."""
    n = y.shape[0]
    zs = assignments(n)
    idx = {z: k for k, z in enumerate(zs)}

    def value(z):
        members = [i for i in range(n) if focal(i, z)]
        return sum(y[i, idx[z]] for i in members) / len(members)

    return cond_mean(zs, pmf, value, lambda z: any(focal(i, z) for i in range(n)))


@pytest.fixture
def k23():
    return biclique(2, 3)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
