"""Shared fixtures and reference oracles for the test suite."""

import numpy as np
import pytest

from risid.cli import Scenario
from risid.codes import BinarySequence, all_shifts, hadamard_matrix
from risid.detector import correlate


def brute_force_detect(samples, code):
    """Independent two-loop search using the public correlator.

    Same tie-break as the production search: strictly-greater comparison in
    (k, c) iteration order keeps the smallest k, then the smallest c.
    """
    samples = np.asarray(samples)
    m = code.length
    best, bc, bk = -1.0, None, None
    for k in range(len(samples) - m + 1):
        for c in range(1, m + 1):
            d = correlate(samples, code, c, k)
            v = d.real**2 + d.imag**2
            if v > best:
                best, bc, bk = v, c, k
    return best, bc, bk


def brute_force_detect_same_kernel(samples, code):
    """Two-loop search sharing the production metric kernel exactly."""
    samples = np.asarray(samples)
    m = code.length
    shifts_t = all_shifts(code).astype(np.float64).T
    best, bc, bk = -1.0, None, None
    for k in range(len(samples) - m + 1):
        d = samples[k : k + m] @ shifts_t / np.sqrt(m)
        vals = d.real**2 + d.imag**2
        for c_idx in range(m):
            if vals[c_idx] > best:
                best, bc, bk = float(vals[c_idx]), c_idx + 1, k
    return best, bc, bk


def brute_force_pmf(code_l, code_d, v_total):
    """Pure-loop enumeration of the interferer peak pmf (test oracle)."""
    m = code_l.length
    weights = {}
    a_tilde = 0
    for v1 in range(1, v_total + 1):
        for cd in range(1, m + 1):
            laid = np.roll(code_d.symbols, -cd)
            best = 0
            for k in range(v_total + 1):
                for c in range(1, m + 1):
                    t = k - v1
                    if t >= m:
                        continue
                    sl = np.roll(code_l.symbols, -c)
                    acc = 0
                    if t < 0:
                        rng_m2 = range(v1 - k + 1, m + 1)
                    else:
                        rng_m2 = range(1, m - t + 1)
                    for m2 in rng_m2:
                        acc += int(sl[m2 - 1]) * int(laid[m2 + t - 1])
                    best = max(best, abs(acc))
            a_tilde = max(a_tilde, best)
            weights[best**2] = weights.get(best**2, 0) + 1
    total = sum(weights.values())
    return {a: n / total for a, n in sorted(weights.items())}, a_tilde


@pytest.fixture(scope="session")
def h16():
    return hadamard_matrix(16)


@pytest.fixture(scope="session")
def seq16():
    h = hadamard_matrix(16)
    return {r: BinarySequence(id=r, symbols=h[r], row=r) for r in range(1, 16)}


@pytest.fixture
def small_scenario():
    """Tiny single-surface scenario for fast engine tests."""
    return Scenario(
        m=8, v_total=2, code_rows=(7,), n_elements=4, n_horizontal=2,
        trials=2048, seed=99,
    )


@pytest.fixture
def two_ris_scenario():
    return Scenario(
        m=16, v_total=4, code_rows=(1, 2), n_elements=8, n_horizontal=2,
        trials=2048, seed=7, p_dbm=15.0,
    )
