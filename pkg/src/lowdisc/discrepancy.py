"""m-discrepancy of integer multisets: exact evaluation, theory bounds,
and seeded random search.

The discrepancy of a multiset Z modulo m is

    disc(Z, m) = max_{k=1..m-1} |(1/n) sum_j omega^{k z_j}|,   omega = exp(2 pi i / m),

computed here from the frequency vector of Z. Values are doubles with a
certified error bound; a 50-digit cross-check oracle is available for
small moduli.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

_EPS_MACHINE = 2.220446049250313e-16

# Threshold at which the dense exact-length FFT beats the per-entry loop.
_FFT_DENSITY = 64


class BudgetExhausted(RuntimeError):
    """Random search ran out of trials; .best carries the best candidate."""

    def __init__(self, message, best=None, best_value=None):
        super().__init__(message)
        self.best = best
        self.best_value = best_value


def fnv1a_64(data):
    """64-bit FNV-1a over a byte string."""
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def elements_digest(elements, m):
    """Digest of a residue multiset: FNV-1a-64 of the sorted residues
    rendered as comma-joined decimal strings (bit-exact spec in
    docs/formats.md)."""
    residues = sorted(e % m for e in elements)
    return fnv1a_64(",".join(str(r) for r in residues).encode("utf-8"))


class IntegerMultiset:
    """Multiset of integers considered modulo m, with its frequency vector."""

    def __init__(self, elements, m):
        if m < 2:
            raise ValueError("modulus must be >= 2")
        self.m = int(m)
        self.elements = tuple(int(e) for e in elements)
        freq = [0] * self.m
        for e in self.elements:
            freq[e % self.m] += 1
        self.freq = tuple(freq)

    @property
    def cardinality(self):
        return len(self.elements)

    def residues(self):
        return tuple(e % self.m for e in self.elements)

    def digest(self):
        return elements_digest(self.elements, self.m)

    def negate(self):
        return IntegerMultiset([(-e) % self.m for e in self.elements], self.m)

    def reduce(self):
        return IntegerMultiset([e % self.m for e in self.elements], self.m)

    def duplicate(self, k):
        return IntegerMultiset(self.elements * k, self.m)

    def __eq__(self, other):
        return (isinstance(other, IntegerMultiset) and self.m == other.m
                and sorted(self.residues()) == sorted(other.residues()))

    def __repr__(self):
        return f"IntegerMultiset(n={self.cardinality}, m={self.m})"


@dataclass(frozen=True)
class DiscrepancyCertificate:
    m: int
    n: int
    value: float
    argmax_k: int
    numeric_error: float
    elements_digest: int

    def to_json_dict(self):
        return {
            "schema": "lowdisc.discrepancy_certificate/1",
            "m": str(self.m),
            "n": str(self.n),
            "value": self.value,
            "argmax_k": str(self.argmax_k),
            "numeric_error": self.numeric_error,
            "elements_digest": str(self.elements_digest),
        }

    def to_json(self):
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def _fourier_magnitudes(freq_items, m, dense_freq=None):
    """|sum_j f_j omega^{kj}| for k = 0..m-1.

    Sparse inputs use direct O(m*s) accumulation at exact m-th roots;
    dense ones use the exact-length FFT (pocketfft handles arbitrary m
    via Bluestein), which evaluates the same sums.
    """
    if dense_freq is not None and len(freq_items) >= _FFT_DENSITY:
        return np.abs(np.fft.fft(np.asarray(dense_freq, dtype=float)))
    k = np.arange(m)
    acc = np.zeros(m, dtype=complex)
    for j, f in freq_items:
        acc += f * np.exp(2j * np.pi * ((k * j) % m) / m)
    return np.abs(acc)


def disc(Z):
    """Discrepancy certificate for an IntegerMultiset.

    The empty multiset has value 0 by convention (argmax_k = 1).
    """
    m = Z.m
    n = Z.cardinality
    if n == 0:
        return DiscrepancyCertificate(m=m, n=0, value=0.0, argmax_k=1,
                                      numeric_error=0.0,
                                      elements_digest=Z.digest())
    items = [(j, f) for j, f in enumerate(Z.freq) if f]
    mags = _fourier_magnitudes(items, m, dense_freq=Z.freq)
    # k = 0 is the constant coefficient; ties broken by smallest k.
    k = 1 + int(np.argmax(mags[1:]))
    value = float(mags[k]) / n
    err = len(items) * 4 * _EPS_MACHINE * m
    return DiscrepancyCertificate(m=m, n=n, value=min(value, 1.0), argmax_k=k,
                                  numeric_error=err,
                                  elements_digest=Z.digest())


def disc_highprec(Z, dps=50):
    """Cross-check oracle: the same maximum evaluated with mpmath at `dps`
    significant digits. The discrepancy value is an algebraic (generally
    irrational) number, so "exact" here means exact roots of unity summed
    at high precision."""
    import mpmath

    m, n = Z.m, Z.cardinality
    if n == 0:
        return mpmath.mpf(0)
    with mpmath.workdps(dps):
        best = mpmath.mpf(0)
        items = [(j, f) for j, f in enumerate(Z.freq) if f]
        for k in range(1, m):
            acc = mpmath.mpc(0)
            for j, f in items:
                acc += f * mpmath.expjpi(mpmath.mpf(2 * ((k * j) % m)) / m)
            best = max(best, abs(acc))
        return best / n


def theory_bounds(n, m, eps):
    """(tail_bound, floor): the random-multiset tail 4m exp(-n eps^2/8)
    and the size floor 1 - 2 pi / floor((m-1)^{1/n}), clamped to >= 0."""
    if n < 1 or m < 2 or not (0 < eps <= 1):
        raise ValueError("need n >= 1, m >= 2, 0 < eps <= 1")
    tail = 4 * m * math.exp(-n * eps * eps / 8)
    # (m-1)^{1/n} via integer root to dodge float-pow edge cases.
    root = round((m - 1) ** (1.0 / n))
    while root ** n > m - 1:
        root -= 1
    while (root + 1) ** n <= m - 1:
        root += 1
    floor = 1 - 2 * math.pi / root if root >= 1 else 0.0
    return tail, max(floor, 0.0)


def random_search(m, size, eps, seed, budget):
    """Seeded rejection sampling for a set of `size` distinct nonzero
    residues mod m with disc <= eps. Deterministic given the arguments.

    Raises BudgetExhausted (carrying the best candidate) after `budget`
    failed trials.
    """
    if not (1 <= size <= m - 1):
        raise ValueError("need 1 <= size <= m-1")
    if not (0 < eps < 1):
        raise ValueError("need 0 < eps < 1")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if seed is None:
        raise ValueError("seed is required (sampling mode)")
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    best, best_value = None, math.inf
    for _ in range(budget):
        cand = rng.choice(m - 1, size=size, replace=False) + 1
        Z = IntegerMultiset(sorted(int(z) for z in cand), m)
        cert = disc(Z)
        if cert.value <= eps:
            return Z
        if cert.value < best_value:
            best, best_value = Z, cert.value
    raise BudgetExhausted(
        f"no set with disc <= {eps} in {budget} trials (best {best_value:.4f})",
        best=best, best_value=best_value)
