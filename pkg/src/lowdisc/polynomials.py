"""Small polynomial toolbox: multilinear multivariate polynomials on the
Boolean cube (dict-of-monomials), univariate helpers, and block
symmetrization into falling-factorial weight polynomials.
"""

import itertools
from fractions import Fraction


class MultiPoly:
    """Multilinear polynomial over {0,1}^n variables, stored as
    {frozenset(var indices): coefficient}. Products are reduced
    multilinearly (x_i^2 = x_i), which is exact on the Boolean cube."""

    def __init__(self, terms=None):
        self.terms = {}
        if terms:
            for mono, c in terms.items():
                if c != 0:
                    self.terms[frozenset(mono)] = self.terms.get(frozenset(mono), 0) + c

    @classmethod
    def constant(cls, c):
        return cls({frozenset(): c})

    @classmethod
    def variable(cls, i):
        return cls({frozenset([i]): 1})

    @classmethod
    def linear(cls, weights, const=0):
        """const + sum_i weights[i] * x_i (zero weights dropped)."""
        terms = {frozenset(): const}
        for i, w in enumerate(weights):
            if w:
                terms[frozenset([i])] = w
        return cls(terms)

    def __add__(self, other):
        out = dict(self.terms)
        for mono, c in other.terms.items():
            out[mono] = out.get(mono, 0) + c
        return MultiPoly({m: c for m, c in out.items() if c != 0})

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        return MultiPoly({m: c * v for m, v in self.terms.items()})

    def __mul__(self, other):
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = m1 | m2  # multilinear reduction
                out[m] = out.get(m, 0) + c1 * c2
        return MultiPoly({m: c for m, c in out.items() if c != 0})

    def degree(self):
        return max((len(m) for m in self.terms), default=0)

    def degree_on(self, var_subset):
        """Max number of variables from var_subset in any monomial."""
        vs = set(var_subset)
        return max((len(m & vs) for m in self.terms), default=0)

    def evaluate(self, x):
        """x: indexable of 0/1 (or numbers; monomials multiply values)."""
        total = 0
        for mono, c in self.terms.items():
            v = c
            for i in mono:
                v = v * x[i]
                if v == 0:
                    break
            total += v
        return total

    def shift_vars(self, offset):
        return MultiPoly({frozenset(i + offset for i in m): c
                          for m, c in self.terms.items()})

    def __repr__(self):
        return f"MultiPoly({len(self.terms)} terms, deg {self.degree()})"


# --- univariate helpers (coefficient lists, ascending) ----------------------

def poly_eval(coeffs, x):
    acc = 0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def poly_mul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


def poly_add(a, b):
    n = max(len(a), len(b))
    return [(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0)
            for i in range(n)]


def falling_factorial_coeffs(j):
    """Coefficients (ascending, exact ints) of t(t-1)...(t-j+1)."""
    coeffs = [1]
    for i in range(j):
        coeffs = poly_add([0] + coeffs, [-i * c for c in coeffs])
    return coeffs


def symmetrize(p, blocks):
    """Average of p over independent permutations of each block of
    variables, as a polynomial in the block weights t_1..t_k.

    blocks: list of lists of variable indices (disjoint, covering every
    variable p uses). Returns a dict {exponent tuple e: coeff} for the
    monomial prod_b t_b^{e_b}, with exact Fraction coefficients when the
    input coefficients are exact.

    Each monomial using a_b variables from block b averages to
    prod_b FF(t_b, a_b) / FF(n_b, a_b) where FF is the falling factorial.
    """
    blocks = [list(b) for b in blocks]
    nb = [len(b) for b in blocks]
    index_of = {}
    for bi, b in enumerate(blocks):
        for v in b:
            index_of[v] = bi

    out = {}
    for mono, c in p.terms.items():
        counts = [0] * len(blocks)
        for v in mono:
            counts[index_of[v]] += 1
        # coefficient polynomial: prod_b FF(t_b, a_b)/FF(n_b, a_b)
        factor_polys = []
        scale = Fraction(1)
        for bi, a in enumerate(counts):
            ff = falling_factorial_coeffs(a)
            denom = 1
            for i in range(a):
                denom *= nb[bi] - i
            scale *= Fraction(1, denom)
            factor_polys.append(ff)
        # expand the product over blocks into exponent tuples
        partial = {tuple([0] * len(blocks)): Fraction(c) * scale}
        for bi, ff in enumerate(factor_polys):
            nxt = {}
            for e, v in partial.items():
                for deg, fc in enumerate(ff):
                    if fc == 0:
                        continue
                    e2 = list(e)
                    e2[bi] += deg
                    e2 = tuple(e2)
                    nxt[e2] = nxt.get(e2, Fraction(0)) + v * fc
            partial = nxt
        for e, v in partial.items():
            out[e] = out.get(e, Fraction(0)) + v
    return {e: v for e, v in out.items() if v != 0}


def symmetric_eval(sym, ts):
    """Evaluate a symmetrize() result at block weights ts."""
    total = 0
    for e, c in sym.items():
        v = c
        for t, d in zip(ts, e):
            v *= t ** d
        total += v
    return total


def all_points(n):
    """All of {0,1}^n, little-endian bit j = x_j."""
    return [tuple((i >> j) & 1 for j in range(n)) for i in range(2 ** n)]


def monomials_upto_deg(n, d):
    """Multilinear monomials of degree 0..d, graded-lex."""
    out = [()]
    for deg in range(1, d + 1):
        out.extend(itertools.combinations(range(n), deg))
    return out
