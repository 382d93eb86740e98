"""Oracle-backed tests for the exact linear algebra layer over Z/n.

Small shapes are checked exhaustively against brute-force enumeration of
row spans, kernels and solution sets; larger shapes get randomized and
property-based coverage.  Frozen values below were computed by hand or by
the brute-force oracles in this file.
"""

import itertools
import random
from math import gcd

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msolv.errors import DimensionMismatch, RingMismatch, TooLarge
from msolv.zmodlin import (
    RMatrix,
    ResidueRing,
    howell_form,
    kernel_basis,
    scalar_kernel,
    smith_normal_form_int,
    solve_linear,
    span_equal,
    valuation,
)

# ---------------------------------------------------------------- oracles


def brute_span(M: RMatrix) -> frozenset:
    """All Z/n combinations of the rows, enumerated outright."""
    n = M.modulus
    vecs = set()
    for coeffs in itertools.product(range(n), repeat=M.rows):
        v = [0] * M.cols
        for c, i in zip(coeffs, range(M.rows)):
            if c:
                v = [(a + c * b) % n for a, b in zip(v, M.row(i))]
        vecs.add(tuple(v))
    return frozenset(vecs)


def brute_left_kernel(M: RMatrix) -> frozenset:
    n = M.modulus
    out = set()
    for x in itertools.product(range(n), repeat=M.rows):
        v = [0] * M.cols
        for c, i in zip(x, range(M.rows)):
            if c:
                v = [(a + c * b) % n for a, b in zip(v, M.row(i))]
        if not any(v):
            out.add(x)
    return frozenset(out)


def brute_solutions(M: RMatrix, b) -> frozenset:
    n = M.modulus
    out = set()
    for x in itertools.product(range(n), repeat=M.rows):
        v = [0] * M.cols
        for c, i in zip(x, range(M.rows)):
            if c:
                v = [(a + c * b2) % n for a, b2 in zip(v, M.row(i))]
        if tuple(v) == tuple(a % n for a in b):
            out.add(x)
    return frozenset(out)


def small_matrix_family():
    """A deterministic mix of exhaustive and sampled small matrices."""
    fam = []
    for ents in itertools.product(range(4), repeat=2):
        fam.append(RMatrix.from_rows(4, [list(ents)]))
    for ents in itertools.product(range(4), repeat=4):
        fam.append(RMatrix.from_rows(4, [list(ents[:2]), list(ents[2:])]))
    for a in range(9):
        fam.append(RMatrix.from_rows(9, [[a]]))
    rng = random.Random(20240311)
    for _ in range(60):
        fam.append(
            RMatrix.from_rows(9, [[rng.randrange(9) for _ in range(2)] for _ in range(2)])
        )
    for _ in range(60):
        fam.append(
            RMatrix.from_rows(6, [[rng.randrange(6) for _ in range(3)] for _ in range(2)])
        )
    for _ in range(40):
        fam.append(
            RMatrix.from_rows(8, [[rng.randrange(8) for _ in range(2)] for _ in range(3)])
        )
    return fam


FAMILY = small_matrix_family()


# ----------------------------------------------------------- Howell form


def test_howell_preserves_span_exhaustive():
    for M in FAMILY:
        H = howell_form(M).matrix
        assert brute_span(H) == brute_span(M)


def test_howell_is_canonical_under_span_preserving_changes():
    rng = random.Random(7)
    for M in FAMILY[::3]:
        H = howell_form(M).matrix
        rows = M.row_list()
        rng.shuffle(rows)
        if len(rows) > 1:
            c = rng.randrange(M.modulus)
            rows[0] = [(a + c * b) % M.modulus for a, b in zip(rows[0], rows[1])]
        extra = rng.choice(sorted(brute_span(M)))
        rows.append(list(extra))
        M2 = RMatrix.from_rows(M.modulus, rows, cols=M.cols)
        assert howell_form(M2).matrix == H


def test_howell_idempotent():
    for M in FAMILY[::5]:
        H = howell_form(M).matrix
        if H.rows == 0:
            continue
        assert howell_form(H).matrix == H


def test_howell_transform_recovers_form():
    for M in FAMILY[::2]:
        hf = howell_form(M)
        if hf.matrix.rows == 0:
            continue
        assert hf.transform.mul(M) == hf.matrix


def test_howell_span_size_matches_brute():
    for M in FAMILY[::4]:
        assert howell_form(M).span_size == len(brute_span(M))


def test_howell_single_entry_example():
    H = howell_form(RMatrix.from_rows(4, [[2]])).matrix
    assert H.row_list() == [[2]]


# ---------------------------------------------------------------- kernel


def test_kernel_matches_brute_exhaustive():
    for M in FAMILY[::2]:
        K = kernel_basis(M)
        assert brute_span(K) == brute_left_kernel(M)


def test_kernel_rows_annihilate():
    for M in FAMILY[::3]:
        K = kernel_basis(M)
        for i in range(K.rows):
            v = [0] * M.cols
            for c, j in zip(K.row(i), range(M.rows)):
                if c:
                    v = [(a + c * b) % M.modulus for a, b in zip(v, M.row(j))]
            assert not any(v)


def test_kernel_examples():
    K = kernel_basis(RMatrix.from_rows(9, [[3]]))
    assert K.row_list() == [[3]]
    K = kernel_basis(RMatrix.identity(4, 2))
    assert K.rows == 0
    K = kernel_basis(RMatrix.from_rows(4, [[2, 2]]))
    assert K.row_list() == [[2]]


# ----------------------------------------------------------------- solve


def test_solve_scalar_examples():
    x, K = solve_linear(RMatrix.from_rows(4, [[2]]), (2,))
    assert x is not None
    sols = {(x[0] + c * K[0, 0]) % 4 for c in range(4)} if K.rows else {x[0]}
    assert sols == {1, 3}

    x, _ = solve_linear(RMatrix.from_rows(4, [[2]]), (1,))
    assert x is None

    I = RMatrix.identity(6, 3)
    x, K = solve_linear(I, (4, 5, 1))
    assert x == (4, 5, 1) and K.rows == 0


def test_solve_matches_brute_exhaustive():
    rng = random.Random(99)
    for M in FAMILY[::2]:
        n = M.modulus
        bs = list(itertools.product(range(n), repeat=M.cols))
        if len(bs) > 20:
            bs = rng.sample(bs, 20)
        for b in bs:
            sols = brute_solutions(M, b)
            x, K = solve_linear(M, b)
            if not sols:
                assert x is None
            else:
                assert x in sols
                shifted = {
                    tuple((a + k) % n for a, k in zip(x, v)) for v in brute_span(K)
                }
                assert shifted == sols


def test_solve_rhs_length_checked():
    with pytest.raises(DimensionMismatch):
        solve_linear(RMatrix.identity(4, 2), (1, 2, 3))


# ------------------------------------------------------------ span_equal


def test_span_equal_matches_brute():
    rng = random.Random(5)
    by_shape = {}
    for M in FAMILY:
        by_shape.setdefault((M.modulus, M.cols), []).append(M)
    for group in by_shape.values():
        for _ in range(min(60, len(group) ** 2)):
            A, B = rng.choice(group), rng.choice(group)
            assert span_equal(A, B) == (brute_span(A) == brute_span(B))


def test_span_equal_ring_checks():
    with pytest.raises(RingMismatch):
        span_equal(RMatrix.identity(4, 2), RMatrix.identity(9, 2))
    with pytest.raises(DimensionMismatch):
        span_equal(RMatrix.identity(4, 2), RMatrix.identity(4, 3))


# ------------------------------------------------------------------- SNF


def minor_gcd(rows, k):
    """gcd of all k x k minors (0 when there are none or all vanish)."""
    nr, nc = len(rows), len(rows[0])
    g = 0
    for rsel in itertools.combinations(range(nr), k):
        for csel in itertools.combinations(range(nc), k):
            g = gcd(g, det_int([[rows[i][j] for j in csel] for i in rsel]))
    return g


def det_int(m):
    if len(m) == 1:
        return m[0][0]
    return sum(
        (-1) ** j * m[0][j] * det_int([r[:j] + r[j + 1 :] for r in m[1:]])
        for j in range(len(m))
    )


def snf_oracle(rows):
    """Invariant factors from determinantal divisors d_k = D_k / D_{k-1}."""
    out = []
    prev = 1
    for k in range(1, min(len(rows), len(rows[0])) + 1):
        dk = minor_gcd(rows, k)
        if dk == 0:
            break
        out.append(dk // prev)
        prev = dk
    return tuple(out)


def test_smith_frozen_examples():
    assert smith_normal_form_int([[2, 0], [0, 3]]) == (1, 6)
    assert smith_normal_form_int([[0, 0, 0, 0]]) == ()
    assert smith_normal_form_int([[1]]) == (1,)


def test_smith_matches_determinantal_divisors():
    rng = random.Random(31337)
    cases = [
        [[0, 0], [0, 0]],
        [[1, 0], [0, 1]],
        [[2, 4], [6, 8]],
        [[4, 0, 0], [0, 6, 0], [0, 0, 10]],
    ]
    for _ in range(80):
        r = rng.randrange(1, 4)
        c = rng.randrange(1, 4)
        cases.append([[rng.randrange(-6, 7) for _ in range(c)] for _ in range(r)])
    for rows in cases:
        got = smith_normal_form_int(rows)
        assert got == snf_oracle(rows), rows


def test_smith_divisibility_chain():
    rng = random.Random(4)
    for _ in range(40):
        rows = [[rng.randrange(-9, 10) for _ in range(3)] for _ in range(3)]
        factors = smith_normal_form_int(rows)
        for a, b in zip(factors, factors[1:]):
            assert b % a == 0


def test_smith_size_guard():
    with pytest.raises(TooLarge):
        smith_normal_form_int([[0] * 65 for _ in range(65)])


# --------------------------------------------------------- scalar kernel


def test_scalar_kernel_frozen_examples():
    assert scalar_kernel(3, 3, 2) == 3
    assert scalar_kernel(6, 2, 3) == 4
    assert scalar_kernel(5, 3, 2) == 0


def test_scalar_kernel_matches_brute():
    for ell in (2, 3, 5):
        for sigma in range(1, 5):
            mod = ell**sigma
            for ntilde in range(0, 31):
                g = scalar_kernel(ntilde, ell, sigma)
                want = {a for a in range(mod) if (a * ntilde) % mod == 0}
                got = {(a * g) % mod for a in range(mod)}
                assert got == want, (ntilde, ell, sigma)


def test_scalar_kernel_of_zero_is_everything():
    assert scalar_kernel(0, 3, 2) == 1


# ------------------------------------------------------- ring primitives


def test_stab_unit_property():
    for n in range(2, 40):
        ring = ResidueRing(n)
        for a in range(n):
            u = ring.stab_unit(a)
            assert gcd(u, n) == 1
            assert (u * a) % n == gcd(a, n) % n


def test_valuation():
    assert valuation(12, 2) == 2
    assert valuation(12, 3) == 1
    assert valuation(7, 2) == 0
    with pytest.raises(ValueError):
        valuation(0, 2)


def test_rmatrix_shape_checks():
    with pytest.raises(DimensionMismatch):
        RMatrix.identity(4, 2).mul(RMatrix.identity(4, 3).vstack(RMatrix.zero(4, 1, 3)))
    with pytest.raises(RingMismatch):
        RMatrix.identity(4, 2).mul(RMatrix.identity(9, 2))


# ------------------------------------------------------------ properties


@st.composite
def rmatrices(draw, max_rows=4, max_cols=4):
    n = draw(st.sampled_from([2, 3, 4, 5, 6, 8, 9, 12]))
    r = draw(st.integers(1, max_rows))
    c = draw(st.integers(1, max_cols))
    ents = draw(st.lists(st.integers(0, n - 1), min_size=r * c, max_size=r * c))
    return RMatrix.from_rows(n, [ents[i * c : (i + 1) * c] for i in range(r)])


@given(rmatrices())
@settings(max_examples=80, deadline=None)
def test_howell_properties_random(M):
    hf = howell_form(M)
    H = hf.matrix
    if H.rows:
        assert hf.transform.mul(M) == H
        assert howell_form(H).matrix == H
    # mutual span containment via solvability, no brute force needed
    for i in range(M.rows):
        x, _ = solve_linear(H, M.row(i)) if H.rows else ((), None)
        assert x is not None or any(M.row(i))
    for i in range(H.rows):
        x, _ = solve_linear(M, H.row(i))
        assert x is not None


@given(rmatrices())
@settings(max_examples=60, deadline=None)
def test_kernel_annihilates_random(M):
    K = kernel_basis(M)
    for i in range(K.rows):
        v = [0] * M.cols
        for c, j in zip(K.row(i), range(M.rows)):
            if c:
                v = [(a + c * b) % M.modulus for a, b in zip(v, M.row(j))]
        assert not any(v)


@given(rmatrices(max_rows=3, max_cols=3), st.integers(0, 10**6))
@settings(max_examples=60, deadline=None)
def test_solve_feasibility_random(M, seed):
    rng = random.Random(seed)
    # right-hand sides built from the row span are always feasible
    coeffs = [rng.randrange(M.modulus) for _ in range(M.rows)]
    b = [0] * M.cols
    for c, i in zip(coeffs, range(M.rows)):
        if c:
            b = [(a + c * e) % M.modulus for a, e in zip(b, M.row(i))]
    x, _ = solve_linear(M, b)
    assert x is not None
    v = [0] * M.cols
    for c, i in zip(x, range(M.rows)):
        if c:
            v = [(a + c * e) % M.modulus for a, e in zip(v, M.row(i))]
    assert v == b
