"""Exact linear algebra over Z/n and over Z.

Everything here follows the row-vector convention: a matrix M with r rows
and c columns represents the map v -> v*M taking length-r row vectors to
length-c row vectors, and "the span of M" means the span of its rows.

Over Z/n row reduction alone does not characterise row spans (Z/n is not a
field); the Howell normal form does.  howell_form is the canonical form used
everywhere in the package: two matrices over the same Z/n have equal row
spans iff their Howell forms are identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Iterable, Optional, Sequence

from .errors import DimensionMismatch, RingMismatch, TooLarge


def valuation(n: int, p: int) -> int:
    """p-adic valuation of n; requires n != 0 and p >= 2."""
    if n == 0:
        raise ValueError("valuation of 0 is infinite")
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


class ResidueRing:
    """The ring Z/n with canonical representatives 0..n-1.

    Args:
        modulus: n >= 2.
    """

    def __init__(self, modulus: int):
        if modulus < 2:
            raise ValueError(f"modulus must be >= 2, got {modulus}")
        self.modulus = modulus

    def normalize(self, a: int) -> int:
        return a % self.modulus

    def is_unit(self, a: int) -> bool:
        return gcd(a, self.modulus) == 1

    def inv(self, a: int) -> int:
        """Multiplicative inverse of a unit."""
        return pow(a % self.modulus, -1, self.modulus)

    def stab_unit(self, a: int) -> int:
        """A unit u with u*a = gcd(a, n) in Z/n.

        This is the normalisation step of the Howell form: any element can be
        moved to the canonical generator of the ideal it generates by a unit.
        """
        n = self.modulus
        a %= n
        if a == 0:
            return 1
        g = gcd(a, n)
        u = pow(a // g, -1, n // g)
        # lift to a unit mod n: u is determined mod n/g and some lift is
        # coprime to n because a/g is
        while gcd(u, n) != 1:
            u += n // g
        return u % n

    def __eq__(self, other) -> bool:
        return isinstance(other, ResidueRing) and other.modulus == self.modulus

    def __hash__(self) -> int:
        return hash(("ResidueRing", self.modulus))

    def __repr__(self) -> str:
        return f"ResidueRing({self.modulus})"


@dataclass(frozen=True)
class RMatrix:
    """Immutable matrix over Z/n (row-major entries, canonical residues)."""

    modulus: int
    rows: int
    cols: int
    entries: tuple

    @staticmethod
    def from_rows(modulus: int, rows: Sequence[Sequence[int]], cols: Optional[int] = None) -> "RMatrix":
        rows = [list(r) for r in rows]
        if rows:
            cols = len(rows[0])
            if any(len(r) != cols for r in rows):
                raise DimensionMismatch("ragged rows")
        elif cols is None:
            raise DimensionMismatch("column count needed for empty matrix")
        flat = tuple(a % modulus for r in rows for a in r)
        return RMatrix(modulus, len(rows), cols, flat)

    @staticmethod
    def identity(modulus: int, size: int) -> "RMatrix":
        flat = tuple(1 if i == j else 0 for i in range(size) for j in range(size))
        return RMatrix(modulus, size, size, flat)

    @staticmethod
    def zero(modulus: int, rows: int, cols: int) -> "RMatrix":
        return RMatrix(modulus, rows, cols, (0,) * (rows * cols))

    def row(self, i: int) -> tuple:
        return self.entries[i * self.cols : (i + 1) * self.cols]

    def row_list(self) -> list:
        return [list(self.row(i)) for i in range(self.rows)]

    def __getitem__(self, ij) -> int:
        i, j = ij
        return self.entries[i * self.cols + j]

    def _check_ring(self, other: "RMatrix") -> None:
        if self.modulus != other.modulus:
            raise RingMismatch(f"moduli differ: {self.modulus} vs {other.modulus}")

    def mul(self, other: "RMatrix") -> "RMatrix":
        self._check_ring(other)
        if self.cols != other.rows:
            raise DimensionMismatch(f"{self.rows}x{self.cols} times {other.rows}x{other.cols}")
        n = self.modulus
        out = []
        for i in range(self.rows):
            ri = self.row(i)
            for k in range(other.cols):
                s = 0
                for j in range(self.cols):
                    a = ri[j]
                    if a:
                        s += a * other.entries[j * other.cols + k]
                out.append(s % n)
        return RMatrix(self.modulus, self.rows, other.cols, tuple(out))

    def add(self, other: "RMatrix") -> "RMatrix":
        self._check_ring(other)
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise DimensionMismatch("shapes differ")
        n = self.modulus
        return RMatrix(self.modulus, self.rows, self.cols,
                       tuple((a + b) % n for a, b in zip(self.entries, other.entries)))

    def sub(self, other: "RMatrix") -> "RMatrix":
        self._check_ring(other)
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise DimensionMismatch("shapes differ")
        n = self.modulus
        return RMatrix(self.modulus, self.rows, self.cols,
                       tuple((a - b) % n for a, b in zip(self.entries, other.entries)))

    def scale(self, c: int) -> "RMatrix":
        n = self.modulus
        return RMatrix(self.modulus, self.rows, self.cols,
                       tuple((c * a) % n for a in self.entries))

    def hstack(self, other: "RMatrix") -> "RMatrix":
        self._check_ring(other)
        if self.rows != other.rows:
            raise DimensionMismatch("row counts differ")
        flat = []
        for i in range(self.rows):
            flat.extend(self.row(i))
            flat.extend(other.row(i))
        return RMatrix(self.modulus, self.rows, self.cols + other.cols, tuple(flat))

    def vstack(self, other: "RMatrix") -> "RMatrix":
        self._check_ring(other)
        if self.cols != other.cols:
            raise DimensionMismatch("column counts differ")
        return RMatrix(self.modulus, self.rows + other.rows, self.cols,
                       self.entries + other.entries)

    def is_zero(self) -> bool:
        return all(a == 0 for a in self.entries)


@dataclass(frozen=True)
class HowellForm:
    """Canonical Howell normal form H of an input M, with H = transform * M."""

    matrix: RMatrix
    transform: RMatrix

    @property
    def pivots(self) -> tuple:
        """(row, col, pivot value) per row of the form."""
        out = []
        for i in range(self.matrix.rows):
            r = self.matrix.row(i)
            for j, a in enumerate(r):
                if a:
                    out.append((i, j, a))
                    break
        return tuple(out)

    @property
    def span_size(self) -> int:
        """Number of vectors in the row span."""
        n = self.matrix.modulus
        size = 1
        for _, _, p in self.pivots:
            size *= n // p
        return size


def howell_form(M: RMatrix) -> HowellForm:
    """Howell normal form over Z/n.

    The result is canonical: row_span(A) == row_span(B) iff
    howell_form(A).matrix == howell_form(B).matrix.  Normalisations: zero
    rows dropped, pivot columns strictly increase, every pivot divides n,
    entries above a pivot are reduced modulo that pivot, and the span
    property holds (any span element with leading zeros lies in the span of
    the trailing rows; enforced via annihilator rows).

    Returns:
        HowellForm with .matrix the form and .transform expressing each of
        its rows as a combination of input rows.
    """
    n = M.modulus
    ring = ResidueRing(n)
    nrows, ncols = M.rows, M.cols
    work = [list(M.row(i)) for i in range(nrows)]
    trans = [[1 if i == j else 0 for j in range(nrows)] for i in range(nrows)]

    def combine(i: int, k: int, col: int) -> None:
        # unimodular 2x2 transform making work[k][col] = 0
        a, b = work[i][col], work[k][col]
        if b == 0:
            return
        if a == 0:
            work[i], work[k] = work[k], work[i]
            trans[i], trans[k] = trans[k], trans[i]
            return
        g, s, t = _xgcd(a, b)
        p, q = -(b // g), a // g
        wi, wk = work[i], work[k]
        work[i] = [(s * x + t * y) % n for x, y in zip(wi, wk)]
        work[k] = [(p * x + q * y) % n for x, y in zip(wi, wk)]
        ti, tk = trans[i], trans[k]
        trans[i] = [(s * x + t * y) % n for x, y in zip(ti, tk)]
        trans[k] = [(p * x + q * y) % n for x, y in zip(ti, tk)]

    r = 0
    for col in range(ncols):
        if r >= len(work):
            break
        pivot_row = None
        for k in range(r, len(work)):
            if work[k][col]:
                pivot_row = k
                break
        if pivot_row is None:
            continue
        work[r], work[pivot_row] = work[pivot_row], work[r]
        trans[r], trans[pivot_row] = trans[pivot_row], trans[r]
        for k in range(r + 1, len(work)):
            combine(r, k, col)
        u = ring.stab_unit(work[r][col])
        if u != 1:
            work[r] = [(u * x) % n for x in work[r]]
            trans[r] = [(u * x) % n for x in trans[r]]
        p = work[r][col]
        for k in range(r):
            q = work[k][col] // p
            if q:
                work[k] = [(x - q * y) % n for x, y in zip(work[k], work[r])]
                trans[k] = [(x - q * y) % n for x, y in zip(trans[k], trans[r])]
        ann = n // p
        if ann != 1 and ann != n:
            arow = [(ann * x) % n for x in work[r]]
            if any(arow):
                work.append(arow)
                trans.append([(ann * x) % n for x in trans[r]])
        r += 1

    keep = [i for i in range(len(work)) if any(work[i])]
    H = RMatrix.from_rows(n, [work[i] for i in keep], cols=ncols)
    U = RMatrix.from_rows(n, [trans[i] for i in keep], cols=nrows)
    return HowellForm(H, U)


def _xgcd(a: int, b: int):
    """g, s, t with s*a + t*b = g = gcd(a, b), g > 0."""
    old_r, rr = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while rr:
        q = old_r // rr
        old_r, rr = rr, old_r - q * rr
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def kernel_basis(M: RMatrix) -> RMatrix:
    """Rows generating {v in (Z/n)^rows : v*M = 0}.

    Computed from the Howell form of [M | I]: rows whose M-part vanished
    carry kernel vectors in the identity part, and the Howell span property
    makes them generate the whole kernel.
    """
    if M.rows == 0:
        return RMatrix.zero(M.modulus, 0, 0)
    aug = M.hstack(RMatrix.identity(M.modulus, M.rows))
    H = howell_form(aug).matrix
    gens = []
    for i in range(H.rows):
        row = H.row(i)
        if all(a == 0 for a in row[: M.cols]):
            gens.append(row[M.cols :])
    return RMatrix.from_rows(M.modulus, gens, cols=M.rows)


def solve_linear(M: RMatrix, b: Sequence[int]):
    """Solve x*M = b over Z/n.

    Returns:
        (x, kernel) where x is a solution tuple or None if infeasible, and
        kernel is kernel_basis(M) (all solutions are x + span(kernel)).
    """
    if len(b) != M.cols:
        raise DimensionMismatch(f"rhs length {len(b)} != cols {M.cols}")
    n = M.modulus
    hf = howell_form(M)
    H, U = hf.matrix, hf.transform
    residual = [a % n for a in b]
    coeffs = [0] * H.rows
    for i in range(H.rows):
        row = H.row(i)
        j = next(k for k, a in enumerate(row) if a)
        p = row[j]
        if residual[j] % p:
            return None, kernel_basis(M)
        t = residual[j] // p
        coeffs[i] = t
        if t:
            residual = [(x - t * y) % n for x, y in zip(residual, row)]
    if any(residual):
        return None, kernel_basis(M)
    x = [0] * M.rows
    for i, t in enumerate(coeffs):
        if t:
            urow = U.row(i)
            x = [(a + t * u) % n for a, u in zip(x, urow)]
    return tuple(x), kernel_basis(M)


def span_equal(A: RMatrix, B: RMatrix) -> bool:
    """Whether two matrices over the same Z/n have identical row spans."""
    if A.modulus != B.modulus:
        raise RingMismatch("moduli differ")
    if A.cols != B.cols:
        raise DimensionMismatch("ambient dimensions differ")
    return howell_form(A).matrix == howell_form(B).matrix


def smith_normal_form_int(rows: Sequence[Sequence[int]]) -> tuple:
    """Nonzero invariant factors d_1 | d_2 | ... of an integer matrix.

    Exact over Z with arbitrary precision.  The cokernel of the matrix
    (row convention) is the direct sum of Z/d_i plus Z^(cols - len(result)).

    Args:
        rows: integer matrix as a sequence of rows, at most 64 x 64.

    Returns:
        Tuple of invariant factors, each >= 1, in divisibility order.
    """
    m = [list(map(int, r)) for r in rows]
    nr = len(m)
    nc = len(m[0]) if nr else 0
    if any(len(r) != nc for r in m):
        raise DimensionMismatch("ragged rows")
    if nr > 64 or nc > 64:
        raise TooLarge(f"smith_normal_form_int limited to 64x64, got {nr}x{nc}")

    def pivot_search(t):
        best = None
        for i in range(t, nr):
            for j in range(t, nc):
                a = abs(m[i][j])
                if a and (best is None or a < best[0]):
                    best = (a, i, j)
        return best

    t = 0
    while t < min(nr, nc):
        found = pivot_search(t)
        if found is None:
            break
        _, pi, pj = found
        m[t], m[pi] = m[pi], m[t]
        for r in m:
            r[t], r[pj] = r[pj], r[t]
        dirty = False
        for i in range(t + 1, nr):
            if m[i][t]:
                q = m[i][t] // m[t][t]
                m[i] = [x - q * y for x, y in zip(m[i], m[t])]
                if m[i][t]:
                    dirty = True
        for j in range(t + 1, nc):
            if m[t][j]:
                q = m[t][j] // m[t][t]
                for r in m:
                    r[j] -= q * r[t]
                if m[t][j]:
                    dirty = True
        if dirty:
            continue
        off = any(m[i][t] for i in range(t + 1, nr)) or any(m[t][j] for j in range(t + 1, nc))
        if not off:
            t += 1
    diag = [abs(m[i][i]) for i in range(min(nr, nc)) if m[i][i]]
    # enforce the divisibility chain: diag(a, b) and diag(gcd, lcm) are
    # equivalent, so bubble gcds forward
    changed = True
    while changed:
        changed = False
        for i in range(len(diag)):
            for j in range(i + 1, len(diag)):
                if diag[j] % diag[i]:
                    g = gcd(diag[i], diag[j])
                    diag[i], diag[j] = g, diag[i] * diag[j] // g
                    changed = True
    return tuple(sorted(diag))


def scalar_kernel(ntilde: int, ell: int, sigma: int) -> int:
    """Canonical generator of ker(ntilde * : Z/ell^sigma -> Z/ell^sigma).

    The kernel is the principal ideal generated by
    ell^(sigma - min(v, sigma)) where v is the ell-adic valuation of ntilde;
    the generator is returned as a canonical residue (0 when the kernel is
    trivial).
    """
    if sigma < 1:
        raise ValueError("sigma must be >= 1")
    mod = ell**sigma
    if ntilde == 0:
        return 1
    v = min(valuation(ntilde, ell), sigma)
    return pow(ell, sigma - v) % mod
