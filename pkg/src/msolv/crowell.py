"""Magnus embedding over finite group rings and the Crowell complex.

A MagnusMatrix is the formal block matrix [[q, v], [0, 1]] with q a group
element of the finite quotient Q (a unit of R = (Z/n)[Q]) and v a row
vector in R^r.  The assignment  w  |->  [[pi(w), (pi d_i w)_i], [0, 1]]
is a group homomorphism from the free group, and its vector part lands in
ker f where f: R^r -> R sends (lambda_i) to sum lambda_i (pi(x_i) - 1).

f and the augmentation s are flattened to Z/n matrices (row-vector
convention, matching zmodlin), so images, kernels and exactness at R are
decided by Howell forms.  The injectivity leg of the exact sequence is a
profinite statement with no single-level counterpart; what can be checked
at one level is im f = ker s, plus agreement of ker f with the span of
relator rows when a presentation is supplied.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import MixedVariant, RelatorNotInKernel
from .foxcalc import FreeWord, QuotientContext, fox_row
from .grpring import RingElem, augmentation, right_mult_matrix
from .zmodlin import RMatrix, howell_form, kernel_basis, span_equal


class MagnusMatrix:
    """[[q, v], [0, 1]] with q in Q and v a row vector in R^r (flattened)."""

    __slots__ = ("ctx", "q", "vec")

    def __init__(self, ctx: QuotientContext, q: int, vec: tuple):
        self.ctx = ctx
        self.q = q
        self.vec = vec

    @staticmethod
    def identity(ctx: QuotientContext) -> "MagnusMatrix":
        return MagnusMatrix(ctx, 0, (0,) * (ctx.rank * ctx.ring.dimension))

    @staticmethod
    def generator(ctx: QuotientContext, i: int) -> "MagnusMatrix":
        """The image of x_i: [[pi(x_i), e_i], [0, 1]]."""
        d = ctx.ring.dimension
        vec = [0] * (ctx.rank * d)
        vec[(i - 1) * d] = 1  # e_i = 1 * identity basis element in slot i
        return MagnusMatrix(ctx, ctx.images[i - 1], tuple(vec))

    def components(self) -> tuple:
        """The vector part as r RingElems."""
        d = self.ctx.ring.dimension
        return tuple(
            self.ctx.ring.from_coeffs(self.vec[b * d : (b + 1) * d])
            for b in range(self.ctx.rank)
        )

    def __mul__(self, other: "MagnusMatrix") -> "MagnusMatrix":
        if other.ctx is not self.ctx:
            raise MixedVariant("Magnus matrices from different contexts")
        ctx = self.ctx
        perm = ctx.left_mult_perm(self.q)
        n = ctx.ring.modulus
        d = ctx.ring.dimension
        vec = list(self.vec)
        ov = other.vec
        for b in range(ctx.rank):
            base = b * d
            for i in range(d):
                c = ov[base + i]
                if c:
                    t = base + perm[i]
                    vec[t] = (vec[t] + c) % n
        return MagnusMatrix(ctx, perm[other.q], tuple(vec))

    def inverse(self) -> "MagnusMatrix":
        ctx = self.ctx
        qi = ctx.group.inv(self.q)
        perm = ctx.left_mult_perm(qi)
        n = ctx.ring.modulus
        d = ctx.ring.dimension
        vec = [0] * (ctx.rank * d)
        for b in range(ctx.rank):
            base = b * d
            for i in range(d):
                c = self.vec[base + i]
                if c:
                    vec[base + perm[i]] = -c % n
        return MagnusMatrix(ctx, qi, tuple(vec))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MagnusMatrix)
            and other.ctx is self.ctx
            and other.q == self.q
            and other.vec == self.vec
        )

    def __hash__(self) -> int:
        return hash((self.q, self.vec))

    def __repr__(self) -> str:
        return f"MagnusMatrix(q={self.q}, vec={self.vec})"


def magnus_image(ctx: QuotientContext, w: FreeWord) -> MagnusMatrix:
    """Fold generator matrices over the word; checks Fox consistency.

    The vector part is asserted equal to fox_row(ctx, w) — the finite-level
    Magnus/Fox consistency theorem — on every call.
    """
    m = MagnusMatrix.identity(ctx)
    gens = {}
    for j, e in w.letters:
        key = (j, e)
        g = gens.get(key)
        if g is None:
            g = MagnusMatrix.generator(ctx, j)
            if e < 0:
                g = g.inverse()
            gens[key] = g
        m = m * g
    assert m.q == ctx.eval_word(w)
    row = fox_row(ctx, w)
    assert all(
        a.coeffs == b.coeffs for a, b in zip(m.components(), row)
    ), "Magnus vector part disagrees with Fox row"
    return m


@dataclass
class CrowellComplex:
    """f: R^r -> R and s: R -> Z/n flattened over the Z/n basis of R."""

    ctx: QuotientContext
    f_matrix: RMatrix  # r|Q| x |Q|
    s_matrix: RMatrix  # |Q| x 1


def build_complex(ctx: QuotientContext) -> CrowellComplex:
    R = ctx.ring
    blocks = []
    for i in range(1, ctx.rank + 1):
        lam = R.embed(ctx.images[i - 1]) - R.one()  # pi(x_i) - 1
        blocks.append(right_mult_matrix(lam))
    f = blocks[0]
    for b in blocks[1:]:
        f = f.vstack(b)
    s = RMatrix.from_rows(R.modulus, [[1] for _ in range(R.dimension)], cols=1)
    return CrowellComplex(ctx, f, s)


@dataclass
class ExactnessReport:
    passed: bool
    im_f_equals_ker_s: bool
    s_surjective: bool
    im_f_size: int
    ker_s_size: int
    ker_f_size: int
    ker_f_basis: RMatrix


def exactness_check(c: CrowellComplex) -> ExactnessReport:
    """Exactness at R: im f = ker s, with s onto; plus ker f data."""
    im_f = c.f_matrix
    ker_s = kernel_basis(c.s_matrix)
    middle = span_equal(im_f, ker_s)
    # s is onto iff its row span is all of Z/n; s(1) = 1 makes this automatic
    s_onto = howell_form(c.s_matrix).span_size == c.ctx.ring.modulus
    ker_f = kernel_basis(c.f_matrix)
    return ExactnessReport(
        passed=middle and s_onto,
        im_f_equals_ker_s=middle,
        s_surjective=s_onto,
        im_f_size=howell_form(im_f).span_size,
        ker_s_size=howell_form(ker_s).span_size,
        ker_f_size=howell_form(ker_f).span_size,
        ker_f_basis=ker_f,
    )


def relator_kernel_check(ctx: QuotientContext, relators: Sequence[FreeWord]) -> bool:
    """Each relator's Fox row must be annihilated by f."""
    c = build_complex(ctx)
    d = ctx.ring.dimension
    for w in relators:
        if ctx.eval_word(w) != 0:
            raise RelatorNotInKernel(f"pi({w!r}) != 1")
        flat = []
        for comp in fox_row(ctx, w):
            flat.extend(comp.coeffs)
        v = RMatrix.from_rows(ctx.ring.modulus, [flat], cols=ctx.rank * d)
        if not v.mul(c.f_matrix).is_zero():
            return False
    return True


@dataclass
class RelationModuleReport:
    ker_f_size: int
    relation_span_size: int
    spans_equal: bool
    discrepancy_index: int  # |ker f| / |relation span|


def relation_module_report(ctx: QuotientContext, relators: Sequence[FreeWord]) -> RelationModuleReport:
    """Compare ker f with the R-span of the relator Fox rows.

    The R-module generated by the rows is realized over Z/n by also taking
    every group translate q * row.  When the relators normally generate the
    kernel of pi the two spans agree at this level; the report quantifies
    any discrepancy instead of asserting it away.
    """
    c = build_complex(ctx)
    G = ctx.group
    d = ctx.ring.dimension
    rows = []
    for w in relators:
        if ctx.eval_word(w) != 0:
            raise RelatorNotInKernel(f"pi({w!r}) != 1")
        comps = fox_row(ctx, w)
        for q in range(G.order):
            perm = ctx.left_mult_perm(q)
            flat = [0] * (ctx.rank * d)
            for b, comp in enumerate(comps):
                base = b * d
                for i, a in enumerate(comp.coeffs):
                    if a:
                        flat[base + perm[i]] = a
            rows.append(flat)
    if not rows:
        rows = [[0] * (ctx.rank * d)]
    span = RMatrix.from_rows(ctx.ring.modulus, rows, cols=ctx.rank * d)
    ker_f = kernel_basis(c.f_matrix)
    eq = span_equal(span, ker_f)
    ker_size = howell_form(ker_f).span_size
    span_size = howell_form(span).span_size
    return RelationModuleReport(
        ker_f_size=ker_size,
        relation_span_size=span_size,
        spans_equal=eq,
        discrepancy_index=ker_size // span_size if span_size else 0,
    )
