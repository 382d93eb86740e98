"""Finite group engine.

Groups are materialized completely: a FiniteGroup is an indexed list of
elements (index 0 = identity) enumerated by breadth-first closure from its
generators, plus the (element, generator) product table built during the
enumeration.  No Schreier-Sims, no coset enumeration: every target in this
package is desk-scale and exactness matters more than asymptotics.

Elements are immutable hashable objects with `*`, `inverse()`, equality and
hashing; two variants are provided here (permutations and invertible
matrices over Z/n) and other modules may supply their own (block matrices
over group rings) as long as they honor the same protocol.

Quotient groups are again FiniteGroup values: their elements are canonical
coset representatives (minimal element index in the parent) and their
multiplication law composes in the parent and re-canonicalizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .errors import (
    CapExceeded,
    IndexOutOfRange,
    MixedVariant,
    NotHomomorphism,
    NotNormal,
    NotSurjective,
    TooLarge,
)
from .zmodlin import RMatrix, howell_form

DEFAULT_CAP = 2_000_000


class PermElem:
    """A permutation of {0..d-1}; (p*q)(x) = p(q(x))."""

    __slots__ = ("images",)

    def __init__(self, images: Sequence[int]):
        images = tuple(images)
        if sorted(images) != list(range(len(images))):
            raise ValueError(f"not a bijection on 0..{len(images)-1}: {images}")
        object.__setattr__(self, "images", images)

    @property
    def degree(self) -> int:
        return len(self.images)

    @staticmethod
    def identity(degree: int) -> "PermElem":
        return PermElem(range(degree))

    @staticmethod
    def from_cycles(degree: int, cycles: Sequence[Sequence[int]]) -> "PermElem":
        images = list(range(degree))
        for cyc in cycles:
            for a in cyc:
                if not 0 <= a < degree:
                    raise ValueError(f"point {a} out of range for degree {degree}")
            for i, a in enumerate(cyc):
                images[a] = cyc[(i + 1) % len(cyc)]
        # building from disjoint cycles only; overlapping cycles would not
        # compose the way the notation promises
        seen = [a for cyc in cycles for a in cyc]
        if len(seen) != len(set(seen)):
            raise ValueError("cycles are not disjoint")
        return PermElem(images)

    def __mul__(self, other: "PermElem") -> "PermElem":
        if len(self.images) != len(other.images):
            raise MixedVariant("permutation degrees differ")
        s = self.images
        return PermElem(tuple(s[i] for i in other.images))

    def inverse(self) -> "PermElem":
        inv = [0] * len(self.images)
        for i, j in enumerate(self.images):
            inv[j] = i
        return PermElem(inv)

    def __call__(self, point: int) -> int:
        return self.images[point]

    def __eq__(self, other) -> bool:
        return isinstance(other, PermElem) and other.images == self.images

    def __hash__(self) -> int:
        return hash(("perm", self.images))

    def cycle_string(self) -> str:
        seen = set()
        parts = []
        for a in range(len(self.images)):
            if a in seen or self.images[a] == a:
                continue
            cyc = [a]
            seen.add(a)
            b = self.images[a]
            while b != a:
                cyc.append(b)
                seen.add(b)
                b = self.images[b]
            parts.append("(" + " ".join(map(str, cyc)) + ")")
        return "".join(parts) if parts else "()"

    def __repr__(self) -> str:
        return f"PermElem[{self.cycle_string()}]"


class MatElem:
    """An invertible square matrix over Z/n.

    The explicit inverse is the invertibility witness; it is computed once
    (via the Howell form of [M | I]) at construction and composed, not
    recomputed, under multiplication.
    """

    __slots__ = ("modulus", "size", "entries", "inv_entries")

    def __init__(self, modulus: int, entries: Sequence[int], _inv: Optional[tuple] = None):
        size = int(round(len(entries) ** 0.5))
        if size * size != len(entries):
            raise ValueError("matrix entries must form a square")
        entries = tuple(a % modulus for a in entries)
        self.modulus = modulus
        self.size = size
        self.entries = entries
        if _inv is None:
            _inv = _invert_entries(modulus, size, entries)
        self.inv_entries = _inv

    @staticmethod
    def identity(modulus: int, size: int) -> "MatElem":
        ent = tuple(1 if i == j else 0 for i in range(size) for j in range(size))
        return MatElem(modulus, ent, _inv=ent)

    @staticmethod
    def from_rows(modulus: int, rows: Sequence[Sequence[int]]) -> "MatElem":
        return MatElem(modulus, [a for r in rows for a in r])

    def rows(self) -> list:
        s = self.size
        return [list(self.entries[i * s : (i + 1) * s]) for i in range(s)]

    def __mul__(self, other: "MatElem") -> "MatElem":
        if not isinstance(other, MatElem):
            return NotImplemented
        if self.modulus != other.modulus or self.size != other.size:
            raise MixedVariant("matrix rings differ")
        prod = _mat_mul(self.modulus, self.size, self.entries, other.entries)
        inv = _mat_mul(self.modulus, self.size, other.inv_entries, self.inv_entries)
        return MatElem(self.modulus, prod, _inv=inv)

    def inverse(self) -> "MatElem":
        return MatElem(self.modulus, self.inv_entries, _inv=self.entries)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MatElem)
            and other.modulus == self.modulus
            and other.entries == self.entries
        )

    def __hash__(self) -> int:
        return hash(("mat", self.modulus, self.entries))

    def __repr__(self) -> str:
        return f"MatElem(mod {self.modulus}, {self.rows()})"


def _mat_mul(n: int, size: int, a: tuple, b: tuple) -> tuple:
    out = []
    for i in range(size):
        base = i * size
        for k in range(size):
            s = 0
            for j in range(size):
                x = a[base + j]
                if x:
                    s += x * b[j * size + k]
            out.append(s % n)
    return tuple(out)


def _invert_entries(n: int, size: int, entries: tuple) -> tuple:
    M = RMatrix(n, size, size, entries)
    aug = M.hstack(RMatrix.identity(n, size))
    H = howell_form(aug).matrix
    ident = RMatrix.identity(n, size)
    if H.rows != size or any(
        H[i, j] != ident[i, j] for i in range(size) for j in range(size)
    ):
        raise ValueError(f"matrix not invertible over Z/{n}")
    inv = tuple(H[i, j] for i in range(size) for j in range(size, 2 * size))
    # sanity: a one-sided inverse over a commutative ring is two-sided
    return inv


class _DirectLaw:
    """Multiplication law of honestly-represented elements."""

    def mul(self, a, b):
        return a * b

    def inv(self, a):
        return a.inverse()


class _CosetLaw:
    """Law of a quotient group: compose in the parent, re-canonicalize."""

    def __init__(self, parent: "FiniteGroup", rep_map: dict):
        self.parent = parent
        self.rep_map = rep_map  # parent element index -> representative index

    def mul(self, a, b):
        p = self.parent
        k = p.index[p.law.mul(a, b)]
        return p.elements[self.rep_map[k]]

    def inv(self, a):
        p = self.parent
        k = p.index[p.law.inv(a)]
        return p.elements[self.rep_map[k]]


class FiniteGroup:
    """A fully enumerated finite group.

    Fields: `elements` (index 0 is the identity), `index` (element -> index),
    `generators` / `gen_indices`, and `gen_table` with
    gen_table[i][g] = index of elements[i] * generators[g].
    """

    def __init__(self, elements, index, generators, gen_table, law):
        self.elements = elements
        self.index = index
        self.generators = list(generators)
        self.gen_table = gen_table
        self.law = law
        self.identity_index = 0
        self.gen_indices = [index[g] for g in self.generators]
        self._order_cache: dict = {}

    @property
    def order(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def mul(self, i: int, j: int) -> int:
        return self.index[self.law.mul(self.elements[i], self.elements[j])]

    def inv(self, i: int) -> int:
        return self.index[self.law.inv(self.elements[i])]

    def conj(self, i: int, by: int) -> int:
        """Index of by * i * by^{-1}."""
        return self.mul(self.mul(by, i), self.inv(by))

    def power(self, i: int, k: int) -> int:
        if k < 0:
            return self.power(self.inv(i), -k)
        acc = 0
        base = i
        while k:
            if k & 1:
                acc = self.mul(acc, base)
            base = self.mul(base, base)
            k >>= 1
        return acc

    def element_order(self, i: int) -> int:
        cached = self._order_cache.get(i)
        if cached:
            return cached
        k, j = 1, i
        while j != 0:
            j = self.mul(j, i)
            k += 1
        self._order_cache[i] = k
        return k

    def cyclic_subgroup(self, i: int) -> "Subgroup":
        idxs = [0]
        j = i
        while j != 0:
            idxs.append(j)
            j = self.mul(j, i)
        return Subgroup(self, tuple(sorted(idxs)), (i,) if i else (0,))

    def is_abelian(self) -> bool:
        gi = self.gen_indices
        return all(self.mul(a, b) == self.mul(b, a) for a in gi for b in gi)

    def full_subgroup(self) -> "Subgroup":
        return Subgroup(self, tuple(range(self.order)), tuple(self.gen_indices))

    def element_order_profile(self) -> tuple:
        return tuple(sorted(self.element_order(i) for i in range(self.order)))

    def __repr__(self) -> str:
        return f"FiniteGroup(order={self.order}, gens={len(self.generators)})"


def _check_variant(gens: Sequence) -> None:
    kinds = set()
    for g in gens:
        if isinstance(g, PermElem):
            kinds.add(("perm", g.degree))
        elif isinstance(g, MatElem):
            kinds.add(("mat", g.modulus, g.size))
        else:
            kinds.add(("custom", type(g).__name__))
    if len(kinds) > 1:
        raise MixedVariant(f"generators mix variants: {sorted(kinds)}")


def closure(gens: Sequence, cap: int = DEFAULT_CAP, identity=None, law=None) -> FiniteGroup:
    """Enumerate the group generated by `gens` (BFS; deterministic order).

    Args:
        gens: generator elements sharing one variant and degree/ring.
        cap: hard bound on the element count.
        identity: identity element; inferred from the first generator when
            omitted (required for empty gens of non-permutation kind).
        law: multiplication strategy; defaults to honest element products.

    Raises:
        CapExceeded: enumeration passed `cap` elements.
        MixedVariant: generators of incompatible kinds.
    """
    gens = list(gens)
    _check_variant(gens)
    if law is None:
        law = _DirectLaw()
    if identity is None:
        if not gens:
            identity = PermElem.identity(1)  # the trivial group, by convention
        else:
            g = gens[0]
            identity = law.mul(g, law.inv(g))
    elements = [identity]
    index = {identity: 0}
    gen_table: list = []
    i = 0
    while i < len(elements):
        row = []
        for g in gens:
            p = law.mul(elements[i], g)
            k = index.get(p)
            if k is None:
                if len(elements) >= cap:
                    raise CapExceeded(cap, len(elements) + 1)
                k = len(elements)
                elements.append(p)
                index[p] = k
            row.append(k)
        gen_table.append(row)
        i += 1
    return FiniteGroup(elements, index, gens, gen_table, law)


def trivial_group() -> FiniteGroup:
    return closure([])


@dataclass
class Subgroup:
    """A subgroup given by its sorted element-index set inside a parent."""

    parent: FiniteGroup
    indices: tuple
    gen_indices: tuple
    _normal: Optional[bool] = field(default=None, repr=False)
    _set: Optional[frozenset] = field(default=None, repr=False)

    @property
    def element_set(self) -> frozenset:
        if self._set is None:
            self._set = frozenset(self.indices)
        return self._set

    @property
    def order(self) -> int:
        return len(self.indices)

    def contains(self, i: int) -> bool:
        return i in self.element_set

    @property
    def is_normal(self) -> bool:
        # conjugating every subgroup generator by every parent generator
        # into the set suffices: conjugation by words follows
        if self._normal is None:
            G = self.parent
            s = self.element_set
            self._normal = all(
                G.conj(h, g) in s for g in G.gen_indices for h in self.gen_indices
            )
        return self._normal

    def is_trivial(self) -> bool:
        return self.order == 1

    def as_group(self) -> FiniteGroup:
        """Materialize as a standalone FiniteGroup (same element objects)."""
        G = self.parent
        gens = [G.elements[i] for i in self.gen_indices if i != 0]
        return closure(gens, cap=self.order + 1, identity=G.elements[0], law=G.law)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Subgroup)
            and other.parent is self.parent
            and other.indices == self.indices
        )

    def __hash__(self) -> int:
        return hash((id(self.parent), self.indices))


def subgroup_closure(G: FiniteGroup, gen_idxs: Iterable[int]) -> Subgroup:
    """Subgroup of G generated by the given element indices."""
    gen_idxs = [i for i in gen_idxs if i != 0]
    seen = {0}
    order_list = [0]
    i = 0
    while i < len(order_list):
        a = order_list[i]
        for g in gen_idxs:
            b = G.mul(a, g)
            if b not in seen:
                seen.add(b)
                order_list.append(b)
        i += 1
    return Subgroup(G, tuple(sorted(seen)), tuple(gen_idxs) or (0,))


def normal_closure(G: FiniteGroup, seed_idxs: Iterable[int], conjugators: Optional[Sequence[int]] = None) -> Subgroup:
    """Smallest subgroup containing the seeds and stable under conjugation.

    Conjugators default to G's generators (normal closure in G); passing a
    subgroup's generators computes the normal closure within that subgroup.
    """
    if conjugators is None:
        conjugators = G.gen_indices
    gens = [i for i in dict.fromkeys(seed_idxs) if i != 0]
    sub = subgroup_closure(G, gens)
    while True:
        new = []
        for h in sub.gen_indices:
            for c in conjugators:
                t = G.conj(h, c)
                if t not in sub.element_set:
                    new.append(t)
        if not new:
            return sub
        gens.extend(dict.fromkeys(new))
        sub = subgroup_closure(G, gens)


def derived_subgroup(G: FiniteGroup, sub: Optional[Subgroup] = None) -> Subgroup:
    """Derived subgroup of `sub` (default: of G itself).

    Normal closure (within the subgroup) of commutators of its generators;
    the derived subgroup is exactly that closure.
    """
    if sub is None:
        sub = G.full_subgroup()
    gi = sub.gen_indices
    comms = []
    for a in gi:
        for b in gi:
            c = G.mul(G.mul(a, b), G.mul(G.inv(a), G.inv(b)))
            if c != 0:
                comms.append(c)
    return normal_closure(G, comms, conjugators=gi)


def derived_series(G: FiniteGroup) -> list:
    """[G = G^[0], G^[1], ...] down to the first repeated (perfect or trivial) term."""
    series = [G.full_subgroup()]
    while True:
        nxt = derived_subgroup(G, series[-1])
        if nxt.order == series[-1].order:
            break
        series.append(nxt)
        if nxt.order == 1:
            break
    return series


def derived_term(G: FiniteGroup, m: int) -> Subgroup:
    """G^[m], with the series frozen at its stabilization point."""
    series = derived_series(G)
    return series[m] if m < len(series) else series[-1]


@dataclass
class Homomorphism:
    """A verified homomorphism, stored as the full image-index table."""

    source: FiniteGroup
    target: FiniteGroup
    images: tuple

    @staticmethod
    def build(source: FiniteGroup, target: FiniteGroup, images: Sequence[int]) -> "Homomorphism":
        images = tuple(images)
        if len(images) != source.order:
            raise NotHomomorphism("image table length mismatch")
        if images[0] != 0:
            raise NotHomomorphism("identity does not map to identity")
        # consistency on every Cayley edge extends to all pairs by induction
        # on the word length of the right factor
        for i in range(source.order):
            for g, gi in enumerate(source.gen_indices):
                if images[source.gen_table[i][g]] != target.mul(images[i], images[gi]):
                    raise NotHomomorphism(f"edge ({i}, generator {g}) breaks multiplicativity")
        return Homomorphism(source, target, images)

    @staticmethod
    def from_gen_images(source: FiniteGroup, target: FiniteGroup, gen_images: Sequence[int]) -> "Homomorphism":
        """Extend generator images along the BFS tree; raises NotHomomorphism
        if the assignment is inconsistent."""
        if len(gen_images) != len(source.gen_indices):
            raise NotHomomorphism("one image per generator required")
        images = [None] * source.order
        images[0] = 0
        for i in range(source.order):
            for g in range(len(source.gen_indices)):
                j = source.gen_table[i][g]
                v = target.mul(images[i], gen_images[g])
                if images[j] is None:
                    images[j] = v
                elif images[j] != v:
                    raise NotHomomorphism("generator images do not extend")
        return Homomorphism.build(source, target, images)

    def __call__(self, i: int) -> int:
        return self.images[i]

    def image_set(self) -> frozenset:
        return frozenset(self.images)

    def is_surjective(self) -> bool:
        return len(self.image_set()) == self.target.order

    def is_injective(self) -> bool:
        return len(self.image_set()) == self.source.order

    def is_bijective(self) -> bool:
        return self.is_injective() and self.is_surjective()

    def kernel(self) -> Subgroup:
        idxs = [i for i, v in enumerate(self.images) if v == 0]
        sub = subgroup_closure(self.source, idxs)
        assert sub.order == len(idxs)
        return Subgroup(self.source, tuple(sorted(idxs)), sub.gen_indices)

    def compose(self, inner: "Homomorphism") -> "Homomorphism":
        """self after inner."""
        if inner.target is not self.source:
            raise NotHomomorphism("composition targets do not match")
        return Homomorphism(inner.source, self.target,
                            tuple(self.images[v] for v in inner.images))


def quotient_by(G: FiniteGroup, N: Subgroup):
    """G/N for normal N, as a FiniteGroup of canonical coset representatives.

    Returns:
        (Q, proj) with proj the projection Homomorphism G -> Q.
    """
    if not N.is_normal:
        raise NotNormal("quotient requires a normal subgroup")
    rep_map: dict = {}
    for i in range(G.order):
        if i in rep_map:
            continue
        coset = sorted(G.mul(i, n) for n in N.indices)
        rep = coset[0]
        for j in coset:
            rep_map[j] = rep
    law = _CosetLaw(G, rep_map)
    q_gens = []
    for gi in G.gen_indices:
        e = G.elements[rep_map[gi]]
        if e is not G.elements[0]:
            q_gens.append(e)
    Q = closure(q_gens, cap=G.order + 1, identity=G.elements[0], law=law)
    proj = Homomorphism.build(G, Q, tuple(Q.index[G.elements[rep_map[i]]] for i in range(G.order)))
    return Q, proj


def m_step_quotient(G: FiniteGroup, m: int):
    """Maximal m-step solvable quotient G/G^[m] with its projection."""
    N = derived_term(G, m)
    return quotient_by(G, N)


def abelianization(G: FiniteGroup):
    return m_step_quotient(G, 1)


def centralizer(G: FiniteGroup, S: Iterable[int]) -> Subgroup:
    """{g : gs = sg for all s in S}, brute force over all elements."""
    S = list(S)
    for s in S:
        if not 0 <= s < G.order:
            raise IndexOutOfRange(f"element index {s}")
    members = []
    for i in range(G.order):
        a = G.elements[i]
        ok = True
        for s in S:
            b = G.elements[s]
            if G.law.mul(a, b) != G.law.mul(b, a):
                ok = False
                break
        if ok:
            members.append(i)
    gens = _reduce_generators(G, members)
    return Subgroup(G, tuple(members), gens)


def center(G: FiniteGroup) -> Subgroup:
    return centralizer(G, G.gen_indices)


def _reduce_generators(G: FiniteGroup, members: Sequence[int]) -> tuple:
    """Greedy small generating set for a subgroup given as an element list."""
    gens: list = []
    have = {0}
    for i in members:
        if i in have:
            continue
        gens.append(i)
        have = subgroup_closure(G, gens).element_set
        if len(have) == len(members):
            break
    return tuple(gens) or (0,)


def _fold_into_lattice_basis(basis: list, row: Sequence[int]) -> None:
    """Echelon row basis of an integer lattice; fold in one more row."""
    from math import gcd

    row = list(row)
    for b in basis:
        c = next(i for i, x in enumerate(b) if x)
        if not row[c]:
            continue
        p, v = b[c], row[c]
        g = gcd(p, v)
        # extended gcd to merge the two rows at column c
        s, t = _bezout(p, v)
        merged = [s * x + t * y for x, y in zip(b, row)]
        row = [(p // g) * y - (v // g) * x for x, y in zip(b, row)]
        b[:] = merged
    if any(row):
        basis.append(row)
        basis.sort(key=lambda r: next(i for i, x in enumerate(r) if x))


def _bezout(a: int, b: int):
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    return old_s, old_t


def abelian_invariants(G: FiniteGroup) -> tuple:
    """Invariant factors (each > 1) of G/G^[1]; empty for perfect/trivial."""
    from .zmodlin import smith_normal_form_int

    k = len(G.gen_indices)
    if k == 0:
        return ()
    # walk the Cayley graph with exponent-vector labels; every collision is a
    # relation of the abelianization, and tree collisions generate them all.
    # Collision rows are folded into a <= k row lattice basis on the fly.
    vec = {0: (0,) * k}
    basis: list = []
    for i in range(G.order):
        v = vec[i]
        for g in range(k):
            j = G.gen_table[i][g]
            w = list(v)
            w[g] += 1
            w = tuple(w)
            if j in vec:
                rel = tuple(a - b for a, b in zip(w, vec[j]))
                if any(rel):
                    _fold_into_lattice_basis(basis, rel)
            else:
                vec[j] = w
    if not basis:
        return ()
    factors = smith_normal_form_int(basis)
    return tuple(d for d in factors if d > 1)


def left_transversal(G: FiniteGroup, N: Subgroup) -> list:
    """Minimal-index representatives of the left cosets aN, identity first."""
    reps = []
    seen = set()
    for i in range(G.order):
        if i in seen:
            continue
        reps.append(i)
        for n in N.indices:
            seen.add(G.mul(i, n))
    return reps


def transfer_map(G: FiniteGroup, N: Subgroup, transversal: Optional[Sequence[int]] = None) -> Homomorphism:
    """The transfer G^ab -> N^ab for a normal subgroup N.

    Built from a left-coset transversal {a}: the image of g is the product
    over cosets of a'^{-1} g a where g a N = a' N.  The result does not
    depend on the transversal (tested property).

    Returns a Homomorphism whose source is abelianization(G)[0] and whose
    target is the abelianization of N materialized as its own group.
    """
    if not N.is_normal:
        raise NotNormal("transfer implemented for normal subgroups")
    if transversal is None:
        transversal = left_transversal(G, N)
    else:
        transversal = list(transversal)
        covered = set()
        for a in transversal:
            for n in N.indices:
                covered.add(G.mul(a, n))
        if len(transversal) * N.order != G.order or len(covered) != G.order:
            raise ValueError("not a left transversal")
    Gab, projG = abelianization(G)
    NG = N.as_group()
    Nab, projN = abelianization(NG)
    # coset id: parent element -> index of its transversal rep
    coset_of = {}
    for t, a in enumerate(transversal):
        for n in N.indices:
            coset_of[G.mul(a, n)] = t
    images = []
    for q in range(Gab.order):
        g = G.index[Gab.elements[q]]  # any representative works: N >= G^[1]
        acc = 0
        for a in transversal:
            ga = G.mul(g, a)
            a2 = transversal[coset_of[ga]]
            n = G.mul(G.inv(a2), ga)
            acc = Nab.mul(acc, projN(NG.index[G.elements[n]]))
        images.append(acc)
    return Homomorphism.build(Gab, Nab, images)


def natural_ab_map(G: FiniteGroup, N: Subgroup) -> Homomorphism:
    """R_N : N^ab -> G^ab induced by inclusion."""
    Gab, projG = abelianization(G)
    NG = N.as_group()
    Nab, projN = abelianization(NG)
    images = [None] * Nab.order
    for i in range(NG.order):
        q = projN(i)
        v = projG(G.index[NG.elements[i]])
        if images[q] is None:
            images[q] = v
        elif images[q] != v:
            raise NotHomomorphism("inclusion does not factor through abelianizations")
    return Homomorphism.build(Nab, Gab, images)


def conj_action_on_ab(G: FiniteGroup, N: Subgroup, g: int) -> tuple:
    """The permutation of N^ab induced by conjugation by G-element g."""
    NG = N.as_group()
    Nab, projN = abelianization(NG)
    lookup = {}
    for i in range(NG.order):
        lookup.setdefault(projN(i), i)
    out = []
    for q in range(Nab.order):
        u = G.index[NG.elements[lookup[q]]]
        out.append(projN(NG.index[G.elements[G.conj(u, g)]]))
    return tuple(out)


def conj_action_faithful(H: FiniteGroup, N: Subgroup):
    """Whether H/N -> Aut(N^ab) by conjugation is injective.

    Returns:
        (faithful, kernel) with kernel a Subgroup of the quotient H/N.
    """
    if not N.is_normal:
        raise NotNormal("conjugation action needs a normal subgroup")
    NG = N.as_group()
    Nab, projN = abelianization(NG)
    lookup = {}
    for i in range(NG.order):
        lookup.setdefault(projN(i), i)
    ab_reps = [NG.elements[lookup[q]] for q in range(Nab.order)]
    Q, projQ = quotient_by(H, N)
    trivial = tuple(range(Nab.order))

    def action(h: int) -> tuple:
        return tuple(
            projN(NG.index[H.elements[H.conj(H.index[u], h)]]) for u in ab_reps
        )

    kernel_members = [
        q for q in range(Q.order) if action(H.index[Q.elements[q]]) == trivial
    ]
    gens = _reduce_generators(Q, kernel_members)
    kernel = Subgroup(Q, tuple(kernel_members), gens)
    return kernel.order == 1, kernel


@dataclass
class QuotientIsoResult:
    hypothesis_holds: bool
    bijective: bool
    upstairs_order: int
    downstairs_order: int


def quotient_iso_check(f: Homomorphism, H: Subgroup, n: int) -> QuotientIsoResult:
    """Finite-level check of the quotient-isomorphism lemma.

    For surjective f: G -> Q, a subgroup H of Q and its preimage H~, the
    lemma says: if ker f is contained in H~^[n] then the induced map
    H~/H~^[n] -> H/H^[n] is an isomorphism.  Both the hypothesis and the
    conclusion are computed; when the hypothesis holds the conclusion must
    (theorem), when it fails the outcome is reported as data.
    """
    if not f.is_surjective():
        raise NotSurjective("quotient_iso_check needs a surjection")
    G, Q = f.source, f.target
    pre_idxs = [i for i in range(G.order) if f(i) in H.element_set]
    pre = Subgroup(G, tuple(pre_idxs), _reduce_generators(G, pre_idxs))
    preG = pre.as_group()
    Dn = derived_term(preG, n)
    ker_idxs = [i for i, v in enumerate(f.images) if v == 0]
    dn_objects = {preG.elements[j] for j in Dn.indices}
    hypothesis = all(G.elements[i] in dn_objects for i in ker_idxs)
    upstairs, proj_up = quotient_by(preG, Dn)
    HG = H.as_group()
    downstairs, proj_dn = quotient_by(HG, derived_term(HG, n))
    images = []
    for q in range(upstairs.order):
        u = upstairs.elements[q]  # an element object of preG, hence of G
        v = Q.elements[f(G.index[u])]
        images.append(proj_dn(HG.index[v]))
    induced = Homomorphism.build(upstairs, downstairs, images)
    return QuotientIsoResult(
        hypothesis_holds=hypothesis,
        bijective=induced.is_bijective(),
        upstairs_order=upstairs.order,
        downstairs_order=downstairs.order,
    )


def _invariant_signature(G: FiniteGroup) -> tuple:
    return (
        G.order,
        G.element_order_profile(),
        center(G).order,
        abelian_invariants(G),
        tuple(s.order for s in derived_series(G)),
    )


def find_isomorphism(G1: FiniteGroup, G2: FiniteGroup) -> Optional[Homomorphism]:
    """Explicit isomorphism by generator-image backtracking, or None."""
    if G1.order != G2.order:
        return None
    if _invariant_signature(G1) != _invariant_signature(G2):
        return None
    # irredundant generating sequence for G1
    gens: list = []
    span = {0}
    for i in range(G1.order):
        if i not in span:
            gens.append(i)
            span = subgroup_closure(G1, gens).element_set
            if len(span) == G1.order:
                break
    by_order: dict = {}
    for j in range(G2.order):
        by_order.setdefault(G2.element_order(j), []).append(j)

    def extend(assigned: list):
        if len(assigned) == len(gens):
            src = _regroup(G1, gens)
            try:
                h = Homomorphism.from_gen_images(src, G2, assigned)
            except NotHomomorphism:
                return None
            if h.is_bijective():
                full = Homomorphism.build(
                    G1, G2, tuple(h(src.index[G1.elements[i]]) for i in range(G1.order))
                )
                return full
            return None
        k = len(assigned)
        want = G1.element_order(gens[k])
        for cand in by_order.get(want, []):
            # partial consistency: the subgroup generated so far must map
            sub_gens = gens[: k + 1]
            sub = _regroup(G1, sub_gens)
            try:
                h = Homomorphism.from_gen_images(sub, G2, assigned + [cand])
            except NotHomomorphism:
                continue
            if not h.is_injective():
                continue
            res = extend(assigned + [cand])
            if res is not None:
                return res
        return None

    return extend([])


def _regroup(G: FiniteGroup, gen_idxs: Sequence[int]) -> FiniteGroup:
    """Subgroup generated by the given indices, as a standalone group."""
    return closure([G.elements[i] for i in gen_idxs], cap=G.order + 1,
                   identity=G.elements[0], law=G.law)


def iso_test_small(G1: FiniteGroup, G2: FiniteGroup) -> bool:
    """Isomorphism test for groups of order at most 64."""
    if G1.order > 64 or G2.order > 64:
        raise TooLarge("iso_test_small is limited to order 64")
    return find_isomorphism(G1, G2) is not None


def normal_subgroups(G: FiniteGroup) -> list:
    """All normal subgroups, as the join-closure of element normal closures."""
    seen = {}
    trivial = Subgroup(G, (0,), (0,))
    seen[trivial.indices] = trivial
    atoms = []
    for i in range(1, G.order):
        nc = normal_closure(G, [i])
        if nc.indices not in seen:
            seen[nc.indices] = nc
            atoms.append(nc)
    frontier = list(seen.values())
    while frontier:
        fresh = []
        for a in frontier:
            for b in atoms:
                joined_gens = list(dict.fromkeys(list(a.gen_indices) + list(b.gen_indices)))
                j = subgroup_closure(G, joined_gens)
                if j.indices not in seen:
                    sub = Subgroup(G, j.indices, j.gen_indices)
                    seen[j.indices] = sub
                    fresh.append(sub)
        frontier = fresh
    return sorted(seen.values(), key=lambda s: (s.order, s.indices))


def all_subgroups(G: FiniteGroup) -> list:
    """Every subgroup (order <= 128 guard); breadth-first over generation."""
    if G.order > 128:
        raise TooLarge("subgroup enumeration is limited to order 128")
    trivial = Subgroup(G, (0,), (0,))
    seen = {trivial.indices: trivial}
    frontier = [trivial]
    while frontier:
        fresh = []
        for s in frontier:
            for i in range(1, G.order):
                if i in s.element_set:
                    continue
                gens = list(dict.fromkeys(list(s.gen_indices) + [i]))
                t = subgroup_closure(G, gens)
                if t.indices not in seen:
                    sub = Subgroup(G, t.indices, t.gen_indices)
                    seen[t.indices] = sub
                    fresh.append(sub)
        frontier = fresh
    return sorted(seen.values(), key=lambda s: (s.order, s.indices))


def semidirect_product(N: FiniteGroup, H: FiniteGroup, action_gen_images: Sequence[Sequence[int]]) -> FiniteGroup:
    """N x| H as a permutation group on the pair set N x H.

    Args:
        action_gen_images: one entry per H-generator: the automorphism of N
            it induces, given as images (N element indices) of N's generators.

    The generators act on pairs (n, h) by left multiplication; the closure
    must have order |N| * |H|, otherwise the action does not extend to a
    homomorphism H -> Aut(N) and a ValueError is raised.
    """
    autos = []
    for imgs in action_gen_images:
        a = Homomorphism.from_gen_images(N, N, list(imgs))
        if not a.is_bijective():
            raise ValueError("action image is not an automorphism")
        autos.append(a)
    nh = H.order
    deg = N.order * nh

    def pt(n_idx: int, h_idx: int) -> int:
        return n_idx * nh + h_idx

    gens = []
    for g in N.gen_indices:
        images = [0] * deg
        for n_i in range(N.order):
            tgt = N.mul(g, n_i)
            for h_i in range(nh):
                images[pt(n_i, h_i)] = pt(tgt, h_i)
        gens.append(PermElem(images))
    for gpos, g in enumerate(H.gen_indices):
        a = autos[gpos]
        images = [0] * deg
        for n_i in range(N.order):
            tgt_n = a(n_i)
            for h_i in range(nh):
                images[pt(n_i, h_i)] = pt(tgt_n, H.mul(g, h_i))
        gens.append(PermElem(images))
    G = closure(gens, cap=2 * deg + 1)
    if G.order != N.order * H.order:
        raise ValueError(
            f"semidirect closure has order {G.order}, expected {N.order * H.order}; "
            "the action is not a homomorphism"
        )
    return G
