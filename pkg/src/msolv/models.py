"""Finite solvable models, centralizer experiments, surface presentation
utilities and the center-freeness corpus scan.

A SolvModel materializes a finite stand-in for the free m-step solvable
group of rank r: level 1 is Q_1 = (Z/e)^r, and each further level is the
group generated by the Magnus generator matrices [[q_i, e_i], [0, 1]] over
the ring (Z/e)[previous level].  The models live in the solvable variety
of length <= m but are NOT claimed to be relatively free in it — they are
distinguished finite quotients, and every report says so.

Degenerate parameters short-circuit: a free group of rank 1 is Z, all of
whose higher derived subgroups vanish, so its model is C_e at every m; and
m <= 1 is the abelian model Q_1 itself.

The centralizer experiment is the finite shadow of the free-group fact
C(x^n) = <x>: the brute-force centralizer of mu(x_i)^n is compared with
the linear-algebra prediction (an element [[q, v]] commutes iff q commutes
one level down and (x^n - 1)v = (q - 1)w_n), and the decomposition
C = <mu(x_i)> * K_cap is asserted.  |K_cap| is the finite-level defect
that disappears in the limit the models approximate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

from .errors import PreconditionViolated
from .fingroup import (
    FiniteGroup,
    PermElem,
    center,
    closure,
    conj_action_faithful,
    derived_series,
    derived_term,
    m_step_quotient,
    normal_subgroups,
    trivial_group,
)
from .foxcalc import FreeWord, QuotientContext, commutator, empty_word, generator_word
from .crowell import MagnusMatrix, build_complex
from .zmodlin import (
    RMatrix,
    howell_form,
    kernel_basis,
    smith_normal_form_int,
    solve_linear,
)

MODEL_NOTE = (
    "finite Magnus-matrix model: lies in the solvable variety of length <= m "
    "but is not claimed to be relatively free in it"
)


def _is_prime_power(e: int) -> bool:
    if e < 2:
        return False
    p = 2
    n = e
    while p * p <= n:
        if n % p == 0:
            while n % p == 0:
                n //= p
            return n == 1
        p += 1
    return True  # n is prime


def _elementary_abelian(r: int, e: int) -> FiniteGroup:
    """(Z/e)^r as e-cycles on r disjoint blocks of points."""
    gens = [
        PermElem.from_cycles(r * e, [tuple(range(b * e, (b + 1) * e))])
        for b in range(r)
    ]
    return closure(gens, cap=e**r + 1)


@dataclass
class SolvModel:
    rank: int
    exponent: int
    m: int
    group: FiniteGroup
    levels: List[FiniteGroup]
    contexts: List[QuotientContext]
    degenerate: bool
    note: str = MODEL_NOTE


def build_solv_model(r: int, e: int, m: int, cap: int = 2_000_000) -> SolvModel:
    """Materialize the level-m model; CapExceeded if the closure passes cap."""
    if not _is_prime_power(e):
        raise PreconditionViolated(f"coefficient exponent {e} is not a prime power")
    if r < 1 or m < 0:
        raise PreconditionViolated("need rank >= 1 and level m >= 0")
    if m == 0:
        T = trivial_group()
        return SolvModel(r, e, m, T, [T], [], degenerate=True)
    if r == 1:
        # a rank-1 free group is Z: every higher derived subgroup vanishes,
        # so the model collapses to C_e at every level
        Q = _elementary_abelian(1, e)
        return SolvModel(r, e, m, Q, [Q], [], degenerate=True)
    levels = [_elementary_abelian(r, e)]
    contexts: List[QuotientContext] = []
    for _ in range(2, m + 1):
        prev = levels[-1]
        ctx = QuotientContext(r, prev, list(prev.gen_indices), e)
        gens = [MagnusMatrix.generator(ctx, i) for i in range(1, r + 1)]
        W = closure(gens, cap=cap)
        contexts.append(ctx)
        levels.append(W)
    model = SolvModel(r, e, m, levels[-1], levels, contexts, degenerate=(m == 1))
    if m >= 2:
        series = derived_series(model.group)
        assert len(series) - 1 <= m, "model exceeds its solvable length bound"
    return model


def module_part_basis(model: SolvModel):
    """Identify the module part {elements with top-left 1} with ker f.

    Returns (K basis as an RMatrix, module element count) after verifying
    that the group-theoretic module part has exactly the kernel's span size
    and that each kernel basis row is an enumerated group element; size
    equality plus one-sided containment force set equality, so the Howell
    basis of ker f describes the module part exactly.
    """
    if model.degenerate or model.m < 2:
        raise PreconditionViolated("no module part below level 2")
    W = model.group
    ctx = model.contexts[-1]
    comp = build_complex(ctx)
    K = kernel_basis(comp.f_matrix)
    span = howell_form(K).span_size
    module_count = sum(1 for el in W.elements if el.q == 0)
    assert module_count == span, (
        f"module part has {module_count} elements but ker f spans {span}"
    )
    for i in range(K.rows):
        probe = MagnusMatrix(ctx, 0, tuple(K.row(i)))
        assert probe in W.index, "kernel basis row is not a group element"
    return K, module_count


def _vec_times_matrix(vec: Sequence[int], M: RMatrix) -> list:
    out = [0] * M.cols
    for i, c in enumerate(vec):
        if c:
            row = M.row(i)
            out = [a + c * b for a, b in zip(out, row)]
    return out


def _annihilator_matrix(ctx: QuotientContext, q_idx: int) -> RMatrix:
    """Row-convention matrix of v -> (q - 1) v on R^r (block diagonal)."""
    d = ctx.ring.dimension
    r = ctx.rank
    perm = ctx.left_mult_perm(q_idx)
    n = ctx.ring.modulus
    rows = []
    for b in range(r):
        for i in range(d):
            ent = [0] * (r * d)
            ent[b * d + perm[i]] += 1
            ent[b * d + i] -= 1
            rows.append([x % n for x in ent])
    return RMatrix.from_rows(n, rows, cols=r * d)


@dataclass
class CentralizerReport:
    rank: int
    exponent: int
    m: int
    generator: int
    n: int
    group_order: int
    x_order: int
    centralizer_order: int
    k_cap_brute: int
    k_cap_linear: int
    oracle_equal: bool
    decomposition_holds: bool
    note: str = MODEL_NOTE


def centralizer_experiment(model: SolvModel, i: int, n: int) -> CentralizerReport:
    """Brute centralizer of mu(x_i)^n versus the linear-algebra oracle."""
    if not 1 <= i <= model.rank:
        raise PreconditionViolated(f"generator index {i} outside 1..{model.rank}")
    if n < 1:
        raise PreconditionViolated("n must be positive")
    if n % model.exponent == 0:
        raise PreconditionViolated(
            f"x_{i}^{n} dies in the abelianization (e = {model.exponent} divides n)"
        )
    if model.m < 2 or model.degenerate:
        raise PreconditionViolated("centralizer experiment needs a level >= 2 model")
    W = model.group
    ctx = model.contexts[-1]
    mu = W.elements[W.gen_indices[i - 1]]
    mu_n = mu
    for _ in range(n - 1):
        mu_n = mu_n * mu

    # brute force: scan the whole group once
    cz_elements = [el for el in W.elements if el * mu_n == mu_n * el]
    brute_module = {el.vec for el in cz_elements if el.q == 0}

    # linear oracle: K_cap = {v in ker f : (x^n - 1) v = 0}
    K, _ = module_part_basis(model)
    restricted = K.mul(_annihilator_matrix(ctx, mu_n.q))
    coeffs = kernel_basis(restricted)
    mod = ctx.ring.modulus
    k_rows = [
        [a % mod for a in _vec_times_matrix(coeffs.row(j), K)]
        for j in range(coeffs.rows)
    ]
    k_basis = RMatrix.from_rows(mod, k_rows or [[0] * K.cols], cols=K.cols)
    k_cap_linear = howell_form(k_basis).span_size

    # exact set equality: sizes agree and every brute vector lies in the span
    oracle_equal = len(brute_module) == k_cap_linear and all(
        solve_linear(k_basis, list(v))[0] is not None for v in brute_module
    )

    # decomposition: C must equal <mu(x_i)> * K_cap as a set
    powers = [MagnusMatrix.identity(ctx)]
    while True:
        nxt = powers[-1] * mu
        if nxt == powers[0]:
            break
        powers.append(nxt)
    product_set = set()
    for p in powers:
        for v in brute_module:
            product_set.add(p * MagnusMatrix(ctx, 0, v))
    decomposition = product_set == set(cz_elements)

    return CentralizerReport(
        rank=model.rank,
        exponent=model.exponent,
        m=model.m,
        generator=i,
        n=n,
        group_order=W.order,
        x_order=len(powers),
        centralizer_order=len(cz_elements),
        k_cap_brute=len(brute_module),
        k_cap_linear=k_cap_linear,
        oracle_equal=oracle_equal,
        decomposition_holds=decomposition,
    )


@dataclass
class TowerEntry:
    e: int
    q_order: int
    kernel_span: int  # |ker f| at the top level
    k_cap: int  # |K_cap| from the linear oracle
    group_order: int  # |Q| * |ker f|: the model's order, brute or predicted
    verified_brute: bool  # True when the full group was materialized
    brute_matches: bool  # vacuously True for linear-only rows


def kcap_tower(
    r: int, m: int, exponents: Sequence[int], i: int, n: int, cap: int = 2_000_000
) -> list:
    """|K_cap| along a tower of increasing coefficient exponents.

    The top level's module part equals ker f, so |K_cap| is computable by
    linear algebra alone even when the group itself is far beyond
    materialization (its order is |Q| * |ker f|).  Rows small enough to fit
    under `cap` are additionally verified against the brute-force
    centralizer experiment.
    """
    if not 1 <= i <= r:
        raise PreconditionViolated(f"generator index {i} outside 1..{r}")
    entries = []
    for e in exponents:
        if n < 1 or n % e == 0:
            raise PreconditionViolated(
                f"need positive n with x_{i}^{n} nontrivial mod e = {e}"
            )
        lower = build_solv_model(r, e, m - 1, cap=cap)
        prev = lower.group
        ctx = QuotientContext(r, prev, list(prev.gen_indices), e)
        comp = build_complex(ctx)
        K = kernel_basis(comp.f_matrix)
        kf_span = howell_form(K).span_size
        xn = prev.power(ctx.images[i - 1], n)
        restricted = K.mul(_annihilator_matrix(ctx, xn))
        coeffs = kernel_basis(restricted)
        k_rows = [
            [a % e for a in _vec_times_matrix(coeffs.row(j), K)]
            for j in range(coeffs.rows)
        ]
        k_basis = RMatrix.from_rows(e, k_rows or [[0] * K.cols], cols=K.cols)
        k_cap = howell_form(k_basis).span_size
        order = prev.order * kf_span
        verified = False
        matches = True
        if order <= cap:
            model = build_solv_model(r, e, m, cap=cap)
            rep = centralizer_experiment(model, i, n)
            verified = True
            matches = (
                rep.oracle_equal
                and rep.decomposition_holds
                and rep.k_cap_linear == k_cap
                and model.group.order == order
            )
        entries.append(
            TowerEntry(
                e=e,
                q_order=prev.order,
                kernel_span=kf_span,
                k_cap=k_cap,
                group_order=order,
                verified_brute=verified,
                brute_matches=matches,
            )
        )
    return entries


@dataclass
class CappedCentralizerReport:
    rank: int
    exponent: int
    m: int
    generator: int
    n: int
    cap: int
    enumerated: int
    complete: bool
    centralizer_seen: int
    module_seen: int
    k_cap_seen: int
    oracle_equal_pointwise: bool
    decomposition_holds_pointwise: bool
    note: str = MODEL_NOTE


def centralizer_probe_capped(
    r: int, e: int, m: int, cap: int, i: int, n: int
) -> CappedCentralizerReport:
    """Pointwise centralizer checks on a deterministic BFS prefix of W_m.

    For levels whose full closure is out of reach, the first `cap` elements
    in breadth-first generator order are enumerated and every check is
    stated pointwise: an enumerated element commutes with mu(x_i)^n iff the
    block-linear condition holds for it, and every enumerated centralizer
    element factors as mu(x_i)^t times a module element killed by
    x_i^n - 1 (the cofactor need not itself lie in the prefix).
    """
    if not 1 <= i <= r:
        raise PreconditionViolated(f"generator index {i} outside 1..{r}")
    if n < 1 or n % e == 0:
        raise PreconditionViolated("need positive n with x_i^n nontrivial mod e")
    if m < 2:
        raise PreconditionViolated("probe needs level >= 2")
    if cap < 2:
        raise PreconditionViolated("cap too small to enumerate anything")
    lower = build_solv_model(r, e, m - 1)
    prev = lower.group
    ctx = QuotientContext(r, prev, list(prev.gen_indices), e)
    gens = [MagnusMatrix.generator(ctx, j) for j in range(1, r + 1)]
    ident = MagnusMatrix.identity(ctx)

    elements = [ident]
    index = {ident: 0}
    pos = 0
    complete = True
    while pos < len(elements):
        if len(elements) >= cap:
            complete = False
            break
        cur = elements[pos]
        for g in gens:
            p = cur * g
            if p not in index:
                index[p] = len(elements)
                elements.append(p)
        pos += 1

    mu = gens[i - 1]
    mu_inv = mu.inverse()
    mu_n = ident
    for _ in range(n):
        mu_n = mu_n * mu
    xn_hat = mu_n.q
    d = ctx.ring.dimension
    mod = e

    inv_perm_cache: dict = {}

    def inv_perm(q: int) -> tuple:
        t = inv_perm_cache.get(q)
        if t is None:
            p = ctx.left_mult_perm(q)
            out = [0] * d
            for src, dst in enumerate(p):
                out[dst] = src
            t = tuple(out)
            inv_perm_cache[q] = t
        return t

    xn_inv = inv_perm(xn_hat)

    # powers of the one-level-down image of x_i, for the q-part test
    hat_powers = {0: 0}
    g, t = prev.mul(0, mu.q), 1
    while g != 0:
        hat_powers.setdefault(g, t)
        g = prev.mul(g, mu.q)
        t += 1

    oracle_ok = True
    decomposition_ok = True
    cz_seen = module_seen = kcap_seen = 0
    for el in elements:
        commutes = (el * mu_n) == (mu_n * el)
        # linear prediction: q commutes with x^n one level down, and
        # (x^n - 1) v = (q - 1) w_n holds blockwise over the ring
        lin = prev.mul(el.q, xn_hat) == prev.mul(xn_hat, el.q)
        if lin:
            q_inv = inv_perm(el.q)
            for b in range(r):
                base = b * d
                for idx in range(d):
                    lhs = (el.vec[base + xn_inv[idx]] - el.vec[base + idx]) % mod
                    rhs = (mu_n.vec[base + q_inv[idx]] - mu_n.vec[base + idx]) % mod
                    if lhs != rhs:
                        lin = False
                        break
                if not lin:
                    break
        if commutes != lin:
            oracle_ok = False
        if el.q == 0:
            module_seen += 1
            if commutes:
                kcap_seen += 1
        if commutes:
            cz_seen += 1
            t = hat_powers.get(el.q)
            if t is None:
                decomposition_ok = False
            else:
                factor = el
                for _ in range(t):
                    factor = mu_inv * factor
                if factor.q != 0 or (factor * mu_n) != (mu_n * factor):
                    decomposition_ok = False
    return CappedCentralizerReport(
        rank=r,
        exponent=e,
        m=m,
        generator=i,
        n=n,
        cap=cap,
        enumerated=len(elements),
        complete=complete,
        centralizer_seen=cz_seen,
        module_seen=module_seen,
        k_cap_seen=kcap_seen,
        oracle_equal_pointwise=oracle_ok,
        decomposition_holds_pointwise=decomposition_ok,
    )


# ------------------------------------------------------------- surfaces


def euler_char(g: int, r: int):
    """(chi, hyperbolic) for a genus-g surface with r punctures."""
    if g < 0 or r < 0:
        raise PreconditionViolated("genus and puncture count must be >= 0")
    chi = 2 - 2 * g - r
    return chi, chi < 0


@dataclass
class PresentationData:
    rank: int
    relators: tuple
    exponent_matrix: tuple  # one row per relator, one column per generator

    def __post_init__(self):
        for w in self.relators:
            if w.rank != self.rank:
                raise PreconditionViolated("relator rank mismatch")


def presentation(rank: int, relators: Sequence[FreeWord]) -> PresentationData:
    rows = []
    for w in relators:
        row = [0] * rank
        for j, exp in w.letters:
            row[j - 1] += exp
        rows.append(tuple(row))
    return PresentationData(
        rank=rank, relators=tuple(relators), exponent_matrix=tuple(rows)
    )


def surface_presentation(g: int) -> PresentationData:
    """<a_1, b_1, ..., a_g, b_g | prod [a_i, b_i]>; relator length 4g."""
    if g < 1:
        raise PreconditionViolated("genus must be >= 1")
    rank = 2 * g
    rel = empty_word(rank)
    for i in range(g):
        a = generator_word(rank, 2 * i + 1)
        b = generator_word(rank, 2 * i + 2)
        rel = rel * commutator(a, b)
    assert len(rel) == 4 * g
    return presentation(rank, [rel])


@dataclass
class AbelianizationReport:
    invariant_factors: tuple  # nonzero invariant factors of the exponent matrix
    free_rank: int
    torsion_free: bool


def presentation_abelianization(p: PresentationData) -> AbelianizationReport:
    if not p.relators:
        return AbelianizationReport((), p.rank, True)
    factors = smith_normal_form_int([list(r) for r in p.exponent_matrix])
    free_rank = p.rank - len(factors)
    return AbelianizationReport(
        invariant_factors=factors,
        free_rank=free_rank,
        torsion_free=all(f == 1 for f in factors),
    )


# ------------------------------------------------------------ corpus scan


@dataclass
class CenterScanEntry:
    label: str
    order: int
    center_order: int
    quotient_order: int
    quotient_center_order: int
    flagged: bool  # center-free group whose m-step quotient is not
    center_in_derived_image: bool
    ab_faithful: tuple  # ((order of normal subgroup N, faithful?), ...)


def centerfree_scan(corpus: Sequence, m: int) -> list:
    """Center-freeness of G versus its maximal m-step solvable quotient.

    Corpus entries are (label, FiniteGroup) pairs.  For each group the scan
    records Z(G), Z(G^(m)), whether Z(G^(m)) lies in the image of the
    (m-1)-st derived subgroup, and conjugation-faithfulness on N^ab for
    every normal N containing that derived subgroup.  A group is flagged
    when it is center-free but its quotient is not.
    """
    out = []
    for label, G in corpus:
        Z = center(G)
        Q, proj = m_step_quotient(G, m)
        ZQ = center(Q)
        upper = derived_term(G, max(m - 1, 0))
        upper_image = {proj(i) for i in upper.indices}
        center_in = all(q in upper_image for q in ZQ.indices)
        faith = []
        for N in normal_subgroups(G):
            if not set(upper.indices) <= N.element_set:
                continue
            ok, _ = conj_action_faithful(G, N)
            faith.append((N.order, ok))
        out.append(
            CenterScanEntry(
                label=label,
                order=G.order,
                center_order=Z.order,
                quotient_order=Q.order,
                quotient_center_order=ZQ.order,
                flagged=(Z.order == 1 and ZQ.order > 1),
                center_in_derived_image=center_in,
                ab_faithful=tuple(sorted(faith)),
            )
        )
    return out
