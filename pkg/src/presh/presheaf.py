"""Presheaves over a cover family.

Two carriers are provided.  :class:`AssignmentPresheaf` is the workhorse:
each object of the family gets the set of feature-value assignments that are
jointly admissible there, and restriction is projection of assignments onto
a smaller feature set.  :class:`AbstractPresheaf` keeps elements opaque and
restriction maps explicit; it exists so that the representable presheaves,
natural-transformation enumeration and the Yoneda bijection can be checked
on arbitrary finite presheaves, not only assignment-shaped ones.

The central law is restriction closure: whatever is admissible on a larger
feature set must project to something admissible on every smaller one.
:func:`validate_laws` checks it (or, for the abstract carrier, the identity
and composition laws) and reports every violation with a witness instead of
raising.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import cached_property
from itertools import product
from operator import itemgetter
from typing import Callable, Iterable, Mapping, Union

from .errors import EnumerationBoundError, MalformedInputError
from .lattice import CoverFamily, Subset, check_feature_name, close_family
from .report import LawReport, Violation

#: Refuse natural-transformation enumerations with more raw candidates than this.
NAT_ENUM_BOUND = 10**6

#: Element id used by representable presheaves (poset Hom-sets are at most one arrow).
HOM_TOKEN = "*"


@dataclass(frozen=True)
class Fiber:
    """The finite, ordered value range of one feature.

    Declaration order is canonical and preserved bit-exactly; it drives
    enumeration order and serialization.
    """

    feature: str
    values: tuple[str, ...]

    def __post_init__(self):
        check_feature_name(self.feature)
        if not self.values:
            raise MalformedInputError(f"fiber of {self.feature!r} is empty")
        if len(set(self.values)) != len(self.values):
            raise MalformedInputError(f"fiber of {self.feature!r} repeats a value")
        for v in self.values:
            check_feature_name(v)

    @cached_property
    def index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.values)}

    def __contains__(self, value: object) -> bool:
        return value in self.index


@dataclass(frozen=True)
class Assignment:
    """A choice of one value per feature of ``domain``.

    ``values`` aligns positionally with ``domain.names`` (which is sorted),
    so equality and hashing are structural.
    """

    domain: Subset
    values: tuple[str, ...]

    def __post_init__(self):
        if len(self.values) != len(self.domain):
            raise MalformedInputError(
                f"assignment has {len(self.values)} values for {len(self.domain)} features"
            )

    @staticmethod
    def from_mapping(binding: Mapping[str, str]) -> "Assignment":
        dom = Subset(binding)
        return Assignment(dom, tuple(binding[f] for f in dom.names))

    def as_dict(self) -> dict[str, str]:
        return dict(zip(self.domain.names, self.values))

    def value_of(self, feature: str) -> str:
        try:
            return self.values[self.domain.names.index(feature)]
        except ValueError:
            raise MalformedInputError(f"{feature!r} not in {self.domain}") from None

    def token(self) -> str:
        if not self.domain.names:
            return "()"
        return ",".join(f"{f}={v}" for f, v in zip(self.domain.names, self.values))

    def __str__(self) -> str:
        return self.token()


def unchecked_assignments(
    domain: Subset, rows: Iterable[tuple[str, ...]]
) -> tuple[Assignment, ...]:
    """Bulk-build assignments from pre-validated rows (arity already matches
    the domain); bypasses per-instance validation for the hot compile path."""
    new = Assignment.__new__
    out = []
    append = out.append
    for row in rows:
        a = new(Assignment)
        d = a.__dict__
        d["domain"] = domain
        d["values"] = row
        append(a)
    return tuple(out)


def restrict_assignment(a: Assignment, u: Subset) -> Assignment:
    """Project an assignment onto a smaller domain (restriction along u ⊆ domain)."""
    if not u.issubset(a.domain):
        raise MalformedInputError(f"{u} is not contained in {a.domain}")
    lookup = a.as_dict()
    return Assignment(u, tuple(lookup[f] for f in u.names))


def assignment_sort_key(
    fibers: Mapping[str, Fiber],
) -> Callable[[Assignment], tuple]:
    """Canonical assignment order: domain shortlex, then fiber value indices.

    Values missing from their fiber (possible on hand-built data) sort after
    declared ones, by token.
    """

    def key(a: Assignment) -> tuple:
        ranks = []
        for f, v in zip(a.domain.names, a.values):
            fib = fibers.get(f)
            if fib is not None and v in fib.index:
                ranks.append((fib.index[v], ""))
            else:
                ranks.append((len(fib.values) if fib else 0, v))
        return (a.domain.key(), tuple(ranks))

    return key


@dataclass(frozen=True)
class AssignmentPresheaf:
    """Admissible feature-value combinations, one finite set per family object."""

    family: CoverFamily
    fibers: Mapping[str, Fiber]
    sections: Mapping[Subset, tuple[Assignment, ...]]

    def sections_at(self, u: Subset) -> tuple[Assignment, ...]:
        self.family.require(u)
        return self.sections[u]

    def as_abstract(self) -> "AbstractPresheaf":
        """Forget the assignment structure: elements become opaque tokens and
        restrictions become the projection maps."""
        elements = {
            u: tuple(a.token() for a in secs) for u, secs in self.sections.items()
        }
        by_token = {
            u: {a.token(): a for a in secs} for u, secs in self.sections.items()
        }
        restrictions: dict[tuple[Subset, Subset], dict[str, str]] = {}
        for u, v in self.family.inclusions():
            restrictions[(u, v)] = {
                tok: restrict_assignment(a, u).token()
                for tok, a in by_token[v].items()
            }
        return AbstractPresheaf(self.family, elements, restrictions)


@dataclass(frozen=True)
class AbstractPresheaf:
    """A finite presheaf with opaque elements and explicit restriction maps.

    ``restrictions`` is keyed by the inclusion pair ``(smaller, larger)`` and
    maps elements of the larger object to elements of the smaller one.  The
    raw constructor does not validate; run :func:`validate_laws`.
    """

    family: CoverFamily
    elements: Mapping[Subset, tuple[str, ...]]
    restrictions: Mapping[tuple[Subset, Subset], Mapping[str, str]]

    def elements_at(self, u: Subset) -> tuple[str, ...]:
        self.family.require(u)
        return self.elements[u]

    def restrict(self, x: str, v: Subset, u: Subset) -> str:
        return self.restrictions[(u, v)][x]


@dataclass(frozen=True)
class NatTransformation:
    """An objectwise family of maps commuting with restrictions."""

    components: Mapping[Subset, Mapping[str, str]]

    def at(self, u: Subset) -> Mapping[str, str]:
        return self.components[u]


Presheaf = Union[AssignmentPresheaf, AbstractPresheaf]


# ---------------------------------------------------------------------------
# law validation


def _validate_assignment(p: AssignmentPresheaf) -> LawReport:
    violations: list[Violation] = []
    # value tuples only in the hot loops; Assignment objects are built just
    # for witnesses
    fiber_values = {f: set(fib.values) for f, fib in p.fibers.items()}
    tuple_sets: dict[Subset, frozenset[tuple[str, ...]]] = {}
    for u in p.family.objects_sorted:
        secs = p.sections.get(u)
        if secs is None:
            violations.append(Violation("sections-missing", f"no sections at {u}", (u,)))
            tuple_sets[u] = frozenset()
            continue
        rows = frozenset(a.values for a in secs)
        if len(rows) != len(secs):
            violations.append(Violation("duplicate-section", f"repeated assignment at {u}", (u,)))
        for a in secs:
            if a.domain is not u and a.domain != u:
                violations.append(
                    Violation("domain-mismatch", f"{a} stored at {u}", (u, a))
                )
        ulen = len(u.names)
        ragged = [row for row in rows if len(row) != ulen]
        for row in ragged:
            violations.append(
                Violation("domain-mismatch", f"arity {len(row)} row at {u}", (u, row))
            )
        well = rows if not ragged else [r for r in rows if len(r) == ulen]
        for f, column in zip(u.names, zip(*well)):
            allowed = fiber_values.get(f)
            used = set(column)
            if allowed is None or not used <= allowed:
                for v in sorted(used - (allowed or set())):
                    violations.append(
                        Violation("fiber-typing", f"{f}={v} outside the fiber", (u, v))
                    )
        tuple_sets[u] = rows
    if violations:
        return LawReport(tuple(violations))
    # Closure along the cover pairs of the family poset implies closure along
    # every inclusion (projections compose), so checking covers is a complete
    # violation detector and pinpoints the minimal broken step.
    for u, v in _cover_pairs(p.family):
        if not p.sections[v]:
            continue
        at_u = tuple_sets[u]
        positions = tuple(v.names.index(f) for f in u.names)
        if len(positions) == 0:
            project = lambda row: ()  # noqa: E731
        elif len(positions) == 1:
            single = positions[0]
            project = lambda row: (row[single],)  # noqa: E731
        else:
            project = itemgetter(*positions)
        for b in p.sections[v]:
            projected = project(b.values)
            if projected not in at_u:
                witness = Assignment(u, projected)
                violations.append(
                    Violation(
                        "restriction-closure",
                        f"{b} at {v} projects to {witness}, absent at {u}",
                        (u, v, b),
                    )
                )
    return LawReport(tuple(violations))


def _cover_pairs(family) -> list[tuple[Subset, Subset]]:
    objs = family.objects_sorted
    if len(objs) == 2 ** len(family.universe):
        # full power set: covers are exactly the single-feature drops
        out = []
        for v in objs:
            names = v.names
            for i in range(len(names)):
                out.append((Subset(names[:i] + names[i + 1 :]), v))
        return out
    out = []
    for u, v in family.inclusions():
        if u == v:
            continue
        if any(
            w != u and w != v and u.issubset(w) and w.issubset(v) for w in objs
        ):
            continue
        out.append((u, v))
    return out


def _validate_abstract(p: AbstractPresheaf) -> LawReport:
    violations: list[Violation] = []
    for u in p.family.objects_sorted:
        if u not in p.elements:
            violations.append(Violation("elements-missing", f"no elements at {u}", (u,)))
    if violations:
        return LawReport(tuple(violations))
    for u, v in p.family.inclusions():
        m = p.restrictions.get((u, v))
        if m is None:
            violations.append(
                Violation("missing-map", f"no restriction map for {u} ⊆ {v}", (u, v))
            )
            continue
        if set(m.keys()) != set(p.elements[v]):
            violations.append(
                Violation("map-typing", f"map {u} ⊆ {v} not total on elements", (u, v))
            )
            continue
        if any(img not in p.elements[u] for img in m.values()):
            violations.append(
                Violation("map-typing", f"map {u} ⊆ {v} leaves elements", (u, v))
            )
            continue
        if u == v and any(m[x] != x for x in p.elements[u]):
            violations.append(
                Violation("identity", f"restriction along {u} ⊆ {u} is not identity", (u,))
            )
    if violations:
        return LawReport(tuple(violations))
    objs = p.family.objects_sorted
    for w in objs:
        for v in objs:
            if not v.issubset(w):
                continue
            for u in objs:
                if not u.issubset(v):
                    continue
                direct = p.restrictions[(u, w)]
                via = p.restrictions[(u, v)]
                first = p.restrictions[(v, w)]
                for x in p.elements[w]:
                    if via[first[x]] != direct[x]:
                        violations.append(
                            Violation(
                                "functoriality",
                                f"restriction of {x!r} along {u} ⊆ {v} ⊆ {w} "
                                "disagrees with the direct map",
                                (u, v, w, x),
                            )
                        )
    return LawReport(tuple(violations))


def validate_laws(p: Presheaf) -> LawReport:
    """Check the presheaf laws, listing every violation with a witness.

    Assignment presheaves are checked for restriction closure (plus fiber
    typing); abstract ones for totality, identity and functoriality of their
    restriction maps.
    """
    if isinstance(p, AssignmentPresheaf):
        return _validate_assignment(p)
    if isinstance(p, AbstractPresheaf):
        return _validate_abstract(p)
    raise MalformedInputError(f"not a presheaf: {type(p).__name__}")


# ---------------------------------------------------------------------------
# sections


def closure_complete(
    p: AssignmentPresheaf,
) -> tuple[AssignmentPresheaf, dict[Subset, tuple[Assignment, ...]]]:
    """Smallest superset presheaf satisfying restriction closure.

    Adds the projection of every stored assignment to every smaller object.
    Idempotent and monotone; the second return value lists what was added,
    per object.
    """
    key = assignment_sort_key(p.fibers)
    sections = {u: set(secs) for u, secs in p.sections.items()}
    for u in p.family.objects_sorted:
        sections.setdefault(u, set())
    for v in sorted(p.family.objects_sorted, key=Subset.key, reverse=True):
        for u in p.family.objects_sorted:
            if u == v or not u.issubset(v):
                continue
            for b in sections[v]:
                sections[u].add(restrict_assignment(b, u))
    additions = {}
    closed = {}
    for u in p.family.objects_sorted:
        before = set(p.sections.get(u, ()))
        closed[u] = tuple(sorted(sections[u], key=key))
        added = tuple(sorted(sections[u] - before, key=key))
        if added:
            additions[u] = added
    return AssignmentPresheaf(p.family, dict(p.fibers), closed), additions


def global_sections(p: AssignmentPresheaf) -> tuple[Assignment, ...]:
    """The sections over the whole universe, canonically ordered."""
    return p.sections_at(p.family.universe)


def _require_local_section(p: AssignmentPresheaf, a: Assignment) -> None:
    p.family.require(a.domain)
    if a not in p.sections[a.domain]:
        raise MalformedInputError(f"{a} is not a local section at {a.domain}")


def extensions(
    p: AssignmentPresheaf, a: Assignment, v: Subset
) -> tuple[Assignment, ...]:
    """All sections at ``v`` restricting to ``a``; empty means ``a`` does not extend."""
    _require_local_section(p, a)
    p.family.require(v)
    if not a.domain.issubset(v):
        raise MalformedInputError(f"{a.domain} is not contained in {v}")
    positions = [v.names.index(f) for f in a.domain.names]
    return tuple(
        b for b in p.sections[v] if tuple(b.values[i] for i in positions) == a.values
    )


def blocking_sets(p: AssignmentPresheaf, a: Assignment) -> tuple[Subset, ...]:
    """Inclusion-minimal objects above ``a``'s domain on which ``a`` has no extension.

    Empty result means the section extends to every superset object; each
    returned object names a scope whose constraints rule the section out.
    """
    _require_local_section(p, a)
    blocked = [
        w
        for w in p.family.supersets(a.domain)
        if not extensions(p, a, w)
    ]
    minimal = [
        w
        for w in blocked
        if not any(o != w and o.issubset(w) for o in blocked)
    ]
    return tuple(sorted(minimal, key=Subset.key))


# ---------------------------------------------------------------------------
# representables, natural transformations, the Yoneda bijection


def representable(family: CoverFamily, c: Subset) -> AbstractPresheaf:
    """The presheaf of arrows into ``c``: one element at D exactly when D ⊆ c."""
    family.require(c)
    elements = {
        d: ((HOM_TOKEN,) if d.issubset(c) else ()) for d in family.objects_sorted
    }
    restrictions = {
        (u, v): ({HOM_TOKEN: HOM_TOKEN} if v.issubset(c) else {})
        for u, v in family.inclusions()
    }
    return AbstractPresheaf(family, elements, restrictions)


def _same_family(f: AbstractPresheaf, g: AbstractPresheaf) -> None:
    if f.family.universe != g.family.universe or f.family.objects != g.family.objects:
        raise MalformedInputError("presheaves live over different families")


def nat_transformations(
    fsrc: AbstractPresheaf,
    gtgt: AbstractPresheaf,
    *,
    max_candidates: int = NAT_ENUM_BOUND,
) -> tuple[NatTransformation, ...]:
    """Enumerate every natural transformation ``fsrc -> gtgt``.

    Complete and deterministic: objects are processed from the largest down
    so restriction constraints prune the component search early; output
    order is the canonical enumeration order.  Refuses (rather than
    sampling) when the raw candidate count exceeds ``max_candidates``.
    """
    _same_family(fsrc, gtgt)
    family = fsrc.family
    needed = [d for d in family.objects_sorted if fsrc.elements[d]]
    if any(not gtgt.elements[d] for d in needed):
        return ()
    raw = 1
    for d in needed:
        raw *= len(gtgt.elements[d]) ** len(fsrc.elements[d])
    if raw > max_candidates:
        raise EnumerationBoundError(
            "natural-transformation search refused", required=raw, bound=max_candidates
        )

    order = sorted(needed, key=Subset.key, reverse=True)
    results: list[NatTransformation] = []
    chosen: dict[Subset, dict[str, str]] = {}

    def commutes(d: Subset, comp: dict[str, str]) -> bool:
        for e, emap in chosen.items():
            if d.issubset(e):
                u, v, lower, upper = d, e, comp, emap
            elif e.issubset(d):
                u, v, lower, upper = e, d, emap, comp
            else:
                continue
            for x in fsrc.elements[v]:
                if lower[fsrc.restrict(x, v, u)] != gtgt.restrict(upper[x], v, u):
                    return False
        return True

    def search(i: int) -> None:
        if i == len(order):
            components = {d: dict(chosen.get(d, {})) for d in family.objects_sorted}
            results.append(NatTransformation(components))
            return
        d = order[i]
        src = fsrc.elements[d]
        for images in product(gtgt.elements[d], repeat=len(src)):
            comp = dict(zip(src, images))
            if commutes(d, comp):
                chosen[d] = comp
                search(i + 1)
                del chosen[d]

    search(0)
    return tuple(results)


def yoneda_check(f: AbstractPresheaf, d: Subset) -> LawReport:
    """Verify the bijection between transformations out of the representable
    at ``d`` and the elements at ``d``.

    Each transformation is sent to where it takes the identity element; the
    report fails if that evaluation map is not one-to-one and onto.
    """
    f.family.require(d)
    nats = nat_transformations(representable(f.family, d), f)
    image = [nat.at(d)[HOM_TOKEN] for nat in nats]
    violations: list[Violation] = []
    seen: dict[str, int] = {}
    for i, x in enumerate(image):
        if x in seen:
            violations.append(
                Violation(
                    "yoneda-injective",
                    f"transformations {seen[x]} and {i} both evaluate to {x!r} at {d}",
                    (d, x),
                )
            )
        seen[x] = i
    for x in f.elements[d]:
        if x not in seen:
            violations.append(
                Violation(
                    "yoneda-surjective",
                    f"no transformation evaluates to {x!r} at {d}",
                    (d, x),
                )
            )
    return LawReport(tuple(violations))


# ---------------------------------------------------------------------------
# pullback along a functor between subset lattices


def _object_map(functor, family: CoverFamily) -> dict[Subset, Subset]:
    if callable(functor):
        mapping = {u: functor(u) for u in family.objects_sorted}
    else:
        mapping = {u: functor[u] for u in family.objects_sorted}
    for u, v in family.inclusions():
        if not mapping[u].issubset(mapping[v]):
            raise MalformedInputError(
                f"functor is not monotone: {u} ⊆ {v} but {mapping[u]} ⊄ {mapping[v]}"
            )
    return mapping


def pullback_presheaf(
    functor, q: Presheaf, *, family: CoverFamily | None = None
) -> Presheaf:
    """Reindex a presheaf along a functor into its family.

    For an abstract presheaf, ``functor`` is a monotone object map (dict or
    callable) from ``family`` into ``q``'s family, and the result simply
    reads ``q`` at the image object.  For an assignment presheaf, pass a
    feature identification (anything with ``feature_map`` and ``value_maps``);
    the induced object map takes a target feature set to its source image and
    values are pulled back through the value maps, i.e. an assignment is
    admitted exactly when its value-mapped image is admitted at the source.
    """
    if isinstance(q, AbstractPresheaf):
        if family is None:
            raise MalformedInputError("pullback of an abstract presheaf needs a family")
        mapping = _object_map(functor, family)
        for u in family.objects_sorted:
            q.family.require(mapping[u])
        elements = {u: tuple(q.elements[mapping[u]]) for u in family.objects_sorted}
        restrictions = {
            (u, v): dict(q.restrictions[(mapping[u], mapping[v])])
            for u, v in family.inclusions()
        }
        return AbstractPresheaf(family, elements, restrictions)

    if not isinstance(q, AssignmentPresheaf):
        raise MalformedInputError(f"not a presheaf: {type(q).__name__}")
    feature_map = getattr(functor, "feature_map", None)
    value_maps = getattr(functor, "value_maps", None)
    if feature_map is None or value_maps is None:
        raise MalformedInputError(
            "pullback of an assignment presheaf needs a feature identification"
        )
    for tgt, src in feature_map.items():
        if src not in q.fibers:
            raise MalformedInputError(f"mapped feature {src!r} missing from the source")
    fibers = {
        tgt: Fiber(tgt, tuple(value_maps[tgt].keys())) for tgt in feature_map
    }
    fam = family or close_family(Subset(feature_map))
    mapping = {u: Subset(feature_map[t] for t in u) for u in fam.objects_sorted}
    sections: dict[Subset, tuple[Assignment, ...]] = {}
    for u in fam.objects_sorted:
        src_obj = q.family.require(mapping[u])
        admitted = frozenset(q.sections[src_obj])
        out = []
        for combo in product(*(fibers[t].values for t in u.names)):
            image = {feature_map[t]: value_maps[t][val] for t, val in zip(u.names, combo)}
            if Assignment.from_mapping(image) in admitted:
                out.append(Assignment(u, combo))
        sections[u] = tuple(out)
    return AssignmentPresheaf(fam, fibers, sections)


# ---------------------------------------------------------------------------
# seeded random presheaves (law-check harness)


def random_abstract_presheaf(seed: int, family: CoverFamily) -> AbstractPresheaf:
    """Deterministic random presheaf over ``family``.

    Mixes three lawful constructions: a representable, a closure-completed
    random assignment presheaf (projection restrictions, typically
    non-injective), and a tagged disjoint union of the two (multi-element
    sets at the bottom object, injective summand).  Element counts stay
    small enough that a Yoneda enumeration at any object fits the
    natural-transformation bound.
    """
    rng = random.Random(seed)
    style = rng.choice(("representable", "product", "union", "product"))
    if style == "representable":
        c = rng.choice(family.objects_sorted)
        return representable(family, c)
    if style == "union":
        left = _random_product_presheaf(rng, family)
        right = representable(family, rng.choice(family.objects_sorted))
        elements = {
            u: tuple(f"L{x}" for x in left.elements[u])
            + tuple(f"R{x}" for x in right.elements[u])
            for u in family.objects_sorted
        }
        restrictions = {}
        for u, v in family.inclusions():
            m = {f"L{x}": f"L{y}" for x, y in left.restrictions[(u, v)].items()}
            m.update({f"R{x}": f"R{y}" for x, y in right.restrictions[(u, v)].items()})
            restrictions[(u, v)] = m
        return AbstractPresheaf(family, elements, restrictions)
    return _random_product_presheaf(rng, family)


def _random_product_presheaf(rng: random.Random, family: CoverFamily) -> AbstractPresheaf:
    fibers = {
        f: Fiber(f, tuple(f"v{i}" for i in range(rng.randint(1, 2))))
        for f in family.universe.names
    }
    sections: dict[Subset, set[Assignment]] = {u: set() for u in family.objects_sorted}
    for u in family.objects_sorted:
        for combo in product(*(fibers[f].values for f in u.names)):
            if rng.random() < 0.45:
                sections[u].add(Assignment(u, combo))
    key = assignment_sort_key(fibers)
    sparse = AssignmentPresheaf(
        family,
        fibers,
        {u: tuple(sorted(s, key=key)) for u, s in sections.items()},
    )
    closed, _ = closure_complete(sparse)
    return closed.as_abstract()
