"""Feature universes and cover families.

A system is described by a finite set of named features.  The base category
everything else lives over is a *cover family*: a collection of feature
subsets ordered by inclusion, required to contain the empty set, every
singleton, and the whole universe, and to be closed under pairwise
intersection and union.  Those requirements together force the family to be
the full power set of its universe, so :func:`close_family` materializes
exactly that; the saturation view (close seeds under meet/join until a fixed
point) is kept as an independent oracle in the test suite.

Canonical orders used throughout the package:

* feature names inside a subset: lexicographic;
* subsets against each other: shortlex (size first, then the name tuple).

Both are pinned so that every enumeration and serialization is reproducible
byte for byte.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Iterable, Iterator

from .errors import EnumerationBoundError, InvariantViolationError, MalformedInputError
from .report import LawReport, Violation

#: Valid feature (and value, and model) name.
NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_-]*\Z")

#: Largest universe for which a family (2**n objects) may be materialized.
LATTICE_SIZE_BOUND = 12

#: Largest outer set for which the adjunction sweep runs exhaustively.
ADJUNCTION_SWEEP_BOUND = 5

FeatureId = str


def check_feature_name(name: str) -> str:
    if not isinstance(name, str) or not NAME_RE.match(name):
        raise MalformedInputError(f"invalid feature name {name!r}")
    return name


@dataclass(frozen=True)
class Subset:
    """An immutable set of feature names, stored sorted.

    Accepts any iterable of names; duplicates collapse.  Set operations
    return new subsets.
    """

    names: tuple[str, ...]

    def __init__(self, names: Iterable[str] = ()):
        ordered = tuple(sorted(set(names)))
        for n in ordered:
            check_feature_name(n)
        object.__setattr__(self, "names", ordered)

    def __iter__(self) -> Iterator[str]:
        return iter(self.names)

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: object) -> bool:
        return name in self.names

    def issubset(self, other: "Subset") -> bool:
        return set(self.names) <= set(other.names)

    def union(self, other: "Subset") -> "Subset":
        return Subset(self.names + other.names)

    def intersection(self, other: "Subset") -> "Subset":
        mine = set(other.names)
        return Subset(n for n in self.names if n in mine)

    def difference(self, other: "Subset") -> "Subset":
        theirs = set(other.names)
        return Subset(n for n in self.names if n not in theirs)

    def key(self) -> tuple[int, tuple[str, ...]]:
        """Shortlex sort key."""
        return (len(self.names), self.names)

    def __str__(self) -> str:
        return "{" + ",".join(self.names) + "}"


@dataclass(frozen=True)
class InclusionArrow:
    """The unique arrow source -> target of the poset category (source ⊆ target)."""

    source: Subset
    target: Subset

    def __post_init__(self):
        if not self.source.issubset(self.target):
            raise MalformedInputError(
                f"no inclusion arrow {self.source} -> {self.target}"
            )

    @property
    def is_identity(self) -> bool:
        return self.source == self.target

    def compose(self, inner: "InclusionArrow") -> "InclusionArrow":
        """Arrow composition: ``outer.compose(inner)`` for inner: U->V, outer: V->W."""
        if inner.target != self.source:
            raise MalformedInputError(
                f"arrows do not chain: {inner.target} != {self.source}"
            )
        return InclusionArrow(inner.source, self.target)

    @staticmethod
    def identity(obj: Subset) -> "InclusionArrow":
        return InclusionArrow(obj, obj)


@dataclass(frozen=True)
class CoverFamily:
    """The subset lattice a presheaf is indexed by.

    Construct through :func:`close_family` or :func:`restrict_family`, which
    guarantee the invariants; the raw constructor performs no validation so
    that deliberately broken families can be built for law-check tests.
    """

    universe: Subset
    objects: frozenset[Subset]

    @cached_property
    def objects_sorted(self) -> tuple[Subset, ...]:
        return tuple(sorted(self.objects, key=Subset.key))

    def __contains__(self, obj: object) -> bool:
        return obj in self.objects

    def require(self, obj: Subset) -> Subset:
        if obj not in self.objects:
            raise MalformedInputError(f"{obj} is not an object of the family")
        return obj

    def inclusions(self) -> Iterator[tuple[Subset, Subset]]:
        """All ordered pairs (U, V) with U ⊆ V, canonically ordered."""
        for v in self.objects_sorted:
            for u in self.objects_sorted:
                if u.issubset(v):
                    yield (u, v)

    def arrows(self) -> Iterator[InclusionArrow]:
        for u, v in self.inclusions():
            yield InclusionArrow(u, v)

    def supersets(self, obj: Subset) -> tuple[Subset, ...]:
        return tuple(v for v in self.objects_sorted if obj.issubset(v))


def _power_set(universe: Subset) -> frozenset[Subset]:
    names = universe.names
    out = []
    for k in range(len(names) + 1):
        for combo in combinations(names, k):
            out.append(Subset(combo))
    return frozenset(out)


def close_family(
    universe: Subset,
    seeds: Iterable[Subset] = (),
    *,
    max_universe: int = LATTICE_SIZE_BOUND,
) -> CoverFamily:
    """Smallest family over ``universe`` containing ``seeds``.

    Every family must hold the empty set, all singletons, and the universe,
    and be closed under pairwise meet and join; union-closure over the
    singletons then already yields every subset, so the result is always the
    full power set and the seeds only get membership-checked.  Idempotent by
    construction.
    """
    for seed in seeds:
        for name in seed:
            if name not in universe:
                raise MalformedInputError(
                    f"seed {seed} not contained in universe: unknown feature {name!r}"
                )
    if len(universe) > max_universe:
        raise EnumerationBoundError(
            f"family over {len(universe)} features refused",
            required=2 ** len(universe),
            bound=2**max_universe,
        )
    return CoverFamily(universe=universe, objects=_power_set(universe))


def validate_family(family: CoverFamily) -> LawReport:
    """Check the cover-family invariants, reporting every violation."""
    violations: list[Violation] = []
    objs = family.objects
    if Subset() not in objs:
        violations.append(Violation("family-empty", "empty subset missing"))
    if family.universe not in objs:
        violations.append(Violation("family-top", "universe missing"))
    for name in family.universe:
        if Subset([name]) not in objs:
            violations.append(
                Violation("family-singleton", f"singleton {{{name}}} missing", (name,))
            )
    for obj in objs:
        if not obj.issubset(family.universe):
            violations.append(
                Violation("family-bounds", f"{obj} exceeds the universe", (obj,))
            )
    for u in objs:
        for v in objs:
            if u.intersection(v) not in objs:
                violations.append(
                    Violation("family-meet-closure", f"{u} ∩ {v} missing", (u, v))
                )
            if u.union(v) not in objs:
                violations.append(
                    Violation("family-join-closure", f"{u} ∪ {v} missing", (u, v))
                )
    return LawReport(tuple(violations))


def meet(family: CoverFamily, u: Subset, v: Subset) -> Subset:
    """Greatest lower bound of two objects; the pullback of the inclusion square."""
    family.require(u)
    family.require(v)
    return u.intersection(v)


def join(family: CoverFamily, u: Subset, v: Subset) -> Subset:
    """Least upper bound of two objects; the pushout of the inclusion square."""
    family.require(u)
    family.require(v)
    return u.union(v)


def restrict_family(family: CoverFamily, s0: Subset) -> CoverFamily:
    """The family of all objects contained in ``s0``."""
    if not s0.issubset(family.universe):
        raise MalformedInputError(f"{s0} is not a subset of the universe")
    restricted = CoverFamily(
        universe=s0, objects=frozenset(u for u in family.objects if u.issubset(s0))
    )
    report = validate_family(restricted)
    if not report.passed:
        raise InvariantViolationError(
            "restriction produced an invalid family; the input family was "
            f"already broken: {report.violations[0]}"
        )
    return restricted


def is_subobject(u: Subset, v: Subset) -> bool:
    """True iff the poset category has an arrow u -> v."""
    return u.issubset(v)


def extend_functor_f1(u: Subset, s1: Subset, s2: Subset) -> Subset:
    """Pad a subset of the smaller universe with everything the larger one adds.

    Requires u ⊆ s1 ⊆ s2; returns u ∪ (s2 ∖ s1).  Monotone in u.
    """
    if not u.issubset(s1) or not s1.issubset(s2):
        raise MalformedInputError(
            f"need {u} ⊆ {s1} ⊆ {s2} for the padding functor"
        )
    return u.union(s2.difference(s1))


def restriction_functor_r(v: Subset, s1: Subset) -> Subset:
    """Cut a subset down to the smaller universe: v ∩ s1."""
    return v.intersection(s1)


def check_adjunction_triple(
    s1: Subset, s2: Subset, *, max_size: int = ADJUNCTION_SWEEP_BOUND
) -> LawReport:
    """Verify that intersection-restriction sits between inclusion and padding.

    For every U ⊆ s1 and V ⊆ s2 the two Hom-set equations of the adjoint
    triple reduce, in a poset, to

    * U ⊆ V  ⇔  U ⊆ V ∩ s1          (restriction is right adjoint to inclusion)
    * V ∩ s1 ⊆ U  ⇔  V ⊆ U ∪ (s2∖s1) (restriction is left adjoint to padding)

    The sweep is exhaustive over both power sets and refuses above
    ``max_size`` rather than sampling.
    """
    if not s1.issubset(s2):
        raise MalformedInputError(f"need {s1} ⊆ {s2}")
    if len(s2) > max_size:
        raise EnumerationBoundError(
            "adjunction sweep refused",
            required=4 ** len(s2),
            bound=4**max_size,
        )
    pad = s2.difference(s1)
    violations: list[Violation] = []
    for u_names in _power_set(s1):
        u = u_names
        for v in _power_set(s2):
            if (u.issubset(v)) != (u.issubset(v.intersection(s1))):
                violations.append(
                    Violation(
                        "adjunction-left",
                        f"U ⊆ V disagrees with U ⊆ V∩S1 at U={u}, V={v}",
                        (u, v),
                    )
                )
            if (v.intersection(s1).issubset(u)) != (v.issubset(u.union(pad))):
                violations.append(
                    Violation(
                        "adjunction-right",
                        f"V∩S1 ⊆ U disagrees with V ⊆ U∪(S2∖S1) at U={u}, V={v}",
                        (u, v),
                    )
                )
    return LawReport(tuple(violations))
