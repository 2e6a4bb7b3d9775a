"""Intensional models: fibers plus allow/forbid tables, compiled to presheaves.

A model describes a system by declaring the value range of each feature and
constraint tables over feature scopes.  :func:`compile_model` turns that into
an :class:`~presh.presheaf.AssignmentPresheaf` by enumerating, for every
object of the cover family, the assignments that satisfy every table whose
scope fits inside the object.  Restriction closure holds by construction:
any table applicable at a smaller object is applicable at every larger one.

Two independent evaluation paths exist on purpose.  Compilation backtracks
feature-by-feature with scope-indexed pruning (the hot loop lives in
:mod:`presh.kernel`, compiled when available); :func:`oracle_sections`
filters the naive full product per object with plain set membership and
shares no code with the compiled path.  Their exact agreement is the main
correctness property of the whole package.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Mapping, Sequence

from . import kernel
from .errors import EnumerationBoundError, MalformedInputError
from .lattice import (
    LATTICE_SIZE_BOUND,
    CoverFamily,
    Subset,
    check_feature_name,
    close_family,
)
from .presheaf import Assignment, AssignmentPresheaf, Fiber, unchecked_assignments

#: Refusal bound for the oracle's full product at a single object.
ORACLE_PRODUCT_BOUND = 10**7

#: Refusal bound for one table's admission-mask size (scope product).
TABLE_MASK_BOUND = 1 << 22

ALLOW = "allow"
FORBID = "forbid"


@dataclass(frozen=True)
class ConstraintTable:
    """A constraint over one scope: an allow-list or a forbid-list of tuples.

    Tuple positions follow the scope's canonical (sorted) feature order.
    Tuples are stored sorted and deduplicated, so equal tables compare equal.
    """

    scope: Subset
    polarity: str
    tuples: tuple[tuple[str, ...], ...]

    def __init__(self, scope: Subset, polarity: str, tuples: Iterable[Sequence[str]]):
        if polarity not in (ALLOW, FORBID):
            raise MalformedInputError(f"polarity must be allow or forbid, not {polarity!r}")
        if len(scope) == 0:
            raise MalformedInputError("constraint scope is empty")
        rows = sorted(set(tuple(t) for t in tuples))
        for row in rows:
            if len(row) != len(scope):
                raise MalformedInputError(
                    f"tuple {row} has arity {len(row)}, scope {scope} needs {len(scope)}"
                )
        object.__setattr__(self, "scope", scope)
        object.__setattr__(self, "polarity", polarity)
        object.__setattr__(self, "tuples", tuple(rows))

    def admits(self, row: tuple[str, ...]) -> bool:
        if self.polarity == ALLOW:
            return row in self.tuples
        return row not in self.tuples

    def sort_key(self) -> tuple:
        return (self.scope.key(), self.polarity, self.tuples)


@dataclass(frozen=True)
class Model:
    """Fibers, constraint tables and cover seeds under one name.

    Feature declaration order is significant (it is the serialization and
    canvas order); tables and cover seeds are canonicalized on construction
    so structurally equal models compare equal.
    """

    name: str
    fibers: Mapping[str, Fiber]
    tables: tuple[ConstraintTable, ...] = ()
    cover_seeds: tuple[Subset, ...] = ()
    labels: Mapping[str, str] = field(default_factory=dict)

    def __init__(
        self,
        name: str,
        fibers: Mapping[str, Fiber] | Iterable[Fiber],
        tables: Iterable[ConstraintTable] = (),
        cover_seeds: Iterable[Subset] = (),
        labels: Mapping[str, str] | None = None,
    ):
        check_feature_name(name)
        if isinstance(fibers, Mapping):
            fiber_list = list(fibers.values())
        else:
            fiber_list = list(fibers)
        seen: dict[str, Fiber] = {}
        for fib in fiber_list:
            if fib.feature in seen:
                raise MalformedInputError(f"feature {fib.feature!r} declared twice")
            seen[fib.feature] = fib
        for table in tables:
            for f in table.scope:
                if f not in seen:
                    raise MalformedInputError(
                        f"constraint scope names unknown feature {f!r}"
                    )
            for row in table.tuples:
                for f, v in zip(table.scope.names, row):
                    if v not in seen[f]:
                        raise MalformedInputError(
                            f"tuple value {v!r} is not in the fiber of {f!r}"
                        )
        for seed in cover_seeds:
            for f in seed:
                if f not in seen:
                    raise MalformedInputError(f"cover seed names unknown feature {f!r}")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "fibers", dict(seen))
        object.__setattr__(
            self, "tables", tuple(sorted(set(tables), key=ConstraintTable.sort_key))
        )
        object.__setattr__(
            self, "cover_seeds", tuple(sorted(set(cover_seeds), key=Subset.key))
        )
        object.__setattr__(self, "labels", dict(labels or {}))

    @property
    def features(self) -> Subset:
        return Subset(self.fibers)

    def feature_order(self) -> tuple[str, ...]:
        """Declaration order."""
        return tuple(self.fibers)

    def with_name(self, name: str) -> "Model":
        return Model(name, self.fibers, self.tables, self.cover_seeds, self.labels)


def family_of(model: Model, *, max_universe: int = LATTICE_SIZE_BOUND) -> CoverFamily:
    """The model's cover family: seeds plus every table scope, closed."""
    seeds = set(model.cover_seeds) | {t.scope for t in model.tables}
    return close_family(model.features, seeds, max_universe=max_universe)


def _table_mask(table: ConstraintTable, fibers: Mapping[str, Fiber]) -> bytes:
    """Admission mask over the scope's value-index space, row-major."""
    sizes = [len(fibers[f].values) for f in table.scope.names]
    space = 1
    for s in sizes:
        space *= s
    if space > TABLE_MASK_BOUND:
        raise EnumerationBoundError(
            f"constraint mask over {table.scope} refused",
            required=space,
            bound=TABLE_MASK_BOUND,
        )
    strides = [0] * len(sizes)
    acc = 1
    for i in range(len(sizes) - 1, -1, -1):
        strides[i] = acc
        acc *= sizes[i]
    fill = 0 if table.polarity == ALLOW else 1
    mask = bytearray([fill] * space)
    for row in table.tuples:
        idx = 0
        ok = True
        for f, v, stride in zip(table.scope.names, row, strides):
            pos = fibers[f].index.get(v)
            if pos is None:
                ok = False
                break
            idx += stride * pos
        if ok:
            mask[idx] = 0 if table.polarity == FORBID else 1
    return bytes(mask)


class _CompiledModel:
    """Per-model encoding shared across all family objects."""

    def __init__(self, model: Model):
        self.model = model
        self.order = tuple(sorted(model.fibers))  # canonical enumeration order
        self.values = {f: model.fibers[f].values for f in self.order}
        self.checks = []
        for table in model.tables:
            mask = _table_mask(table, model.fibers)
            self.checks.append((table.scope, mask))

    def sections_at(self, u: Subset) -> tuple[Assignment, ...]:
        names = u.names  # sorted, hence ascending slot order
        local = {f: i for i, f in enumerate(names)}
        sizes = [len(self.values[f]) for f in names]
        per_step: list[list] = [[] for _ in names]
        for scope, mask in self.checks:
            if not scope.issubset(u):
                continue
            positions = tuple(local[f] for f in scope.names)
            strides = [0] * len(positions)
            acc = 1
            for i in range(len(positions) - 1, -1, -1):
                strides[i] = acc
                acc *= len(self.values[scope.names[i]])
            per_step[max(positions)].append((positions, tuple(strides), mask))
        decoders = [self.values[f] for f in names]
        rows = kernel.enumerate_assignments(sizes, per_step, decoders)
        return unchecked_assignments(u, rows)


def compile_model(
    model: Model, *, max_universe: int = LATTICE_SIZE_BOUND
) -> AssignmentPresheaf:
    """Compile a model into its assignment presheaf.

    Every family object gets the assignments satisfying all tables whose
    scope it contains; empty section sets are valid data, not errors.
    """
    family = family_of(model, max_universe=max_universe)
    enc = _CompiledModel(model)
    sections = {u: enc.sections_at(u) for u in family.objects_sorted}
    return AssignmentPresheaf(family, dict(model.fibers), sections)


def oracle_sections(
    model: Model, u: Subset, *, max_product: int = ORACLE_PRODUCT_BOUND
) -> set[Assignment]:
    """Brute-force reference: full value product at ``u``, filtered per table.

    Deliberately naive and fully independent of the compiled path; refuses
    when the raw product exceeds ``max_product``.
    """
    for f in u:
        if f not in model.fibers:
            raise MalformedInputError(f"unknown feature {f!r}")
    space = 1
    for f in u.names:
        space *= len(model.fibers[f].values)
    if space > max_product:
        raise EnumerationBoundError(
            f"oracle product at {u} refused", required=space, bound=max_product
        )
    applicable = []
    for table in model.tables:
        if table.scope.issubset(u):
            picks = tuple(u.names.index(f) for f in table.scope.names)
            applicable.append((picks, table))
    out: set[Assignment] = set()
    for combo in product(*(model.fibers[f].values for f in u.names)):
        if all(
            table.admits(tuple(combo[i] for i in picks))
            for picks, table in applicable
        ):
            out.add(Assignment(u, combo))
    return out


def random_model(
    seed: int,
    *,
    max_features: int = 6,
    max_fiber: int = 4,
    max_tables: int = 3,
    name: str | None = None,
) -> Model:
    """Seeded random model; identical seed and limits give an identical model.

    Table density is tuned so that both empty and multiple global-section
    sets show up across a modest seed sweep.
    """
    if max_features <= 0 or max_fiber <= 0 or max_tables < 0:
        raise MalformedInputError("limits must be positive")
    rng = random.Random(seed)
    n = rng.randint(1, max_features)
    fibers = [
        Fiber(f"x{i}", tuple(f"v{j}" for j in range(rng.randint(1, max_fiber))))
        for i in range(n)
    ]
    by_name = {f.feature: f for f in fibers}
    names = sorted(by_name)
    tables = []
    for _ in range(rng.randint(0, max_tables)):
        scope = Subset(rng.sample(names, rng.randint(1, min(3, n))))
        polarity = rng.choice((ALLOW, FORBID))
        keep = 0.55 if polarity == ALLOW else 0.25
        rows = [
            combo
            for combo in product(*(by_name[f].values for f in scope.names))
            if rng.random() < keep
        ]
        tables.append(ConstraintTable(scope, polarity, rows))
    seeds = []
    for _ in range(rng.randint(0, 2)):
        seeds.append(Subset(rng.sample(names, rng.randint(1, n))))
    return Model(name or f"m{seed}", fibers, tables, seeds)
