"""Change operators on models: fiber edits, amalgamation, analogy transfer.

Amalgamation merges two models over their shared feature names.  Shared
fibers become the union of the two value ranges, and every source table is
imported *guarded*: it only constrains assignments whose values on its scope
all lie inside that source's original fibers.  An assignment that uses a
value the other source contributed escapes the guard, which is exactly how
merging can unlock combinations neither source admitted on its own while
never contradicting a source inside its own value range.

Transfer pulls a model back along a feature identification (an injective
feature map plus per-feature value maps): target tables are the preimages of
source tables, so compiling the transferred model agrees objectwise with
pulling the compiled source presheaf back along the identification.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Mapping

from .errors import EnumerationBoundError, MalformedInputError
from .lattice import Subset, check_feature_name
from .model import (
    ALLOW,
    FORBID,
    TABLE_MASK_BOUND,
    ConstraintTable,
    Model,
    compile_model,
)
from .presheaf import (
    Assignment,
    AssignmentPresheaf,
    Fiber,
    global_sections,
    restrict_assignment,
)
from .report import LawReport, Violation


@dataclass(frozen=True)
class FeatureIdentification:
    """An analogy map: target features onto source features, values alongside.

    ``feature_map`` sends each target feature to a distinct source feature;
    ``value_maps[t]`` sends every value of the target fiber of ``t`` to a
    value of the mapped source fiber.  Declaration order of the maps is the
    canonical fiber order of the transferred model.
    """

    name: str
    feature_map: Mapping[str, str]
    value_maps: Mapping[str, Mapping[str, str]]

    def __post_init__(self):
        check_feature_name(self.name)
        seen_sources: set[str] = set()
        for tgt, src in self.feature_map.items():
            check_feature_name(tgt)
            check_feature_name(src)
            if src in seen_sources:
                raise MalformedInputError(
                    f"identification {self.name!r} maps two features onto {src!r}"
                )
            seen_sources.add(src)
        if set(self.value_maps) != set(self.feature_map):
            raise MalformedInputError(
                f"identification {self.name!r} needs one value map per mapped feature"
            )
        for tgt, vmap in self.value_maps.items():
            if not vmap:
                raise MalformedInputError(
                    f"identification {self.name!r} has an empty value map for {tgt!r}"
                )

    def target_fibers(self) -> dict[str, Fiber]:
        return {t: Fiber(t, tuple(vmap)) for t, vmap in self.value_maps.items()}

    def target_features(self) -> tuple[str, ...]:
        return tuple(self.feature_map)


@dataclass(frozen=True)
class SharedFiber:
    """Merge provenance for one shared feature."""

    feature: str
    left_values: tuple[str, ...]
    right_values: tuple[str, ...]
    added_from_right: tuple[str, ...]
    reordered: bool


@dataclass(frozen=True)
class GuardedTable:
    """Merge provenance for one imported table."""

    source: str  # "left" | "right"
    original: ConstraintTable
    imported: ConstraintTable
    guarded: bool


@dataclass(frozen=True)
class MergedModel:
    result: Model
    shared: tuple[SharedFiber, ...]
    tables: tuple[GuardedTable, ...]


@dataclass(frozen=True)
class ObjectDiff:
    only_in_left: tuple[Assignment, ...]
    only_in_right: tuple[Assignment, ...]
    common: tuple[Assignment, ...]

    @property
    def clean(self) -> bool:
        return not self.only_in_left and not self.only_in_right


@dataclass(frozen=True)
class DiffReport:
    per_object: Mapping[Subset, ObjectDiff]

    @property
    def is_empty(self) -> bool:
        return all(d.clean for d in self.per_object.values())

    def dirty_objects(self) -> tuple[Subset, ...]:
        return tuple(
            u for u in sorted(self.per_object, key=Subset.key)
            if not self.per_object[u].clean
        )


# ---------------------------------------------------------------------------
# fiber and feature edits


def extend_fiber(model: Model, feature: str, new_values: tuple[str, ...]) -> Model:
    """Enlarge one fiber; tables are untouched, so allow tables do not admit
    the new values until edited or imported guarded by a merge."""
    fib = model.fibers.get(feature)
    if fib is None:
        raise MalformedInputError(f"unknown feature {feature!r}")
    for v in new_values:
        if v in fib:
            raise MalformedInputError(f"value {v!r} already in the fiber of {feature!r}")
    fibers = [
        Fiber(f.feature, f.values + tuple(new_values)) if f.feature == feature else f
        for f in model.fibers.values()
    ]
    return Model(model.name, fibers, model.tables, model.cover_seeds, model.labels)


def add_feature(model: Model, fiber: Fiber) -> Model:
    if fiber.feature in model.fibers:
        raise MalformedInputError(f"feature {fiber.feature!r} already present")
    return Model(
        model.name,
        list(model.fibers.values()) + [fiber],
        model.tables,
        model.cover_seeds,
        model.labels,
    )


@dataclass(frozen=True)
class RemovalReport:
    projected: tuple[ConstraintTable, ...] = ()
    dropped_forbid: tuple[ConstraintTable, ...] = ()
    dropped_empty: tuple[ConstraintTable, ...] = ()


def remove_feature(model: Model, feature: str) -> tuple[Model, RemovalReport]:
    """Delete a feature.

    Allow tables naming it are projected onto the remaining scope; forbid
    tables naming it are dropped outright (projection of a forbid list is not
    meaning-preserving), and everything dropped or projected is reported.
    """
    if feature not in model.fibers:
        raise MalformedInputError(f"unknown feature {feature!r}")
    fibers = [f for f in model.fibers.values() if f.feature != feature]
    gone = Subset([feature])
    tables = []
    projected, dropped_forbid, dropped_empty = [], [], []
    for table in model.tables:
        if feature not in table.scope:
            tables.append(table)
            continue
        if table.polarity == FORBID:
            dropped_forbid.append(table)
            continue
        rest = table.scope.difference(gone)
        if len(rest) == 0:
            dropped_empty.append(table)
            continue
        keep = [i for i, f in enumerate(table.scope.names) if f != feature]
        rows = {tuple(row[i] for i in keep) for row in table.tuples}
        new_table = ConstraintTable(rest, ALLOW, rows)
        tables.append(new_table)
        projected.append(table)
    seeds = [s.difference(gone) for s in model.cover_seeds]
    labels = {
        k: v
        for k, v in model.labels.items()
        if k != feature and not k.startswith(feature + ".")
    }
    out = Model(model.name, fibers, tables, [s for s in seeds if len(s)], labels)
    return out, RemovalReport(tuple(projected), tuple(dropped_forbid), tuple(dropped_empty))


# ---------------------------------------------------------------------------
# amalgamation


def _scope_product(scope: Subset, fibers: Mapping[str, Fiber]):
    space = 1
    for f in scope.names:
        space *= len(fibers[f].values)
    if space > TABLE_MASK_BOUND:
        raise EnumerationBoundError(
            f"guarded import over {scope} refused", required=space, bound=TABLE_MASK_BOUND
        )
    return product(*(fibers[f].values for f in scope.names))


def _import_guarded(
    table: ConstraintTable,
    source_fibers: Mapping[str, Fiber],
    merged_fibers: Mapping[str, Fiber],
) -> tuple[ConstraintTable, bool]:
    guarded = any(
        set(merged_fibers[f].values) - set(source_fibers[f].values)
        for f in table.scope.names
    )
    if table.polarity == FORBID:
        # forbidden rows only name source-fiber values, so an assignment that
        # escapes the source fibers can never match one: verbatim import is
        # already the guarded semantics.
        return table, guarded
    if not guarded:
        return table, False
    rows = []
    inside = [set(source_fibers[f].values) for f in table.scope.names]
    for combo in _scope_product(table.scope, merged_fibers):
        escapes = any(v not in inside[i] for i, v in enumerate(combo))
        if escapes or combo in table.tuples:
            rows.append(combo)
    return ConstraintTable(table.scope, ALLOW, rows), True


def amalgamate(left: Model, right: Model, *, name: str | None = None) -> MergedModel:
    """Merge two models over their shared feature names.

    Shared fibers take the left declaration order followed by the right
    model's new values; every table is imported guarded (see module notes).
    Compiling ``result`` yields the merged presheaf.
    """
    merged_fibers: list[Fiber] = []
    shared: list[SharedFiber] = []
    right_only = [f for f in right.fibers.values() if f.feature not in left.fibers]
    for fib in left.fibers.values():
        other = right.fibers.get(fib.feature)
        if other is None:
            merged_fibers.append(fib)
            continue
        added = tuple(v for v in other.values if v not in fib.index)
        common_left = [v for v in fib.values if v in other.index]
        common_right = [v for v in other.values if v in fib.index]
        shared.append(
            SharedFiber(
                fib.feature,
                fib.values,
                other.values,
                added,
                reordered=common_left != common_right,
            )
        )
        merged_fibers.append(Fiber(fib.feature, fib.values + added))
    merged_fibers.extend(right_only)
    fiber_map = {f.feature: f for f in merged_fibers}

    imported: list[GuardedTable] = []
    tables: list[ConstraintTable] = []
    for source, source_model in (("left", left), ("right", right)):
        for table in source_model.tables:
            new_table, guarded = _import_guarded(table, source_model.fibers, fiber_map)
            imported.append(GuardedTable(source, table, new_table, guarded))
            tables.append(new_table)

    labels = dict(right.labels)
    labels.update(left.labels)
    result = Model(
        name or f"{left.name}_{right.name}",
        merged_fibers,
        tables,
        left.cover_seeds + right.cover_seeds,
        labels,
    )
    return MergedModel(result, tuple(shared), tuple(imported))


def overlap_union_report(left: Model, right: Model) -> DiffReport:
    """Compare the literal section union with the amalgam on the overlap.

    For every object inside the shared feature set, the union of the two
    source section sets is matched against the amalgamated presheaf; entries
    only on the right are cross-combinations the merge admits even though
    neither source listed them.
    """
    merged = amalgamate(left, right)
    p_left = compile_model(left)
    p_right = compile_model(right)
    p_merged = compile_model(merged.result)
    overlap = left.features.intersection(right.features)
    key = lambda a: (a.domain.key(), a.values)  # noqa: E731 - local ordering only
    per_object: dict[Subset, ObjectDiff] = {}
    for u in p_merged.family.objects_sorted:
        if not u.issubset(overlap):
            continue
        literal = set(p_left.sections[u]) | set(p_right.sections[u])
        amalgam = set(p_merged.sections[u])
        per_object[u] = ObjectDiff(
            tuple(sorted(literal - amalgam, key=key)),
            tuple(sorted(amalgam - literal, key=key)),
            tuple(sorted(literal & amalgam, key=key)),
        )
    return DiffReport(per_object)


def diff_presheaves(
    p_left: AssignmentPresheaf, p_right: AssignmentPresheaf
) -> DiffReport:
    """Objectwise section diff over the objects the two families share."""
    key = lambda a: (a.domain.key(), a.values)  # noqa: E731
    per_object: dict[Subset, ObjectDiff] = {}
    for u in p_left.family.objects_sorted:
        if u not in p_right.family.objects:
            continue
        a = set(p_left.sections[u])
        b = set(p_right.sections[u])
        per_object[u] = ObjectDiff(
            tuple(sorted(a - b, key=key)),
            tuple(sorted(b - a, key=key)),
            tuple(sorted(a & b, key=key)),
        )
    return DiffReport(per_object)


def emergent_sections(
    merged: MergedModel, left: Model, right: Model
) -> tuple[Assignment, ...]:
    """Global sections of the merge that are new with respect to a source.

    A merged global section is emergent when its restriction to at least one
    source's feature set is not among that source's compiled sections there.
    Merging a model with itself therefore yields nothing.
    """
    p_merged = compile_model(merged.result)
    source_tops = []
    for source in (left, right):
        p = compile_model(source)
        top = p.family.universe
        source_tops.append((top, frozenset(p.sections[top])))
    emergent = []
    for s in global_sections(p_merged):
        if any(restrict_assignment(s, top) not in secs for top, secs in source_tops):
            emergent.append(s)
    return tuple(emergent)


# ---------------------------------------------------------------------------
# analogy transfer


def _validate_identification(h: FeatureIdentification, source: Model) -> None:
    for tgt, src in h.feature_map.items():
        fib = source.fibers.get(src)
        if fib is None:
            raise MalformedInputError(
                f"identification {h.name!r} maps {tgt!r} to unknown feature {src!r}"
            )
        for tv, sv in h.value_maps[tgt].items():
            if sv not in fib:
                raise MalformedInputError(
                    f"identification {h.name!r}: {tgt}.{tv} maps to {sv!r}, "
                    f"not a value of {src!r}"
                )


def transfer(
    h: FeatureIdentification, source: Model, *, name: str | None = None
) -> tuple[Model, tuple[Subset, ...]]:
    """Pull a model back along an identification.

    The result has the identification's target fibers; each source table
    whose scope is fully covered by the identification becomes its preimage
    (a row is admitted exactly when its value-mapped image is), and scopes
    touching unmapped source features are skipped and reported.
    """
    _validate_identification(h, source)
    fibers = h.target_fibers()
    preimage = {src: tgt for tgt, src in h.feature_map.items()}
    tables: list[ConstraintTable] = []
    skipped: list[Subset] = []
    for table in source.tables:
        if any(f not in preimage for f in table.scope):
            skipped.append(table.scope)
            continue
        tgt_scope = Subset(preimage[f] for f in table.scope)
        src_positions = {f: i for i, f in enumerate(table.scope.names)}
        rows = []
        for combo in _scope_product(tgt_scope, fibers):
            image = [None] * len(table.scope)
            for t, tv in zip(tgt_scope.names, combo):
                image[src_positions[h.feature_map[t]]] = h.value_maps[t][tv]
            if tuple(image) in table.tuples:
                rows.append(combo)
        tables.append(ConstraintTable(tgt_scope, table.polarity, rows))
    seeds = []
    targets = set(h.feature_map)
    for seed in source.cover_seeds:
        pre = Subset(t for t in targets if h.feature_map[t] in seed)
        if len(pre):
            seeds.append(pre)
    out = Model(name or f"{h.name}_{source.name}", list(fibers.values()), tables, seeds)
    return out, tuple(sorted(set(skipped), key=Subset.key))


def analogy_check(
    h: FeatureIdentification, source: Model, target: Model
) -> LawReport:
    """Does transferring ``source`` along ``h`` reproduce ``target`` exactly?

    Compares the two compiled presheaves objectwise; any mismatch is listed
    with its witness assignment, and a failed report means the claimed
    analogy square does not commute.
    """
    transferred, _ = transfer(h, source, name=target.name)
    violations: list[Violation] = []
    if transferred.features != target.features:
        return LawReport(
            (
                Violation(
                    "analogy-feature-set",
                    f"transferred features {transferred.features} vs "
                    f"target {target.features}",
                    (transferred.features, target.features),
                ),
            )
        )
    for f, fib in transferred.fibers.items():
        if set(fib.values) != set(target.fibers[f].values):
            violations.append(
                Violation(
                    "analogy-fibers",
                    f"fiber of {f!r} differs: {fib.values} vs {target.fibers[f].values}",
                    (f,),
                )
            )
    p_t = compile_model(transferred)
    p_m = compile_model(target)
    for u in p_t.family.objects_sorted:
        got = set(p_t.sections[u])
        want = set(p_m.sections[u])
        for a in sorted(want - got, key=lambda x: x.values):
            violations.append(
                Violation("analogy-sections", f"{a} at {u} only in the target", (u, a))
            )
        for a in sorted(got - want, key=lambda x: x.values):
            violations.append(
                Violation(
                    "analogy-sections", f"{a} at {u} only in the transfer", (u, a)
                )
            )
    return LawReport(tuple(violations))
