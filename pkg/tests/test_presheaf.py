import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from presh.errors import EnumerationBoundError, MalformedInputError
from presh.lattice import Subset, close_family
from presh.model import compile_model, random_model
from presh.presheaf import (
    AbstractPresheaf,
    Assignment,
    AssignmentPresheaf,
    Fiber,
    HOM_TOKEN,
    assignment_sort_key,
    blocking_sets,
    closure_complete,
    extensions,
    global_sections,
    nat_transformations,
    pullback_presheaf,
    random_abstract_presheaf,
    representable,
    restrict_assignment,
    validate_laws,
    yoneda_check,
)

from util import one_step_projection_fixpoint


def S(*names):
    return Subset(names)


def A(**binding):
    return Assignment.from_mapping(binding)


@pytest.fixture(scope="module")
def camcorder_presheaf(camcorder_model):
    return compile_model(camcorder_model)


class TestRestrictAssignment:
    def test_projection(self):
        a = A(size="l", levels="m")
        assert restrict_assignment(a, S("size")) == A(size="l")

    def test_to_empty(self):
        assert restrict_assignment(A(size="l"), S()) == Assignment(S(), ())

    def test_identity(self):
        a = A(size="l", levels="m")
        assert restrict_assignment(a, a.domain) == a

    def test_requires_containment(self):
        with pytest.raises(MalformedInputError):
            restrict_assignment(A(size="l"), S("levels"))

    def test_chains_compose(self):
        for seed in range(20):
            p = compile_model(random_model(seed, max_features=4))
            objs = p.family.objects_sorted
            for w in objs:
                for v in objs:
                    if not v.issubset(w):
                        continue
                    for u in objs:
                        if not u.issubset(v):
                            continue
                        for b in p.sections[w]:
                            assert restrict_assignment(
                                restrict_assignment(b, v), u
                            ) == restrict_assignment(b, u)


class TestValidateLaws:
    def test_compiled_models_always_pass(self):
        for seed in range(80):
            assert validate_laws(compile_model(random_model(seed))).passed

    def test_broken_closure_is_witnessed(self):
        fam = close_family(S("a", "b"))
        fibers = {"a": Fiber("a", ("l",)), "b": Fiber("b", ("m",))}
        sections = {
            S(): (Assignment(S(), ()),),
            S("a"): (),  # missing the projection of the pair below
            S("b"): (A(b="m"),),
            S("a", "b"): (A(a="l", b="m"),),
        }
        report = validate_laws(AssignmentPresheaf(fam, fibers, sections))
        assert not report.passed
        laws = {v.law for v in report.violations}
        assert "restriction-closure" in laws
        witness = next(v for v in report.violations if v.law == "restriction-closure")
        assert witness.witness[0] == S("a")

    def test_fiber_typing_checked(self):
        fam = close_family(S("a"))
        p = AssignmentPresheaf(
            fam,
            {"a": Fiber("a", ("x",))},
            {S(): (Assignment(S(), ()),), S("a"): (A(a="zz"),)},
        )
        assert any(v.law == "fiber-typing" for v in validate_laws(p).violations)

    def test_broken_abstract_composite_names_the_chain(self):
        fam = close_family(S("a", "b"))
        y = representable(fam, S("a", "b"))
        restrictions = dict(y.restrictions)
        elements = dict(y.elements)
        # reroute the direct map to a stray element, inconsistent with the
        # two-step paths through the singletons
        elements[S()] = (HOM_TOKEN, "stray")
        restrictions[(S(), S())] = {HOM_TOKEN: HOM_TOKEN, "stray": "stray"}
        restrictions[(S(), S("a", "b"))] = {HOM_TOKEN: "stray"}
        report = validate_laws(AbstractPresheaf(fam, elements, restrictions))
        assert any(v.law == "functoriality" for v in report.violations)
        witness = next(v for v in report.violations if v.law == "functoriality")
        assert witness.witness[3] == HOM_TOKEN

    def test_non_identity_loop_flagged(self):
        fam = close_family(S("a"))
        p = AbstractPresheaf(
            fam,
            {S(): ("e1", "e2"), S("a"): ()},
            {
                (S(), S()): {"e1": "e2", "e2": "e1"},
                (S("a"), S("a")): {},
                (S(), S("a")): {},
            },
        )
        assert any(v.law == "identity" for v in validate_laws(p).violations)

    def test_missing_map_flagged(self):
        fam = close_family(S("a"))
        p = AbstractPresheaf(
            fam,
            {S(): ("e",), S("a"): ("f",)},
            {(S(), S()): {"e": "e"}, (S("a"), S("a")): {"f": "f"}},
        )
        assert any(v.law == "missing-map" for v in validate_laws(p).violations)


class TestClosureComplete:
    def test_already_closed_is_fixed_point(self):
        p = compile_model(random_model(12))
        closed, additions = closure_complete(p)
        assert additions == {}
        assert closed.sections == p.sections

    def test_projections_added_from_a_global_section(self):
        # one stored global section, nothing below: the closure must add
        # its projections, in particular the pair over film and edit
        fam = close_family(S("film", "screen", "edit"))
        fibers = {
            "film": Fiber("film", ("prof_and_amateur",)),
            "screen": Fiber("screen", ("small",)),
            "edit": Fiber("edit", ("difficult", "quick")),
        }
        top = A(film="prof_and_amateur", screen="small", edit="difficult")
        sections = {u: () for u in fam.objects_sorted}
        sections[fam.universe] = (top,)
        p = AssignmentPresheaf(fam, fibers, sections)
        closed, additions = closure_complete(p)
        assert A(film="prof_and_amateur", edit="difficult") in additions[S("edit", "film")]
        assert validate_laws(closed).passed

    def test_matches_projection_fixpoint_oracle(self):
        rng = random.Random(3)
        for seed in range(25):
            base = compile_model(random_model(seed, max_features=4))
            # knock random holes in random objects to break closure
            sections = {}
            for u, secs in base.sections.items():
                sections[u] = tuple(a for a in secs if rng.random() > 0.5)
            ragged = AssignmentPresheaf(base.family, base.fibers, sections)
            closed, _ = closure_complete(ragged)
            oracle = one_step_projection_fixpoint(ragged)
            for u in base.family.objects_sorted:
                assert set(closed.sections[u]) == oracle[u]

    def test_idempotent_and_monotone(self):
        base = compile_model(random_model(9, max_features=4))
        holes = {
            u: secs[: len(secs) // 2] for u, secs in base.sections.items()
        }
        ragged = AssignmentPresheaf(base.family, base.fibers, holes)
        once, _ = closure_complete(ragged)
        twice, additions = closure_complete(once)
        assert additions == {}
        assert twice.sections == once.sections
        for u in base.family.objects_sorted:
            assert set(ragged.sections[u]) <= set(once.sections[u])


class TestSections:
    def test_global_sections_of_product_model(self):
        from presh.model import Model

        m = Model("free", [Fiber("a", ("x", "y")), Fiber("b", ("p", "q", "r"))])
        assert len(global_sections(compile_model(m))) == 6

    def test_extension_failure_in_the_camcorder(self, camcorder_presheaf):
        a = A(film="prof_and_amateur", edit="quick_and_easy_editing")
        got = extensions(camcorder_presheaf, a, camcorder_presheaf.family.universe)
        assert got == ()

    def test_restriction_of_global_section_extends(self):
        for seed in (2, 8, 31):
            p = compile_model(random_model(seed, max_features=4))
            for b in global_sections(p)[:5]:
                for u in p.family.objects_sorted:
                    if not u.issubset(p.family.universe):
                        continue
                    a = restrict_assignment(b, u)
                    assert b in extensions(p, a, p.family.universe)

    def test_restriction_round_trip_at_every_level(self):
        # b ∈ sections(V), U ⊆ V  =>  b ∈ extensions(restrict(b, U), V)
        for seed in (6, 13):
            p = compile_model(random_model(seed, max_features=4))
            for v in p.family.objects_sorted:
                for b in p.sections[v][:4]:
                    for u in p.family.objects_sorted:
                        if not u.issubset(v):
                            continue
                        a = restrict_assignment(b, u)
                        assert b in extensions(p, a, v)

    def test_extensions_match_filter_oracle(self):
        rng = random.Random(5)
        for seed in range(20):
            p = compile_model(random_model(seed, max_features=4))
            objs = p.family.objects_sorted
            v = rng.choice(objs)
            if not p.sections[v]:
                continue
            for u in objs:
                if not u.issubset(v) or not p.sections[u]:
                    continue
                a = rng.choice(p.sections[u])
                got = set(extensions(p, a, v))
                want = {
                    b for b in p.sections[v] if restrict_assignment(b, u) == a
                }
                assert got == want

    def test_invalid_local_section_rejected(self, camcorder_presheaf):
        bogus = A(film="prof_and_amateur", edit="quick_and_easy_editing", screen="small")
        with pytest.raises(MalformedInputError):
            extensions(camcorder_presheaf, bogus, camcorder_presheaf.family.universe)

    def test_blocking_set_of_the_quick_edit_section(self, camcorder_presheaf):
        a = A(film="prof_and_amateur", edit="quick_and_easy_editing")
        assert blocking_sets(camcorder_presheaf, a) == (S("edit", "film", "screen"),)

    def test_global_section_never_blocked(self, camcorder_presheaf):
        top = global_sections(camcorder_presheaf)[0]
        assert blocking_sets(camcorder_presheaf, top) == ()

    def test_blocking_sets_are_minimal(self):
        for seed in range(30):
            p = compile_model(random_model(seed, max_features=4))
            for u in p.family.objects_sorted:
                for a in p.sections[u][:3]:
                    blocks = blocking_sets(p, a)
                    for w in blocks:
                        for o in blocks:
                            assert w == o or not o.issubset(w)

    def test_global_sections_project_into_all_objects(self):
        for seed in (4, 19):
            p = compile_model(random_model(seed, max_features=4))
            for b in global_sections(p):
                for u in p.family.objects_sorted:
                    assert restrict_assignment(b, u) in p.sections[u]


class TestRepresentable:
    def test_terminal_representable(self):
        fam = close_family(S("a", "b"))
        y = representable(fam, fam.universe)
        assert all(len(y.elements[d]) == 1 for d in fam.objects_sorted)

    def test_bottom_representable(self):
        fam = close_family(S("a", "b"))
        y = representable(fam, S())
        assert y.elements[S()] == (HOM_TOKEN,)
        assert all(y.elements[d] == () for d in fam.objects_sorted if len(d))

    def test_element_exactly_when_subobject(self):
        fam = close_family(S("a", "b", "c"))
        c = S("a", "c")
        y = representable(fam, c)
        for d in fam.objects_sorted:
            assert (len(y.elements[d]) == 1) == d.issubset(c)

    def test_lawful(self):
        fam = close_family(S("a", "b"))
        for c in fam.objects_sorted:
            assert validate_laws(representable(fam, c)).passed


class TestNatTransformations:
    def test_empty_target_kills_everything(self):
        fam = close_family(S("a"))
        f = representable(fam, S("a"))
        g = AbstractPresheaf(
            fam,
            {u: () for u in fam.objects_sorted},
            {pair: {} for pair in fam.inclusions()},
        )
        assert nat_transformations(f, g) == ()

    def test_representable_endos_are_unique(self):
        fam = close_family(S("a", "b"))
        for c in fam.objects_sorted:
            y = representable(fam, c)
            nats = nat_transformations(y, y)
            assert len(nats) == 1

    def test_hom_counting_between_representables(self):
        fam = close_family(S("a", "b"))
        for c in fam.objects_sorted:
            for d in fam.objects_sorted:
                nats = nat_transformations(
                    representable(fam, d), representable(fam, c)
                )
                assert len(nats) == (1 if d.issubset(c) else 0)

    def test_family_mismatch_rejected(self):
        f = representable(close_family(S("a")), S("a"))
        g = representable(close_family(S("b")), S("b"))
        with pytest.raises(MalformedInputError):
            nat_transformations(f, g)

    def test_bound_refusal_reports_the_count(self):
        fam = close_family(S("a"))
        big = AbstractPresheaf(
            fam,
            {u: tuple(f"e{i}" for i in range(6)) for u in fam.objects_sorted},
            {
                pair: {f"e{i}": f"e{i}" for i in range(6)}
                for pair in fam.inclusions()
            },
        )
        with pytest.raises(EnumerationBoundError) as err:
            nat_transformations(big, big, max_candidates=10)
        assert err.value.required > 10

    def test_naturality_squares_hold(self):
        fam = close_family(S("a", "b"))
        f = random_abstract_presheaf(3, fam)
        g = random_abstract_presheaf(14, fam)
        for nat in nat_transformations(f, g):
            for u, v in fam.inclusions():
                for x in f.elements[v]:
                    left = nat.at(u)[f.restrict(x, v, u)] if f.elements[u] else None
                    right = g.restrict(nat.at(v)[x], v, u)
                    assert left == right


class TestYoneda:
    def test_empty_at_object_means_no_transformations(self):
        fam = close_family(S("a"))
        g = AbstractPresheaf(
            fam,
            {S(): ("e",), S("a"): ()},
            {
                (S(), S()): {"e": "e"},
                (S("a"), S("a")): {},
                (S(), S("a")): {},
            },
        )
        assert nat_transformations(representable(fam, S("a")), g) == ()
        assert yoneda_check(g, S("a")).passed

    def test_bijection_on_random_presheaves(self):
        for n in range(3):
            fam = close_family(Subset(f"g{i}" for i in range(n)))
            for seed in range(12):
                f = random_abstract_presheaf(seed, fam)
                for d in fam.objects_sorted:
                    report = yoneda_check(f, d)
                    assert report.passed, (n, seed, d, report.violations)

    def test_cardinality_matches_elements(self):
        fam = close_family(S("a", "b"))
        for seed in (1, 6, 27):
            f = random_abstract_presheaf(seed, fam)
            for d in fam.objects_sorted:
                nats = nat_transformations(representable(fam, d), f)
                assert len(nats) == len(f.elements[d])


class TestPullback:
    def test_identity_functor_for_abstract(self):
        fam = close_family(S("a", "b"))
        f = random_abstract_presheaf(8, fam)
        back = pullback_presheaf({u: u for u in fam.objects_sorted}, f, family=fam)
        assert back.elements == f.elements
        assert back.restrictions == f.restrictions

    def test_constant_functor_reads_the_bottom(self):
        fam = close_family(S("a", "b"))
        f = random_abstract_presheaf(21, fam)
        back = pullback_presheaf(lambda u: S(), f, family=fam)
        for u in fam.objects_sorted:
            assert back.elements[u] == f.elements[S()]
        assert validate_laws(back).passed

    def test_non_monotone_map_rejected_with_witness(self):
        fam = close_family(S("a", "b"))
        f = random_abstract_presheaf(5, fam)
        swap = {u: u for u in fam.objects_sorted}
        swap[S("a")] = S("a", "b")
        swap[S("a", "b")] = S("a")
        with pytest.raises(MalformedInputError, match="monotone"):
            pullback_presheaf(swap, f, family=fam)

    def test_pullback_outputs_are_lawful(self):
        fam = close_family(S("a", "b"))
        f = random_abstract_presheaf(30, fam)
        back = pullback_presheaf(lambda u: u.intersection(S("a")), f, family=fam)
        assert validate_laws(back).passed


class TestAsAbstract:
    def test_compiled_model_abstracts_lawfully(self):
        p = compile_model(random_model(7, max_features=3))
        assert validate_laws(p.as_abstract()).passed


class TestRandomAbstract:
    def test_deterministic(self):
        fam = close_family(S("a", "b"))
        left = random_abstract_presheaf(99, fam)
        right = random_abstract_presheaf(99, fam)
        assert left.elements == right.elements
        assert left.restrictions == right.restrictions

    def test_always_lawful(self):
        for n in range(4):
            fam = close_family(Subset(f"g{i}" for i in range(n)))
            for seed in range(40):
                assert validate_laws(random_abstract_presheaf(seed, fam)).passed


class TestOrdering:
    @given(st.integers(0, 300))
    @settings(max_examples=30, deadline=None)
    def test_sections_are_canonically_sorted(self, seed):
        p = compile_model(random_model(seed, max_features=4))
        key = assignment_sort_key(p.fibers)
        for u in p.family.objects_sorted:
            secs = p.sections[u]
            assert list(secs) == sorted(secs, key=key)
