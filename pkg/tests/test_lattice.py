import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from presh.errors import (
    EnumerationBoundError,
    InvariantViolationError,
    MalformedInputError,
)
from presh.lattice import (
    CoverFamily,
    InclusionArrow,
    Subset,
    check_adjunction_triple,
    close_family,
    extend_functor_f1,
    is_subobject,
    join,
    meet,
    restrict_family,
    restriction_functor_r,
    validate_family,
)

from util import full_power_set, saturation_close


def S(*names):
    return Subset(names)


class TestSubset:
    def test_canonical_order(self):
        assert Subset(["b", "a", "b"]).names == ("a", "b")

    def test_rejects_bad_names(self):
        with pytest.raises(MalformedInputError):
            Subset(["9bad"])
        with pytest.raises(MalformedInputError):
            Subset(["has space"])

    def test_set_operations(self):
        assert S("a", "b").intersection(S("b", "c")) == S("b")
        assert S("a").union(S("b")) == S("a", "b")
        assert S("a", "b").difference(S("b")) == S("a")

    def test_str(self):
        assert str(S("b", "a")) == "{a,b}"
        assert str(S()) == "{}"


class TestCloseFamily:
    def test_two_features_is_the_power_set(self):
        fam = close_family(S("a", "b"))
        assert fam.objects == {S(), S("a"), S("b"), S("a", "b")}

    def test_closure_step_members_present(self):
        fam = close_family(S("a", "b", "c"), [S("a", "b"), S("b", "c")])
        assert S("b") in fam.objects  # the meet of the seeds
        assert S("a", "b", "c") in fam.objects  # their join

    def test_matches_saturation_oracle(self):
        rng = random.Random(4)
        universe = S("a", "b", "c", "d", "e")
        for _ in range(25):
            seeds = [
                Subset(rng.sample(universe.names, rng.randint(0, 5)))
                for _ in range(rng.randint(0, 4))
            ]
            fam = close_family(universe, seeds)
            assert fam.objects == saturation_close(universe, seeds)

    def test_idempotent(self):
        fam = close_family(S("a", "b", "c"), [S("a", "c")])
        again = close_family(fam.universe, fam.objects)
        assert again.objects == fam.objects

    def test_seed_outside_universe_names_feature(self):
        with pytest.raises(MalformedInputError, match="'z'"):
            close_family(S("a", "b"), [S("a", "z")])

    def test_size_refusal(self):
        big = Subset(f"f{i}" for i in range(13))
        with pytest.raises(EnumerationBoundError):
            close_family(big)

    def test_invariants_hold(self):
        fam = close_family(S("a", "b", "c"))
        assert validate_family(fam).passed


class TestMeetJoin:
    def test_examples(self):
        fam = close_family(S("a", "b", "c"))
        assert meet(fam, S("a", "b"), S("b", "c")) == S("b")
        assert join(fam, S("a"), S("b")) == S("a", "b")

    def test_membership_precondition(self):
        fam = close_family(S("a", "b"))
        with pytest.raises(MalformedInputError):
            meet(fam, S("a"), S("z"))

    def test_meet_is_the_greatest_lower_bound(self):
        fam = close_family(S("a", "b", "c", "d"))
        objs = fam.objects_sorted
        for u in objs:
            for v in objs:
                m = meet(fam, u, v)
                lower = [w for w in objs if w.issubset(u) and w.issubset(v)]
                assert m in lower
                assert all(w.issubset(m) for w in lower)

    def test_lattice_laws(self):
        fam = close_family(Subset(f"f{i}" for i in range(5)))
        objs = fam.objects_sorted
        rng = random.Random(7)
        sample = rng.sample(objs, 12)
        for u in sample:
            assert meet(fam, u, u) == u and join(fam, u, u) == u
            for v in sample:
                assert meet(fam, u, v) == meet(fam, v, u)
                assert join(fam, u, v) == join(fam, v, u)
                assert meet(fam, u, join(fam, u, v)) == u  # absorption
                assert join(fam, u, meet(fam, u, v)) == u
                for w in sample:
                    assert meet(fam, meet(fam, u, v), w) == meet(fam, u, meet(fam, v, w))
                    assert join(fam, join(fam, u, v), w) == join(fam, u, join(fam, v, w))


class TestRestrictFamily:
    def test_power_set_restriction(self):
        fam = close_family(S("a", "b", "c"))
        res = restrict_family(fam, S("a", "b"))
        assert res.objects == full_power_set(S("a", "b"))
        assert res.universe == S("a", "b")

    def test_identity_case(self):
        fam = close_family(S("a", "b"))
        assert restrict_family(fam, fam.universe) == fam

    def test_matches_filter_oracle(self):
        rng = random.Random(11)
        universe = S("a", "b", "c", "d")
        fam = close_family(universe)
        for _ in range(10):
            s0 = Subset(rng.sample(universe.names, rng.randint(0, 4)))
            res = restrict_family(fam, s0)
            assert res.objects == frozenset(
                u for u in fam.objects if u.issubset(s0)
            )

    def test_not_a_subset(self):
        fam = close_family(S("a"))
        with pytest.raises(MalformedInputError):
            restrict_family(fam, S("z"))

    def test_broken_family_surfaces_invariant_violation(self):
        universe = S("a", "b", "c")
        broken = CoverFamily(
            universe, frozenset(u for u in full_power_set(universe) if u != S("a"))
        )
        with pytest.raises(InvariantViolationError):
            restrict_family(broken, S("a", "b"))


class TestFunctorTriple:
    def test_padding_instance(self):
        assert extend_functor_f1(S("a"), S("a"), S("a", "b")) == S("a", "b")

    def test_padding_top(self):
        assert extend_functor_f1(S("a", "c"), S("a", "c"), S("a", "b", "c")) == S(
            "a", "b", "c"
        )

    def test_padding_precondition(self):
        with pytest.raises(MalformedInputError):
            extend_functor_f1(S("a", "b"), S("a"), S("a", "b"))

    def test_padding_monotone_exhaustively(self):
        s2 = S("a", "b", "c", "d", "e")
        s1 = S("a", "b", "c")
        subs = sorted(full_power_set(s1), key=Subset.key)
        for u in subs:
            for v in subs:
                if u.issubset(v):
                    assert extend_functor_f1(u, s1, s2).issubset(
                        extend_functor_f1(v, s1, s2)
                    )

    def test_restriction_instance(self):
        assert restriction_functor_r(S("a", "b"), S("b", "c")) == S("b")

    def test_restriction_of_subset_is_identity(self):
        assert restriction_functor_r(S("b"), S("a", "b")) == S("b")

    def test_restriction_after_padding_is_identity(self):
        s2 = S("a", "b", "c", "d", "e")
        s1 = S("b", "d")
        for u in full_power_set(s1):
            assert restriction_functor_r(extend_functor_f1(u, s1, s2), s1) == u


class TestAdjunction:
    def test_small_pair_passes(self):
        assert check_adjunction_triple(S("a"), S("a", "b")).passed

    def test_equal_sets_trivial(self):
        assert check_adjunction_triple(S("a", "b"), S("a", "b")).passed

    def test_empty_inner(self):
        assert check_adjunction_triple(S(), S("a", "b", "c")).passed

    def test_requires_nesting(self):
        with pytest.raises(MalformedInputError):
            check_adjunction_triple(S("a", "z"), S("a", "b"))

    def test_refuses_above_bound(self):
        big = Subset(f"f{i}" for i in range(6))
        with pytest.raises(EnumerationBoundError):
            check_adjunction_triple(S("f0"), big)


class TestPosetCategory:
    def test_identity_arrows_exist(self):
        fam = close_family(S("a", "b"))
        arrows = list(fam.arrows())
        for u in fam.objects_sorted:
            assert InclusionArrow.identity(u) in arrows

    def test_composition_is_transitivity(self):
        f = InclusionArrow(S("a"), S("a", "b"))
        g = InclusionArrow(S("a", "b"), S("a", "b", "c"))
        assert g.compose(f) == InclusionArrow(S("a"), S("a", "b", "c"))

    def test_composition_rejects_mismatched_chain(self):
        f = InclusionArrow(S("a"), S("a", "b"))
        with pytest.raises(MalformedInputError):
            f.compose(f)

    def test_no_arrow_without_inclusion(self):
        with pytest.raises(MalformedInputError):
            InclusionArrow(S("a", "b"), S("a"))

    def test_identity_neutral(self):
        f = InclusionArrow(S("a"), S("a", "b"))
        assert f.compose(InclusionArrow.identity(S("a"))) == f
        assert InclusionArrow.identity(S("a", "b")).compose(f) == f


class TestIsSubobject:
    def test_examples(self):
        assert is_subobject(S("a"), S("a", "b"))
        assert not is_subobject(S("a", "b"), S("a"))

    @given(st.sets(st.sampled_from("abcde")), st.sets(st.sampled_from("abcde")))
    @settings(max_examples=60)
    def test_agrees_with_containment(self, left, right):
        assert is_subobject(Subset(left), Subset(right)) == (set(left) <= set(right))
