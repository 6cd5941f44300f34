from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import attrs, component
from ccfbeta.domain import Domain
from ccfbeta.model import (Cccg, CouplingAttribute, ModelError, Severity, SystemModel,
                           derive_cccgs, validate_model)

COMMON = ("function:trip", "hardware:plc", "software:os1", "manufacturer:acme")


def eight_bps():
    return [component(f"BP{i}", *COMMON, f"location:div{'ABCD'[(i - 1) // 2]}", class_id="BP")
            for i in range(1, 9)]


def codes(model):
    return [d.code for d in validate_model(model) if d.severity is Severity.ERROR]


class TestCouplingAttribute:
    def test_parse(self):
        assert CouplingAttribute.parse(" location : divA ") == CouplingAttribute("location", "divA")

    @pytest.mark.parametrize("text", ["location", ":divA", "location:"])
    def test_rejects(self, text):
        with pytest.raises(ModelError):
            CouplingAttribute.parse(text)


class TestDerive:
    def test_eight_bps(self):
        groups = derive_cccgs(eight_bps())
        assert len(groups) == 5
        first, *pairs = groups
        assert first.members == frozenset(f"BP{i}" for i in range(1, 9))
        assert first.shared_attributes == attrs(*COMMON)
        assert first.label == "ALL"
        expected = [({f"BP{2 * k + 1}", f"BP{2 * k + 2}"}, f"location:div{'ABCD'[k]}")
                    for k in range(4)]
        assert [(set(g.members), g.shared_attributes) for g in pairs] == \
            [(m, attrs(a)) for m, a in expected]
        assert {g.label for g in pairs} == {"LOCATION"}

    def test_labels_map(self):
        groups = derive_cccgs(eight_bps(), labels={"location": "DIVISION"})
        assert [g.label for g in groups] == ["ALL"] + ["DIVISION"] * 4

    def test_two_sharing_everything(self):
        groups = derive_cccgs([component("a", "x:1", "y:2"), component("b", "x:1", "y:2")])
        assert len(groups) == 1
        assert groups[0].members == {"a", "b"}
        assert groups[0].shared_attributes == attrs("x:1", "y:2")

    def test_no_sharing(self):
        comps = [component(c, f"x:{c}") for c in "abc"]
        assert derive_cccgs(comps) == []

    def test_subset_group_with_new_attributes_is_kept(self):
        comps = [component("a", "x:1", "y:1"), component("b", "x:1", "y:1"),
                 component("c", "x:1", "y:2")]
        groups = derive_cccgs(comps)
        assert [set(g.members) for g in groups] == [{"a", "b", "c"}, {"a", "b"}]

    def test_classes_are_separate(self):
        comps = [component("a", "x:1", class_id="P"), component("b", "x:1", class_id="P"),
                 component("c", "x:1", class_id="Q")]
        groups = derive_cccgs(comps)
        assert [set(g.members) for g in groups] == [{"a", "b"}]

    def test_class_category_mismatch(self):
        with pytest.raises(ModelError):
            derive_cccgs([component("a", "x:1"), component("b", "y:1")])

    def test_domains_follow_member_data(self):
        comps = [component("a", "x:1", software=1e-4), component("b", "x:1", software=1e-4)]
        assert derive_cccgs(comps)[0].domains == frozenset(Domain)
        comps = [component("a", "x:1"), component("b", "x:1")]
        assert derive_cccgs(comps)[0].domains == {Domain.HARDWARE}

    def test_case_study_bp_groups(self, case_study):
        bp = [g for g in case_study.model.cccgs if g.id.startswith("BP-")]
        assert len(bp) == 5
        assert bp[0].members == frozenset(f"BP-{d}{i}" for d in "ABCD" for i in (1, 2))
        for g, div in zip(bp[1:], "ABCD"):
            assert g.members == {f"BP-{div}1", f"BP-{div}2"}
            assert g.shared_attributes == attrs(f"location:div{div}")


@st.composite
def component_lists(draw):
    n = draw(st.integers(1, 8))
    cats = ["a", "b", "c"]
    comps = []
    for i in range(n):
        pairs = [f"{cat}:{draw(st.integers(0, 2))}" for cat in cats]
        comps.append(component(f"c{i}", *pairs, class_id=draw(st.sampled_from("PQ"))))
    return comps


class TestDeriveProperties:
    @given(component_lists())
    def test_idempotent(self, comps):
        assert derive_cccgs(comps) == derive_cccgs(comps)

    @given(component_lists(), st.randoms())
    @settings(max_examples=60)
    def test_permutation_invariant(self, comps, rnd):
        shuffled = list(comps)
        rnd.shuffle(shuffled)
        assert set(derive_cccgs(comps)) == set(derive_cccgs(shuffled))

    @given(component_lists())
    def test_members_share_attributes_and_no_singletons(self, comps):
        by_id = {c.id: c for c in comps}
        for g in derive_cccgs(comps):
            assert len(g.members) >= 2
            assert len({by_id[m].class_id for m in g.members}) == 1
            for m in g.members:
                assert g.shared_attributes <= by_id[m].attributes

    @given(component_lists())
    def test_maximal(self, comps):
        by_id = {c.id: c for c in comps}
        for g in derive_cccgs(comps):
            cls = by_id[next(iter(g.members))].class_id
            for attr in g.shared_attributes:
                holders = {c.id for c in comps if c.class_id == cls and attr in c.attributes}
                assert holders == g.members


def graded_pair(q_a=1e-4, q_b=1e-4, members=("a", "b")):
    comps = (component("a", "x:1", q=q_a), component("b", "x:1", q=q_b))
    group = Cccg("g", frozenset(members), attrs("x:1"), frozenset({Domain.HARDWARE}),
                 hardware_beta=Fraction(1, 10))
    return SystemModel(comps, (group,))


class TestValidate:
    def test_case_study_clean(self, case_study):
        assert validate_model(case_study.model) == []

    def test_nonidentical_qt(self):
        assert codes(graded_pair(q_b=2e-4)) == ["NONIDENTICAL_QT"]

    def test_singleton(self):
        assert codes(graded_pair(members=("a",))) == ["CCCG_TOO_SMALL"]

    def test_no_components(self):
        assert codes(SystemModel(())) == ["NO_COMPONENTS"]

    def test_unknown_member(self):
        assert "UNKNOWN_MEMBER" in codes(graded_pair(members=("a", "zz")))

    def test_missing_beta(self):
        model = graded_pair()
        g = model.cccgs[0]
        bare = Cccg(g.id, g.members, g.shared_attributes, g.domains)
        assert codes(SystemModel(model.components, (bare,))) == ["MISSING_BETA"]

    def test_beta_out_of_range(self):
        model = graded_pair()
        g = model.cccgs[0]
        bad = Cccg(g.id, g.members, g.shared_attributes, g.domains, hardware_beta=Fraction(3, 2))
        assert codes(SystemModel(model.components, (bad,))) == ["BETA_OUT_OF_RANGE"]

    def test_mixed_class_forbidden(self):
        comps = (component("a", "x:1", class_id="P"), component("b", "x:1", class_id="Q"))
        group = Cccg("g", frozenset("ab"), attrs("x:1"), frozenset({Domain.HARDWARE}),
                     hardware_beta=Fraction(1, 10))
        assert codes(SystemModel(comps, (group,))) == ["MIXED_CLASS"]

    def test_attribute_not_shared(self):
        comps = (component("a", "x:1"), component("b", "x:2"))
        group = Cccg("g", frozenset("ab"), attrs("x:1"), frozenset({Domain.HARDWARE}),
                     hardware_beta=Fraction(1, 10))
        assert codes(SystemModel(comps, (group,))) == ["ATTRIBUTE_NOT_SHARED"]

    def test_duplicate_group(self):
        model = graded_pair()
        g = model.cccgs[0]
        twin = Cccg("h", g.members, g.shared_attributes, g.domains, hardware_beta=Fraction(1, 5))
        assert codes(SystemModel(model.components, (g, twin))) == ["DUPLICATE_CCCG"]

    def test_missing_domain_data(self):
        comps = (component("a", "x:1"), component("b", "x:1"))
        group = Cccg("g", frozenset("ab"), attrs("x:1"), frozenset({Domain.SOFTWARE}),
                     software_beta=Fraction(1, 10))
        assert codes(SystemModel(comps, (group,))) == ["MISSING_DOMAIN_DATA"]
