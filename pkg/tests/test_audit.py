import numpy as np
import pytest

from comfair.audit import (
    FairnessReport, accuracy, auc, community_report, detect_paradox,
    equal_opportunity, statistical_parity,
)
from comfair.errors import (
    EmptyScope, MissingGroup, MissingPositives, SingleClassScope,
)


def brute_force_auc(scores, labels):
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                total += 1.0
            elif p == n:
                total += 0.5
    return total / (len(pos) * len(neg))


class TestAccuracy:
    def test_counting(self):
        preds = np.array([0, 1, 1, 0])
        labels = np.array([0, 1, 0, 1])
        assert accuracy(preds, labels, np.arange(4)) == pytest.approx(0.5)

    def test_subset(self):
        preds = np.array([0, 1, 1, 0])
        labels = np.array([0, 1, 0, 1])
        assert accuracy(preds, labels, np.array([0, 1])) == 1.0

    def test_empty_scope(self):
        with pytest.raises(EmptyScope):
            accuracy(np.array([0]), np.array([0]), np.array([], dtype=int))


class TestAuc:
    def test_known_example(self):
        scores = np.array([0.9, 0.8, 0.3, 0.1])
        labels = np.array([1, 0, 1, 0])
        assert auc(scores, labels, np.arange(4)) == pytest.approx(0.75)

    def test_perfect_ranking(self):
        scores = np.array([0.9, 0.8, 0.2, 0.1])
        labels = np.array([1, 1, 0, 0])
        assert auc(scores, labels, np.arange(4)) == 1.0

    def test_all_tied_is_half(self):
        scores = np.full(6, 0.5)
        labels = np.array([0, 1, 0, 1, 0, 1])
        assert auc(scores, labels, np.arange(6)) == pytest.approx(0.5)

    @pytest.mark.parametrize("seed", range(100))
    def test_matches_pairwise_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n = rng.integers(5, 30)
        # quantized scores to exercise tie handling
        scores = np.round(rng.uniform(0, 1, n), 1)
        labels = rng.integers(0, 2, n)
        if labels.sum() == 0 or labels.sum() == n:
            labels[0], labels[-1] = 0, 1
        assert auc(scores, labels, np.arange(n)) == pytest.approx(
            brute_force_auc(scores, labels), abs=1e-12)

    def test_score_negation_complements(self):
        rng = np.random.default_rng(7)
        scores = rng.uniform(0, 1, 20)  # continuous: ties almost surely absent
        labels = rng.integers(0, 2, 20)
        labels[0], labels[-1] = 0, 1
        node_set = np.arange(20)
        assert auc(scores, labels, node_set) + auc(-scores, labels, node_set) \
            == pytest.approx(1.0)

    def test_single_class_raises(self):
        with pytest.raises(SingleClassScope):
            auc(np.array([0.1, 0.2]), np.array([1, 1]), np.arange(2))


class TestParityMetrics:
    def test_statistical_parity_counting(self):
        preds = np.array([1, 1, 0, 1, 0, 0])
        sens = np.array([0, 0, 0, 1, 1, 1])
        signed, abs_ = statistical_parity(preds, sens, np.arange(6))
        assert signed == pytest.approx(2 / 3 - 1 / 3)
        assert abs_ == pytest.approx(1 / 3)

    def test_statistical_parity_sign_flips_on_group_swap(self):
        rng = np.random.default_rng(0)
        preds = rng.integers(0, 2, 30)
        sens = rng.integers(0, 2, 30)
        sens[0], sens[1] = 0, 1
        node_set = np.arange(30)
        signed, abs_ = statistical_parity(preds, sens, node_set)
        swapped_signed, swapped_abs = statistical_parity(preds, 1 - sens, node_set)
        assert swapped_signed == pytest.approx(-signed)
        assert swapped_abs == pytest.approx(abs_)

    def test_missing_group_raises(self):
        with pytest.raises(MissingGroup):
            statistical_parity(np.array([1, 0]), np.array([0, 0]), np.arange(2))

    def test_equal_opportunity_counting(self):
        #       group0 positives: preds 1,0 -> TPR 0.5 ; group1 positive: pred 1 -> TPR 1
        preds = np.array([1, 0, 1, 0, 0])
        labels = np.array([1, 1, 1, 0, 0])
        sens = np.array([0, 0, 1, 0, 1])
        signed, abs_ = equal_opportunity(preds, labels, sens, np.arange(5))
        assert signed == pytest.approx(-0.5)
        assert abs_ == pytest.approx(0.5)

    def test_equal_opportunity_missing_positives(self):
        preds = np.array([1, 1, 0])
        labels = np.array([1, 0, 0])
        sens = np.array([0, 1, 1])
        with pytest.raises(MissingPositives):
            equal_opportunity(preds, labels, sens, np.arange(3))

    @pytest.mark.parametrize("seed", range(20))
    def test_random_counting_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n = 40
        preds = rng.integers(0, 2, n)
        labels = rng.integers(0, 2, n)
        sens = rng.integers(0, 2, n)
        sens[:2] = [0, 1]
        labels[:2] = 1
        node_set = np.arange(n)
        sp_signed, _ = statistical_parity(preds, sens, node_set)
        expected_sp = (preds[sens == 0].mean() - preds[sens == 1].mean())
        assert sp_signed == pytest.approx(expected_sp)
        eo_signed, _ = equal_opportunity(preds, labels, sens, node_set)
        tpr0 = preds[(sens == 0) & (labels == 1)].mean()
        tpr1 = preds[(sens == 1) & (labels == 1)].mean()
        assert eo_signed == pytest.approx(tpr0 - tpr1)


class TestCommunityReport:
    def build(self, n=40, seed=0, communities=None):
        rng = np.random.default_rng(seed)
        preds = rng.integers(0, 2, n)
        scores = rng.uniform(0, 1, n)
        labels = rng.integers(0, 2, n)
        sens = rng.integers(0, 2, n)
        sens[:2] = [0, 1]
        labels[:3] = 1
        labels[3] = 0
        if communities is None:
            communities = np.zeros(n, dtype=int)
        return preds, scores, labels, sens, communities

    def test_graph_record_first(self):
        args = self.build(communities=np.repeat([0, 1], 20))
        report = community_report(*args)
        assert report.records[0].scope == "graph"
        assert {r.scope for r in report.records[1:]} == {"community:0", "community:1"}

    def test_single_community_equals_graph(self):
        args = self.build()
        report = community_report(*args)
        g = report.scope("graph")
        c = report.scope("community:0")
        for metric in ("acc", "auc", "sp_signed", "sp_abs", "eo_signed", "eo_abs"):
            assert getattr(c, metric) == pytest.approx(getattr(g, metric))

    def test_graph_metrics_are_pooled_not_averaged(self):
        # community 0: all predicted positive; community 1: all negative.
        # pooled SP uses the combined confusion counts, not the mean of the
        # per-community gaps (which are 0 and 0 here)
        preds = np.array([1, 1, 1, 1, 0, 0, 0, 0])
        labels = np.array([1, 1, 1, 1, 1, 1, 1, 1])
        scores = preds.astype(float)
        sens = np.array([0, 0, 1, 1, 0, 1, 1, 1])
        communities = np.repeat([0, 1], 4)
        report = community_report(preds, scores, labels, sens, communities)
        assert report.scope("community:0").sp_abs == pytest.approx(0.0)
        assert report.scope("community:1").sp_abs == pytest.approx(0.0)
        # pooled: P(1|s=0)=2/3, P(1|s=1)=2/5
        assert report.scope("graph").sp_signed == pytest.approx(2 / 3 - 2 / 5)

    def test_undefined_metrics_are_none_markers(self):
        preds = np.array([1, 0, 1, 0])
        scores = np.array([0.9, 0.1, 0.8, 0.2])
        labels = np.array([0, 0, 1, 1])      # community 0 has no positives
        sens = np.array([0, 0, 0, 1])        # community 0 lacks group 1
        communities = np.array([0, 0, 1, 1])
        report = community_report(preds, scores, labels, sens, communities)
        c0 = report.scope("community:0")
        assert c0.acc is not None
        assert c0.auc is None
        assert c0.sp_signed is None and c0.sp_abs is None
        assert c0.eo_signed is None and c0.eo_abs is None
        d = c0.as_dict()
        assert d["auc"] is None and d["sp_abs"] is None

    def test_node_set_restricts_scope(self):
        args = self.build(communities=np.repeat([0, 1], 20))
        node_set = np.arange(20)  # only community 0
        report = community_report(*args, node_set=node_set)
        assert [r.scope for r in report.records] == ["graph", "community:0"]
        assert report.records[0].size == 20

    def test_empty_node_set_raises(self):
        args = self.build()
        with pytest.raises(EmptyScope):
            community_report(*args, node_set=np.array([], dtype=int))

    def test_group_counts(self):
        preds, scores, labels, sens, communities = self.build()
        report = community_report(preds, scores, labels, sens, communities)
        counts = report.records[0].group_counts
        assert counts[0] == int((sens == 0).sum())
        assert counts[1] == int((sens == 1).sum())


class TestDetectParadox:
    def build_paradox(self):
        # graph-level SP gap is exactly 0 but both communities have gap 1.0:
        # community 0 favors group 0, community 1 favors group 1
        preds = np.array([1, 1, 0, 0, 0, 0, 1, 1])
        labels = np.array([1, 1, 1, 1, 1, 1, 1, 1])
        scores = preds.astype(float)
        sens = np.array([0, 0, 1, 1, 0, 0, 1, 1])
        communities = np.repeat([0, 1], 4)
        return community_report(preds, scores, labels, sens, communities)

    def test_paradox_flagged(self):
        report = self.build_paradox()
        assert report.scope("graph").sp_abs == pytest.approx(0.0)
        flags = detect_paradox(report, margin=0.1)
        flagged = {(scope, metric) for scope, metric, _, _ in flags}
        assert ("community:0", "sp_abs") in flagged
        assert ("community:1", "sp_abs") in flagged
        for scope, metric, comm_val, graph_val in flags:
            assert comm_val == pytest.approx(1.0)
            assert graph_val == pytest.approx(0.0)

    def test_margin_suppresses_small_excess(self):
        report = self.build_paradox()
        assert detect_paradox(report, margin=1.0) == []

    def test_none_metrics_skipped(self):
        preds = np.array([1, 0, 1, 0])
        scores = np.array([0.9, 0.1, 0.8, 0.2])
        labels = np.array([0, 0, 1, 1])
        sens = np.array([0, 0, 0, 1])
        communities = np.array([0, 0, 1, 1])
        report = community_report(preds, scores, labels, sens, communities)
        # community 0 has None sp/eo: must not be flagged or raise
        flags = detect_paradox(report, margin=0.0)
        assert all(scope != "community:0" for scope, _, _, _ in flags)

    def test_no_flags_when_graph_dominates(self):
        preds = np.array([1, 0, 1, 0])
        scores = np.array([0.9, 0.1, 0.8, 0.2])
        labels = np.array([1, 1, 1, 1])
        sens = np.array([0, 1, 0, 1])
        communities = np.zeros(4, dtype=int)
        report = community_report(preds, scores, labels, sens, communities)
        assert detect_paradox(report) == []

    def test_report_as_dict_schema(self):
        report = self.build_paradox()
        d = report.as_dict()
        assert d["schema_version"] == 1
        assert [r["scope"] for r in d["records"]][0] == "graph"
        assert set(d["records"][0]) == {
            "scope", "size", "group_counts", "acc", "auc",
            "sp_signed", "sp_abs", "eo_signed", "eo_abs",
        }
