import datetime

import numpy as np
import pytest

from conftest import make_embeddings, make_table
from wildsplit.cluster import build_edges, find_clusters
from wildsplit.errors import NotTimestamped, WildsplitError
from wildsplit.quality import (
    dataset_stats,
    default_theta_grid,
    purity_table,
    threshold_sweep,
    tp_fp,
)
from wildsplit.split import TEST_KNOWN, TEST_NEW, TRAIN, SplitAssignment
from wildsplit.synth import WorldSpec, generate_world


def d(day):
    return datetime.date(2020, 1, day)


class TestTpFp:
    def test_hand_case(self):
        dates = [d(1), d(1), d(1), d(2), d(3), d(4)]
        clusters = [{0, 1, 2}, {3, 4}, {5}]
        assert tp_fp(clusters, dates) == (3, 1)

    def test_all_singletons(self):
        assert tp_fp([{0}, {1}, {2}], [d(1), d(2), d(3)]) == (0, 0)

    def test_same_date_cluster(self):
        n = 5
        assert tp_fp([set(range(n))], [d(1)] * n) == (n - 1, 0)

    def test_missing_date(self):
        with pytest.raises(NotTimestamped):
            tp_fp([{0, 1}], [d(1), None])

    def test_fp_le_tp(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 15))
            dates = [d(int(rng.integers(1, 5))) for _ in range(n)]
            cut = sorted(rng.choice(n, size=int(rng.integers(0, n)), replace=False))
            clusters, prev = [], 0
            for c in list(cut) + [n]:
                if c > prev:
                    clusters.append(set(range(prev, c)))
                    prev = c
            tp, fp = tp_fp(clusters, dates)
            assert 0 <= fp <= tp


class TestThresholdSweep:
    def sweep_inputs(self, seed=0):
        world = generate_world(
            WorldSpec(
                seed=seed,
                n_datasets=1,
                identities_per_dataset=10,
                timestamped=(True,),
                images_per_identity_mean=6.0,
            )
        )
        identity_indices = dict(world.table.by_identity)
        dates = [r.date for r in world.table.records]
        return world, identity_indices, dates

    def test_extremes(self):
        world, groups, dates = self.sweep_inputs()
        points = threshold_sweep(groups, world.embeddings, dates, [-1.0, 1.0])
        lo, hi = points[0], points[1]
        # theta above every pairwise sim: nothing clustered (sims can hit 1.0
        # only for bit-identical rows, which this world does not produce)
        assert (hi.tp, hi.fp) == (0, 0)
        # theta below every sim: one cluster per identity
        n = len(world.table)
        n_ids = len(groups)
        assert lo.tp == n - n_ids

    def test_monotone_and_matches_brute_force(self):
        world, groups, dates = self.sweep_inputs(seed=5)
        grid = default_theta_grid(0.90, 1.00, 0.01)
        points = threshold_sweep(groups, world.embeddings, dates, grid)
        tps = [p.tp for p in points]
        fps = [p.fp for p in points]
        assert tps == sorted(tps, reverse=True)
        assert fps == sorted(fps, reverse=True)
        # independent per-point recomputation
        for p in points:
            tp = fp = 0
            for key, rows in groups.items():
                edges = build_edges(rows, world.embeddings)
                comps = find_clusters(edges, len(rows), p.theta)
                clusters = [{rows[i] for i in c} for c in comps]
                t, f = tp_fp(clusters, dates)
                tp += t
                fp += f
            assert (tp, fp) == (p.tp, p.fp)

    def test_grid_validation(self):
        world, groups, dates = self.sweep_inputs()
        with pytest.raises(WildsplitError):
            threshold_sweep(groups, world.embeddings, dates, [0.9, 0.9])
        with pytest.raises(WildsplitError):
            threshold_sweep(groups, world.embeddings, dates, [0.5, 1.5])

    def test_default_grid_shape(self):
        grid = default_theta_grid()
        assert len(grid) == 101
        assert grid[0] == pytest.approx(0.90)
        assert grid[-1] == pytest.approx(1.00)


class TestPurityTable:
    def test_single_cluster_three_dates(self):
        table = purity_table([{0, 1, 2}], [d(1), d(2), d(3)])
        row = table["rows"]["3"]
        assert row["counts"]["3"] == 1
        assert row["single_time_share"] == 0.0

    def test_no_clusters(self):
        table = purity_table([{0}, {1}], [d(1), d(2)])
        assert table["rows"] == {}
        assert table["total_clusters"] == 0

    def test_row_share_and_totals(self):
        # size-2 bucket: 3 single-date clusters, 1 two-date cluster
        dates = [d(1), d(1), d(2), d(2), d(3), d(3), d(4), d(5)]
        clusters = [{0, 1}, {2, 3}, {4, 5}, {6, 7}]
        table = purity_table(clusters, dates)
        row = table["rows"]["2"]
        assert row["total"] == 4
        assert row["single_time_share"] == pytest.approx(0.75)
        assert table["total_clusters"] == 4

    def test_six_plus_bucketing(self):
        dates = [d(k % 7 + 1) for k in range(8)]
        table = purity_table([set(range(8))], dates)
        assert table["rows"]["6+"]["counts"]["6+"] == 1

    def test_reported_share_rounding(self):
        # the share is an exact fraction; presentation rounding happens last
        assert round(100 * 3009 / 3087, 1) == 97.5


class TestDatasetStats:
    def test_single_image_fraction(self):
        rows = []
        counts = {"a": 1, "b": 1, "c": 1, "d": 7}
        k = 0
        for ident, c in counts.items():
            for _ in range(c):
                rows.append((f"i{k}", "A", ident, None))
                k += 1
        table = make_table(rows)
        split = SplitAssignment([TEST_KNOWN] * len(rows), ["?"] * len(rows))
        stats = dataset_stats(table, split)
        assert stats[TEST_KNOWN]["single_image_identity_fraction"] == pytest.approx(0.75)

    def test_uniform_top_shares(self):
        rows = [(f"i{k}", "A", f"id{k // 4}", None) for k in range(400)]
        table = make_table(rows)
        split = SplitAssignment([TRAIN] * 400, ["?"] * 400)
        stats = dataset_stats(table, split)
        assert stats[TRAIN]["top_10pct_image_share"] == pytest.approx(0.10)
        assert stats[TEST_KNOWN] is None
        assert stats[TEST_NEW] is None

    def test_histogram(self):
        rows = [("a", "A", "x", None), ("b", "A", "x", None), ("c", "A", "y", None)]
        table = make_table(rows)
        split = SplitAssignment([TRAIN] * 3, ["?"] * 3)
        hist = dataset_stats(table, split)[TRAIN]["images_per_identity_histogram"]
        assert hist == {"1": 1, "2": 1}
