import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from conftest import measures
from wdrdg import BarycenterConfig, DimensionMismatch, DiscreteMeasure, EmptyClassCell, MultiDomainDataset
from wdrdg.barycenter import PROVIDED_POINTS
from wdrdg.errors import EmptyInput
from wdrdg.ot import wasserstein2
from wdrdg.uncertainty import (
    OVERLAP_HEADER,
    UncertaintySet,
    build_sets,
    overlap_report,
    radius,
    write_overlap_csv,
)


def dirac(x):
    return DiscreteMeasure.dirac([float(x)])


class TestRadius:
    def test_single_source_equal_center(self):
        Q = DiscreteMeasure.uniform([[0.0], [1.0], [5.0]])
        assert radius(Q, [Q]) == pytest.approx(0.0, abs=1e-12)

    def test_symmetric_diracs(self):
        assert radius(dirac(1), [dirac(0), dirac(2)]) == pytest.approx(1.0)

    def test_takes_max(self):
        assert radius(dirac(1), [dirac(0), dirac(3)]) == pytest.approx(2.0)

    def test_errors(self):
        with pytest.raises(EmptyInput):
            radius(dirac(0), [])
        with pytest.raises(DimensionMismatch):
            radius(dirac(0), [DiscreteMeasure.dirac([0.0, 0.0])])

    @given(measures(max_atoms=3, dim=2), st.lists(measures(max_atoms=3, dim=2), min_size=1, max_size=4))
    def test_dominates_every_source(self, center, sources):
        r = radius(center, sources)
        for s in sources:
            assert r >= wasserstein2(center, s)


def _translated_dataset(v):
    base = {1: np.array([[0.0, 0.0], [1.0, 0.0]]), 2: np.array([[0.0, 5.0], [1.0, 6.0]])}
    doms = {}
    for name, sign in (("plus", 1.0), ("minus", -1.0)):
        X = np.concatenate([base[1] + sign * v, base[2] + sign * v])
        doms[name] = (X, np.array([1, 1, 2, 2]))
    return MultiDomainDataset(doms, K=2), base


class TestBuildSets:
    def test_single_domain_single_class(self):
        X = np.array([[0.0, 1.0], [2.0, 2.0], [4.0, 0.0]])
        ds = MultiDomainDataset({"a": (X, np.ones(3, dtype=int))}, K=1)
        sets = build_sets(ds, BarycenterConfig(b=3, init=PROVIDED_POINTS, init_points={1: X}))
        assert len(sets) == 1
        assert sets[0].radius == pytest.approx(0.0, abs=1e-12)

    def test_translated_sources_half_spread(self):
        v = np.array([0.3, -0.4])
        ds, base = _translated_dataset(v)
        sets = build_sets(ds, BarycenterConfig(b=2, seed=1))
        assert len(sets) == 2
        for s in sets:
            assert s.center.allclose(DiscreteMeasure.uniform(base[s.k]), atol=1e-7)
            # radius against the realized barycenter, recomputed with the oracle
            w = s.center.weights
            ref = max(
                oracles.w2(s.center.points, w, ds.cell(dom, s.k), np.full(2, 0.5)) for dom in ds.domain_ids
            )
            assert s.radius == pytest.approx(ref, abs=1e-9)
            assert s.radius == pytest.approx(np.linalg.norm(v), abs=1e-7)

    def test_empty_cell(self):
        ds = MultiDomainDataset(
            {"a": (np.zeros((2, 1)), np.array([1, 2])), "b": (np.zeros((1, 1)), np.array([1]))}, K=2
        )
        with pytest.raises(EmptyClassCell) as exc:
            build_sets(ds)
        assert (exc.value.domain, exc.value.label) == ("b", 2)

    def test_default_b_shared(self):
        r = np.random.default_rng(0)
        ds = MultiDomainDataset(
            {
                "a": (r.normal(size=(9, 2)), np.array([1] * 3 + [2] * 3 + [3] * 3)),
                "b": (r.normal(size=(12, 2)), np.array([1] * 5 + [2] * 5 + [3] * 2)),
            },
            K=3,
        )
        sets = build_sets(ds)
        assert [s.k for s in sets] == [1, 2, 3]
        assert {s.center.size for s in sets} == {3}

    def test_set_invariants(self):
        with pytest.raises(ValueError):
            UncertaintySet(1, dirac(0), -0.1)
        with pytest.raises(ValueError):
            UncertaintySet(1, DiscreteMeasure([[0.0], [1.0]], [0.3, 0.7]), 1.0)


class TestOverlap:
    def test_zero_radius_distinct(self):
        rec = overlap_report([UncertaintySet(1, dirac(0), 0.0), UncertaintySet(2, dirac(1), 0.0)])
        assert len(rec) == 1 and not rec[0].overlapping

    def test_oversized_radii(self):
        (rec,) = overlap_report([UncertaintySet(1, dirac(0), 1.5), UncertaintySet(2, dirac(2), 1.5)])
        assert rec.radius_sum == 3.0
        assert rec.barycenter_w2 == pytest.approx(2.0)
        assert rec.overlapping

    def test_ten_pairs_for_five_classes(self):
        sets = [UncertaintySet(k, dirac(k), 0.5) for k in range(1, 6)]
        rec = overlap_report(sets)
        assert len(rec) == 10
        assert [(r.class_i, r.class_j) for r in rec] == [(i, j) for i in range(1, 6) for j in range(i + 1, 6)]

    def test_needs_two(self):
        with pytest.raises(EmptyInput):
            overlap_report([UncertaintySet(1, dirac(0), 0.0)])

    @pytest.mark.parametrize("seed", range(4))
    def test_flags_scale_invariant(self, seed):
        r = np.random.default_rng(seed)
        K = 4
        doms = {}
        for m in range(3):
            X = np.concatenate([r.normal(loc=2.0 * k, scale=1.0, size=(6, 2)) for k in range(K)])
            doms[f"d{m}"] = (X, np.repeat(np.arange(1, K + 1), 6))
        ds = MultiDomainDataset(doms, K=K)
        cfg = BarycenterConfig(b=4, seed=seed)
        base = overlap_report(build_sets(ds, cfg))
        for s in (0.5, 2.0, 10.0):
            scaled = MultiDomainDataset({d: (X * s, y) for d, (X, y) in ds.domains.items()}, K=K)
            rec = overlap_report(build_sets(scaled, cfg))
            for a, b in zip(base, rec):
                assert b.radius_sum == pytest.approx(s * a.radius_sum, rel=1e-6)
                assert b.barycenter_w2 == pytest.approx(s * a.barycenter_w2, rel=1e-6)
                assert b.overlapping == a.overlapping

    def test_csv(self, tmp_path):
        rec = overlap_report([UncertaintySet(1, dirac(0), 1.5), UncertaintySet(2, dirac(2), 0.25)])
        path = tmp_path / "o.csv"
        write_overlap_csv(rec, path)
        rows = list(csv.reader(open(path)))
        assert rows[0] == OVERLAP_HEADER
        assert rows[1][:2] == ["1", "2"]
        assert float(rows[1][2]) == rec[0].radius_sum
        assert float(rows[1][3]) == rec[0].barycenter_w2
        assert rows[1][4] == "false"
