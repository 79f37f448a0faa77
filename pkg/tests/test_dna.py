import math

import numpy as np
import pytest

from isobenefit.benefit import AmenityKernel, Decay
from isobenefit.dna import (
    PRINCIPLES,
    CentralitySpec,
    DnaParams,
    audit_all,
    audit_gardens,
    audit_principle_i,
    audit_principle_ii,
    audit_principle_iii,
    audit_principle_iv,
    audit_principle_v,
    audit_principle_vi,
    centrality_kernels,
    qualifying_nature_mask,
    specs_from_grid,
)
from isobenefit.errors import DimensionError, ParameterError
from isobenefit.grid import CellState, Grid, digest, new_grid

import fixture_builder as fx
from oracles import per_source_min_minutes

B, C, N, G = CellState.BUILT, CellState.CENTRALITY, CellState.NATURE, CellState.GARDEN


def block(r0, c0, h, w, state):
    return {(r, c): state for r in range(r0, r0 + h) for c in range(c0, c0 + w)}


class TestParams:
    def test_defaults_are_paper_constants(self):
        p = DnaParams()
        assert p.d_star == 2500.0
        assert p.a_min_nature == 1_000_000.0
        assert p.garden_time == 15.0 == p.t_star / 2
        assert p.warnings() == []

    def test_d_star_band_warning(self):
        assert DnaParams(t_star=60.0).warnings()
        assert DnaParams(t_star=24.0).warnings() == []
        assert DnaParams(t_star=23.9).warnings()

    @pytest.mark.parametrize("kw", [dict(t_star=0), dict(walk_speed=-1), dict(garden_time=31),
                                    dict(a_min_nature=0), dict(epsilon_cv=-0.1),
                                    dict(attractiveness_tolerance=-1)])
    def test_invalid(self, kw):
        with pytest.raises(ParameterError):
            DnaParams(**kw)


class TestSpecs:
    def test_composition_must_be_simplex(self):
        with pytest.raises(ParameterError):
            CentralitySpec(0, ((0, 0),), 1.0, (0.5, 0.6))
        with pytest.raises(ParameterError):
            CentralitySpec(0, ((0, 0),), 1.0, (1.5, -0.5))
        CentralitySpec(0, ((0, 0),), 1.0, (0.5, 0.5 + 1e-10))

    def test_attractiveness_positive(self):
        with pytest.raises(ParameterError):
            CentralitySpec(0, ((0, 0),), 0.0)

    def test_specs_from_grid_one_per_region(self):
        g = new_grid(5, 5, 1.0).replace({(0, 0): C, (0, 1): C, (3, 3): C})
        specs = specs_from_grid(g)
        assert [s.cells for s in specs] == [((0, 0), (0, 1)), ((3, 3),)]
        assert len(centrality_kernels(specs, DnaParams())) == 3


class TestPrincipleI:
    def ring_grid(self):
        g = new_grid(41, 41, 50.0)
        ups = {(20, 20): C}
        for r in range(41):
            for c in range(41):
                if round(math.hypot(r - 20, c - 20)) == 15:
                    ups[(r, c)] = B
        return g.replace(ups)

    def test_ring_passes(self):
        g = self.ring_grid()
        p = DnaParams(c_star=0.0)
        ks = [AmenityKernel((20, 20), 1.0, p.d_star, Decay.LINEAR_CUTOFF)]
        res = audit_principle_i(g, ks, p)
        assert res.passed and res.measured["benefit_cv"] < 0.05

    def test_two_distances_fail(self):
        p = DnaParams()
        g = new_grid(30, 1, 250.0).replace({(0, 0): C, (0, 1): B, (0, 9): B})
        ks = [AmenityKernel((0, 0), 1.0, p.d_star, Decay.LINEAR_CUTOFF)]
        res = audit_principle_i(g, ks, p, mask=(B,))
        # built at 0.1 D* and 0.9 D*: values 0.9 and 0.1, CV = 0.4 / 0.5
        assert not res.passed
        assert res.measured["benefit_cv"] == pytest.approx(0.8, rel=1e-12)
        assert res.measured["benefit_cv"] > p.epsilon_cv
        assert {(r, c) for r, c, _ in res.violations} <= {(0, 1), (0, 9)}

    def test_no_built_is_vacuous(self):
        res = audit_principle_i(new_grid(4, 4, 1.0), [], DnaParams())
        assert res.passed and res.vacuous and res.notes

    def test_f_layer_must_also_pass(self):
        g = new_grid(3, 1, 100.0).replace({(0, 0): C, (0, 1): B, (0, 2): B})
        ks = [AmenityKernel((0, 0), 1.0, 1e6)]
        p = DnaParams()
        assert audit_principle_i(g, ks, p, f_layer=np.ones((1, 3))).passed
        bad = audit_principle_i(g, ks, p, f_layer=np.array([[1.0, 0.01, 1.0]]))
        assert not bad.passed and (0, 1) in {(r, c) for r, c, _ in bad.violations}

    def test_violations_nonempty_when_failing(self):
        g = new_grid(10, 1, 100.0, B).replace({(0, 0): C})
        ks = [AmenityKernel((0, 0), 1.0, 1000.0, Decay.LINEAR_CUTOFF)]
        res = audit_principle_i(g, ks, DnaParams(c_star=0.0, epsilon_cv=0.01))
        assert not res.passed and res.violations


class TestReach:
    def test_adjacent_built_passes(self):
        p = DnaParams()
        for cell, t in (((1, 2), 1.2), ((2, 2), 100 * math.sqrt(2) * 60 / 5000)):
            g = new_grid(4, 4, 100.0).replace({(1, 1): C, cell: B})
            for f in (audit_principle_ii, audit_principle_iii):
                res = f(g, p)
                assert res.passed and res.measured["worst_min"] == pytest.approx(t)

    def test_five_km_fails(self):
        g = new_grid(51, 1, 100.0).replace({(0, 0): C, (0, 50): B})
        for f in (audit_principle_ii, audit_principle_iii):
            res = f(g, DnaParams())
            assert not res.passed
            assert res.violations == [(0, 50, 60.0)]

    def test_no_centrality(self):
        g = new_grid(3, 3, 100.0).replace({(1, 1): B, (1, 2): B})
        res = audit_principle_ii(g, DnaParams())
        assert not res.passed and res.measured["unreachable"] == 2
        assert all(math.isinf(v) for _, _, v in res.violations)

    def test_extra_daily_sources(self):
        g = new_grid(51, 1, 100.0).replace({(0, 0): C, (0, 50): B})
        extra = np.zeros((1, 51), dtype=bool)
        extra[0, 45] = True
        assert audit_principle_ii(g, DnaParams(), extra_sources=extra).passed
        assert not audit_principle_iii(g, DnaParams()).passed

    def test_threshold_sharpness_centrality(self):
        p = DnaParams()
        at = new_grid(30, 1, 100.0).replace({(0, 0): C, (0, 25): B})
        beyond = new_grid(30, 1, 100.0).replace({(0, 0): C, (0, 26): B})
        assert audit_principle_iii(at, p).measured["worst_min"] == 30.0
        assert audit_principle_iii(at, p).passed
        assert not audit_principle_iii(beyond, p).passed

    def test_matches_dijkstra_oracle(self):
        rng = np.random.default_rng(31)
        p = DnaParams()
        for _ in range(10):
            cells = rng.choice([0, 1, 2], size=(20, 20), p=[0.6, 0.39, 0.01]).astype(np.uint8)
            g = Grid(20, 20, 150.0, cells)
            res = audit_principle_ii(g, p)
            srcs = list(zip(*np.nonzero(cells == 2)))
            want = per_source_min_minutes(20, 20, 150.0, srcs, 5.0)
            bad = [(r, c, want[r][c]) for r in range(20) for c in range(20)
                   if cells[r, c] == 1 and not want[r][c] <= 30.0]
            assert res.violations == bad


class TestNature:
    def test_one_square_km_qualifies(self):
        g = new_grid(30, 12, 100.0).replace({**block(0, 0, 10, 10, N), (5, 10): B, (5, 11): C})
        assert qualifying_nature_mask(g, DnaParams()).sum() == 100
        assert audit_principle_iv(g, DnaParams()).passed

    def test_quarter_km_does_not(self):
        g = new_grid(30, 12, 100.0).replace({**block(0, 0, 5, 5, N), (5, 10): B, (5, 11): C})
        assert not qualifying_nature_mask(g, DnaParams()).any()
        assert not audit_principle_iv(g, DnaParams()).passed

    def test_gardens_never_qualify(self):
        g = new_grid(30, 12, 100.0).replace({**block(0, 0, 10, 10, G), (5, 10): B})
        assert not audit_principle_iv(g, DnaParams()).passed

    def test_nature_at_two_km(self):
        ups = {**block(0, 0, 10, 10, N), (4, 29): B, (4, 30): C}
        g = new_grid(31, 10, 100.0).replace(ups)
        res = audit_principle_iv(g, DnaParams())
        # 20 orthogonal steps from column 9 to column 29
        assert res.passed
        assert res.measured["worst_min"] == pytest.approx(21 * 100 * 60 / 5000)
        want = per_source_min_minutes(10, 31, 100.0, list(block(0, 0, 10, 10, N)), 5.0)
        assert res.measured["worst_min"] == max(want[4][29], want[4][30])

    def test_threshold_sharpness(self):
        p = DnaParams()
        # column 34 is 25 orthogonal steps from the block edge at column 9
        at = new_grid(40, 10, 100.0).replace({**block(0, 0, 10, 10, N), (0, 33): B, (0, 34): C})
        res = audit_principle_iv(at, p)
        assert res.passed and res.measured["worst_min"] == 30.0
        beyond = at.replace({(0, 35): B})
        assert not audit_principle_iv(beyond, p).passed


class TestPrincipleV:
    def test_isolated_built(self):
        g = new_grid(5, 5, 100.0).replace({(2, 2): B})
        res = audit_principle_v(g, DnaParams())
        assert not res.passed and res.violations == [(2, 2, 0.0)]

    def test_diagonal_neighbour_counts(self):
        g = new_grid(5, 5, 100.0).replace({(2, 2): B, (3, 3): C})
        assert audit_principle_v(g, DnaParams()).passed

    def test_two_square_km_regions(self):
        g = new_grid(25, 10, 100.0).replace({**block(0, 0, 10, 10, N), **block(0, 12, 10, 10, N)})
        res = audit_principle_v(g, DnaParams())
        assert res.passed and res.measured["nature_regions"] == 2

    def test_99_cells_fail(self):
        ups = block(0, 0, 10, 10, N)
        del ups[(9, 9)]
        g = new_grid(12, 12, 100.0).replace(ups)
        res = audit_principle_v(g, DnaParams())
        assert not res.passed
        assert res.violations == [(0, 0, 990000.0)]

    def test_exactly_a_min_passes(self):
        g = new_grid(12, 12, 100.0).replace(block(0, 0, 10, 10, N))
        assert audit_principle_v(g, DnaParams()).passed

    def test_empty(self):
        assert audit_principle_v(new_grid(3, 3, 1.0), DnaParams()).vacuous


class TestPrincipleVI:
    def spec(self, i, a, comp):
        return CentralitySpec(i, ((0, i),), a, comp)

    def test_identical_composition(self):
        comp = (0.5, 0.5)
        res = audit_principle_vi([self.spec(0, 1.0, comp), self.spec(1, 1.0, comp)], DnaParams())
        assert not res.passed

    def test_similar_attractiveness(self):
        specs = [self.spec(0, 1.0, (1, 0, 0)), self.spec(1, 1.1, (0, 1, 0)),
                 self.spec(2, 0.95, (0, 0, 1))]
        res = audit_principle_vi(specs, DnaParams())
        assert res.passed
        mean = (1.0 + 1.1 + 0.95) / 3
        assert res.measured["mean_attractiveness"] == pytest.approx(mean)
        assert res.measured["max_relative_deviation"] == pytest.approx((1.1 - mean) / mean)
        assert res.measured["max_relative_deviation"] == pytest.approx(0.082, abs=5e-4)

    def test_out_of_band(self):
        specs = [self.spec(0, 1.0, (1, 0)), self.spec(1, 2.0, (0, 1))]
        assert not audit_principle_vi(specs, DnaParams()).passed

    def test_single_is_vacuous(self):
        res = audit_principle_vi([self.spec(0, 1.0, (1.0,))], DnaParams())
        assert res.passed and res.vacuous

    def test_scale_invariance(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            atts = rng.uniform(0.5, 1.5, size=4)
            specs = [self.spec(i, float(a), (1.0 if j == i else 0.0 for j in range(4)))
                     for i, a in enumerate(atts)]
            lam = float(rng.uniform(0.01, 100))
            scaled = [CentralitySpec(s.id, s.cells, s.attractiveness * lam, s.composition)
                      for s in specs]
            assert audit_principle_vi(specs, DnaParams()).passed == \
                audit_principle_vi(scaled, DnaParams()).passed

    def test_dominance_note(self):
        specs = [self.spec(0, 1.0, (1, 0, 0)), self.spec(1, 1.0, (0, 1, 0)),
                 self.spec(2, 5.0, (0, 0, 1))]
        res = audit_principle_vi(specs, DnaParams())
        assert any("dominant" in n for n in res.notes)


class TestGardens:
    def test_half_km(self):
        g = new_grid(10, 1, 100.0).replace({(0, 0): G, (0, 5): B, (0, 6): B})
        res = audit_gardens(g, DnaParams())
        assert res.passed and res.measured["worst_min"] == pytest.approx(7.2)

    def test_two_km_fails(self):
        g = new_grid(25, 1, 100.0).replace({(0, 0): G, (0, 20): B})
        res = audit_gardens(g, DnaParams())
        assert not res.passed and res.violations == [(0, 20, 24.0)]

    def test_nature_everywhere_counts(self):
        ups = {(r, c): N for r in range(9) for c in range(9) if r % 3 == 0 or c % 3 == 0}
        ups.update({(1, 1): B, (1, 2): B, (4, 4): B, (7, 8): B})
        g = new_grid(9, 9, 100.0).replace(ups)
        res = audit_gardens(g, DnaParams())
        assert res.passed and res.measured["worst_min"] == pytest.approx(1.2)

    def test_threshold_sharpness(self):
        at = new_grid(30, 1, 50.0).replace({(0, 0): G, (0, 25): B})
        beyond = new_grid(30, 1, 50.0).replace({(0, 0): G, (0, 26): B})
        assert audit_gardens(at, DnaParams()).measured["worst_min"] == 15.0
        assert audit_gardens(at, DnaParams()).passed
        assert not audit_gardens(beyond, DnaParams()).passed


class TestAuditAll:
    def test_good_fixture_passes(self):
        r = audit_all(fx.good_city(), fx.good_specs())
        assert r.overall_pass and not r.vacuous
        assert all(not r[p].vacuous for p in PRINCIPLES)

    def test_exclave_differential(self):
        good = audit_all(fx.good_city(), fx.good_specs())
        bad = audit_all(fx.exclave_city(), fx.good_specs())
        assert not bad.overall_pass
        assert set(bad.failed()) == {"ii", "iii"}
        for p in ("i", "iv", "v", "vi", "gardens"):
            assert bad[p].passed == good[p].passed
        assert [(r, c) for r, c, _ in bad["ii"].violations] == list(fx.EXCLAVE)

    def test_empty_grid_vacuous(self):
        r = audit_all(new_grid(8, 8, 100.0))
        assert r.overall_pass and r.vacuous
        assert all(r[p].vacuous for p in PRINCIPLES)

    def test_pure_and_repeatable(self):
        g = fx.exclave_city()
        before = g.cells.copy()
        a = audit_all(g, fx.good_specs())
        b = audit_all(g, fx.good_specs())
        assert np.array_equal(g.cells, before)
        assert a.as_dict() == b.as_dict()
        assert a.digest == digest(g)

    def test_adding_centrality_never_worsens_reach(self):
        rng = np.random.default_rng(44)
        for _ in range(20):
            cells = rng.choice([0, 1, 2], size=(25, 25), p=[0.5, 0.49, 0.01]).astype(np.uint8)
            g = Grid(25, 25, 100.0, cells)
            r, c = (int(x) for x in rng.integers(25, size=2))
            g2 = g.replace({(r, c): C})
            w1 = audit_principle_iii(g, DnaParams()).measured.get("worst_min", 0.0)
            w2 = audit_principle_iii(g2, DnaParams()).measured.get("worst_min", 0.0)
            assert w2 <= w1

    def test_spec_outside_grid(self):
        with pytest.raises(DimensionError):
            audit_all(new_grid(3, 3, 1.0), [CentralitySpec(0, ((5, 5),), 1.0)])

    def test_f_layer_shape(self):
        with pytest.raises(DimensionError):
            audit_all(new_grid(3, 3, 1.0), f_layer=np.ones((2, 3)))
