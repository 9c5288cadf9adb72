"""Triangle containers, index algebra, standardization, and CSV round-trips."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvreserve.triangles import (
    LOB1,
    LOB2,
    LossTriangle,
    PortfolioDataset,
    TriangleError,
    TrianglePair,
    destandardize,
    full_index_set,
    lower_index_set,
    parse_triangle_csv,
    standardize,
    true_reserve,
    upper_index_set,
    write_triangle_csv,
)


def make_triangle(origin_count=4, company_id="X1", lob=LOB1, full=False, seed=0):
    rng = np.random.default_rng(seed)
    idx = full_index_set(origin_count) if full else upper_index_set(origin_count)
    cells = {ij: float(rng.uniform(100.0, 1000.0)) for ij in sorted(idx)}
    premiums = tuple(float(rng.uniform(5000.0, 9000.0)) for _ in range(origin_count))
    return LossTriangle(
        company_id=company_id,
        lob=lob,
        origin_count=origin_count,
        cells=cells,
        premiums=premiums,
    )


class TestIndexSets:
    @given(st.integers(min_value=2, max_value=25))
    def test_partition_of_square(self, i_max):
        upper = upper_index_set(i_max)
        lower = lower_index_set(i_max)
        assert upper | lower == full_index_set(i_max)
        assert not (upper & lower)

    @given(st.integers(min_value=2, max_value=25))
    def test_counts(self, i_max):
        assert len(upper_index_set(i_max)) == i_max * (i_max + 1) // 2
        assert len(lower_index_set(i_max)) == i_max * (i_max - 1) // 2

    def test_ten_year_counts(self):
        assert len(upper_index_set(10)) == 55
        assert len(lower_index_set(10)) == 45

    def test_diagonal_membership(self):
        upper = upper_index_set(10)
        assert (1, 10) in upper and (10, 1) in upper
        assert (2, 10) not in upper and (2, 10) in lower_index_set(10)


class TestLossTriangle:
    def test_rejects_missing_cell(self):
        tri = make_triangle()
        cells = dict(tri.cells)
        cells.pop((1, 1))
        with pytest.raises(TriangleError, match="neither the upper triangle"):
            LossTriangle("X1", LOB1, 4, cells, tri.premiums)

    def test_rejects_extra_cell(self):
        tri = make_triangle()
        cells = dict(tri.cells)
        cells[(4, 4)] = 1.0  # lower cell: neither pure upper nor full square
        with pytest.raises(TriangleError):
            LossTriangle("X1", LOB1, 4, cells, tri.premiums)

    def test_rejects_nonpositive_premium(self):
        tri = make_triangle()
        with pytest.raises(TriangleError, match="premium"):
            LossTriangle("X1", LOB1, 4, dict(tri.cells), (0.0,) + tri.premiums[1:])

    def test_rejects_premium_count_mismatch(self):
        tri = make_triangle()
        with pytest.raises(TriangleError):
            LossTriangle("X1", LOB1, 4, dict(tri.cells), tri.premiums[:-1])

    def test_full_square_flag_and_upper_only(self):
        full = make_triangle(full=True)
        assert full.is_full_square
        upper = full.upper_only()
        assert not upper.is_full_square
        assert frozenset(upper.cells) == upper_index_set(4)
        for ij in upper.cells:
            assert upper.cells[ij] == full.cells[ij]

    def test_cell_accessor(self):
        tri = make_triangle()
        assert tri.cell(2, 3) == tri.cells[(2, 3)]


class TestStandardize:
    def test_values(self):
        tri = make_triangle()
        std = standardize(tri)
        for (i, j), y in std.cells.items():
            assert y == tri.cells[(i, j)] / tri.premiums[i - 1]

    def test_round_trip_exact_structure(self):
        tri = make_triangle(full=True, seed=3)
        back = destandardize(standardize(tri))
        assert frozenset(back.cells) == frozenset(tri.cells)
        for ij in tri.cells:
            assert back.cells[ij] == pytest.approx(tri.cells[ij], rel=1e-14)

    @given(st.integers(min_value=0, max_value=1000))
    @settings(max_examples=25, deadline=None)
    def test_round_trip_property(self, seed):
        tri = make_triangle(seed=seed)
        back = destandardize(standardize(tri))
        for ij in tri.cells:
            assert back.cells[ij] == pytest.approx(tri.cells[ij], rel=1e-12)


class TestPairAndPortfolio:
    def test_pair_rejects_origin_mismatch(self):
        with pytest.raises(TriangleError, match="origin_count"):
            TrianglePair("X1", make_triangle(4), make_triangle(5, lob=LOB2))

    def test_portfolio_rejects_duplicate_ids(self):
        pair = TrianglePair("X1", make_triangle(), make_triangle(lob=LOB2, seed=1))
        with pytest.raises(TriangleError, match="duplicate"):
            PortfolioDataset(companies=(pair, pair))

    def test_portfolio_lookup(self):
        pair = TrianglePair("X1", make_triangle(), make_triangle(lob=LOB2, seed=1))
        data = PortfolioDataset(companies=(pair,))
        assert data.pair("X1") is pair
        with pytest.raises(KeyError):
            data.pair("nope")

    def test_true_reserve_equals_lower_sum(self):
        pair = TrianglePair(
            "X1", make_triangle(full=True, seed=5), make_triangle(full=True, lob=LOB2, seed=6)
        )
        r1, r2, total = true_reserve(pair)
        lower = lower_index_set(4)
        assert r1 == pytest.approx(sum(pair.lob1.cells[ij] for ij in lower))
        assert r2 == pytest.approx(sum(pair.lob2.cells[ij] for ij in lower))
        assert total == pytest.approx(r1 + r2)

    def test_true_reserve_needs_full_square(self):
        pair = TrianglePair("X1", make_triangle(), make_triangle(lob=LOB2, seed=1))
        with pytest.raises(TriangleError, match="incomplete"):
            true_reserve(pair)


class TestCsv:
    def test_bundled_pair_shape(self, real_data):
        assert len(real_data.companies) == 1
        pair = real_data.companies[0]
        assert pair.origin_count == 10
        assert frozenset(pair.lob1.cells) == upper_index_set(10)
        assert frozenset(pair.lob2.cells) == upper_index_set(10)
        assert len(pair.lob1.premiums) == 10
        assert pair.lob1.year_labels == tuple(range(1988, 1998))

    def test_bundled_pair_spot_values(self, real_pair):
        # first and last diagonal cells of the personal-auto triangle
        assert real_pair.lob1.cell(1, 1) == pytest.approx(1376384.0)
        assert real_pair.lob1.cell(10, 1) == pytest.approx(2206886.0)
        assert real_pair.lob2.cell(1, 1) == pytest.approx(33810.0)
        assert real_pair.lob1.premiums[0] == pytest.approx(4711333.0)

    def test_write_parse_round_trip(self, tmp_path, real_data):
        losses = tmp_path / "losses.csv"
        premiums = tmp_path / "premiums.csv"
        write_triangle_csv(real_data, str(losses), str(premiums))
        back = parse_triangle_csv(str(losses), str(premiums))
        for orig_pair, back_pair in zip(real_data.companies, back.companies):
            assert back_pair.company_id == orig_pair.company_id
            for lob in ("lob1", "lob2"):
                a, b = getattr(orig_pair, lob), getattr(back_pair, lob)
                assert frozenset(a.cells) == frozenset(b.cells)
                for ij in a.cells:
                    assert b.cells[ij] == pytest.approx(a.cells[ij], rel=1e-12)
                assert b.premiums == pytest.approx(a.premiums, rel=1e-12)

    def test_parse_rejects_bad_header(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("company,lob,year,dev,value\nX,personal_auto,1,1,1\n")
        with pytest.raises(TriangleError, match="header"):
            parse_triangle_csv(str(bad), str(bad))

    def test_parse_rejects_missing_premium_file_values(self, tmp_path, real_data):
        losses = tmp_path / "losses.csv"
        premiums = tmp_path / "premiums.csv"
        write_triangle_csv(real_data, str(losses), str(premiums))
        lines = premiums.read_text().splitlines()
        premiums.write_text("\n".join(lines[:-2]) + "\n")  # drop final accident years
        with pytest.raises(TriangleError):
            parse_triangle_csv(str(losses), str(premiums))
