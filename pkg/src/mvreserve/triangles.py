"""Loss-triangle data model: ingestion, validation, standardization, reserves.

An incremental loss triangle for one company and line of business holds
payments X_ij indexed by accident year i (row) and development year j
(column), both 1-based. Observed cells form the upper triangle
{(i, j): 1 <= i <= I, j <= I - i + 1}; a completed square additionally
holds the lower-triangle cells. Each accident year carries a positive
exposure (premium) w_i, and the standardized loss is Y_ij = X_ij / w_i.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping

LOB1 = "LOB1"
LOB2 = "LOB2"
LOBS = (LOB1, LOB2)


class TriangleError(ValueError):
    """Raised for malformed triangles, premiums, or triangle files."""


def upper_index_set(origin_count: int) -> frozenset[tuple[int, int]]:
    """Observed index set {(i, j): 1 <= i <= I, j <= I - i + 1}."""
    i_max = origin_count
    return frozenset(
        (i, j) for i in range(1, i_max + 1) for j in range(1, i_max - i + 2)
    )


def lower_index_set(origin_count: int) -> frozenset[tuple[int, int]]:
    """Future index set {(i, j): 2 <= i <= I, j >= I - i + 2}."""
    i_max = origin_count
    return frozenset(
        (i, j) for i in range(2, i_max + 1) for j in range(i_max - i + 2, i_max + 1)
    )


def full_index_set(origin_count: int) -> frozenset[tuple[int, int]]:
    """All I*I cell indices of a completed square."""
    i_max = origin_count
    return frozenset(
        (i, j) for i in range(1, i_max + 1) for j in range(1, i_max + 1)
    )


@dataclass(frozen=True)
class LossTriangle:
    """Incremental paid losses for one company and LOB.

    cells maps 1-based (accident year, development year) to monetary
    incremental paid loss; the index set must be exactly the upper
    triangle or exactly the full square. premiums has one positive
    entry per accident year. year_labels optionally keeps calendar
    accident-year labels as metadata.
    """

    company_id: str
    lob: str
    origin_count: int
    cells: Mapping[tuple[int, int], float]
    premiums: tuple[float, ...]
    year_labels: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.origin_count < 2:
            raise TriangleError(f"origin_count must be >= 2, got {self.origin_count}")
        if len(self.premiums) != self.origin_count:
            raise TriangleError(
                f"expected {self.origin_count} premiums, got {len(self.premiums)}"
            )
        if any(not w > 0 for w in self.premiums):
            raise TriangleError("premiums must be strictly positive")
        index_set = frozenset(self.cells)
        if index_set not in (upper_index_set(self.origin_count), full_index_set(self.origin_count)):
            missing = sorted(upper_index_set(self.origin_count) - index_set)
            extra = sorted(index_set - full_index_set(self.origin_count))
            raise TriangleError(
                f"cell index set is neither the upper triangle nor the full square "
                f"(company={self.company_id!r}, lob={self.lob}): "
                f"missing upper cells {missing[:5]}, out-of-range cells {extra[:5]}"
            )
        if self.year_labels is not None and len(self.year_labels) != self.origin_count:
            raise TriangleError("year_labels length must equal origin_count")

    @property
    def is_full_square(self) -> bool:
        return len(self.cells) == self.origin_count * self.origin_count

    def cell(self, i: int, j: int) -> float:
        return self.cells[(i, j)]

    def upper_only(self) -> "LossTriangle":
        """Drop lower-triangle cells, keeping only the observed part."""
        keep = upper_index_set(self.origin_count)
        return LossTriangle(
            company_id=self.company_id,
            lob=self.lob,
            origin_count=self.origin_count,
            cells={ij: v for ij, v in self.cells.items() if ij in keep},
            premiums=self.premiums,
            year_labels=self.year_labels,
        )


@dataclass(frozen=True)
class StandardizedTriangle:
    """Exposure-standardized triangle: values Y_ij = X_ij / w_i."""

    company_id: str
    lob: str
    origin_count: int
    cells: Mapping[tuple[int, int], float]
    premiums: tuple[float, ...]
    year_labels: tuple[int, ...] | None = None

    def cell(self, i: int, j: int) -> float:
        return self.cells[(i, j)]


def standardize(triangle: LossTriangle) -> StandardizedTriangle:
    """Divide each cell by its accident year's exposure."""
    if any(not w > 0 for w in triangle.premiums):
        raise TriangleError("cannot standardize with non-positive premiums")
    cells = {
        (i, j): x / triangle.premiums[i - 1] for (i, j), x in triangle.cells.items()
    }
    return StandardizedTriangle(
        company_id=triangle.company_id,
        lob=triangle.lob,
        origin_count=triangle.origin_count,
        cells=cells,
        premiums=triangle.premiums,
        year_labels=triangle.year_labels,
    )


def destandardize(std: StandardizedTriangle) -> LossTriangle:
    """Inverse of standardize: X_ij = Y_ij * w_i."""
    cells = {(i, j): y * std.premiums[i - 1] for (i, j), y in std.cells.items()}
    return LossTriangle(
        company_id=std.company_id,
        lob=std.lob,
        origin_count=std.origin_count,
        cells=cells,
        premiums=std.premiums,
        year_labels=std.year_labels,
    )


@dataclass(frozen=True)
class TrianglePair:
    """The two LOB triangles of one company."""

    company_id: str
    lob1: LossTriangle
    lob2: LossTriangle

    def __post_init__(self) -> None:
        if self.lob1.origin_count != self.lob2.origin_count:
            raise TriangleError(
                f"LOB triangles of company {self.company_id!r} disagree on origin_count"
            )

    @property
    def origin_count(self) -> int:
        return self.lob1.origin_count


@dataclass(frozen=True)
class PortfolioDataset:
    """Company-keyed triangle pairs sharing one origin count."""

    companies: tuple[TrianglePair, ...]

    def __post_init__(self) -> None:
        if not self.companies:
            raise TriangleError("dataset has no companies")
        ids = [p.company_id for p in self.companies]
        if len(set(ids)) != len(ids):
            raise TriangleError("duplicate company ids in dataset")
        counts = {p.origin_count for p in self.companies}
        if len(counts) != 1:
            raise TriangleError(f"companies disagree on origin_count: {sorted(counts)}")

    @property
    def origin_count(self) -> int:
        return self.companies[0].origin_count

    @property
    def company_ids(self) -> tuple[str, ...]:
        return tuple(p.company_id for p in self.companies)

    def pair(self, company_id: str) -> TrianglePair:
        for p in self.companies:
            if p.company_id == company_id:
                return p
        raise KeyError(company_id)


def true_reserve(pair: TrianglePair) -> tuple[float, float, float]:
    """Sum lower-triangle payments of a completed square pair.

    Returns (R1, R2, R1 + R2) where R_lob = sum over the lower index
    set of w_i * Y_ij = sum of the lower-triangle X_ij.
    """
    i_max = pair.origin_count
    lower = lower_index_set(i_max)
    totals = []
    for tri in (pair.lob1, pair.lob2):
        missing = lower - frozenset(tri.cells)
        if missing:
            raise TriangleError(
                f"lower triangle incomplete for {tri.company_id!r}/{tri.lob}: "
                f"missing {sorted(missing)[:5]}"
            )
        totals.append(sum(tri.cells[ij] for ij in sorted(lower)))
    r1, r2 = totals
    return r1, r2, r1 + r2


LONG_LOSS_HEADER = ["company", "lob", "accident_year", "dev_year", "value"]
PREMIUM_HEADER = ["company", "lob", "accident_year", "premium"]


def _read_rows(path: str, expected_header: list[str]) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TriangleError(
                f"{path}: empty file, expected header {','.join(expected_header)}"
            ) from None
        header = [h.strip() for h in header]
        if header[: len(expected_header)] != expected_header:
            raise TriangleError(
                f"{path}: bad header {header}, expected {expected_header}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < len(expected_header):
                raise TriangleError(f"{path}:{lineno}: too few columns: {row}")
            rows.append(dict(zip(expected_header, (c.strip() for c in row))))
        return rows


def _parse_number(text: str, path: str, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise TriangleError(f"{path}: non-numeric {what}: {text!r}") from None


def parse_triangle_csv(
    losses_path: str,
    premiums_path: str | None = None,
    schema: str = "long",
) -> PortfolioDataset:
    """Read a loss CSV (plus premium file for the long schema).

    Long schema: header company,lob,accident_year,dev_year,value with one
    row per observed cell, and a separate premium file with header
    company,lob,accident_year,premium. Wide schema: header
    company,lob,accident_year,premium,d1,...,dI with empty cells beyond
    the observed diagonal; premiums are inline so no premium file is read.
    Accident years may be calendar labels; they are mapped to 1-based
    indices in label order and kept as metadata.
    """
    if schema == "long":
        if premiums_path is None:
            raise TriangleError("long schema requires a premium file")
        return _parse_long(losses_path, premiums_path)
    if schema == "wide":
        return _parse_wide(losses_path)
    raise TriangleError(f"unknown schema {schema!r}, expected 'long' or 'wide'")


def _parse_long(losses_path: str, premiums_path: str) -> PortfolioDataset:
    loss_rows = _read_rows(losses_path, LONG_LOSS_HEADER)
    prem_rows = _read_rows(premiums_path, PREMIUM_HEADER)
    if not loss_rows:
        raise TriangleError(f"{losses_path}: no data rows")

    years: dict[tuple[str, str], set[int]] = {}
    for r in loss_rows:
        key = (r["company"], r["lob"])
        years.setdefault(key, set()).add(
            int(_parse_number(r["accident_year"], losses_path, "accident_year"))
        )

    cells: dict[tuple[str, str], dict[tuple[int, int], float]] = {}
    labels: dict[tuple[str, str], tuple[int, ...]] = {}
    for key, ys in years.items():
        labels[key] = tuple(sorted(ys))
    for r in loss_rows:
        key = (r["company"], r["lob"])
        year = int(_parse_number(r["accident_year"], losses_path, "accident_year"))
        i = labels[key].index(year) + 1
        j = int(_parse_number(r["dev_year"], losses_path, "dev_year"))
        value = _parse_number(r["value"], losses_path, "value")
        tri = cells.setdefault(key, {})
        if (i, j) in tri:
            raise TriangleError(
                f"{losses_path}: duplicate cell company={key[0]!r} lob={key[1]} "
                f"accident_year={year} dev_year={j}"
            )
        tri[(i, j)] = value

    premiums: dict[tuple[str, str], dict[int, float]] = {}
    for r in prem_rows:
        key = (r["company"], r["lob"])
        year = int(_parse_number(r["accident_year"], premiums_path, "accident_year"))
        w = _parse_number(r["premium"], premiums_path, "premium")
        if not w > 0:
            raise TriangleError(
                f"{premiums_path}: non-positive premium {w} for "
                f"company={key[0]!r} lob={key[1]} accident_year={year}"
            )
        premiums.setdefault(key, {})[year] = w

    return _assemble(cells, labels, premiums, losses_path)


def _parse_wide(path: str) -> PortfolioDataset:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise TriangleError(f"{path}: empty file, expected header "
                                "company,lob,accident_year,premium,d1,...") from None
        fixed = ["company", "lob", "accident_year", "premium"]
        if header[:4] != fixed or len(header) < 5:
            raise TriangleError(f"{path}: bad wide header {header}")
        dev_count = len(header) - 4
        rows = [row for row in reader if row and any(c.strip() for c in row)]

    cells: dict[tuple[str, str], dict[tuple[int, int], float]] = {}
    labels_seen: dict[tuple[str, str], list[int]] = {}
    premiums: dict[tuple[str, str], dict[int, float]] = {}
    for row in rows:
        company, lob = row[0].strip(), row[1].strip()
        key = (company, lob)
        year = int(_parse_number(row[2], path, "accident_year"))
        labels_seen.setdefault(key, []).append(year)
        w = _parse_number(row[3], path, "premium")
        if not w > 0:
            raise TriangleError(f"{path}: non-positive premium {w} for {key}")
        premiums.setdefault(key, {})[year] = w
    labels = {key: tuple(sorted(ys)) for key, ys in labels_seen.items()}
    for row in rows:
        key = (row[0].strip(), row[1].strip())
        year = int(_parse_number(row[2], path, "accident_year"))
        i = labels[key].index(year) + 1
        tri = cells.setdefault(key, {})
        for j in range(1, dev_count + 1):
            text = row[3 + j].strip() if 3 + j < len(row) else ""
            if text:
                tri[(i, j)] = _parse_number(text, path, "value")
    return _assemble(cells, labels, premiums, path)


def _assemble(
    cells: dict[tuple[str, str], dict[tuple[int, int], float]],
    labels: dict[tuple[str, str], tuple[int, ...]],
    premiums: dict[tuple[str, str], dict[int, float]],
    path: str,
) -> PortfolioDataset:
    companies = sorted({c for c, _ in cells})
    pairs = []
    for company in companies:
        tris = {}
        for lob in LOBS:
            key = (company, lob)
            if key not in cells:
                raise TriangleError(f"{path}: company {company!r} is missing {lob} cells")
            if key not in premiums:
                raise TriangleError(f"{path}: company {company!r} has no {lob} premiums")
            year_labels = labels[key]
            i_max = len(year_labels)
            missing_prem = [y for y in year_labels if y not in premiums[key]]
            if missing_prem:
                raise TriangleError(
                    f"{path}: missing premium for company {company!r} lob={lob} "
                    f"accident years {missing_prem}"
                )
            tris[lob] = LossTriangle(
                company_id=company,
                lob=lob,
                origin_count=i_max,
                cells=cells[key],
                premiums=tuple(premiums[key][y] for y in year_labels),
                year_labels=year_labels,
            )
        pairs.append(TrianglePair(company_id=company, lob1=tris[LOB1], lob2=tris[LOB2]))
    return PortfolioDataset(companies=tuple(pairs))


def write_triangle_csv(
    dataset: PortfolioDataset, losses_path: str, premiums_path: str
) -> None:
    """Write a dataset in the canonical long schema (plus premium file)."""
    with open(losses_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(LONG_LOSS_HEADER)
        for pair in dataset.companies:
            for tri in (pair.lob1, pair.lob2):
                years = tri.year_labels or tuple(range(1, tri.origin_count + 1))
                for (i, j) in sorted(tri.cells):
                    writer.writerow(
                        [tri.company_id, tri.lob, years[i - 1], j, repr(tri.cells[(i, j)])]
                    )
    with open(premiums_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PREMIUM_HEADER)
        for pair in dataset.companies:
            for tri in (pair.lob1, pair.lob2):
                years = tri.year_labels or tuple(range(1, tri.origin_count + 1))
                for idx, year in enumerate(years):
                    writer.writerow([tri.company_id, tri.lob, year, repr(tri.premiums[idx])])


def standardized_pair(pair: TrianglePair) -> tuple[StandardizedTriangle, StandardizedTriangle]:
    """Standardize both triangles of a pair."""
    return standardize(pair.lob1), standardize(pair.lob2)
