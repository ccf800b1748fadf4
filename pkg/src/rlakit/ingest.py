"""Normalize messy EMS exports into the canonical election file.

Real EMS exports arrive with repeated headers mid-file, rows whose cells
do not line up, and numbers like "1,234".  The repair rules here handle
exactly those pathologies, in a fixed order, and log every change:

  1. REPEATED_HEADER   — drop rows identical to the header row;
  2. TRAILING_EMPTY    — re-align rows whose cell count differs from the
                         header only by trailing empty cells;
  3. THOUSANDS_SEP     — strip digit-group commas and stray whitespace
                         inside numeric cells;
  4. NON_NUMERIC_TALLY — reject (never guess) rows whose mapped numeric
                         cells still fail to parse.

Column mapping is explicit configuration, not inference: an audit needs
the same input to produce the same canonical file every time, and a
wrong guess here would fabricate election data.  Every output cell
traces to an input line recorded in the report.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field

from .model import (
    Batch,
    Contest,
    ModelError,
    Rule,
    encode_election,
    validate_contest,
)
from .exact import parse_frac

CSV_GENERIC = "CSV_GENERIC"
REPORT_TEXT = "REPORT_TEXT"


class IngestError(ModelError):
    pass


@dataclass(frozen=True)
class RawExport:
    data: bytes
    dialect: str = CSV_GENERIC


@dataclass
class IngestReport:
    rows_read: int = 0
    rows_clean: int = 0
    rows_repaired: int = 0
    rows_dropped: int = 0
    repairs: list[tuple[int, str, str]] = field(default_factory=list)
    sources: dict[str, int] = field(default_factory=dict)  # batch id -> input line
    checksum: str = ""

    def log(self, line: int, rule: str, description: str):
        self.repairs.append((line, rule, description))

    def to_json(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_clean": self.rows_clean,
            "rows_repaired": self.rows_repaired,
            "rows_dropped": self.rows_dropped,
            "repairs": [{"line": l, "rule": r, "description": d} for l, r, d in self.repairs],
            "sources": dict(sorted(self.sources.items())),
            "checksum": self.checksum,
        }


@dataclass(frozen=True)
class Mapping:
    """Explicit column mapping plus the contest header the export lacks.

    `append_mode_suffix` namespaces raw precinct ids by mode (precinct
    100037 counted in the polling place and by mail are two batches);
    turn it off when the id column is already canonical."""

    contest: dict
    columns: dict
    dialect: str = CSV_GENERIC
    mode_map: dict[str, str] = field(default_factory=dict)
    fields: dict[str, tuple[int, int]] = field(default_factory=dict)  # REPORT_TEXT spans
    append_mode_suffix: bool = True

    @staticmethod
    def from_json(obj: dict) -> "Mapping":
        return Mapping(
            contest=obj["contest"],
            columns=obj["columns"],
            dialect=obj.get("dialect", CSV_GENERIC),
            mode_map=obj.get("mode_map", {}),
            fields={k: (int(v[0]), int(v[1])) for k, v in obj.get("fields", {}).items()},
            append_mode_suffix=bool(obj.get("append_mode_suffix", True)),
        )

    @staticmethod
    def from_file(path: str) -> "Mapping":
        with open(path, encoding="utf-8") as fh:
            return Mapping.from_json(json.load(fh))


def _strip_number(cell: str) -> tuple[str, bool]:
    """Remove whitespace and digit-group commas; report whether anything
    changed.  '1,234' -> '1234' but 'a,b' is left alone."""
    stripped = cell.strip()
    candidate = stripped.replace(",", "")
    if candidate.isdigit() and candidate != stripped:
        return candidate, True
    return stripped, stripped != cell


def _rows_from_csv(data: bytes) -> list[tuple[int, list[str]]]:
    text = data.decode("utf-8-sig", errors="replace")
    reader = csv.reader(io.StringIO(text))
    return [(i + 1, row) for i, row in enumerate(reader) if any(c.strip() for c in row)]


def _rows_from_report_text(data: bytes, mapping: Mapping) -> tuple[list[str], list[tuple[int, list[str]]]]:
    """Fixed-width report: the mapping's field spans cut each line into
    pseudo-cells in a canonical column order."""
    if not mapping.fields:
        raise IngestError("UNRECOVERABLE_LAYOUT", "REPORT_TEXT input needs field spans in the mapping")
    names = sorted(mapping.fields)
    rows: list[tuple[int, list[str]]] = []
    for i, line in enumerate(data.decode("utf-8", errors="replace").splitlines()):
        if not line.strip():
            continue
        cells = [line[a:b].strip() for a, b in (mapping.fields[n] for n in names)]
        rows.append((i + 1, cells))
    return names, rows


def normalize(raw: RawExport, mapping: Mapping) -> tuple[Contest, IngestReport]:
    report = IngestReport()
    cols = mapping.columns

    if raw.dialect == REPORT_TEXT or mapping.dialect == REPORT_TEXT:
        header, all_rows = _rows_from_report_text(raw.data, mapping)
        # the first row repeating the column names is the header line
        data_rows = [(ln, row) for ln, row in all_rows if row != header]
        header_row = header
    else:
        all_rows = _rows_from_csv(raw.data)
        if not all_rows:
            raise IngestError("UNRECOVERABLE_LAYOUT", "no rows in input")
        header_row = [c.strip() for c in all_rows[0][1]]
        data_rows = all_rows[1:]
        header = header_row

    if not data_rows:
        raise IngestError("UNRECOVERABLE_LAYOUT", "no data rows in input")

    index = {name: i for i, name in enumerate(header)}
    needed = [cols["batch_id"], cols["mode"], cols["ballots"], *cols["tallies"].values()]
    missing = [c for c in needed if c not in index]
    if missing:
        raise IngestError("UNRECOVERABLE_LAYOUT", f"mapped columns not in header: {', '.join(missing)}")

    batches: dict[str, Batch] = {}
    kept = 0
    for line_no, row in data_rows:
        report.rows_read += 1
        repaired = False

        cells = [c.strip() for c in row]
        if cells == header_row:
            report.rows_dropped += 1
            report.log(line_no, "REPEATED_HEADER", "dropped header row repeated mid-file")
            continue

        if len(cells) != len(header_row):
            trimmed = list(cells)
            while len(trimmed) > len(header_row) and trimmed[-1] == "":
                trimmed.pop()
            while len(trimmed) < len(header_row):
                trimmed.append("")
            if len(trimmed) != len(header_row):
                report.rows_dropped += 1
                report.log(line_no, "CELL_COUNT", f"row has {len(cells)} cells, header has {len(header_row)}")
                continue
            cells = trimmed
            repaired = True
            report.log(line_no, "TRAILING_EMPTY", "re-aligned row by trailing empty cells")

        def cell(name: str) -> str:
            return cells[index[name]]

        numeric: dict[str, int | None] = {}
        bad_cell = None
        for label, col in [("ballots", cols["ballots"])] + [(cand, c) for cand, c in cols["tallies"].items()]:
            value, changed = _strip_number(cell(col))
            if changed and value.isdigit():
                repaired = True
                report.log(line_no, "THOUSANDS_SEP", f"normalized numeric cell {col!r}")
            if value == "" and label != "ballots":
                numeric[label] = None  # possibly a subtotal-less deck row
                continue
            if not value.isdigit():
                bad_cell = (col, cell(col))
                break
            numeric[label] = int(value)
        if bad_cell is not None:
            report.rows_dropped += 1
            report.log(line_no, "NON_NUMERIC_TALLY", f"rejected row: column {bad_cell[0]!r} = {bad_cell[1]!r}")
            continue

        tally_values = {cand: numeric[cand] for cand in cols["tallies"]}
        if any(v is None for v in tally_values.values()) and not all(v is None for v in tally_values.values()):
            report.rows_dropped += 1
            report.log(line_no, "NON_NUMERIC_TALLY", "rejected row: some but not all tally cells empty")
            continue

        raw_mode = cell(cols["mode"])
        mode = mapping.mode_map.get(raw_mode, raw_mode)
        raw_id = cell(cols["batch_id"])
        stratum = cell(cols["stratum"]) if "stratum" in cols and cols["stratum"] in index else mode
        batch_id = raw_id
        if mapping.append_mode_suffix and not raw_id.endswith(f"-{mode}"):
            batch_id = f"{raw_id}-{mode}"
        if batch_id in batches:
            raise IngestError("DUPLICATE_BATCH", f"two cleaned rows claim batch ({raw_id}, {mode})")

        subtotals = None
        if all(v is not None for v in tally_values.values()):
            subtotals = {cand: int(v) for cand, v in tally_values.items()}  # type: ignore[arg-type]
        batches[batch_id] = Batch(
            id=batch_id, mode=mode, stratum=stratum, ballots=int(numeric["ballots"]), subtotals=subtotals
        )
        report.sources[batch_id] = line_no
        kept += 1
        if repaired:
            report.rows_repaired += 1
        else:
            report.rows_clean += 1

    if kept * 2 < report.rows_read:
        raise IngestError("UNRECOVERABLE_LAYOUT", f"only {kept} of {report.rows_read} data rows usable after repair")

    cdoc = mapping.contest
    contest = Contest(
        id=cdoc["id"],
        title=cdoc.get("title", cdoc["id"]),
        rule=Rule.from_json(cdoc["rule"]),
        candidates=tuple(cdoc["candidates"]),
        batches=tuple(batches[b] for b in sorted(batches)),
        eligible_fraction=parse_frac(cdoc.get("eligible_fraction", "1")),
        reported_totals={k: int(v) for k, v in cdoc["reported_totals"].items()}
        if "reported_totals" in cdoc else None,
    )
    findings = validate_contest(contest)
    if findings:
        raise IngestError(
            "INVALID_OUTPUT", "; ".join(f"{f.code}@{f.where}" for f in findings)
        )
    report.checksum = hashlib.sha256(encode_election(contest).encode()).hexdigest()
    return contest, report


def diff_totals(contest: Contest, ems_summary: dict[str, int]) -> list[tuple[str, int]]:
    """Per-candidate delta between the canonical sums and an EMS summary:
    canonical minus summary, empty iff they agree."""
    totals = contest.totals()
    unknown = [c for c in ems_summary if c not in contest.candidates]
    if unknown:
        raise IngestError("UNKNOWN_CANDIDATE", ", ".join(sorted(unknown)))
    out = []
    for cand in sorted(ems_summary):
        delta = totals.get(cand, 0) - ems_summary[cand]
        if delta:
            out.append((cand, delta))
    return out


def export_csv(contest: Contest) -> str:
    """Canonical CSV re-export; normalizing it again is a fixed point."""
    header = ["batch_id", "mode", "stratum", "ballots", *contest.candidates]
    lines = [",".join(header)]
    for b in sorted(contest.batches, key=lambda b: b.id):
        tallies = ["" if b.subtotals is None else str(b.subtotals.get(c, 0)) for c in contest.candidates]
        lines.append(",".join([b.id, b.mode, b.stratum, str(b.ballots), *tallies]))
    return "\n".join(lines) + "\n"


def canonical_mapping(contest: Contest) -> Mapping:
    """Mapping that reads export_csv output back into the same contest."""
    cdoc = contest.to_json()
    return Mapping(
        contest=cdoc,
        columns={
            "batch_id": "batch_id",
            "mode": "mode",
            "stratum": "stratum",
            "ballots": "ballots",
            "tallies": {c: c for c in contest.candidates},
        },
        append_mode_suffix=False,
    )
