"""Reference fixtures: four 2008 California pilot audits.

The published per-batch tables for the audited samples are embedded
verbatim.  Where a pilot's county-wide batch data was never published
(Yolo's other 108 batches, Marin Measure B's 530, Santa Cruz's 136),
the remainder is synthesized to match every published aggregate: total
ballots, county vote totals, margins, batch counts, the exempt-stratum
boundary and the planner outputs.  Builders assert those aggregates at
construction, so a drifting fixture fails loudly.

Synthetic completions make total error bounds (and expected-work
figures that depend on them) fixture-specific: the pilots' published
expected-work numbers are not reproducible without the unpublished
county-wide bound data.
"""

from __future__ import annotations

from fractions import Fraction

from .model import (
    MAJORITY,
    PLURALITY,
    SUPERMAJORITY,
    Batch,
    Contest,
    HandCount,
    Rule,
    validate_contest,
)

# ---------------------------------------------------------------------------
# Marin Measure A (February 2008): 2/3 supermajority school parcel tax.
# Complete election: all 18 batches were published.

# (batch id, mode, stratum, ballots, yes, no, audited)
_MARIN_A_ROWS = [
    ("2001-IP", "IP", "IP", 391, 278, 101, True),
    ("2001-VBM", "VBM", "VBM", 657, 438, 193, False),
    ("2004-IP", "IP", "IP", 284, 204, 66, True),
    ("2004-VBM", "VBM", "VBM", 389, 257, 116, True),
    ("2010-VBM", "VBM", "VBM-SMALL", 6, 4, 2, False),
    ("2012-IP", "IP", "IP", 218, 167, 43, True),
    ("2012-VBM", "VBM", "VBM", 342, 242, 89, False),
    ("2014-IP", "IP", "IP", 299, 214, 75, False),
    ("2014-VBM", "VBM", "VBM", 420, 306, 95, True),
    ("2015-IP", "IP", "IP", 217, 167, 44, True),
    ("2015-VBM", "VBM", "VBM", 483, 332, 131, True),
    ("2019-IP", "IP", "IP", 295, 215, 70, True),
    ("2019-VBM", "VBM", "VBM", 567, 395, 160, True),
    ("2101-IP", "IP", "IP", 265, 169, 79, False),
    ("2101-VBM", "VBM", "VBM", 439, 275, 133, True),
    ("2102-IP", "IP", "IP", 223, 144, 68, True),
    ("2102-VBM", "VBM", "VBM", 410, 233, 142, True),
    ("ALL-PRO", "PROVISIONAL", "PRO", 252, 176, 54, False),
]

# Published worst-case bounds in votes (rounded up for display).
MARIN_A_BOUNDS = {
    "2001-IP": 286, "2001-VBM": 456, "2004-IP": 214, "2004-VBM": 268,
    "2010-VBM": 4, "2012-IP": 173, "2012-VBM": 250, "2014-IP": 221,
    "2014-VBM": 319, "2015-IP": 171, "2015-VBM": 346, "2019-IP": 222,
    "2019-VBM": 403, "2101-IP": 181, "2101-VBM": 296, "2102-IP": 152,
    "2102-VBM": 257, "ALL-PRO": 191,
}

MARIN_A_MARGIN = 298
MARIN_A_ALLOWANCE = 4
MARIN_A_AUDITED_BALLOTS = 4336


def marin_measure_a() -> Contest:
    batches = [
        Batch(bid, mode, stratum, ballots, {"YES": yes, "NO": no})
        for bid, mode, stratum, ballots, yes, no, _ in _MARIN_A_ROWS
    ]
    contest = Contest(
        id="marin-2008-measure-a",
        title="Kentfield School District Measure A",
        rule=Rule(SUPERMAJORITY, fraction=Fraction(2, 3)),
        candidates=("YES", "NO"),
        batches=tuple(batches),
    )
    assert not validate_contest(contest)
    totals = contest.totals()
    assert (totals["YES"], totals["NO"]) == (4216, 1661)
    assert contest.total_ballots() == 6157
    return contest


def marin_a_audited_ids() -> list[str]:
    return [r[0] for r in _MARIN_A_ROWS if r[6]]


def marin_a_hand_counts(ts: str = "2008-02-20T17:00:00Z") -> list[HandCount]:
    """Hand tallies: two small discrepancies (2 No overcounted as Yes in
    2001-IP; 2 extra No found in 2102-VBM), everything else exact.  No
    batch overstates the margin by more than the 4-vote allowance."""
    tweaks = {"2001-IP": (276, 103), "2102-VBM": (233, 144)}
    out = []
    for bid, _, _, ballots, yes, no, audited in _MARIN_A_ROWS:
        if not audited:
            continue
        y, n = tweaks.get(bid, (yes, no))
        out.append(HandCount(bid, ballots, {"YES": y, "NO": n}, "tally-team", ts))
    return out


# ---------------------------------------------------------------------------
# Yolo Measure W (November 2008): simple-majority school parcel tax.
# 57 precincts x {IP, VBM} = 114 batches; the six sampled batches were
# published, the rest are synthesized against the county aggregates.

_YOLO_SAMPLED = [
    ("100037-IP", "IP", 396, 285, 87),
    ("100039-VBM", "VBM", 435, 337, 82),
    ("100051-IP", "IP", 443, 280, 123),
    ("100056-IP", "IP", 284, 209, 56),
    ("100060-IP", "IP", 671, 483, 153),
    ("100063-VBM", "VBM", 356, 257, 65),
]

YOLO_BOUNDS = {
    "100037-IP": 594, "100039-VBM": 690, "100051-IP": 600,
    "100056-IP": 437, "100060-IP": 1001, "100063-VBM": 548,
}

YOLO_MARGIN = 17179
YOLO_ALLOWANCE = 5
YOLO_EXEMPT_THRESHOLD = 5
YOLO_AUDITED_BALLOTS = 2585


def yolo_measure_w() -> Contest:
    sampled_ids = {bid for bid, *_ in _YOLO_SAMPLED}
    batches = [
        Batch(bid, mode, mode, ballots, {"YES": yes, "NO": no})
        for bid, mode, ballots, yes, no in _YOLO_SAMPLED
    ]
    # 108 synthetic batches: 11 tiny ones under the 5-vote exemption
    # threshold, 23 large ones that set the worst-case count b*, and 74
    # mid-sized ones.  Totals reconcile to the county aggregates.
    synth: list[tuple[int, int, int]] = []
    synth += [(3, 2, 0)] * 11                       # bound 5 each
    synth += [(450, 320, 42)] * 23                  # bound 728 each
    synth += [(317, 218, 89)] * 6 + [(317, 217, 89)] * 60 + [(316, 217, 89)] * 8

    # 57 precincts, each with one IP and one VBM batch; published batches
    # occupy their own precinct+mode slots.
    precincts = sorted({bid.split("-")[0] for bid in sampled_ids} | {f"1001{i:02d}" for i in range(51)})
    slots = [
        f"{p}-{mode}"
        for p in precincts
        for mode in ("IP", "VBM")
        if f"{p}-{mode}" not in sampled_ids
    ]
    assert len(slots) == len(synth)
    for slot, (ballots, yes, no) in zip(slots, synth):
        mode = slot.split("-")[1]
        batches.append(Batch(slot, mode, mode, ballots, {"YES": yes, "NO": no}))

    contest = Contest(
        id="yolo-2008-measure-w",
        title="Davis Joint Unified School District Measure W",
        rule=Rule(MAJORITY),
        candidates=("YES", "NO"),
        batches=tuple(batches),
    )
    assert not validate_contest(contest)
    totals = contest.totals()
    assert (totals["YES"], totals["NO"]) == (25297, 8118)
    assert contest.total_ballots() == 36418
    assert len(contest.batches) == 114
    return contest


def yolo_sampled_ids() -> list[str]:
    return [bid for bid, *_ in _YOLO_SAMPLED]


def yolo_hand_counts(ts: str = "2008-11-24T16:00:00Z") -> list[HandCount]:
    """One single-vote overstatement and one single-vote understatement."""
    tweaks = {"100037-IP": (284, 87), "100051-IP": (280, 122)}
    out = []
    for bid, _, ballots, yes, no in _YOLO_SAMPLED:
        y, n = tweaks.get(bid, (yes, no))
        out.append(HandCount(bid, ballots, {"YES": y, "NO": n}, "yolo-rov", ts))
    return out


# ---------------------------------------------------------------------------
# Marin Measure B (November 2008): simple-majority county measure.
# 355 VBM decks (ballot counts only) + 189 polling-place batches.
# The 14 sampled batches were published; county-wide batch data was not.

_MARIN_B_DECKS = [
    ("031-VBM", 91), ("043-VBM", 108), ("104-VBM", 40), ("191-VBM", 217),
    ("255-VBM", 246), ("286-VBM", 258), ("301-VBM", 245), ("339-VBM", 248),
]

_MARIN_B_IP = [
    ("1002-IP", 316, 151, 110),
    ("1017-IP", 362, 186, 133),
    ("3013-IP", 277, 125, 102),
    ("3014-IP", 498, 256, 152),
    ("3017-IP", 318, 154, 111),
    ("3020-IP", 123, 64, 39),
]

# Published u_p, to three decimals.
MARIN_B_UP = {
    "031-VBM": "0.009", "043-VBM": "0.011", "104-VBM": "0.004", "191-VBM": "0.022",
    "255-VBM": "0.025", "286-VBM": "0.026", "301-VBM": "0.025", "339-VBM": "0.025",
    "1002-IP": "0.018", "1017-IP": "0.021", "3013-IP": "0.015", "3014-IP": "0.030",
    "3017-IP": "0.018", "3020-IP": "0.007",
}

MARIN_B_MARGIN = 19792
MARIN_B_DRAWS = 14
MARIN_B_TAINT_THRESHOLD = Fraction(38, 1000)
MARIN_B_AUDITED_BALLOTS = 3347


def marin_measure_b() -> Contest:
    batches = [Batch(bid, "DECK", "VBM-DECK", ballots) for bid, ballots in _MARIN_B_DECKS]
    batches += [
        Batch(bid, "IP", "IP", ballots, {"YES": yes, "NO": no})
        for bid, ballots, yes, no in _MARIN_B_IP
    ]
    # 347 synthetic decks summing to 64,547 ballots (66,000 VBM total).
    deck_sizes = [186] * 342 + [187] * 5
    batches += [Batch(f"{400 + i}-VBM", "DECK", "VBM-DECK", b) for i, b in enumerate(deck_sizes)]
    # 183 synthetic polling-place batches: 53,401 ballots, Yes-No = 8,311.
    ip_rows = [(292, 156, 110)] * 76 + [(292, 155, 110)] * 72 + [(291, 155, 110)] * 35
    batches += [
        Batch(f"{4001 + i}-IP", "IP", "IP", b, {"YES": y, "NO": n})
        for i, (b, y, n) in enumerate(ip_rows)
    ]
    contest = Contest(
        id="marin-2008-measure-b",
        title="Marin County Measure B",
        rule=Rule(MAJORITY),
        candidates=("YES", "NO"),
        batches=tuple(batches),
        reported_totals={"YES": 61839, "NO": 42047},
    )
    assert not validate_contest(contest)
    assert contest.total_ballots() == 121295
    assert len(contest.batches) == 544
    assert sum(1 for b in contest.batches if b.subtotals is None) == 355
    return contest


def marin_b_sampled_ids() -> list[str]:
    return [bid for bid, _ in _MARIN_B_DECKS] + [bid for bid, *_ in _MARIN_B_IP]


def marin_b_deck_reveals() -> dict[str, dict[str, int]]:
    """Per-deck reported subtotals extracted from the EMS after the draw
    (the decks' breakdowns are not in the canonical results)."""
    shares = {
        "031-VBM": (49, 30), "043-VBM": (58, 36), "104-VBM": (22, 13), "191-VBM": (117, 72),
        "255-VBM": (133, 81), "286-VBM": (139, 85), "301-VBM": (132, 81), "339-VBM": (134, 82),
    }
    return {bid: {"YES": y, "NO": n} for bid, (y, n) in shares.items()}


def marin_b_hand_counts(ts: str = "2008-11-21T15:00:00Z") -> list[HandCount]:
    """The audit found no errors: hand counts match the reported data."""
    reveals = marin_b_deck_reveals()
    out = []
    for bid, ballots in _MARIN_B_DECKS:
        out.append(HandCount(bid, ballots, dict(reveals[bid]), "marin-rov", ts))
    for bid, ballots, yes, no in _MARIN_B_IP:
        out.append(HandCount(bid, ballots, {"YES": yes, "NO": no}, "marin-rov", ts))
    return out


# ---------------------------------------------------------------------------
# Santa Cruz County Supervisor, 1st District (November 2008): plurality,
# Leopold vs Danner with aggregated write-ins.  76 precincts x {IP, VBM};
# the 16 sampled batches (19 PPEB draws, three taken twice) were published.

# (batch id, ballots, reported L, reported D, actual L, actual D, times)
_SANTA_CRUZ_SAMPLED = [
    ("1002-VBM", 573, 251, 227, 252, 227, 1),
    ("1005-IP", 556, 292, 166, 304, 170, 1),
    ("1005-VBM", 436, 208, 150, 208, 150, 1),
    ("1007-IP", 692, 367, 205, 382, 216, 1),
    ("1007-VBM", 630, 311, 240, 311, 240, 1),
    ("1013-VBM", 557, 261, 216, 261, 216, 2),
    ("1017-VBM", 399, 191, 139, 191, 139, 1),
    ("1019-IP", 448, 218, 128, 223, 137, 1),
    ("1019-VBM", 378, 186, 128, 186, 128, 1),
    ("1027-VBM", 232, 107, 98, 107, 98, 1),
    ("1028-VBM", 365, 136, 174, 137, 174, 1),
    ("1037-VBM", 758, 261, 309, 261, 309, 2),
    ("1053-VBM", 18, 10, 4, 10, 4, 1),
    ("1060-IP", 322, 142, 105, 145, 108, 2),
    ("1073-VBM", 20, 11, 3, 11, 4, 1),
    ("1101-IP", 721, 312, 275, 321, 279, 1),
]

SANTA_CRUZ_UP = {
    "1002-VBM": "0.28", "1005-IP": "0.32", "1005-VBM": "0.23", "1007-IP": "0.40",
    "1007-VBM": "0.33", "1013-VBM": "0.28", "1017-VBM": "0.21", "1019-IP": "0.25",
    "1019-VBM": "0.20", "1027-VBM": "0.11", "1028-VBM": "0.15", "1037-VBM": "0.33",
    "1053-VBM": "0.01", "1060-IP": "0.17", "1073-VBM": "0.01", "1101-IP": "0.35",
}

SANTA_CRUZ_MOV = {
    "1002-VBM": -1, "1005-IP": -8, "1005-VBM": 0, "1007-IP": -4, "1007-VBM": 0,
    "1013-VBM": 0, "1017-VBM": 0, "1019-IP": 4, "1019-VBM": 0, "1027-VBM": 0,
    "1028-VBM": -1, "1037-VBM": 0, "1053-VBM": 0, "1060-IP": 0, "1073-VBM": 1,
    "1101-IP": -5,
}

SANTA_CRUZ_TAINTS = {
    "1002-VBM": "-0.002", "1005-IP": "-0.012", "1005-VBM": "0.000", "1007-IP": "-0.005",
    "1007-VBM": "0.000", "1013-VBM": "0.000", "1017-VBM": "0.000", "1019-IP": "0.007",
    "1019-VBM": "0.000", "1027-VBM": "0.000", "1028-VBM": "-0.003", "1037-VBM": "0.000",
    "1053-VBM": "0.000", "1060-IP": "0.000", "1073-VBM": "0.036", "1101-IP": "-0.007",
}

SANTA_CRUZ_MARGIN = 2139
SANTA_CRUZ_DRAWS = 19
SANTA_CRUZ_TAINT_THRESHOLD = Fraction(47, 1000)
SANTA_CRUZ_AUDITED_BALLOTS = 7105


def santa_cruz_supervisor() -> Contest:
    sampled_ids = {row[0] for row in _SANTA_CRUZ_SAMPLED}
    # The EMS reported no per-batch write-in breakdown, so sampled-batch
    # subtotals carry the two main contenders only; the write-in aggregate
    # lives in the synthetic remainder.  Only the Leopold-Danner pair is
    # auditable in these batches, exactly as in the published table.
    batches = [
        Batch(bid, bid.split("-")[1], bid.split("-")[1], ballots,
              {"LEOPOLD": rl, "DANNER": rd})
        for bid, ballots, rl, rd, _al, _ad, _times in _SANTA_CRUZ_SAMPLED
    ]
    # 136 synthetic batches reconciling to the county aggregates
    # (26,655 ballots; Leopold 12,103, Danner 9,964, write-ins 103).
    synth_b = [144] * 102 + [143] * 34
    synth_l = [64] + [65] * 135
    synth_d = [55] * 53 + [54] * 83
    synth_w = [1] * 103 + [0] * 33

    precincts = sorted({bid.split("-")[0] for bid in sampled_ids} | {f"12{i:02d}" for i in range(63)})
    slots = [
        f"{p}-{mode}"
        for p in precincts
        for mode in ("IP", "VBM")
        if f"{p}-{mode}" not in sampled_ids
    ]
    assert len(slots) == 136
    for slot, b, l, d, w in zip(slots, synth_b, synth_l, synth_d, synth_w):
        mode = slot.split("-")[1]
        batches.append(Batch(slot, mode, mode, b, {"LEOPOLD": l, "DANNER": d, "WRITEIN": w}))

    contest = Contest(
        id="santa-cruz-2008-supervisor-d1",
        title="Santa Cruz County Supervisor, 1st District",
        rule=Rule(PLURALITY, winners=1),
        candidates=("LEOPOLD", "DANNER", "WRITEIN"),
        batches=tuple(batches),
    )
    assert not validate_contest(contest)
    totals = contest.totals()
    assert (totals["LEOPOLD"], totals["DANNER"], totals["WRITEIN"]) == (12103, 9964, 103)
    assert contest.total_ballots() == 26655
    assert len(contest.batches) == 152
    return contest


def santa_cruz_times() -> dict[str, int]:
    return {row[0]: row[6] for row in _SANTA_CRUZ_SAMPLED}


def santa_cruz_selections() -> list[str]:
    """The 19 draws in batch-id order, repeats adjacent."""
    out: list[str] = []
    for row in _SANTA_CRUZ_SAMPLED:
        out.extend([row[0]] * row[6])
    return out


def santa_cruz_hand_counts(ts: str = "2008-11-26T12:00:00Z") -> list[HandCount]:
    return [
        HandCount(bid, ballots, {"LEOPOLD": al, "DANNER": ad}, "sc-clerk", ts)
        for bid, ballots, _rl, _rd, al, ad, _times in _SANTA_CRUZ_SAMPLED
    ]


# ---------------------------------------------------------------------------
# Complete fixture sessions.  The 2008 selections were made with dice and
# tooling whose internals were never published, so the draws here are
# recorded as external events listing the published samples verbatim;
# everything downstream (bounds, taints, verdicts) is recomputed by the
# engine.  Timestamps are fixed, so a rebuilt log is byte-identical.


def _submit_counts(session, hand_counts, ts):
    for hc in hand_counts:
        for entered_by in ("counter-1", "counter-2"):
            payload = hc.to_json()
            payload["entered_by"] = entered_by
            session.append("count", {"count": payload}, entered_by, ts)


def build_pilot_session(name: str):
    """One of: marin-a, yolo-w, marin-b, santa-cruz."""
    import json as _json

    from .model import (
        EXEMPT_STRATUM_MRO,
        STRATIFIED_WORST_CASE,
        TRINOMIAL_PPEB,
        AuditPlan,
        encode_election,
    )
    from .session import Session

    if name == "marin-a":
        contest = marin_measure_a()
        plan = AuditPlan(
            risk_limit=Fraction(1, 4), method=STRATIFIED_WORST_CASE,
            allowance_votes=MARIN_A_ALLOWANCE, sample_sizes={"IP": 6, "VBM": 6},
        )
        seed_digits, seed_ts = "902647", "2008-02-14T10:00:00Z"
        selections, method = marin_a_audited_ids(), "STRATIFIED"
        draw_ts, counts, count_ts = "2008-02-14T10:30:00Z", marin_a_hand_counts(), "2008-02-20T17:00:00Z"
        assess_ts = "2008-03-03T12:00:00Z"
        reveals: dict[str, dict[str, int]] = {}
    elif name == "yolo-w":
        contest = yolo_measure_w()
        plan = AuditPlan(
            risk_limit=Fraction(1, 4), method=EXEMPT_STRATUM_MRO,
            allowance_votes=YOLO_ALLOWANCE, draws=6, exempt_threshold_votes=YOLO_EXEMPT_THRESHOLD,
        )
        seed_digits, seed_ts = "118201", "2008-11-20T09:00:00Z"
        selections, method = yolo_sampled_ids(), "SRS"
        draw_ts, counts, count_ts = "2008-11-20T09:30:00Z", yolo_hand_counts(), "2008-11-24T16:00:00Z"
        assess_ts = "2008-11-25T10:00:00Z"
        reveals = {}
    elif name == "marin-b":
        contest = marin_measure_b()
        plan = AuditPlan(
            risk_limit=Fraction(1, 4), method=TRINOMIAL_PPEB,
            draws=MARIN_B_DRAWS, taint_threshold=MARIN_B_TAINT_THRESHOLD,
        )
        seed_digits, seed_ts = "773402", "2008-11-18T11:00:00Z"
        selections, method = marin_b_sampled_ids(), "PPEB"
        draw_ts, counts, count_ts = "2008-11-18T11:30:00Z", marin_b_hand_counts(), "2008-11-21T15:00:00Z"
        assess_ts = "2008-11-24T09:00:00Z"
        reveals = marin_b_deck_reveals()
    elif name == "santa-cruz":
        contest = santa_cruz_supervisor()
        plan = AuditPlan(
            risk_limit=Fraction(1, 4), method=TRINOMIAL_PPEB,
            draws=SANTA_CRUZ_DRAWS, taint_threshold=SANTA_CRUZ_TAINT_THRESHOLD,
        )
        seed_digits, seed_ts = "486035", "2008-11-21T10:00:00Z"
        selections, method = santa_cruz_selections(), "PPEB"
        draw_ts, counts, count_ts = "2008-11-21T10:30:00Z", santa_cruz_hand_counts(), "2008-11-26T12:00:00Z"
        assess_ts = "2008-12-01T10:00:00Z"
        reveals = {}
    else:
        raise ValueError(f"unknown pilot {name!r}")

    session = Session(id=f"pilot-{name}")
    session.append(
        "contest",
        {"session_id": session.id, "election": _json.loads(encode_election(contest))},
        "auditor", "2008-01-01T00:00:00Z",
    )
    session.append("plan", {"plan": plan.to_json()}, "auditor", "2008-01-01T01:00:00Z")
    session.append(
        "seed",
        {"seed": {"digits": seed_digits, "committed_at": seed_ts, "committed_after_results": True}},
        "registrar", seed_ts,
    )
    session.append(
        "draw",
        {
            "source": "external",
            "result": {"method": method, "selections": selections, "trail": []},
            "note": "selection as published for the 2008 pilot",
        },
        "registrar", draw_ts,
    )
    for bid, subtotals in sorted(reveals.items()):
        session.append("reveal", {"batch_id": bid, "subtotals": subtotals}, "ems-export", count_ts)
    _submit_counts(session, counts, count_ts)
    session.append("assess", {}, "auditor", assess_ts)
    session.append("apply_verdict", {}, "auditor", assess_ts)
    return session


PILOTS = ("marin-a", "yolo-w", "marin-b", "santa-cruz")
