"""Margins, per-batch worst-case error bounds, and observed taints.

The bound u_p answers "how much could miscount in this batch have
inflated the apparent margin?" assuming the worst: every ballot in the
batch was reported maximally for the apparent winner but actually cast
maximally for the runner-up.  Four cases arise in practice:

* SUPERMAJORITY — a yes/no measure needing a fraction q of valid votes.
  Miscounting a No as a Yes overstates the margin by one vote;
  miscounting a No as an invalid ballot overstates it by q of a vote
  (it leaves the numerator alone but shrinks the denominator's worth).
  Worst case: Yes_p + q * invalid_p, in votes.
* MAJORITY — two-candidate measure; worst case (Yes_p - No_p) + b_p votes.
* PLURALITY_MRO — multi-candidate race; for each (winner, loser) pair the
  worst case is (w_p - l_p + b_p) votes against that pair's margin, and
  u_p is the maximum of the pairwise ratios (maximum relative
  overstatement).
* DECK_NO_SUBTOTALS — no reported breakdown at all, so the reported
  contribution could have been +b_p and the truth -b_p: exactly 2*b_p.

Observed overstatements e_p compare reported subtotals against the hand
count the same way, and the taint t_p = e_p/u_p is the share of the
batch's worst case actually found.  All arithmetic is exact; rounding
happens only in display columns (vote bounds round UP, relative values
use round-half-even).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .exact import ceil_votes, decimal_str
from .model import (
    MAJORITY,
    PLURALITY,
    SUPERMAJORITY,
    Batch,
    Contest,
    HandCount,
    MarginSet,
    ModelError,
)

SCHEME_SUPERMAJORITY = "SUPERMAJORITY"
SCHEME_MAJORITY = "MAJORITY"
SCHEME_PLURALITY_MRO = "PLURALITY_MRO"
SCHEME_DECK_NO_SUBTOTALS = "DECK_NO_SUBTOTALS"


class BoundsError(ModelError):
    pass


def apparent_ranking(totals: dict[str, int]) -> list[str]:
    """Candidates by reported votes, descending; ties broken by id so the
    ordering is deterministic (a tie in a required margin errors later)."""
    return sorted(totals, key=lambda c: (-totals[c], c))


def compute_margins(contest: Contest) -> MarginSet:
    """Pairwise winner-loser margins in votes, plus the supermajority
    margin (votes above the required fraction of valid ballots)."""
    totals = contest.totals()
    if not totals or all(v == 0 for v in totals.values()):
        raise BoundsError("NO_TOTALS", "contest has no reported votes")
    ranking = apparent_ranking(totals)
    winners = ranking[: contest.rule.winners]
    losers = ranking[contest.rule.winners :]
    pairwise: dict[tuple[str, str], int] = {}
    for w in winners:
        for l in losers:
            m = totals[w] - totals[l]
            if m == 0:
                raise BoundsError("TIE", f"tied margin between {w} and {l}")
            pairwise[(w, l)] = m
    valid = sum(totals.values())

    supermajority_margin: Fraction | None = None
    if contest.rule.kind == SUPERMAJORITY:
        q = contest.rule.fraction
        assert q is not None
        supermajority_margin = Fraction(totals[winners[0]]) - q * valid
        if supermajority_margin == 0:
            raise BoundsError("TIE", "reported result sits exactly on the supermajority threshold")
    return MarginSet(pairwise=pairwise, valid_ballots=valid, supermajority_margin=supermajority_margin)


@dataclass(frozen=True)
class ErrorBound:
    batch_id: str
    scheme: str
    bound_votes: Fraction            # worst-case margin overstatement, in votes
    bound_relative: Fraction         # u_p = bound_votes / relevant margin
    margin_votes: Fraction           # denominator used for bound_relative

    @property
    def display_votes(self) -> int:
        return ceil_votes(self.bound_votes)

    def display_relative(self, decimals: int) -> str:
        return decimal_str(self.bound_relative, decimals)


@dataclass(frozen=True)
class Overstatement:
    batch_id: str
    e_votes: dict[tuple[str, str], Fraction]  # per winner-loser pair
    e_max_votes: Fraction                     # max pairwise overstatement, in votes
    e_relative: Fraction                      # max over pairs of e/M_wl (or e/M for measures)
    taint: Fraction                           # e_relative / u_p, unrounded
    bound_exceeded: bool                      # e_p > u_p: forces full-count review

    def display_taint(self, decimals: int = 3) -> str:
        return decimal_str(self.taint, decimals)


def _scheme_for(contest: Contest, batch: Batch) -> str:
    if batch.subtotals is None:
        return SCHEME_DECK_NO_SUBTOTALS
    if contest.rule.kind == SUPERMAJORITY:
        return SCHEME_SUPERMAJORITY
    if contest.rule.kind == MAJORITY:
        return SCHEME_MAJORITY
    return SCHEME_PLURALITY_MRO


def batch_bound(batch: Batch, contest: Contest, margins: MarginSet) -> ErrorBound:
    scheme = _scheme_for(contest, batch)
    totals = contest.totals()
    ranking = apparent_ranking(totals)
    winner = ranking[0]

    if scheme == SCHEME_DECK_NO_SUBTOTALS:
        m = margins.supermajority_margin if contest.rule.kind == SUPERMAJORITY else Fraction(margins.min_margin())
        votes = Fraction(2 * batch.ballots)
        return ErrorBound(batch.id, scheme, votes, votes / m, m)

    sub = batch.subtotals
    assert sub is not None

    if scheme == SCHEME_SUPERMAJORITY:
        q = contest.rule.fraction
        assert q is not None and margins.supermajority_margin is not None
        invalid = batch.invalid_count or 0
        votes = Fraction(sub.get(winner, 0)) + q * invalid
        m = margins.supermajority_margin
        return ErrorBound(batch.id, scheme, votes, votes / m, m)

    if scheme == SCHEME_MAJORITY:
        (w, l) = next(iter(margins.pairwise))
        m = margins.pairwise[(w, l)]
        votes = Fraction(sub.get(w, 0) - sub.get(l, 0) + batch.ballots)
        return ErrorBound(batch.id, scheme, votes, votes / m, Fraction(m))

    # PLURALITY_MRO: maximize the pairwise ratio over auditable pairs —
    # those whose candidates both have reported subtotals in this batch
    # (a pair without reported numbers has nothing to check).
    best: tuple[Fraction, Fraction, Fraction] | None = None
    for (w, l), m in margins.pairwise.items():
        if w not in sub or l not in sub:
            continue
        votes = Fraction(sub[w] - sub[l] + batch.ballots)
        rel = votes / m
        if best is None or rel > best[1]:
            best = (votes, rel, Fraction(m))
    if best is None:
        raise BoundsError("MISSING_SUBTOTALS", f"batch {batch.id} reports no auditable winner-loser pair")
    return ErrorBound(batch.id, SCHEME_PLURALITY_MRO, best[0], best[1], best[2])


def all_bounds(contest: Contest, margins: MarginSet | None = None) -> dict[str, ErrorBound]:
    margins = margins or compute_margins(contest)
    return {b.id: batch_bound(b, contest, margins) for b in contest.batches}


def total_relative_bound(bounds: dict[str, ErrorBound]) -> Fraction:
    """U = sum of u_p; the trinomial test needs U > 1 to be worth running."""
    return sum((b.bound_relative for b in bounds.values()), Fraction(0))


def _margin_contribution(contest: Contest, tallies: dict[str, int], pair: tuple[str, str]) -> Fraction:
    """This batch's contribution to the (winner, loser) margin.

    For a supermajority measure the contribution is Yes - q*(Yes+No):
    valid ballots in the batch count against the threshold.
    """
    w, l = pair
    if contest.rule.kind == SUPERMAJORITY:
        q = contest.rule.fraction
        assert q is not None
        valid = tallies.get(w, 0) + tallies.get(l, 0)
        return Fraction(tallies.get(w, 0)) - q * valid
    return Fraction(tallies.get(w, 0) - tallies.get(l, 0))


def observed_overstatement(
    batch: Batch,
    contest: Contest,
    hand_count: HandCount,
    margins: MarginSet,
    bound: ErrorBound,
    reported_subtotals: dict[str, int] | None = None,
) -> Overstatement:
    """Per-pair margin overstatement of the reported results vs the hand
    count, its relative form, and the taint against the batch's bound.

    `reported_subtotals` overrides the batch's stored subtotals; decks
    have none stored, so their reported breakdown (extracted from the
    EMS after the draw) must be supplied here.
    """
    reported = reported_subtotals if reported_subtotals is not None else batch.subtotals
    if reported is None:
        raise BoundsError("NO_REPORTED_SUBTOTALS", f"batch {batch.id} has no reported subtotals to compare against")
    if bound is None:
        raise BoundsError("NO_BOUND", f"no error bound for batch {batch.id}")

    e_votes: dict[tuple[str, str], Fraction] = {}
    e_rel = None
    for (w, l), m in margins.pairwise.items():
        if contest.rule.kind == PLURALITY and (w not in reported or l not in reported):
            continue  # pair not auditable: no reported subtotals to check
        if contest.rule.kind == SUPERMAJORITY:
            m_used = margins.supermajority_margin
            assert m_used is not None
        else:
            m_used = Fraction(m)
        e = _margin_contribution(contest, reported, (w, l)) - _margin_contribution(contest, hand_count.tallies, (w, l))
        e_votes[(w, l)] = e
        rel = e / m_used
        if e_rel is None or rel > e_rel:
            e_rel = rel
    if e_rel is None:
        raise BoundsError("MISSING_SUBTOTALS", f"batch {batch.id} reports no auditable winner-loser pair")
    if bound.bound_relative == 0:
        # a zero-bound batch can hold no overstatement at all
        taint = Fraction(0)
    else:
        taint = e_rel / bound.bound_relative
    return Overstatement(
        batch_id=batch.id,
        e_votes=e_votes,
        e_max_votes=max(e_votes.values()),
        e_relative=e_rel,
        taint=taint,
        bound_exceeded=e_rel > bound.bound_relative,
    )


def enumerate_tallies(ballots: int, candidates: tuple[str, ...]):
    """Every possible tally of `ballots` over candidates + invalid
    (stars and bars).  Used by the brute-force soundness oracle.
    """
    k = len(candidates)
    for cuts in itertools.combinations(range(ballots + k), k):
        parts = []
        prev = -1
        for c in cuts:
            parts.append(c - prev - 1)
            prev = c
        yield dict(zip(candidates, parts))


def bounds_csv(contest: Contest, bounds: dict[str, ErrorBound]) -> str:
    """Public-posting export: one row per batch, exact and display forms."""
    lines = ["batch_id,b_p,scheme,bound_votes,u_p"]
    for bid in sorted(bounds):
        b = contest.batch(bid)
        eb = bounds[bid]
        lines.append(
            f"{bid},{b.ballots},{eb.scheme},{eb.display_votes},{eb.display_relative(6)}"
        )
    return "\n".join(lines) + "\n"
