import { describe, expect, it } from "vitest";

import type { SampleRow, Snapshot, Verdict } from "../src/api.js";
import { countForm, mismatchCard, pullList, seedForm, stateBanner, verdictBanner } from "../src/views.js";

function snap(state: string): Snapshot {
  return {
    session_id: "s", state, round: 1, head: "a".repeat(64),
    plan: null, seed_committed: state !== "PLANNED", sampled: {},
    counted: [], pending: [], mismatches: [], verdict: null,
  };
}

const row: SampleRow = {
  batch_id: "1005-IP", ballots: 556, stratum: "IP", mode: "IP", times: 1,
  u_p: "0.32", needs_reveal: false, counted: false, pending: false, mismatch: false,
};

describe("seed form gating", () => {
  it("enabled only in PLANNED", () => {
    expect(seedForm(snap("PLANNED"), false)).not.toContain("data-disabled");
    expect(seedForm(snap("SAMPLE_DRAWN"), false)).toContain("data-disabled");
    expect(seedForm(snap("SAMPLE_DRAWN"), false)).toContain("disabled");
  });

  it("shows the inline mismatch message", () => {
    expect(seedForm(snap("PLANNED"), true)).toContain("do not match");
    expect(seedForm(snap("PLANNED"), false)).not.toContain("do not match");
  });
});

describe("pull list", () => {
  it("renders u_p verbatim from the API", () => {
    const html = pullList([row, { ...row, batch_id: "1053-VBM", u_p: "0.01", times: 2 }]);
    expect(html).toContain(">0.32<");
    expect(html).toContain(">0.01<");
    expect(html).toContain("1053-VBM");
  });

  it("marks statuses", () => {
    expect(pullList([{ ...row, counted: true }])).toContain("counted");
    expect(pullList([{ ...row, mismatch: true }])).toContain("MISMATCH");
    expect(pullList([{ ...row, pending: true }])).toContain("awaiting 2nd entry");
    expect(pullList([{ ...row, needs_reveal: true }])).toContain("needs EMS subtotals");
  });
});

describe("verdict banner", () => {
  const certify: Verdict = {
    decision: "CERTIFY", statistic: "1/4", statistic_float: 0.25,
    narrative: "within the allowance",
  };

  it("uses stop/expand wording, never election-correct claims", () => {
    const stop = verdictBanner(certify, [17, 2, 0]);
    expect(stop).toContain("Audit can stop");
    expect(stop).toContain("(17,2,0)");
    expect(stop.toLowerCase()).not.toContain("correct");
    const expand = verdictBanner({ ...certify, decision: "ESCALATE_TO_FULL_COUNT" });
    expect(expand).toContain("Expand to a full hand count");
  });

  it("renders the statistic verbatim", () => {
    expect(verdictBanner(certify)).toContain("statistic 1/4");
  });

  it("pending state when no verdict yet", () => {
    expect(verdictBanner(null)).toContain("No verdict yet");
  });
});

describe("count form and mismatch card", () => {
  it("one input per candidate plus ballots and author", () => {
    const html = countForm(row, ["LEOPOLD", "DANNER"]);
    expect(html).toContain('name="tally-LEOPOLD"');
    expect(html).toContain('name="tally-DANNER"');
    expect(html).toContain('name="counted_ballots"');
    expect(html).toContain("two independent matching entries");
  });

  it("mismatch card demands supervisor resolution", () => {
    expect(mismatchCard("1005-IP")).toContain("supervisor");
  });
});

describe("state banner", () => {
  it("shows state, round and log head", () => {
    const html = stateBanner(snap("COUNTING"));
    expect(html).toContain("COUNTING");
    expect(html).toContain("round 1");
  });

  it("escapes untrusted strings", () => {
    const dirty = { ...snap("PLANNED"), state: "<script>" };
    expect(stateBanner(dirty)).not.toContain("<script>");
  });
});
