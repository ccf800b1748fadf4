/**
 * Scripted end-to-end audit against a real service process.
 *
 * Spawns `rla serve` on a scratch store, then drives a Santa Cruz-shaped
 * session through the same flow functions the browser uses: commit the
 * dice seed (typed twice), read the pull list, double-enter every hand
 * count, assess, and check the CERTIFY banner shows taint categories
 * (17,2,0).  Every u_p and taint the UI renders is compared against the
 * API's value, verbatim.
 */

import { execFileSync, spawn, ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { seedEntryFlow, doubleCountEntryFlow } from "../src/flows.js";
import { pullList, verdictBanner } from "../src/views.js";

const PORT = 8917;
const BASE = `http://127.0.0.1:${PORT}`;
const TOKEN = "e2e-token";
const TS = "2008-11-21T10:00:00Z";

interface Fixture {
  election: unknown;
  selections: string[];
  hand_counts: { batch_id: string; counted_ballots: number; tallies: Record<string, number> }[];
}

function loadFixture(): Fixture {
  const script = [
    "import json",
    "from rlakit.model import encode_election",
    "from rlakit import pilots",
    "doc = {",
    "  'election': json.loads(encode_election(pilots.santa_cruz_supervisor())),",
    "  'selections': pilots.santa_cruz_selections(),",
    "  'hand_counts': [",
    "    {'batch_id': h.batch_id, 'counted_ballots': h.counted_ballots, 'tallies': h.tallies}",
    "    for h in pilots.santa_cruz_hand_counts()",
    "  ],",
    "}",
    "print(json.dumps(doc))",
  ].join("\n");
  return JSON.parse(execFileSync("python3", ["-c", script], { maxBuffer: 64 * 1024 * 1024 }).toString());
}

let server: ChildProcess;

async function waitForService(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const res = await fetch(`${BASE}/api/v1/sessions`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  const store = mkdtempSync(join(tmpdir(), "rla-e2e-"));
  server = spawn(
    "python3",
    ["-m", "rlakit.cli", "serve", "--store", store, "--bind", `127.0.0.1:${PORT}`, "--token", TOKEN],
    { stdio: "ignore" },
  );
  await waitForService();
}, 30000);

afterAll(() => {
  server?.kill();
});

describe("santa-cruz-shaped audit over the wire", () => {
  const api = new ApiClient(BASE, TOKEN);
  const session = "sc-e2e";
  const fixture = loadFixture();

  it("runs seed commit -> pull list -> double-entry counts -> CERTIFY banner", async () => {
    await api.createSession(session, fixture.election);
    await api.plan(session, {
      risk_limit: "1/4",
      method: "TRINOMIAL_PPEB",
      draws: 19,
      taint_threshold: "47/1000",
    });

    // dice seed typed twice; a typo blocks, the retype commits
    const blocked = await seedEntryFlow(api, session, "486035", "486036");
    expect(blocked).toEqual({ ok: false, reason: "mismatch" });
    const committed = await seedEntryFlow(api, session, "486035", "486035");
    expect(committed).toEqual({ ok: true });
    expect((await api.snapshot(session)).state).toBe("SEED_COMMITTED");

    // the pilot's published PPEB selection, recorded as an external draw
    await api.draw(session, {
      source: "external",
      result: { method: "PPEB", selections: fixture.selections, trail: [] },
      ts: TS,
    });

    const sample = (await api.sample(session)) as unknown as {
      rows: { batch_id: string; u_p: string; times: number }[];
      candidates: string[];
    };
    expect(sample.rows).toHaveLength(16);
    expect(sample.candidates).toContain("LEOPOLD");

    // the rendered pull list shows the API's u_p strings verbatim
    const listHtml = pullList(sample.rows as never);
    for (const row of sample.rows) {
      expect(listHtml).toContain(`>${row.u_p}<`);
      expect(listHtml).toContain(row.batch_id);
    }

    // double-enter every hand count through the UI flow
    for (const hc of fixture.hand_counts) {
      const entry = { ...hc, entered_by: "counter", timestamp: TS };
      const result = await doubleCountEntryFlow(api, session, entry, { ...entry });
      expect(result).toEqual({ status: "accepted" });
    }

    const assessment = await api.assess(session);
    expect(assessment.state).toBe("CERTIFIED");
    expect(assessment.verdict?.decision).toBe("CERTIFY");
    expect(assessment.assessment.categories).toEqual([17, 2, 0]);

    // the verdict banner shows the counts and stop wording
    const banner = verdictBanner(assessment.verdict, assessment.assessment.categories);
    expect(banner).toContain("Audit can stop");
    expect(banner).toContain("(17,2,0)");

    // every displayed taint equals the API's report value, verbatim
    const report = await api.report(session);
    const reportRows = report.sample.rows;
    expect(reportRows).toHaveLength(16);
    for (const row of reportRows) {
      expect(typeof row.u_p).toBe("string");
      expect(typeof row.taint).toBe("string");
      const rendered = pullList([
        {
          batch_id: row.batch_id, ballots: 0, stratum: "", mode: "", times: row.times,
          u_p: row.u_p, needs_reveal: false, counted: true, pending: false, mismatch: false,
        },
      ]);
      expect(rendered).toContain(`>${row.u_p}<`);
    }
    // spot-check two published values came through end to end
    const byId = new Map(reportRows.map((r) => [r.batch_id, r]));
    expect(byId.get("1005-IP")?.taint).toBe("-0.012");
    expect(byId.get("1073-VBM")?.taint).toBe("0.036");
    expect(byId.get("1005-IP")?.u_p).toBe("0.32");
  }, 60000);

  it("rejects a count for a batch outside the sample as a hard stop", async () => {
    const result = await doubleCountEntryFlow(
      api, session,
      { batch_id: "1200-IP", counted_ballots: 1, tallies: { LEOPOLD: 1 }, entered_by: "x", timestamp: TS },
      { batch_id: "1200-IP", counted_ballots: 1, tallies: { LEOPOLD: 1 }, entered_by: "x", timestamp: TS },
    );
    expect(result.status).toBe("rejected");
    if (result.status === "rejected") {
      expect(result.code).toMatch(/BATCH_NOT_IN_SAMPLE|ILLEGAL_TRANSITION/);
    }
  });
});
