import { describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { countEntryFlow, doubleCountEntryFlow, seedEntryFlow } from "../src/flows.js";

function clientWith(fetcher: typeof fetch): ApiClient {
  return new ApiClient("http://service.invalid", "tok", fetcher);
}

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), { status, headers: { "Content-Type": "application/json" } });
}

describe("seedEntryFlow", () => {
  it("commits when both entries match", async () => {
    const fetcher = vi.fn(async () => jsonResponse(200, { state: "SEED_COMMITTED" }));
    const result = await seedEntryFlow(clientWith(fetcher), "s", "483920", "483920");
    expect(result).toEqual({ ok: true });
    expect(fetcher).toHaveBeenCalledTimes(1);
    const [url, init] = fetcher.mock.calls[0] as unknown as [string, RequestInit];
    expect(url).toBe("http://service.invalid/api/v1/sessions/s/seed");
    expect(JSON.parse(String(init.body))).toEqual({
      seed: { digits: "483920", committed_after_results: true },
    });
  });

  it("blocks a mismatch without touching the service", async () => {
    const fetcher = vi.fn(async () => jsonResponse(200, {}));
    const result = await seedEntryFlow(clientWith(fetcher), "s", "483920", "483921");
    expect(result).toEqual({ ok: false, reason: "mismatch" });
    expect(fetcher).not.toHaveBeenCalled();
  });

  it("surfaces API errors verbatim with their code", async () => {
    const fetcher = vi.fn(async () =>
      jsonResponse(409, { detail: { code: "ILLEGAL_TRANSITION", message: "not in PLANNED" } }),
    );
    const result = await seedEntryFlow(clientWith(fetcher), "s", "1", "1");
    expect(result).toEqual({
      ok: false,
      reason: "api",
      code: "ILLEGAL_TRANSITION",
      message: "not in PLANNED",
    });
  });
});

describe("countEntryFlow", () => {
  const count = {
    batch_id: "1005-IP",
    counted_ballots: 556,
    tallies: { LEOPOLD: 304, DANNER: 170 },
    entered_by: "a",
    timestamp: "2008-11-26T12:00:00Z",
  };

  it("reports pending on the first entry and accepted on the second", async () => {
    const payloads = [{ entry_no: 1 }, { entry_no: 2, accepted: true }];
    const fetcher = vi.fn(async () => jsonResponse(200, { payload: payloads.shift() }));
    const api = clientWith(fetcher);
    expect(await countEntryFlow(api, "s", count)).toEqual({ status: "pending" });
    expect(await countEntryFlow(api, "s", count)).toEqual({ status: "accepted" });
  });

  it("reports a double-entry mismatch", async () => {
    const fetcher = vi.fn(async () =>
      jsonResponse(200, { payload: { entry_no: 2, accepted: false, mismatch: true } }),
    );
    expect(await countEntryFlow(clientWith(fetcher), "s", count)).toEqual({ status: "mismatch" });
  });

  it("turns BATCH_NOT_IN_SAMPLE into a hard stop", async () => {
    const fetcher = vi.fn(async () =>
      jsonResponse(422, { detail: { code: "BATCH_NOT_IN_SAMPLE", message: "9999-IP" } }),
    );
    const result = await countEntryFlow(clientWith(fetcher), "s", count);
    expect(result).toEqual({ status: "rejected", code: "BATCH_NOT_IN_SAMPLE", message: "9999-IP" });
  });

  it("doubleCountEntryFlow blocks disagreeing entries locally", async () => {
    const fetcher = vi.fn(async () => jsonResponse(200, { payload: { entry_no: 1 } }));
    const other = { ...count, tallies: { LEOPOLD: 303, DANNER: 170 } };
    const result = await doubleCountEntryFlow(clientWith(fetcher), "s", count, other);
    expect(result).toEqual({ status: "mismatch" });
    expect(fetcher).not.toHaveBeenCalled();
  });
});
