/**
 * Browser bootstrap: bind the render functions and flows to the DOM and
 * poll the service so a page reload (or a second screen) never loses
 * anything — all state lives in the session log behind the API.
 */

import { ApiClient, SampleRow, Snapshot } from "./api.js";
import { countEntryFlow, seedEntryFlow } from "./flows.js";
import { countForm, mismatchCard, pullList, seedForm, stateBanner, verdictBanner } from "./views.js";

const POLL_MS = 2500;

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

function params(): { session: string; token: string } {
  const q = new URLSearchParams(window.location.search);
  return { session: q.get("session") ?? "", token: q.get("token") ?? "" };
}

async function categories(api: ApiClient, sessionId: string): Promise<number[] | undefined> {
  try {
    const doc = (await api.report(sessionId)) as unknown as { assessment?: { categories?: number[] } };
    return doc.assessment?.categories;
  } catch {
    return undefined; // report only exists once assessed
  }
}

async function refresh(api: ApiClient, sessionId: string, seedMismatch: boolean): Promise<Snapshot> {
  const snap = await api.snapshot(sessionId);
  el("banner").innerHTML = stateBanner(snap);
  el("seed").innerHTML = seedForm(snap, seedMismatch);

  if (["SAMPLE_DRAWN", "COUNTING", "ASSESSED", "CERTIFIED", "FULL_COUNT", "CLOSED"].includes(snap.state)) {
    const sample = (await api.sample(sessionId)) as { rows: SampleRow[]; candidates: string[] };
    el("sample").innerHTML = pullList(sample.rows);
    const next = sample.rows.find((r) => !r.counted && !r.mismatch && !r.needs_reveal);
    el("entry").innerHTML = next && snap.state !== "CERTIFIED" ? countForm(next, sample.candidates) : "";
    el("cards").innerHTML = snap.mismatches.map(mismatchCard).join("\n");
  }
  el("verdict-panel").innerHTML = verdictBanner(
    snap.verdict,
    snap.verdict ? await categories(api, sessionId) : undefined,
  );

  bindSeed(api, sessionId);
  bindCount(api, sessionId);
  return snap;
}

function bindSeed(api: ApiClient, sessionId: string) {
  const form = document.getElementById("seed-form") as HTMLFormElement | null;
  if (!form || form.dataset.disabled) return;
  form.onsubmit = async (ev) => {
    ev.preventDefault();
    const first = (el("seed-1") as HTMLInputElement).value;
    const second = (el("seed-2") as HTMLInputElement).value;
    const result = await seedEntryFlow(api, sessionId, first, second);
    await refresh(api, sessionId, !result.ok && result.reason === "mismatch");
  };
}

function bindCount(api: ApiClient, sessionId: string) {
  const form = document.getElementById("count-form") as HTMLFormElement | null;
  if (!form) return;
  form.onsubmit = async (ev) => {
    ev.preventDefault();
    const data = new FormData(form);
    const tallies: Record<string, number> = {};
    for (const [key, value] of data.entries()) {
      if (key.startsWith("tally-")) tallies[key.slice(6)] = Number(value);
    }
    await countEntryFlow(api, sessionId, {
      batch_id: form.dataset.batch ?? "",
      counted_ballots: Number(data.get("counted_ballots")),
      tallies,
      entered_by: String(data.get("entered_by") ?? "operator"),
      timestamp: new Date().toISOString().replace(/\.\d+Z$/, "Z"),
    });
    await refresh(api, sessionId, false);
  };
}

export async function start(): Promise<void> {
  const { session, token } = params();
  const api = new ApiClient("", token);
  if (!session) {
    const sessions = await api.listSessions();
    el("banner").innerHTML =
      "<p>Open a session: " +
      sessions.sessions.map((s) => `<a href="?session=${s}&token=${token}">${s}</a>`).join(" · ") +
      "</p>";
    return;
  }
  await refresh(api, session, false);
  window.setInterval(() => refresh(api, session, false).catch(() => undefined), POLL_MS);
}

if (typeof document !== "undefined" && document.getElementById("banner")) {
  start().catch((err) => {
    el("banner").innerHTML = `<div class="card error">${String(err)}</div>`;
  });
}
