/**
 * Operator workflows.  Each flow validates locally only what needs no
 * statistics (double-entry agreement), then defers to the API; errors
 * come back verbatim with their codes.
 */

import { ApiClient, ApiRequestError, CountSubmission } from "./api.js";

export type SeedFlowResult =
  | { ok: true }
  | { ok: false; reason: "mismatch" }
  | { ok: false; reason: "api"; code: string; message: string };

/** Commit the dice seed; the operator types it twice and a mismatch
 * blocks submission before anything reaches the service. */
export async function seedEntryFlow(
  api: ApiClient,
  sessionId: string,
  first: string,
  second: string,
): Promise<SeedFlowResult> {
  if (first.trim() !== second.trim() || first.trim() === "") {
    return { ok: false, reason: "mismatch" };
  }
  try {
    await api.commitSeed(sessionId, first.trim());
    return { ok: true };
  } catch (err) {
    if (err instanceof ApiRequestError) {
      return { ok: false, reason: "api", code: err.api.code, message: err.api.message };
    }
    throw err;
  }
}

export type CountFlowResult =
  | { status: "pending" }
  | { status: "accepted" }
  | { status: "mismatch" }
  | { status: "rejected"; code: string; message: string };

/** Submit one hand-count entry.  The service pairs it with the other
 * independent entry: matching pair accepted, disagreement surfaced as
 * a discrepancy the supervisor must resolve. */
export async function countEntryFlow(
  api: ApiClient,
  sessionId: string,
  count: CountSubmission,
): Promise<CountFlowResult> {
  try {
    const res = await api.submitCount(sessionId, count);
    if (res.payload["mismatch"]) {
      return { status: "mismatch" };
    }
    return res.payload["accepted"] ? { status: "accepted" } : { status: "pending" };
  } catch (err) {
    if (err instanceof ApiRequestError) {
      return { status: "rejected", code: err.api.code, message: err.api.message };
    }
    throw err;
  }
}

/** Double entry in one sitting (transcribing a paper tally sheet):
 * both entries must already agree before either is posted. */
export async function doubleCountEntryFlow(
  api: ApiClient,
  sessionId: string,
  first: CountSubmission,
  second: CountSubmission,
): Promise<CountFlowResult> {
  if (
    first.batch_id !== second.batch_id ||
    first.counted_ballots !== second.counted_ballots ||
    JSON.stringify(first.tallies) !== JSON.stringify(second.tallies)
  ) {
    return { status: "mismatch" };
  }
  const a = await countEntryFlow(api, sessionId, first);
  if (a.status !== "pending") {
    return a;
  }
  return countEntryFlow(api, sessionId, second);
}
