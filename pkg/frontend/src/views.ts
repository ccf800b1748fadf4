/**
 * Pure render functions: view model in, HTML string out.
 *
 * Every number shown is the exact string the API sent.  Verdict wording
 * follows the audit's actual guarantee: the audit "stops" or "expands
 * to a full hand count" — it never declares an election correct.
 */

import type { SampleRow, Snapshot, Verdict } from "./api.js";

export function escapeHtml(s: string): string {
  return s.replace(/[&<>"']/g, (c) => ({ "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;", "'": "&#39;" }[c] as string));
}

export function stateBanner(snap: Snapshot): string {
  return `<div class="state-banner" data-state="${escapeHtml(snap.state)}">` +
    `<span class="state">${escapeHtml(snap.state)}</span>` +
    `<span class="round">round ${snap.round}</span>` +
    `<span class="head" title="log head">${escapeHtml(snap.head.slice(0, 16))}…</span></div>`;
}

export function seedForm(snap: Snapshot, mismatch: boolean): string {
  const enabled = snap.state === "PLANNED";
  const note = mismatch
    ? `<p class="error" id="seed-mismatch">The two seed entries do not match. Re-enter both.</p>`
    : "";
  return `<form id="seed-form" ${enabled ? "" : "data-disabled=\"true\""}>
  <label>Seed digits (from the dice roll) <input id="seed-1" ${enabled ? "" : "disabled"}></label>
  <label>Re-enter seed digits <input id="seed-2" ${enabled ? "" : "disabled"}></label>
  <button type="submit" ${enabled ? "" : "disabled"}>Commit seed</button>
  ${note}
</form>`;
}

export function pullList(rows: SampleRow[]): string {
  const body = rows
    .map((r) => {
      const status = r.counted
        ? "counted"
        : r.mismatch
          ? "MISMATCH"
          : r.pending
            ? "awaiting 2nd entry"
            : r.needs_reveal
              ? "needs EMS subtotals"
              : "to pull";
      return `<tr data-batch="${escapeHtml(r.batch_id)}">
  <td>${escapeHtml(r.batch_id)}</td><td>${escapeHtml(r.stratum)}</td>
  <td class="num">${r.ballots}</td><td class="num">${r.times}</td>
  <td class="num u_p">${escapeHtml(r.u_p)}</td><td class="status">${status}</td></tr>`;
    })
    .join("\n");
  return `<table id="pull-list">
<thead><tr><th>Batch</th><th>Stratum</th><th>Ballots</th><th>Times drawn</th><th>u_p</th><th>Status</th></tr></thead>
<tbody>${body}</tbody></table>`;
}

export function countForm(row: SampleRow, candidates: string[]): string {
  const fields = candidates
    .map((c) => `<label>${escapeHtml(c)} <input name="tally-${escapeHtml(c)}" inputmode="numeric"></label>`)
    .join("\n");
  return `<form id="count-form" data-batch="${escapeHtml(row.batch_id)}">
  <h3>Hand count — ${escapeHtml(row.batch_id)} (${row.ballots} ballots reported)</h3>
  <label>Ballots counted <input name="counted_ballots" inputmode="numeric"></label>
  ${fields}
  <label>Entered by <input name="entered_by"></label>
  <button type="submit">Submit count</button>
  <p class="hint">Each batch needs two independent matching entries.</p>
</form>`;
}

export function mismatchCard(batchId: string): string {
  return `<div class="card error" id="mismatch-${escapeHtml(batchId)}">
  <strong>Double-entry mismatch on ${escapeHtml(batchId)}.</strong>
  A supervisor must resolve this batch before the audit can continue;
  both original entries stay in the log.
</div>`;
}

export function verdictBanner(verdict: Verdict | null, categories?: number[]): string {
  if (!verdict) {
    return `<div id="verdict" class="card pending">No verdict yet — counts in progress.</div>`;
  }
  const cats = categories ? ` <span class="cats">taint categories (${categories.join(",")})</span>` : "";
  if (verdict.decision === "CERTIFY") {
    return `<div id="verdict" class="card certify"><strong>Audit can stop.</strong>${cats}
  <span class="stat">statistic ${escapeHtml(verdict.statistic ?? "")}</span>
  <p>${escapeHtml(verdict.narrative)}</p></div>`;
  }
  return `<div id="verdict" class="card escalate"><strong>Expand to a full hand count.</strong>${cats}
  <span class="stat">statistic ${escapeHtml(verdict.statistic ?? "")}</span>
  <p>${escapeHtml(verdict.narrative)}</p></div>`;
}

export function logView(lines: string[]): string {
  const rows = lines.map((l) => `<li><code>${escapeHtml(l)}</code></li>`).join("\n");
  return `<ol id="log-view">${rows}</ol>`;
}
