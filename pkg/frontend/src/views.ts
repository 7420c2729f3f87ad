// Pure rendering: every screen is a function from server data to an HTML
// string, so the views hold no state of their own and are testable without
// a browser. The app layer wires events by data-action attributes.

import type {
  ActionRecord,
  ClusterDetail,
  ClusterMember,
  ClusterSummary,
  Prediction,
} from "./api.js";

export const MEMBERS_PER_PAGE = 20;

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

export function describeAction(action: ActionRecord): string {
  let text = `${action.kind} ${action.node_type}`;
  if (action.label !== undefined && action.label !== null) {
    text += ` '${action.label}'`;
  }
  if (action.kind === "Update") {
    text += ` → '${action.new_label ?? ""}'`;
  } else if (action.parent_type) {
    text += ` in ${action.parent_type}`;
    if (action.position !== undefined && action.position !== null) {
      text += `[${action.position}]`;
    }
  }
  return text;
}

export interface Page<T> {
  items: T[];
  page: number;
  pageCount: number;
  hasPrev: boolean;
  hasNext: boolean;
}

export function paginate<T>(
  items: T[],
  page: number,
  perPage: number = MEMBERS_PER_PAGE,
): Page<T> {
  const pageCount = Math.max(1, Math.ceil(items.length / perPage));
  const clamped = Math.min(Math.max(page, 0), pageCount - 1);
  return {
    items: items.slice(clamped * perPage, (clamped + 1) * perPage),
    page: clamped,
    pageCount,
    hasPrev: clamped > 0,
    hasNext: clamped < pageCount - 1,
  };
}

export function errorBanner(message: string): string {
  return `<div class="banner error" role="alert">
    <span>${escapeHtml(message)}</span>
    <button type="button" data-action="retry">Retry</button>
  </div>`;
}

export function loadingScreen(): string {
  return `<p class="muted">Loading…</p>`;
}

// ---------------------------------------------------------------------------
// Cluster list

export function renderClusterList(clusters: ClusterSummary[]): string {
  const ordered = [...clusters].sort(
    (a, b) => b.size - a.size || a.cluster_id - b.cluster_id,
  );
  const rows = ordered
    .map((cluster) => {
      const label = cluster.label
        ? `<span class="label">${escapeHtml(cluster.label)}</span>`
        : `<span class="label unlabeled">unlabeled</span>`;
      const preview = cluster.medoid_preview
        .map((a) => `<li>${escapeHtml(describeAction(a))}</li>`)
        .join("");
      return `<tr>
        <td><a href="#/clusters/${cluster.cluster_id}">cluster ${cluster.cluster_id}</a></td>
        <td class="size">${cluster.size}</td>
        <td>${label}</td>
        <td><ul class="preview">${preview}</ul></td>
      </tr>`;
    })
    .join("");
  return `<h2>Clusters</h2>
  <table class="clusters">
    <thead><tr><th>Cluster</th><th>Size</th><th>Label</th><th>Medoid preview</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>`;
}

// ---------------------------------------------------------------------------
// Cluster detail

export interface DetailViewState {
  page: number;
  draftLabel: string | null; // unsaved text kept across a failed PUT
  saveError: string | null;
  savedFlash: boolean; // true right after a confirmed save
}

function renderMember(member: ClusterMember, isMedoid: boolean): string {
  const actions = member.actions
    .map((a) => `<li>${escapeHtml(describeAction(a))}</li>`)
    .join("");
  const badge = isMedoid ? ` <span class="badge">medoid</span>` : "";
  return `<article class="member">
    <h4>${escapeHtml(member.script_id)}${badge}</h4>
    <div class="pair">
      <div>
        <h5>incorrect</h5>
        <pre>${escapeHtml(member.incorrect_src ?? "(no source)")}</pre>
      </div>
      <div>
        <h5>correct</h5>
        <pre>${escapeHtml(member.correct_src ?? "(no source)")}</pre>
      </div>
    </div>
    <ol class="actions">${actions}</ol>
  </article>`;
}

export function orderedMembers(detail: ClusterDetail): ClusterMember[] {
  // the medoid pair is shown first
  const medoid = detail.members.find(
    (m) => m.script_id === detail.medoid_id,
  );
  if (!medoid) {
    return detail.members;
  }
  return [medoid, ...detail.members.filter((m) => m !== medoid)];
}

export function renderClusterDetail(
  detail: ClusterDetail,
  state: DetailViewState,
  knownLabels: string[],
): string {
  const members = orderedMembers(detail);
  const view = paginate(members, state.page);
  const body = view.items
    .map((m) => renderMember(m, m.script_id === detail.medoid_id))
    .join("");
  const labelValue = state.draftLabel ?? detail.label ?? "";
  const datalist = knownLabels
    .map((l) => `<option value="${escapeHtml(l)}"></option>`)
    .join("");
  const saveError = state.saveError
    ? `<p class="error" role="alert">${escapeHtml(state.saveError)}</p>`
    : "";
  const savedNote = state.savedFlash ? `<span class="saved">saved</span>` : "";
  return `<p><a href="#/clusters">← all clusters</a></p>
  <h2>Cluster ${detail.cluster_id}</h2>
  <form class="label-form" data-action="save-label">
    <label for="label-input">Error type</label>
    <input id="label-input" name="label" list="known-labels"
           value="${escapeHtml(labelValue)}" autocomplete="off">
    <datalist id="known-labels">${datalist}</datalist>
    <button type="submit">Save</button>
    ${savedNote}
  </form>
  ${saveError}
  <p class="muted">${detail.members.length} member(s), page ${view.page + 1} of ${view.pageCount}</p>
  ${body}
  <nav class="pager">
    <button type="button" data-action="prev-page" ${view.hasPrev ? "" : "disabled"}>Previous</button>
    <button type="button" data-action="next-page" ${view.hasNext ? "" : "disabled"}>Next</button>
  </nav>`;
}

export function renderNotFound(clusterId: string): string {
  return `<h2>Cluster not found</h2>
  <p>No cluster with id ${escapeHtml(clusterId)} exists in the loaded model.</p>
  <p><a href="#/clusters">← all clusters</a></p>`;
}

// ---------------------------------------------------------------------------
// Classify playground

export function renderClassifyForm(
  source: string,
  inlineError: string | null,
): string {
  const error = inlineError
    ? `<p class="error" role="alert">${escapeHtml(inlineError)}</p>`
    : "";
  const disabled = source.trim() === "" ? "disabled" : "";
  return `<h2>Classify a submission</h2>
  <form class="classify-form" data-action="classify">
    <textarea name="source" rows="12" spellcheck="false"
      placeholder="Paste MiniLang source…">${escapeHtml(source)}</textarea>
    ${error}
    <button type="submit" ${disabled}>Classify</button>
  </form>
  <div id="classify-result"></div>`;
}

export function renderPrediction(prediction: Prediction): string {
  const evidence = prediction.evidence
    .map(
      (e) => `<li>
        <a href="#/clusters/${e.cluster_id}">cluster ${e.cluster_id}</a>
        — ${escapeHtml(e.script_id)} at distance ${e.distance.toFixed(3)}
      </li>`,
    )
    .join("");
  const klass = prediction.label === "unknown" ? "unknown" : "known";
  return `<section class="prediction ${klass}">
    <h3>${escapeHtml(prediction.label)}</h3>
    <p>confidence ${prediction.confidence.toFixed(3)},
       nearest distance ${prediction.nearest_distance.toFixed(3)}
       (${escapeHtml(prediction.method)})</p>
    <h4>Evidence</h4>
    <ul class="evidence">${evidence}</ul>
  </section>`;
}
