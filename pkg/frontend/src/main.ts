/** DOM wiring: render the labeling flow into #app.
 *
 * Post text is rendered with textContent only (never parsed as markup) and
 * is discarded as soon as the next item replaces it.
 */

import { ApiClient, Choice } from "./api.js";
import { bindKeys, KEY_BINDINGS } from "./keyboard.js";
import { FlowState, LabelingFlow } from "./session.js";

const BUTTON_ORDER: Array<{ key: string; choice: Choice; caption: string }> = [
  { key: "1", choice: "opioid-related", caption: "opioid-related" },
  { key: "2", choice: "not-opioid-related", caption: "not opioid-related" },
  { key: "3", choice: "unsure", caption: "unsure" },
  { key: "s", choice: "skip", caption: "skip" },
];

export function render(root: HTMLElement, state: FlowState, flow: LabelingFlow): void {
  root.textContent = "";
  const card = document.createElement("div");
  card.className = "card";

  if (state.kind === "loading") {
    card.textContent = "Loading…";
  } else if (state.kind === "offline") {
    const banner = document.createElement("div");
    banner.className = "banner error";
    banner.textContent = `Offline — ${state.pendingCount} label(s) queued. Retrying…`;
    const retry = document.createElement("button");
    retry.textContent = "Retry now";
    retry.addEventListener("click", () => {
      void flow.reconnect().then((next) => render(root, next, flow));
    });
    card.append(banner, retry);
  } else if (state.kind === "done") {
    const heading = document.createElement("h2");
    heading.textContent = "Session complete";
    const summary = document.createElement("p");
    summary.textContent = `${state.labeled} of ${state.total} items answered.`;
    const exportLink = document.createElement("a");
    exportLink.href = `/sessions/${encodeURIComponent(flow.sessionId)}/export?annotator=${encodeURIComponent(flow.annotator)}`;
    exportLink.textContent = "Download gold CSV";
    exportLink.setAttribute("download", `${flow.sessionId}-${flow.annotator}.csv`);
    card.append(heading, summary, exportLink);
  } else {
    const progress = document.createElement("div");
    progress.className = "progress";
    progress.textContent = `${state.item.labeled} / ${state.item.total}`;

    const text = document.createElement("p");
    text.className = "post-text";
    text.textContent = state.item.text; // verbatim; never innerHTML

    card.append(progress, text);

    if (state.notice) {
      const banner = document.createElement("div");
      banner.className = "banner error";
      banner.textContent = state.notice;
      card.append(banner);
    }

    const buttons = document.createElement("div");
    buttons.className = "choices";
    for (const { key, choice, caption } of BUTTON_ORDER) {
      const button = document.createElement("button");
      button.textContent = `${key} — ${caption}`;
      button.addEventListener("click", () => {
        void flow.submit(choice).then((next) => render(root, next, flow));
      });
      buttons.append(button);
    }
    card.append(buttons);
  }
  root.append(card);
}

export async function boot(root: HTMLElement, apiOverride?: ApiClient): Promise<LabelingFlow> {
  const params = new URLSearchParams(window.location.search);
  const sessionId = params.get("session") ?? "";
  const annotator = params.get("annotator") ?? "";
  if (!sessionId || !annotator) {
    root.textContent = "Pass ?session=<id>&annotator=<name> in the URL.";
    throw new Error("missing session or annotator");
  }
  const api = apiOverride ?? new ApiClient(window.location.origin);
  const flow = new LabelingFlow(api, sessionId, annotator);

  bindKeys(window as unknown as Parameters<typeof bindKeys>[0], (choice) => {
    void flow.submit(choice).then((next) => render(root, next, flow));
  });
  window.addEventListener("online", () => {
    void flow.reconnect().then((next) => render(root, next, flow));
  });

  render(root, flow.current, flow);
  const first = await flow.start();
  render(root, first, flow);
  return flow;
}

const rootElement = typeof document !== "undefined" ? document.getElementById("app") : null;
if (rootElement) {
  void boot(rootElement).catch((error) => {
    console.error(error);
  });
}

export { KEY_BINDINGS };
