/** Labeling flow state machine: one annotator walking one session.
 *
 * The server is the source of truth; the flow advances optimistically and
 * reconciles by re-fetching /next. Only the current item's text is ever
 * held in memory.
 */

import { ApiClient, ApiError, Choice, NetworkError, NextItem } from "./api.js";
import { SubmitQueue } from "./queue.js";

export type FlowState =
  | { kind: "loading" }
  | { kind: "item"; item: NextItem; notice: string | null }
  | { kind: "done"; labeled: number; total: number }
  | { kind: "offline"; pendingCount: number };

export class LabelingFlow {
  private state: FlowState = { kind: "loading" };
  private labeledCount = 0;
  private total = 0;
  readonly queue: SubmitQueue;

  constructor(
    private readonly api: ApiClient,
    readonly sessionId: string,
    readonly annotator: string,
  ) {
    this.queue = new SubmitQueue(api, sessionId, annotator);
  }

  get current(): FlowState {
    return this.state;
  }

  progress(): { labeled: number; total: number } {
    return { labeled: this.labeledCount, total: this.total };
  }

  async start(): Promise<FlowState> {
    return this.advance(null);
  }

  private async advance(notice: string | null): Promise<FlowState> {
    let item: NextItem | null;
    try {
      item = await this.api.nextItem(this.sessionId, this.annotator);
    } catch (error) {
      if (error instanceof NetworkError) {
        this.state = { kind: "offline", pendingCount: this.queue.size };
        return this.state;
      }
      throw error;
    }
    if (item === null) {
      this.state = { kind: "done", labeled: this.labeledCount, total: this.total };
      return this.state;
    }
    this.labeledCount = item.labeled;
    this.total = item.total;
    this.state = { kind: "item", item, notice };
    return this.state;
  }

  /** Submit a choice for the current item and move on. */
  async submit(choice: Choice): Promise<FlowState> {
    if (this.state.kind !== "item") {
      return this.state;
    }
    const item = this.state.item;
    const outcome = await this.queue.submit(item.post_id, choice);
    if (outcome.kind === "rejected") {
      // server refused the label: re-show the same item with the reason
      this.state = { kind: "item", item, notice: outcome.error.detail };
      return this.state;
    }
    if (outcome.kind === "queued") {
      // optimistic local advance is impossible without the server's next
      // item; surface the offline state and keep the backlog
      this.labeledCount += 1;
      this.state = { kind: "offline", pendingCount: this.queue.size };
      return this.state;
    }
    this.labeledCount = outcome.result.labeled;
    this.total = outcome.result.total;
    return this.advance(null);
  }

  /** Replay queued submissions, then resume from the server's state. */
  async reconnect(): Promise<FlowState> {
    const rejections: string[] = [];
    const drained = await this.queue.flush((entry, error) =>
      rejections.push(`${entry.postId}: ${error.detail}`),
    );
    if (!drained) {
      this.state = { kind: "offline", pendingCount: this.queue.size };
      return this.state;
    }
    return this.advance(rejections.length > 0 ? rejections.join("; ") : null);
  }
}
