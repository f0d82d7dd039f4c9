/** Offline-tolerant submission queue.
 *
 * Submissions that fail with a network error are held (post id and choice
 * only — never post text) and replayed in order on the next flush. The
 * server keys responses by (post id, annotator) and overwrites, so replaying
 * a submission that actually landed is harmless.
 */

import { ApiClient, ApiError, Choice, NetworkError, SubmitResult } from "./api.js";

export interface PendingLabel {
  postId: string;
  label: Choice;
}

export type SubmitOutcome =
  | { kind: "sent"; result: SubmitResult }
  | { kind: "queued" }
  | { kind: "rejected"; error: ApiError };

export class SubmitQueue {
  private pending: PendingLabel[] = [];

  constructor(
    private readonly api: ApiClient,
    private readonly sessionId: string,
    private readonly annotator: string,
  ) {}

  get size(): number {
    return this.pending.length;
  }

  snapshot(): PendingLabel[] {
    return this.pending.map((entry) => ({ ...entry }));
  }

  /** Send now if the earlier backlog allows; otherwise append to it. */
  async submit(postId: string, label: Choice): Promise<SubmitOutcome> {
    if (this.pending.length > 0) {
      // preserve submission order: drain the backlog before this one
      const flushed = await this.flush();
      if (!flushed) {
        this.pending.push({ postId, label });
        return { kind: "queued" };
      }
    }
    try {
      const result = await this.api.submitLabel(this.sessionId, postId, this.annotator, label);
      return { kind: "sent", result };
    } catch (error) {
      if (error instanceof NetworkError) {
        this.pending.push({ postId, label });
        return { kind: "queued" };
      }
      if (error instanceof ApiError) {
        return { kind: "rejected", error };
      }
      throw error;
    }
  }

  /**
   * Replay the backlog in order. Returns true when the queue is empty
   * afterwards. Server rejections (4xx) are dropped — the label was wrong,
   * not lost — and reported through onReject.
   */
  async flush(onReject?: (entry: PendingLabel, error: ApiError) => void): Promise<boolean> {
    while (this.pending.length > 0) {
      const entry = this.pending[0]!;
      try {
        await this.api.submitLabel(this.sessionId, entry.postId, this.annotator, entry.label);
        this.pending.shift();
      } catch (error) {
        if (error instanceof NetworkError) {
          return false; // still offline; keep the backlog intact
        }
        if (error instanceof ApiError) {
          this.pending.shift();
          onReject?.(entry, error);
          continue;
        }
        throw error;
      }
    }
    return true;
  }
}
