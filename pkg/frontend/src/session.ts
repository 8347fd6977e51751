/** Client-side annotation state machine.
 *
 * Owns the current pair and enforces the safety rules: decisions are
 * ignored until the pair is rendered, at most one submit is in flight
 * (double-keypresses collapse into one request), and a submit always
 * carries the pair_id of the pair on screen, verified against the echo in
 * the response.
 */

import { ApiRequestError } from './api.js';
import type { Decision, PairPayload, ProgressReport } from './types.js';

export interface SessionApi {
  fetchNext(annotator: string): Promise<{ pair: PairPayload | null }>;
  submit(
    annotator: string,
    pairId: string,
    decision: Decision,
  ): Promise<{ pair_id: string; status: string }>;
  progress(): Promise<ProgressReport>;
}

export interface SessionEvents {
  /** A new pair arrived (or null when the queue is empty): render it. */
  onPair(pair: PairPayload | null): void;
  /** Transient banner, e.g. "pair reassigned". */
  onBanner(message: string): void;
  onProgress(report: ProgressReport): void;
}

export type KeyResult =
  | 'submitted'
  | 'ignored'
  | 'reassigned'
  | 'already_recorded'
  | 'failed';

const KEY_DECISIONS: Record<string, Decision> = {
  '1': 'first_closer',
  '2': 'second_closer',
  s: 'skip',
  S: 'skip',
};

export class AnnotationSession {
  private current: PairPayload | null = null;
  private renderedPairId: string | null = null;
  private submitting = false;

  constructor(
    private readonly api: SessionApi,
    readonly annotator: string,
    private readonly events: SessionEvents,
  ) {}

  get currentPair(): PairPayload | null {
    return this.current;
  }

  /** Decision keys work only when the image and both markers are up. */
  get controlsEnabled(): boolean {
    return (
      this.current !== null &&
      this.renderedPairId === this.current.pair_id &&
      !this.submitting
    );
  }

  async fetchNext(): Promise<PairPayload | null> {
    const res = await this.api.fetchNext(this.annotator);
    this.current = res.pair;
    this.renderedPairId = null;
    this.events.onPair(res.pair);
    return res.pair;
  }

  /** The view calls this once the image and markers are actually drawn. */
  markRendered(pairId: string): void {
    if (this.current && this.current.pair_id === pairId) {
      this.renderedPairId = pairId;
    }
  }

  async refreshProgress(): Promise<void> {
    this.events.onProgress(await this.api.progress());
  }

  /** Map a keypress to a decision and submit it (1 / 2 / S). */
  async handleKey(key: string): Promise<KeyResult> {
    const decision = KEY_DECISIONS[key];
    if (!decision || !this.controlsEnabled || this.current === null) {
      return 'ignored';
    }
    const pair = this.current;
    this.submitting = true; // latch: a second keypress is ignored above
    let result: KeyResult;
    try {
      const res = await this.api.submit(this.annotator, pair.pair_id, decision);
      result =
        res.pair_id === pair.pair_id ? 'submitted' : 'failed';
      if (result === 'failed') {
        this.events.onBanner(`server echoed ${res.pair_id}, expected ${pair.pair_id}`);
      }
    } catch (err) {
      if (err instanceof ApiRequestError && err.code === 'lease_expired') {
        this.events.onBanner('pair reassigned; fetching a new one');
        result = 'reassigned';
      } else if (err instanceof ApiRequestError && err.code === 'duplicate_submission') {
        // A retry after a lost response: the decision is already recorded.
        result = 'already_recorded';
      } else {
        // Network failure: keep the pair on screen so the same decision can
        // be retried; the service dedupes by (pair_id, annotator).
        this.events.onBanner(err instanceof Error ? err.message : String(err));
        result = 'failed';
      }
    }
    this.submitting = false;
    if (result !== 'failed') {
      await this.fetchNext();
    }
    return result;
  }
}
