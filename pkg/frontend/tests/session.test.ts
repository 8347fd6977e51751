import { describe, expect, it } from 'vitest';

import { ApiRequestError } from '../src/api.js';
import { AnnotationSession, type SessionApi, type SessionEvents } from '../src/session.js';
import type { Decision, PairPayload, ProgressReport } from '../src/types.js';

function pairPayload(id: string): PairPayload {
  return {
    pair_id: id,
    image_id: 'img0',
    p1: [10, 20],
    p2: [30, 40],
    scenario: 'indoor',
    origin: 'auto_sampled',
    label: 'unlabeled',
    label_source: 'none',
    role: 'primary',
    lease_expiry: 1234,
  };
}

interface SubmitCall {
  annotator: string;
  pairId: string;
  decision: Decision;
}

class MockService implements SessionApi {
  queue: (PairPayload | null)[] = [];
  submits: SubmitCall[] = [];
  submitError: ApiRequestError | Error | null = null;
  submitDelay: Promise<void> | null = null;
  fetchCount = 0;

  async fetchNext(_annotator: string) {
    this.fetchCount += 1;
    return { pair: this.queue.length ? this.queue.shift()! : null };
  }

  async submit(annotator: string, pairId: string, decision: Decision) {
    if (this.submitDelay) await this.submitDelay;
    this.submits.push({ annotator, pairId, decision });
    if (this.submitError) {
      const err = this.submitError;
      this.submitError = null;
      throw err;
    }
    return { pair_id: pairId, status: 'awaiting_verification' };
  }

  async progress(): Promise<ProgressReport> {
    return { total: 0, by_status: {}, by_scenario: {} };
  }
}

function makeSession(svc: MockService) {
  const banners: string[] = [];
  const rendered: (PairPayload | null)[] = [];
  const events: SessionEvents = {
    onPair: (p) => rendered.push(p),
    onBanner: (m) => banners.push(m),
    onProgress: () => {},
  };
  const session = new AnnotationSession(svc, 'alice', events);
  return { session, banners, rendered };
}

async function startWith(svc: MockService, id = 'pair-1') {
  svc.queue.push(pairPayload(id));
  const ctx = makeSession(svc);
  await ctx.session.fetchNext();
  ctx.session.markRendered(id);
  return ctx;
}

describe('decision keys', () => {
  for (const [key, decision] of [
    ['1', 'first_closer'],
    ['2', 'second_closer'],
    ['S', 'skip'],
    ['s', 'skip'],
  ] as const) {
    it(`key "${key}" produces exactly one ${decision} call`, async () => {
      const svc = new MockService();
      const { session } = await startWith(svc);
      const result = await session.handleKey(key);
      expect(result).toBe('submitted');
      expect(svc.submits).toEqual([
        { annotator: 'alice', pairId: 'pair-1', decision },
      ]);
    });
  }

  it('unknown keys are ignored', async () => {
    const svc = new MockService();
    const { session } = await startWith(svc);
    expect(await session.handleKey('x')).toBe('ignored');
    expect(svc.submits).toHaveLength(0);
  });

  it('keys are ignored until the pair is rendered', async () => {
    const svc = new MockService();
    svc.queue.push(pairPayload('pair-1'));
    const { session } = makeSession(svc);
    await session.fetchNext();
    // no markRendered yet: controls stay disabled
    expect(session.controlsEnabled).toBe(false);
    expect(await session.handleKey('1')).toBe('ignored');
    expect(svc.submits).toHaveLength(0);

    session.markRendered('pair-1');
    expect(session.controlsEnabled).toBe(true);
  });

  it('markRendered for a stale pair does not enable controls', async () => {
    const svc = new MockService();
    svc.queue.push(pairPayload('pair-2'));
    const { session } = makeSession(svc);
    await session.fetchNext();
    session.markRendered('pair-1'); // stale id
    expect(session.controlsEnabled).toBe(false);
  });
});

describe('double-keypress latch', () => {
  it('sends exactly one request when a key is pressed twice before the response', async () => {
    const svc = new MockService();
    let release!: () => void;
    svc.submitDelay = new Promise((resolve) => {
      release = resolve;
    });
    const { session } = await startWith(svc);

    const first = session.handleKey('1');
    const second = session.handleKey('1'); // latched: submit in flight
    release();
    const results = await Promise.all([first, second]);
    expect(results.sort()).toEqual(['ignored', 'submitted']);
    expect(svc.submits).toHaveLength(1);
  });
});

describe('submit outcomes', () => {
  it('successful submit fetches the next pair', async () => {
    const svc = new MockService();
    const { session } = await startWith(svc, 'pair-1');
    svc.queue.push(pairPayload('pair-2'));
    await session.handleKey('1');
    expect(session.currentPair?.pair_id).toBe('pair-2');
  });

  it('lease expiry surfaces a reassignment banner and refetches', async () => {
    const svc = new MockService();
    const { session, banners } = await startWith(svc, 'pair-1');
    svc.queue.push(pairPayload('pair-2'));
    svc.submitError = new ApiRequestError('lease_expired', 409, 'lease lost');
    const result = await session.handleKey('2');
    expect(result).toBe('reassigned');
    expect(banners.some((b) => b.includes('reassigned'))).toBe(true);
    expect(session.currentPair?.pair_id).toBe('pair-2'); // auto-refetched
  });

  it('duplicate submission counts as recorded and moves on', async () => {
    const svc = new MockService();
    const { session } = await startWith(svc, 'pair-1');
    svc.queue.push(pairPayload('pair-2'));
    svc.submitError = new ApiRequestError('duplicate_submission', 409);
    expect(await session.handleKey('1')).toBe('already_recorded');
    expect(session.currentPair?.pair_id).toBe('pair-2');
  });

  it('network failure keeps the pair on screen for an idempotent retry', async () => {
    const svc = new MockService();
    const { session, banners } = await startWith(svc, 'pair-1');
    svc.submitError = new Error('connection reset');
    expect(await session.handleKey('1')).toBe('failed');
    expect(banners).toContain('connection reset');
    expect(session.currentPair?.pair_id).toBe('pair-1');
    // retry: same pair, one more call
    expect(await session.handleKey('1')).toBe('submitted');
    expect(svc.submits).toHaveLength(2);
    expect(svc.submits.every((s) => s.pairId === 'pair-1')).toBe(true);
  });

  it('never submits for a pair other than the one rendered', async () => {
    const svc = new MockService();
    const { session } = await startWith(svc, 'pair-1');
    svc.queue.push(pairPayload('pair-2'), pairPayload('pair-3'));
    await session.handleKey('1');
    session.markRendered('pair-2');
    await session.handleKey('2');
    expect(svc.submits.map((s) => s.pairId)).toEqual(['pair-1', 'pair-2']);
  });
});
