import { describe, expect, it } from 'vitest';

import { ApiClient, ApiRequestError } from '../src/api.js';

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

describe('ApiClient', () => {
  it('fetchNext hits /api/next with the annotator query parameter', async () => {
    const calls: string[] = [];
    const client = new ApiClient('', async (input) => {
      calls.push(input);
      return jsonResponse({ pair: null });
    });
    const res = await client.fetchNext('ann one');
    expect(res.pair).toBeNull();
    expect(calls).toEqual(['/api/next?annotator=ann%20one']);
  });

  it('submit posts the decision body once', async () => {
    const bodies: unknown[] = [];
    const client = new ApiClient('http://svc', async (input, init) => {
      expect(input).toBe('http://svc/api/submit');
      expect(init?.method).toBe('POST');
      bodies.push(JSON.parse(String(init?.body)));
      return jsonResponse({ pair_id: 'p1', status: 'awaiting_verification' });
    });
    await client.submit('alice', 'p1', 'first_closer');
    expect(bodies).toEqual([
      { annotator: 'alice', pair_id: 'p1', decision: 'first_closer' },
    ]);
  });

  it('non-2xx responses become ApiRequestError with the service code', async () => {
    const client = new ApiClient('', async () =>
      jsonResponse({ code: 'lease_expired', detail: 'gone' }, 409),
    );
    await expect(client.submit('a', 'p', 'skip')).rejects.toMatchObject({
      code: 'lease_expired',
      status: 409,
    });
    await expect(client.fetchNext('a')).rejects.toBeInstanceOf(ApiRequestError);
  });

  it('imageUrl escapes the pair id', () => {
    const client = new ApiClient('');
    expect(client.imageUrl('im0#1')).toBe('/api/pair/im0%231/image');
  });

  it('progress returns the report', async () => {
    const client = new ApiClient('', async () =>
      jsonResponse({ total: 3, by_status: { queued: 3 }, by_scenario: {} }),
    );
    const report = await client.progress();
    expect(report.by_status.queued).toBe(3);
  });
});
