/** Thin typed client for the annotation service. */

import type { Decision, NextResponse, ProgressReport, SubmitResponse } from './types.js';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Raised for non-2xx responses; carries the service's machine-readable code. */
export class ApiRequestError extends Error {
  constructor(
    public readonly code: string,
    public readonly status: number,
    detail?: string,
  ) {
    super(detail ?? code);
  }
}

async function parseError(res: Response): Promise<ApiRequestError> {
  try {
    const body = await res.json();
    return new ApiRequestError(body.code ?? 'unknown', res.status, body.detail);
  } catch {
    return new ApiRequestError('unknown', res.status);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async fetchNext(annotator: string): Promise<NextResponse> {
    const res = await this.fetchImpl(
      `${this.baseUrl}/api/next?annotator=${encodeURIComponent(annotator)}`,
    );
    if (!res.ok) throw await parseError(res);
    return res.json();
  }

  async submit(annotator: string, pairId: string, decision: Decision): Promise<SubmitResponse> {
    const res = await this.fetchImpl(`${this.baseUrl}/api/submit`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ annotator, pair_id: pairId, decision }),
    });
    if (!res.ok) throw await parseError(res);
    return res.json();
  }

  async progress(): Promise<ProgressReport> {
    const res = await this.fetchImpl(`${this.baseUrl}/api/progress`);
    if (!res.ok) throw await parseError(res);
    return res.json();
  }

  imageUrl(pairId: string): string {
    return `${this.baseUrl}/api/pair/${encodeURIComponent(pairId)}/image`;
  }
}
