/** Payload types of the annotation service HTTP API. */

export type Decision = 'first_closer' | 'second_closer' | 'skip';

export type Role = 'primary' | 'verifier';

export interface PairPayload {
  pair_id: string;
  image_id: string;
  p1: [number, number];
  p2: [number, number];
  scenario: string;
  origin: string;
  label: string;
  label_source: string;
  role: Role;
  lease_expiry: number;
}

export interface NextResponse {
  pair: PairPayload | null;
}

export interface SubmitResponse {
  pair_id: string;
  status: string;
  discard_reason: string | null;
  final_label: string | null;
}

export interface ProgressReport {
  total: number;
  by_status: Record<string, number>;
  by_scenario: Record<string, Record<string, number>>;
}

export interface ApiError {
  code: string;
  detail?: string;
}
