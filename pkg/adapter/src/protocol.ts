/** Wire protocol bodies. All endpoints echo the caller's request_id. */

export interface SummarizeRequest {
  request_id: string;
  documents: string[];
  additional_input?: string | null;
  max_words?: number | null;
}

export interface SummarizeResponse {
  request_id: string;
  summary: string;
  model_id: string;
}

export interface TransformRequest {
  request_id: string;
  text: string;
}

export interface TransformResponse {
  request_id: string;
  text: string;
}

export interface EmbedRequest {
  request_id: string;
  texts: string[];
}

export interface EmbedResponse {
  request_id: string;
  vectors: number[][];
}

export interface ErrorResponse {
  request_id: string | null;
  error: string;
}

export function isNonEmptyStringArray(value: unknown): value is string[] {
  return (
    Array.isArray(value) &&
    value.length > 0 &&
    value.every((item) => typeof item === "string")
  );
}
