/**
 * Deterministic test-mode behaviors. No model weights are touched, so the
 * protocol conformance suite (and any CI that consumes this adapter) runs
 * without downloads. The exact outputs are pinned by the golden transcripts
 * in ../transcripts/echo_mode.json, shared with the harness's client tests.
 */

export const ECHO_MODEL_ID = "echo";
export const ECHO_EMBED_DIM = 8;

/** First `count` whitespace words of the documents joined by single spaces. */
export function echoSummary(documents: string[], count = 10): string {
  const words = documents.join(" ").split(/\s+/).filter(Boolean);
  return words.slice(0, count).join(" ");
}

/** Whitespace words in reverse order. */
export function reverseWords(text: string): string {
  return text.split(/\s+/).filter(Boolean).reverse().join(" ");
}

/** FNV-1a 32-bit over UTF-8 bytes. */
export function fnv1a32(text: string): number {
  const bytes = new TextEncoder().encode(text);
  let hash = 0x811c9dc5;
  for (const byte of bytes) {
    hash ^= byte;
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash >>> 0;
}

/** Bag-of-words vector: token counts bucketed by FNV-1a hash modulo dim. */
export function echoEmbedding(text: string, dim = ECHO_EMBED_DIM): number[] {
  const vector = new Array<number>(dim).fill(0);
  for (const token of text.toLowerCase().split(/\s+/).filter(Boolean)) {
    vector[fnv1a32(token) % dim] += 1;
  }
  return vector;
}
