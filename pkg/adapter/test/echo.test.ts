import { describe, expect, it } from "vitest";

import { echoEmbedding, echoSummary, fnv1a32, reverseWords } from "../src/echo.js";

describe("echoSummary", () => {
  it("returns the first ten words across documents", () => {
    const documents = ["one two three four five six", "seven eight nine ten eleven"];
    expect(echoSummary(documents)).toBe("one two three four five six seven eight nine ten");
  });

  it("returns everything when the input is short", () => {
    expect(echoSummary(["just three words"])).toBe("just three words");
  });

  it("collapses whitespace runs", () => {
    expect(echoSummary(["a  b\tc"])).toBe("a b c");
  });
});

describe("reverseWords", () => {
  it("reverses word order", () => {
    expect(reverseWords("a b")).toBe("b a");
  });

  it("handles a single word", () => {
    expect(reverseWords("single")).toBe("single");
  });
});

describe("fnv1a32", () => {
  it("matches the published test vectors", () => {
    // FNV-1a 32-bit reference values
    expect(fnv1a32("")).toBe(0x811c9dc5);
    expect(fnv1a32("a")).toBe(0xe40c292c);
    expect(fnv1a32("foobar")).toBe(0xbf9cf968);
  });
});

describe("echoEmbedding", () => {
  it("is deterministic and case-insensitive", () => {
    expect(echoEmbedding("Alpha beta")).toEqual(echoEmbedding("alpha BETA"));
  });

  it("produces the declared dimension", () => {
    expect(echoEmbedding("a b c", 8)).toHaveLength(8);
    expect(echoEmbedding("a b c", 16)).toHaveLength(16);
  });

  it("counts tokens into hash buckets", () => {
    const vector = echoEmbedding("x x y");
    const total = vector.reduce((sum, value) => sum + value, 0);
    expect(total).toBe(3);
  });
});
