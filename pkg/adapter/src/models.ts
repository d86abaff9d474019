/**
 * Model-backed capabilities via transformers.js. Pipelines load lazily on
 * first use so the server starts instantly and test mode never touches them.
 * Documents are joined with the model's separator token before generation;
 * the harness never inserts separators itself.
 */

export interface ModelConfig {
  summarizerModel?: string;
  embedModel?: string;
  translateEnDa?: string;
  translateDaEn?: string;
  docSeparator: string;
  maxNewTokens: number;
}

export const DEFAULT_MODELS: ModelConfig = {
  summarizerModel: "Xenova/distilbart-cnn-6-6",
  embedModel: "Xenova/all-MiniLM-L6-v2",
  translateEnDa: "Xenova/opus-mt-en-da",
  translateDaEn: "Xenova/opus-mt-da-en",
  docSeparator: "<doc-sep>",
  maxNewTokens: 256,
};

type Pipeline = (input: string, options?: Record<string, unknown>) => Promise<unknown>;

export class ModelBackend {
  private config: ModelConfig;
  private pipelines = new Map<string, Promise<Pipeline>>();

  constructor(config: ModelConfig) {
    this.config = config;
  }

  private load(task: string, model: string): Promise<Pipeline> {
    const key = `${task}:${model}`;
    let cached = this.pipelines.get(key);
    if (!cached) {
      cached = import("@xenova/transformers").then(
        ({ pipeline }) => pipeline(task, model) as Promise<Pipeline>,
      );
      this.pipelines.set(key, cached);
    }
    return cached;
  }

  async summarize(documents: string[], maxWords: number | null): Promise<{ summary: string; modelId: string }> {
    const model = this.config.summarizerModel;
    if (!model) throw new Error("summarization capability is not enabled");
    const generate = await this.load("summarization", model);
    const input = documents.join(` ${this.config.docSeparator} `);
    const maxNewTokens = maxWords
      ? Math.max(8, Math.round(maxWords * 1.5))
      : this.config.maxNewTokens;
    const output = (await generate(input, { max_new_tokens: maxNewTokens })) as Array<{
      summary_text: string;
    }>;
    let summary = output[0].summary_text.trim();
    if (maxWords) {
      summary = summary.split(/\s+/).slice(0, maxWords).join(" ");
    }
    return { summary, modelId: model };
  }

  /** EN -> DA -> EN round trip for token-level paraphrasing. */
  async transform(text: string): Promise<string> {
    const { translateEnDa, translateDaEn } = this.config;
    if (!translateEnDa || !translateDaEn) {
      throw new Error("translation capability is not enabled");
    }
    const toDanish = await this.load("translation", translateEnDa);
    const toEnglish = await this.load("translation", translateDaEn);
    const danish = (await toDanish(text)) as Array<{ translation_text: string }>;
    const english = (await toEnglish(danish[0].translation_text)) as Array<{
      translation_text: string;
    }>;
    return english[0].translation_text;
  }

  /** Mean-pooled sentence embeddings. */
  async embed(texts: string[]): Promise<number[][]> {
    const model = this.config.embedModel;
    if (!model) throw new Error("embedding capability is not enabled");
    const extract = await this.load("feature-extraction", model);
    const vectors: number[][] = [];
    for (const text of texts) {
      const output = (await extract(text, { pooling: "mean", normalize: false })) as {
        data: Float32Array;
      };
      vectors.push(Array.from(output.data));
    }
    return vectors;
  }
}
