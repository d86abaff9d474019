/**
 * HTTP server speaking the harness wire protocol.
 *
 * POST /summarize  {request_id, documents, additional_input?, max_words?}
 * POST /transform  {request_id, text}
 * POST /embed      {request_id, texts}
 *
 * Errors come back as {request_id, error} with a 4xx/5xx status; a failing
 * request never takes the server down. Requests are processed sequentially
 * by node's event loop; content-derived request ids on the client side make
 * pipelining and retries safe.
 */

import { pathToFileURL } from "node:url";

import express, { type Express, type Request, type Response } from "express";

import {
  ECHO_EMBED_DIM,
  ECHO_MODEL_ID,
  echoEmbedding,
  echoSummary,
  reverseWords,
} from "./echo.js";
import { DEFAULT_MODELS, ModelBackend, type ModelConfig } from "./models.js";
import { isNonEmptyStringArray } from "./protocol.js";

export interface AdapterConfig {
  port: number;
  testMode: boolean;
  embedDim: number;
  models: ModelConfig;
}

export const DEFAULT_CONFIG: AdapterConfig = {
  port: 8765,
  testMode: false,
  embedDim: ECHO_EMBED_DIM,
  models: DEFAULT_MODELS,
};

function sendError(res: Response, status: number, requestId: unknown, message: string): void {
  const request_id = typeof requestId === "string" ? requestId : null;
  res.status(status).json({ request_id, error: message });
}

export function createApp(config: AdapterConfig): Express {
  if (
    !config.testMode &&
    !config.models.summarizerModel &&
    !config.models.embedModel &&
    !(config.models.translateEnDa && config.models.translateDaEn)
  ) {
    throw new Error("no capability enabled: provide at least one model id or --test-mode");
  }
  const backend = new ModelBackend(config.models);
  const app = express();
  app.use(express.json({ limit: "50mb" }));

  app.post("/summarize", async (req: Request, res: Response) => {
    const body = req.body ?? {};
    if (typeof body.request_id !== "string") {
      return sendError(res, 400, body.request_id, "request_id must be a string");
    }
    if (!isNonEmptyStringArray(body.documents)) {
      return sendError(res, 400, body.request_id, "documents must be a non-empty string array");
    }
    if (body.max_words != null && typeof body.max_words !== "number") {
      return sendError(res, 400, body.request_id, "max_words must be a number or null");
    }
    try {
      if (config.testMode) {
        return res.json({
          request_id: body.request_id,
          summary: echoSummary(body.documents),
          model_id: ECHO_MODEL_ID,
        });
      }
      const { summary, modelId } = await backend.summarize(
        body.documents,
        body.max_words ?? null,
      );
      return res.json({ request_id: body.request_id, summary, model_id: modelId });
    } catch (error) {
      return sendError(res, 500, body.request_id, String(error));
    }
  });

  app.post("/transform", async (req: Request, res: Response) => {
    const body = req.body ?? {};
    if (typeof body.request_id !== "string") {
      return sendError(res, 400, body.request_id, "request_id must be a string");
    }
    if (typeof body.text !== "string") {
      return sendError(res, 400, body.request_id, "text must be a string");
    }
    try {
      const text = config.testMode ? reverseWords(body.text) : await backend.transform(body.text);
      return res.json({ request_id: body.request_id, text });
    } catch (error) {
      return sendError(res, 500, body.request_id, String(error));
    }
  });

  app.post("/embed", async (req: Request, res: Response) => {
    const body = req.body ?? {};
    if (typeof body.request_id !== "string") {
      return sendError(res, 400, body.request_id, "request_id must be a string");
    }
    if (!isNonEmptyStringArray(body.texts)) {
      return sendError(res, 400, body.request_id, "texts must be a non-empty string array");
    }
    try {
      const vectors = config.testMode
        ? body.texts.map((text: string) => echoEmbedding(text, config.embedDim))
        : await backend.embed(body.texts);
      return res.json({ request_id: body.request_id, vectors });
    } catch (error) {
      return sendError(res, 500, body.request_id, String(error));
    }
  });

  app.use((req: Request, res: Response) => {
    sendError(res, 404, null, `no such endpoint: ${req.method} ${req.path}`);
  });

  return app;
}

function parseArgs(argv: string[]): AdapterConfig {
  const config: AdapterConfig = {
    ...DEFAULT_CONFIG,
    models: { ...DEFAULT_MODELS },
  };
  for (let i = 0; i < argv.length; i += 1) {
    const arg = argv[i];
    const next = () => {
      i += 1;
      if (i >= argv.length) throw new Error(`missing value for ${arg}`);
      return argv[i];
    };
    switch (arg) {
      case "--port":
        config.port = Number(next());
        break;
      case "--test-mode":
        config.testMode = true;
        break;
      case "--embed-dim":
        config.embedDim = Number(next());
        break;
      case "--summarizer-model":
        config.models.summarizerModel = next();
        break;
      case "--embed-model":
        config.models.embedModel = next();
        break;
      case "--translate-en-da":
        config.models.translateEnDa = next();
        break;
      case "--translate-da-en":
        config.models.translateDaEn = next();
        break;
      case "--doc-separator":
        config.models.docSeparator = next();
        break;
      case "--max-new-tokens":
        config.models.maxNewTokens = Number(next());
        break;
      default:
        throw new Error(`unknown argument: ${arg}`);
    }
  }
  if (!Number.isInteger(config.port) || config.port < 1 || config.port > 65535) {
    throw new Error(`invalid port: ${config.port}`);
  }
  return config;
}

export function main(argv = process.argv.slice(2)): void {
  const config = parseArgs(argv);
  const app = createApp(config);
  app.listen(config.port, () => {
    const mode = config.testMode ? "test mode (echo)" : "model mode";
    console.log(`adapter listening on :${config.port} in ${mode}`);
  });
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  main();
}
