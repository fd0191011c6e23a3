// The built-in contextual embedding model.
//
// No pretrained network weights are downloadable in the build environment,
// so the exporter ships a deterministic stand-in with the same interface a
// real language-model backend would use: a token's base vector comes from
// hashed character trigrams (multi-piece tokens are pooled by averaging
// their piece vectors), and "layers" of neighbor mixing make the final
// vector depend on the sentence context. Identical inputs always produce
// identical vectors.

import { streamFor } from "./rng.js";

export class ModelLoadError extends Error {}

export interface EmbeddingModel {
  readonly id: string;
  readonly dim: number;
  readonly layer: number;
  /** One vector per token of the sentence. */
  embedSentence(tokens: string[]): number[][];
}

const CONTEXT_WINDOW = 4;
const NEIGHBOR_WEIGHT = 0.5;

function normalize(v: number[]): number[] {
  const norm = Math.sqrt(v.reduce((s, x) => s + x * x, 0));
  if (norm === 0) return v.slice();
  return v.map((x) => x / norm);
}

function pieceVector(piece: string, dim: number, modelId: string): number[] {
  const draw = streamFor(`${modelId}|piece|${piece}`);
  const v = new Array<number>(dim);
  for (let i = 0; i < dim; i++) v[i] = draw() * 2 - 1;
  return v;
}

/** Character trigrams over the padded token; short tokens yield one piece. */
export function pieces(token: string): string[] {
  const padded = `^${token}$`;
  if (padded.length <= 3) return [padded];
  const out: string[] = [];
  for (let i = 0; i + 3 <= padded.length; i++) out.push(padded.slice(i, i + 3));
  return out;
}

export class HashContextEmbedder implements EmbeddingModel {
  constructor(
    readonly id: string,
    readonly dim: number,
    readonly layer: number,
  ) {}

  baseVector(token: string): number[] {
    const parts = pieces(token).map((p) => pieceVector(p, this.dim, this.id));
    const pooled = new Array<number>(this.dim).fill(0);
    for (const part of parts) {
      for (let i = 0; i < this.dim; i++) pooled[i] += part[i];
    }
    for (let i = 0; i < this.dim; i++) pooled[i] /= parts.length;
    return normalize(pooled);
  }

  embedSentence(tokens: string[]): number[][] {
    let states = tokens.map((t) => this.baseVector(t));
    for (let round = 0; round < this.layer; round++) {
      const next: number[][] = [];
      for (let i = 0; i < states.length; i++) {
        const mixed = states[i].slice();
        for (let d = 1; d <= CONTEXT_WINDOW; d++) {
          const w = Math.pow(NEIGHBOR_WEIGHT, d);
          for (const j of [i - d, i + d]) {
            if (j < 0 || j >= states.length) continue;
            for (let k = 0; k < this.dim; k++) mixed[k] += w * states[j][k];
          }
        }
        next.push(normalize(mixed));
      }
      states = next;
    }
    return states;
  }
}

export const DEFAULT_MODEL_ID = "ctx-hash-v1";

export function loadModel(id: string, dim: number, layer: number): EmbeddingModel {
  if (dim < 1 || !Number.isInteger(dim)) {
    throw new ModelLoadError(`embedding dim must be a positive integer, got ${dim}`);
  }
  if (layer < 0 || !Number.isInteger(layer)) {
    throw new ModelLoadError(`layer must be a nonnegative integer, got ${layer}`);
  }
  if (id === DEFAULT_MODEL_ID) {
    return new HashContextEmbedder(id, dim, layer);
  }
  throw new ModelLoadError(`unknown model identifier: ${id}`);
}
