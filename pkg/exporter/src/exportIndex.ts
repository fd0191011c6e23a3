// Build the contextual index: for every requested token, embed its
// occurrences inside up to `cap` containing sentences from the pool, one
// index record per occurrence, tagged with the pool sentence index.

import { EmbeddingModel } from "./model.js";
import {
  FormatError,
  IndexRecord,
  readLines,
  readTokenList,
  tokenize,
  writeIndexFile,
} from "./formats.js";

export class EmptySentencePool extends Error {}

export interface ExportJob {
  tokensPath: string;
  sentencesPath: string;
  cap: number;
  mode: "whitespace" | "char";
  outPath: string;
}

export interface IndexSummary {
  tokens: number;
  records: number;
  skippedTokens: number;
  occurrences: Map<string, number>;
}

export function exportIndex(job: ExportJob, model: EmbeddingModel): IndexSummary {
  if (job.cap < 1) {
    throw new FormatError(`sentence cap must be positive, got ${job.cap}`);
  }
  const tokens = readTokenList(job.tokensPath);
  const pool = readLines(job.sentencesPath).map((s) => tokenize(s, job.mode));
  if (pool.length === 0) {
    throw new EmptySentencePool(`sentence pool ${job.sentencesPath} is empty`);
  }

  // embed each pool sentence once, reuse across tokens
  const embedded = new Map<number, number[][]>();
  const embeddingOf = (idx: number): number[][] => {
    let vecs = embedded.get(idx);
    if (vecs === undefined) {
      vecs = model.embedSentence(pool[idx]);
      embedded.set(idx, vecs);
    }
    return vecs;
  };

  const records: IndexRecord[] = [];
  const occurrences = new Map<string, number>();
  let skipped = 0;
  for (const token of tokens) {
    let sentencesUsed = 0;
    let count = 0;
    for (let s = 0; s < pool.length && sentencesUsed < job.cap; s++) {
      if (!pool[s].includes(token)) continue;
      sentencesUsed += 1;
      const vecs = embeddingOf(s);
      pool[s].forEach((tok, position) => {
        if (tok !== token) return;
        records.push({ token, sourceId: s, vector: vecs[position] });
        count += 1;
      });
    }
    if (count === 0) {
      skipped += 1;
      console.error(`warning: no pool sentence contains token ${JSON.stringify(token)}`);
    } else {
      occurrences.set(token, count);
    }
  }

  writeIndexFile(job.outPath, model.dim, records);
  return {
    tokens: tokens.length,
    records: records.length,
    skippedTokens: skipped,
    occurrences,
  };
}
