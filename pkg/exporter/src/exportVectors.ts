// Export per-position contextual query vectors for a corpus, in the side
// file format the attack engine reads. The dimension is checked against a
// previously exported index before anything is written.

import { EmbeddingModel } from "./model.js";
import {
  FormatError,
  SideRecord,
  readCorpus,
  readIndexDim,
  writeSideFile,
} from "./formats.js";

export interface VectorsJob {
  corpusPath: string;
  mode: "whitespace" | "char";
  checkIndexPath?: string;
  outPath: string;
}

export interface VectorsSummary {
  sentences: number;
  vectors: number;
}

export function exportQueryVectors(
  job: VectorsJob,
  model: EmbeddingModel,
): VectorsSummary {
  if (job.checkIndexPath !== undefined) {
    const indexDim = readIndexDim(job.checkIndexPath);
    if (indexDim !== model.dim) {
      throw new FormatError(
        `model dim ${model.dim} != index dim ${indexDim}; refusing to write`,
      );
    }
  }
  const corpus = readCorpus(job.corpusPath, job.mode);
  const records: SideRecord[] = [];
  for (const sentence of corpus) {
    const vecs = model.embedSentence(sentence.tokens);
    vecs.forEach((vector, position) => {
      records.push({ block: sentence.block, position, vector });
    });
  }
  writeSideFile(job.outPath, records);
  return { sentences: corpus.length, vectors: records.length };
}
