// Readers for the corpus/token/sentence-pool inputs and writers for the
// two file formats the attack engine consumes: the contextual index
// ("<dim>" header, then "<token> <source_id> <f1> ... <fdim>") and the
// side-vector file ("<block> <position> <f1> ... <fd>").

import * as fs from "node:fs";

export class FormatError extends Error {}

/** Vectors are serialized with 6 significant decimal digits. */
export function fmt(x: number): string {
  if (x === 0) return "0";
  return x.toPrecision(6);
}

export function tokenize(text: string, mode: "whitespace" | "char"): string[] {
  if (mode === "whitespace") {
    return text.toLowerCase().split(/\s+/).filter((t) => t.length > 0);
  }
  return Array.from(text).filter((ch) => !/\s/.test(ch));
}

export function readLines(path: string): string[] {
  const body = fs.readFileSync(path, "utf-8");
  return body.split("\n").filter((line) => line.length > 0);
}

export function readTokenList(path: string): string[] {
  const tokens = readLines(path).map((l) => l.trim()).filter((l) => l.length > 0);
  if (tokens.length === 0) {
    throw new FormatError(`token list ${path} is empty`);
  }
  return tokens;
}

export interface CorpusSentence {
  tokens: string[];
  label: number;
  block: number;
}

/** Primary corpus format: text<TAB>label[<TAB>mask[<TAB>side_ref]]. */
export function readCorpus(
  path: string,
  mode: "whitespace" | "char",
): CorpusSentence[] {
  const out: CorpusSentence[] = [];
  readLines(path).forEach((line, i) => {
    const parts = line.split("\t");
    if (parts.length < 2 || parts.length > 4) {
      throw new FormatError(`corpus line ${i + 1}: expected 2-4 fields`);
    }
    const tokens = tokenize(parts[0], mode);
    if (tokens.length === 0) {
      throw new FormatError(`corpus line ${i + 1}: empty sentence`);
    }
    const label = Number(parts[1]);
    if (!Number.isInteger(label) || label < 0) {
      throw new FormatError(`corpus line ${i + 1}: bad label ${parts[1]}`);
    }
    let block = i;
    if (parts.length === 4 && parts[3] !== "-") {
      block = Number(parts[3]);
      if (!Number.isInteger(block)) {
        throw new FormatError(`corpus line ${i + 1}: bad side reference`);
      }
    }
    out.push({ tokens, label, block });
  });
  return out;
}

export function readIndexDim(path: string): number {
  const header = readLines(path)[0];
  const dim = Number(header?.trim());
  if (!Number.isInteger(dim) || dim < 1) {
    throw new FormatError(`bad index header in ${path}`);
  }
  return dim;
}

export interface IndexRecord {
  token: string;
  sourceId: number;
  vector: number[];
}

export function writeIndexFile(path: string, dim: number, records: IndexRecord[]): void {
  const lines = [String(dim)];
  for (const rec of records) {
    lines.push(`${rec.token} ${rec.sourceId} ${rec.vector.map(fmt).join(" ")}`);
  }
  fs.writeFileSync(path, lines.join("\n") + "\n", "utf-8");
}

export interface SideRecord {
  block: number;
  position: number;
  vector: number[];
}

export function writeSideFile(path: string, records: SideRecord[]): void {
  const lines = records.map(
    (rec) => `${rec.block} ${rec.position} ${rec.vector.map(fmt).join(" ")}`,
  );
  fs.writeFileSync(path, lines.join("\n") + "\n", "utf-8");
}
