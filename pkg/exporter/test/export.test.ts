import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { DEFAULT_MODEL_ID, loadModel } from "../src/model.js";
import { FormatError, fmt, readCorpus, readIndexDim } from "../src/formats.js";
import { EmptySentencePool, exportIndex } from "../src/exportIndex.js";
import { exportQueryVectors } from "../src/exportVectors.js";

let dir: string;

beforeEach(() => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), "exporter-"));
});

afterEach(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

function write(name: string, body: string): string {
  const p = path.join(dir, name);
  fs.writeFileSync(p, body, "utf-8");
  return p;
}

const model = loadModel(DEFAULT_MODEL_ID, 8, 2);

describe("fmt", () => {
  it("keeps 6 significant digits and parses as a float", () => {
    expect(fmt(0)).toBe("0");
    expect(fmt(1 / 3)).toBe("0.333333");
    expect(Number.isFinite(Number(fmt(-1.23456789e-7)))).toBe(true);
  });
});

describe("exportIndex", () => {
  it("writes one record per occurrence, capped by sentences", () => {
    const tokens = write("tokens.txt", "cat\ndog\n");
    const pool = write(
      "pool.txt",
      ["the cat sat", "a dog met a cat", "dog dog dog", "cat nap"].join("\n") + "\n",
    );
    const out = path.join(dir, "index.txt");
    const summary = exportIndex(
      { tokensPath: tokens, sentencesPath: pool, cap: 100, mode: "whitespace", outPath: out },
      model,
    );
    // cat: 1 + 1 + 1 occurrences; dog: 1 + 3
    expect(summary.records).toBe(7);
    expect(summary.skippedTokens).toBe(0);
    expect(summary.occurrences.get("cat")).toBe(3);
    expect(summary.occurrences.get("dog")).toBe(4);
    expect(readIndexDim(out)).toBe(8);
    const lines = fs.readFileSync(out, "utf-8").trim().split("\n");
    expect(lines).toHaveLength(8); // header + 7 records
    const fields = lines[1].split(" ");
    expect(fields[0]).toBe("cat");
    expect(Number(fields[1])).toBe(0); // pool sentence tag
    expect(fields.length).toBe(2 + 8);
  });

  it("caps the sentences used per token", () => {
    const tokens = write("tokens.txt", "cat\n");
    const pool = write("pool.txt", "cat a\ncat b\ncat c\n");
    const out = path.join(dir, "index.txt");
    const summary = exportIndex(
      { tokensPath: tokens, sentencesPath: pool, cap: 2, mode: "whitespace", outPath: out },
      model,
    );
    expect(summary.records).toBe(2);
  });

  it("skips tokens with no example sentences, with a count", () => {
    const tokens = write("tokens.txt", "cat\nunseen\n");
    const pool = write("pool.txt", "the cat\n");
    const out = path.join(dir, "index.txt");
    const summary = exportIndex(
      { tokensPath: tokens, sentencesPath: pool, cap: 100, mode: "whitespace", outPath: out },
      model,
    );
    expect(summary.records).toBe(1);
    expect(summary.skippedTokens).toBe(1);
  });

  it("rejects an empty sentence pool", () => {
    const tokens = write("tokens.txt", "cat\n");
    const pool = write("pool.txt", "");
    expect(() =>
      exportIndex(
        {
          tokensPath: tokens,
          sentencesPath: pool,
          cap: 100,
          mode: "whitespace",
          outPath: path.join(dir, "index.txt"),
        },
        model,
      ),
    ).toThrow(EmptySentencePool);
  });

  it("is byte-deterministic across runs", () => {
    const tokens = write("tokens.txt", "cat\ndog\n");
    const pool = write("pool.txt", "cat dog\ndog cat cat\n");
    const a = path.join(dir, "a.txt");
    const b = path.join(dir, "b.txt");
    exportIndex(
      { tokensPath: tokens, sentencesPath: pool, cap: 100, mode: "whitespace", outPath: a },
      model,
    );
    exportIndex(
      { tokensPath: tokens, sentencesPath: pool, cap: 100, mode: "whitespace", outPath: b },
      model,
    );
    expect(fs.readFileSync(a, "utf-8")).toBe(fs.readFileSync(b, "utf-8"));
  });
});

describe("exportQueryVectors", () => {
  it("writes one vector per (sentence, position)", () => {
    const corpus = write("corpus.tsv", "one two three four\t0\n");
    const out = path.join(dir, "side.txt");
    const summary = exportQueryVectors(
      { corpusPath: corpus, mode: "whitespace", outPath: out },
      model,
    );
    expect(summary.vectors).toBe(4);
    const lines = fs.readFileSync(out, "utf-8").trim().split("\n");
    expect(lines).toHaveLength(4);
    expect(lines[2].split(" ").slice(0, 2)).toEqual(["0", "2"]);
  });

  it("uses the declared side reference as the block id", () => {
    const corpus = write("corpus.tsv", "one two\t1\t-\t7\n");
    const out = path.join(dir, "side.txt");
    exportQueryVectors({ corpusPath: corpus, mode: "whitespace", outPath: out }, model);
    const lines = fs.readFileSync(out, "utf-8").trim().split("\n");
    expect(lines[0].split(" ")[0]).toBe("7");
  });

  it("refuses to write on an index dimension mismatch", () => {
    const corpus = write("corpus.tsv", "one two\t0\n");
    const index = write("index.txt", "16\n");
    const out = path.join(dir, "side.txt");
    expect(() =>
      exportQueryVectors(
        { corpusPath: corpus, mode: "whitespace", checkIndexPath: index, outPath: out },
        model,
      ),
    ).toThrow(FormatError);
    expect(fs.existsSync(out)).toBe(false);
  });

  it("emits identical lines for identical sentences", () => {
    const corpus = write("corpus.tsv", "same words here\t0\nsame words here\t1\n");
    const out = path.join(dir, "side.txt");
    exportQueryVectors({ corpusPath: corpus, mode: "whitespace", outPath: out }, model);
    const lines = fs.readFileSync(out, "utf-8").trim().split("\n");
    const strip = (l: string) => l.split(" ").slice(2).join(" ");
    expect(strip(lines[0])).toBe(strip(lines[3]));
    expect(strip(lines[1])).toBe(strip(lines[4]));
    expect(strip(lines[2])).toBe(strip(lines[5]));
  });

  it("parses char-mode corpora per character", () => {
    const corpus = write("corpus.tsv", "什么\t0\n");
    expect(readCorpus(corpus, "char")[0].tokens).toEqual(["什", "么"]);
  });
});
