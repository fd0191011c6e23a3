// embedattack-exporter CLI.
//
//   index   --tokens FILE --sentences FILE --out FILE
//           [--dim N] [--layer N] [--cap N] [--model ID] [--mode whitespace|char]
//   vectors --corpus FILE --out FILE
//           [--dim N] [--layer N] [--model ID] [--mode whitespace|char]
//           [--check-index FILE]
//
// Exit codes: 0 success, 2 usage/input error, 3 runtime data error.

import { DEFAULT_MODEL_ID, ModelLoadError, loadModel } from "./model.js";
import { FormatError } from "./formats.js";
import { exportIndex } from "./exportIndex.js";
import { exportQueryVectors } from "./exportVectors.js";

interface Flags {
  [key: string]: string;
}

function parseFlags(argv: string[]): Flags {
  const flags: Flags = {};
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new FormatError(`bad argument: ${key}`);
    }
    flags[key.slice(2)] = argv[i + 1];
  }
  return flags;
}

function need(flags: Flags, key: string): string {
  const value = flags[key];
  if (value === undefined) {
    throw new FormatError(`missing required flag --${key}`);
  }
  return value;
}

function intFlag(flags: Flags, key: string, fallback: number): number {
  if (flags[key] === undefined) return fallback;
  const v = Number(flags[key]);
  if (!Number.isInteger(v)) {
    throw new FormatError(`--${key} must be an integer, got ${flags[key]}`);
  }
  return v;
}

function modeFlag(flags: Flags): "whitespace" | "char" {
  const mode = flags["mode"] ?? "whitespace";
  if (mode !== "whitespace" && mode !== "char") {
    throw new FormatError(`--mode must be whitespace or char, got ${mode}`);
  }
  return mode;
}

export function run(argv: string[]): number {
  const [command, ...rest] = argv;
  if (command !== "index" && command !== "vectors") {
    console.error("usage: exporter <index|vectors> --help-free flags (see source)");
    return 2;
  }
  const flags = parseFlags(rest);
  const model = loadModel(
    flags["model"] ?? DEFAULT_MODEL_ID,
    intFlag(flags, "dim", 32),
    intFlag(flags, "layer", 2),
  );
  if (command === "index") {
    const summary = exportIndex(
      {
        tokensPath: need(flags, "tokens"),
        sentencesPath: need(flags, "sentences"),
        cap: intFlag(flags, "cap", 100),
        mode: modeFlag(flags),
        outPath: need(flags, "out"),
      },
      model,
    );
    console.log(`tokens: ${summary.tokens}`);
    console.log(`records: ${summary.records}`);
    console.log(`skipped_tokens: ${summary.skippedTokens}`);
    console.log(`dim: ${model.dim}`);
    return 0;
  }
  const summary = exportQueryVectors(
    {
      corpusPath: need(flags, "corpus"),
      mode: modeFlag(flags),
      checkIndexPath: flags["check-index"],
      outPath: need(flags, "out"),
    },
    model,
  );
  console.log(`sentences: ${summary.sentences}`);
  console.log(`vectors: ${summary.vectors}`);
  console.log(`dim: ${model.dim}`);
  return 0;
}

function isUsageError(err: unknown): boolean {
  return (
    err instanceof FormatError ||
    err instanceof ModelLoadError ||
    (err instanceof Error && (err as NodeJS.ErrnoException).code === "ENOENT")
  );
}

try {
  process.exit(run(process.argv.slice(2)));
} catch (err) {
  console.error(`error: ${err instanceof Error ? err.message : err}`);
  process.exit(isUsageError(err) ? 2 : 3);
}
