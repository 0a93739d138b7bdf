#!/usr/bin/env node
import { writeFileSync } from "node:fs";
import { resolve } from "node:path";
import { fileURLToPath } from "node:url";
import { parseArgs } from "node:util";
import { MissingFile, SchemaMismatch } from "./errors.js";
import { FIGURE_KINDS, FigureKind, renderFigure } from "./figures.js";

const USAGE =
  "usage: plotview <figure-kind> --in <csv> [--in <csv>] --out <file.svg>\n" +
  `figure kinds: ${FIGURE_KINDS.join(", ")}\n` +
  "layout takes two inputs (nodes.csv then edges.csv); the rest take one.";

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        in: { type: "string", multiple: true },
        out: { type: "string" },
      },
    });
  } catch (err) {
    process.stderr.write(`${(err as Error).message}\n${USAGE}\n`);
    return 2;
  }
  const kind = parsed.positionals[0];
  const inputs = parsed.values.in ?? [];
  const out = parsed.values.out;
  if (
    parsed.positionals.length !== 1 ||
    !FIGURE_KINDS.includes(kind as FigureKind) ||
    inputs.length === 0 ||
    out === undefined
  ) {
    process.stderr.write(`${USAGE}\n`);
    return 2;
  }
  if (!out.endsWith(".svg")) {
    process.stderr.write("output must be an .svg path (vector only)\n");
    return 2;
  }
  try {
    const svg = renderFigure(kind as FigureKind, inputs);
    writeFileSync(out, svg);
  } catch (err) {
    if (err instanceof MissingFile || err instanceof SchemaMismatch) {
      process.stderr.write(`${err.name}: ${err.message}\n`);
      return 2;
    }
    throw err;
  }
  process.stdout.write(`wrote ${out}\n`);
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  resolve(process.argv[1]) === fileURLToPath(import.meta.url);

if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
