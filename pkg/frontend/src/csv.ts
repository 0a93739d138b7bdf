import { readFileSync } from "node:fs";
import Papa from "papaparse";
import { MissingFile, SchemaMismatch } from "./errors.js";

export interface Table {
  path: string;
  columns: string[];
  rows: Record<string, string>[];
}

/** Load a CSV produced by the experiment CLI. Empty files, files without a
 * data row and parse failures all raise SchemaMismatch: a silently empty
 * plot would hide a broken pipeline. */
export function readTable(path: string): Table {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (err) {
    if ((err as NodeJS.ErrnoException).code === "ENOENT") {
      throw new MissingFile(path);
    }
    throw err;
  }
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
    delimiter: ",",
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new SchemaMismatch(`${path}: ${first.message} (row ${first.row})`);
  }
  const columns = parsed.meta.fields ?? [];
  if (columns.length === 0 || (columns.length === 1 && columns[0] === "")) {
    throw new SchemaMismatch(`${path}: no header row`);
  }
  if (parsed.data.length === 0) {
    throw new SchemaMismatch(`${path}: no data rows`);
  }
  return { path, columns, rows: parsed.data };
}

export function requireColumns(table: Table, needed: string[]): Table {
  const missing = needed.filter((c) => !table.columns.includes(c));
  if (missing.length > 0) {
    throw new SchemaMismatch(
      `${table.path}: missing column(s) ${missing.join(", ")}; ` +
        `found ${table.columns.join(", ")}`,
    );
  }
  return table;
}

export function numeric(
  table: Table,
  row: Record<string, string>,
  column: string,
): number {
  const value = Number(row[column]);
  if (!Number.isFinite(value)) {
    throw new SchemaMismatch(
      `${table.path}: non-numeric value '${row[column]}' in column ${column}`,
    );
  }
  return value;
}

/** Distinct values of a column in first-appearance order (stable legends). */
export function distinct(table: Table, column: string): string[] {
  const seen: string[] = [];
  for (const row of table.rows) {
    const value = row[column];
    if (!seen.includes(value)) seen.push(value);
  }
  return seen;
}
