import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";
import { distinct, numeric, readTable, requireColumns } from "../src/csv.js";
import { MissingFile, SchemaMismatch } from "../src/errors.js";

const FIXTURES = fileURLToPath(new URL("./fixtures", import.meta.url));

function tempCsv(content: string): string {
  const dir = mkdtempSync(join(tmpdir(), "plotview-"));
  const path = join(dir, "t.csv");
  writeFileSync(path, content);
  return path;
}

describe("readTable", () => {
  it("parses a fixture with header and rows", () => {
    const table = readTable(join(FIXTURES, "nodes.csv"));
    expect(table.columns).toEqual(["node", "x", "y", "regressor_power"]);
    expect(table.rows.length).toBe(10);
    expect(table.rows[0].node).toBe("0");
  });

  it("raises MissingFile for absent paths", () => {
    expect(() => readTable(join(FIXTURES, "absent.csv"))).toThrow(MissingFile);
  });

  it("raises SchemaMismatch for an empty file", () => {
    expect(() => readTable(tempCsv(""))).toThrow(SchemaMismatch);
  });

  it("raises SchemaMismatch for a header without rows", () => {
    expect(() => readTable(tempCsv("iter,algorithm,msd_db\n"))).toThrow(
      SchemaMismatch,
    );
  });
});

describe("requireColumns", () => {
  it("accepts present columns and names missing ones", () => {
    const table = readTable(join(FIXTURES, "curves.csv"));
    expect(requireColumns(table, ["iter", "msd_db"])).toBe(table);
    expect(() => requireColumns(table, ["iter", "bogus"])).toThrow(/bogus/);
  });
});

describe("numeric", () => {
  it("rejects non-numeric cells", () => {
    const table = readTable(tempCsv("a,b\n1,x\n"));
    expect(numeric(table, table.rows[0], "a")).toBe(1);
    expect(() => numeric(table, table.rows[0], "b")).toThrow(SchemaMismatch);
  });
});

describe("distinct", () => {
  it("keeps first-appearance order", () => {
    const table = readTable(tempCsv("k\nbeta\nalpha\nbeta\ngamma\n"));
    expect(distinct(table, "k")).toEqual(["beta", "alpha", "gamma"]);
  });
});
