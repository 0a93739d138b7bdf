import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";
import { SchemaMismatch } from "../src/errors.js";
import { FIGURE_KINDS, renderFigure } from "../src/figures.js";

const FIXTURES = fileURLToPath(new URL("./fixtures", import.meta.url));

const INPUTS: Record<string, string[]> = {
  layout: [join(FIXTURES, "nodes.csv"), join(FIXTURES, "edges.csv")],
  curves: [join(FIXTURES, "curves.csv")],
  gain_vs_nu: [join(FIXTURES, "gain.csv")],
  sparsity_sweep: [join(FIXTURES, "sweep.csv")],
  per_node_bars: [join(FIXTURES, "per_node.csv")],
  tracking: [join(FIXTURES, "tracking.csv")],
};

const EXPECT_TEXT: Record<string, string[]> = {
  layout: ["communication edge", "dependency edge"],
  curves: ["Network MSD learning curves", "ATC-GMRF"],
  gain_vs_nu: ["kappa=0.1", "nugget"],
  sparsity_sweep: ["support size", "ACS"],
  per_node_bars: ["(simulation)", "theory"],
  tracking: ["component 0 estimate", "truth"],
};

describe("renderFigure", () => {
  it("covers every figure kind in this suite", () => {
    expect(Object.keys(INPUTS).sort()).toEqual([...FIGURE_KINDS].sort());
  });

  for (const kind of FIGURE_KINDS) {
    it(`renders ${kind} from the golden fixtures`, () => {
      const svg = renderFigure(kind, INPUTS[kind]);
      expect(svg.startsWith("<svg ")).toBe(true);
      expect(svg).toContain('xmlns="http://www.w3.org/2000/svg"');
      expect(svg.trimEnd().endsWith("</svg>")).toBe(true);
      for (const needle of EXPECT_TEXT[kind]) {
        expect(svg).toContain(needle);
      }
    });

    it(`re-renders ${kind} byte-identically`, () => {
      const first = renderFigure(kind, INPUTS[kind]);
      const second = renderFigure(kind, INPUTS[kind]);
      expect(second).toBe(first);
    });
  }

  it("rejects the wrong number of inputs", () => {
    expect(() => renderFigure("layout", INPUTS.layout.slice(0, 1))).toThrow(
      SchemaMismatch,
    );
    expect(() =>
      renderFigure("curves", [...INPUTS.curves, ...INPUTS.curves]),
    ).toThrow(SchemaMismatch);
  });

  it("rejects tables with missing columns", () => {
    const dir = mkdtempSync(join(tmpdir(), "plotview-"));
    const bad = join(dir, "bad.csv");
    writeFileSync(bad, "iter,foo\n1,2\n");
    expect(() => renderFigure("curves", [bad])).toThrow(/algorithm/);
  });

  it("rejects layout edges with unknown kinds or endpoints", () => {
    const dir = mkdtempSync(join(tmpdir(), "plotview-"));
    const nodes = join(dir, "nodes.csv");
    writeFileSync(
      nodes,
      "node,x,y,regressor_power\n0,0,0,1\n1,4,0,1\n",
    );
    const badKind = join(dir, "bad_kind.csv");
    writeFileSync(badKind, "i,j,kind\n0,1,wormhole\n");
    expect(() => renderFigure("layout", [nodes, badKind])).toThrow(
      /wormhole/,
    );
    const badEndpoint = join(dir, "bad_endpoint.csv");
    writeFileSync(badEndpoint, "i,j,kind\n0,7,comm\n");
    expect(() => renderFigure("layout", [nodes, badEndpoint])).toThrow(
      SchemaMismatch,
    );
  });
});
