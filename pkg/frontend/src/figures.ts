/** The six figure kinds rendered from the experiment CLI's CSV artifacts.
 *
 * Input schemas (see the simulator package README):
 *   layout         nodes.csv (node,x,y,regressor_power) + edges.csv (i,j,kind)
 *   curves         curves.csv (iter,algorithm,msd_db)
 *   per_node_bars  per_node.csv (node,algorithm,msd_db_sim,msd_db_theory)
 *   gain_vs_nu     gain.csv (axis_value,algorithm,msd_db)
 *   sparsity_sweep sweep.csv (axis_value,algorithm,msd_db)
 *   tracking       tracking.csv (iter,component_index,estimate,truth)
 */

import { distinct, numeric, readTable, requireColumns, Table } from "./csv.js";
import { SchemaMismatch } from "./errors.js";
import {
  axes,
  circle,
  document,
  legend,
  LegendCorner,
  padDomain,
  PALETTE,
  polyline,
  rect,
  text,
} from "./svg.js";

export const FIGURE_KINDS = [
  "layout",
  "curves",
  "per_node_bars",
  "gain_vs_nu",
  "sparsity_sweep",
  "tracking",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

const INPUT_COUNT: Record<FigureKind, number> = {
  layout: 2,
  curves: 1,
  per_node_bars: 1,
  gain_vs_nu: 1,
  sparsity_sweep: 1,
  tracking: 1,
};

interface Series {
  label: string;
  points: Array<[number, number]>;
}

function collectSeries(
  table: Table,
  groupColumn: string,
  xColumn: string,
  yColumn: string,
): Series[] {
  return distinct(table, groupColumn).map((label) => ({
    label,
    points: table.rows
      .filter((row) => row[groupColumn] === label)
      .map(
        (row) =>
          [numeric(table, row, xColumn), numeric(table, row, yColumn)] as [
            number,
            number,
          ],
      ),
  }));
}

function seriesDomains(series: Series[]): {
  x: [number, number];
  y: [number, number];
} {
  const xs = series.flatMap((s) => s.points.map((p) => p[0]));
  const ys = series.flatMap((s) => s.points.map((p) => p[1]));
  return {
    x: [Math.min(...xs), Math.max(...xs)],
    y: padDomain(Math.min(...ys), Math.max(...ys)),
  };
}

function linesFigure(
  table: Table,
  xColumn: string,
  xLabel: string,
  yLabel: string,
  title: string,
  corner: LegendCorner,
  markers: boolean,
): string {
  requireColumns(table, [xColumn, "algorithm", "msd_db"]);
  const series = collectSeries(table, "algorithm", xColumn, "msd_db");
  const domains = seriesDomains(series);
  const frame = axes(domains.x, domains.y, xLabel, yLabel, title);
  const parts = [...frame.parts];
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const mapped = s.points.map(
      ([x, y]) => [frame.x.map(x), frame.y.map(y)] as [number, number],
    );
    parts.push(polyline(mapped, color));
    if (markers) {
      for (const [px, py] of mapped) parts.push(circle(px, py, 3, color));
    }
  });
  parts.push(
    ...legend(
      series.map((s, i) => ({
        label: s.label,
        color: PALETTE[i % PALETTE.length],
      })),
      corner,
    ),
  );
  return document(parts);
}

function layoutFigure(nodesPath: string, edgesPath: string): string {
  const nodes = requireColumns(readTable(nodesPath), [
    "node",
    "x",
    "y",
    "regressor_power",
  ]);
  const edges = requireColumns(readTable(edgesPath), ["i", "j", "kind"]);
  const position = new Map<number, [number, number]>();
  const powers: number[] = [];
  for (const row of nodes.rows) {
    position.set(numeric(nodes, row, "node"), [
      numeric(nodes, row, "x"),
      numeric(nodes, row, "y"),
    ]);
    powers.push(numeric(nodes, row, "regressor_power"));
  }
  const xs = [...position.values()].map((p) => p[0]);
  const ys = [...position.values()].map((p) => p[1]);
  const frame = axes(
    padDomain(Math.min(...xs), Math.max(...xs), 0.1),
    padDomain(Math.min(...ys), Math.max(...ys), 0.1),
    "x position",
    "y position",
    "Network layout: communication and dependency edges",
  );
  const parts = [...frame.parts];
  for (const row of edges.rows) {
    const a = position.get(numeric(edges, row, "i"));
    const b = position.get(numeric(edges, row, "j"));
    if (a === undefined || b === undefined) {
      throw new SchemaMismatch(
        `${edges.path}: edge endpoint missing from ${nodes.path}`,
      );
    }
    const kind = row.kind;
    if (kind !== "comm" && kind !== "dep") {
      throw new SchemaMismatch(
        `${edges.path}: edge kind must be comm or dep, got '${kind}'`,
      );
    }
    const mapped: Array<[number, number]> = [
      [frame.x.map(a[0]), frame.y.map(a[1])],
      [frame.x.map(b[0]), frame.y.map(b[1])],
    ];
    parts.push(
      kind === "comm"
        ? polyline(mapped, "#b0b0b0", { width: 1.2 })
        : polyline(mapped, "#d62728", { width: 1.4, dash: "5,4" }),
    );
  }
  const pLo = Math.min(...powers);
  const pHi = Math.max(...powers);
  for (const row of nodes.rows) {
    const id = numeric(nodes, row, "node");
    const [x, y] = position.get(id)!;
    const p = numeric(nodes, row, "regressor_power");
    const r = pHi > pLo ? 4 + 4 * ((p - pLo) / (pHi - pLo)) : 5;
    const px = frame.x.map(x);
    const py = frame.y.map(y);
    parts.push(circle(px, py, r, "#1f77b4"));
    parts.push(text(px + r + 2, py + 4, String(id), { size: 10 }));
  }
  parts.push(
    ...legend(
      [
        { label: "communication edge", color: "#b0b0b0" },
        { label: "dependency edge", color: "#d62728", dash: "5,4" },
      ],
      "tr",
    ),
  );
  return document(parts);
}

function perNodeBarsFigure(path: string): string {
  const table = requireColumns(readTable(path), [
    "node",
    "algorithm",
    "msd_db_sim",
    "msd_db_theory",
  ]);
  const algorithms = distinct(table, "algorithm");
  const nodeIds = [...new Set(table.rows.map((r) => Number(r.node)))].sort(
    (a, b) => a - b,
  );
  const values = table.rows.flatMap((row) => [
    numeric(table, row, "msd_db_sim"),
    numeric(table, row, "msd_db_theory"),
  ]);
  const yDomain = padDomain(Math.min(...values), Math.max(...values), 0.15);
  const frame = axes(
    [-0.5, nodeIds.length - 0.5],
    yDomain,
    "node",
    "steady-state MSD (dB)",
    "Per-node steady-state MSD: simulation bars, theory markers",
  );
  const parts = [...frame.parts];
  const slot = frame.x.map(1) - frame.x.map(0);
  const barWidth = (slot * 0.72) / algorithms.length;
  const baseline = frame.y.map(yDomain[0]);
  for (const row of table.rows) {
    const nodeIndex = nodeIds.indexOf(Number(row.node));
    const algIndex = algorithms.indexOf(row.algorithm);
    const x0 =
      frame.x.map(nodeIndex) -
      (algorithms.length * barWidth) / 2 +
      algIndex * barWidth;
    const sim = frame.y.map(numeric(table, row, "msd_db_sim"));
    const theory = frame.y.map(numeric(table, row, "msd_db_theory"));
    parts.push(
      rect(
        x0,
        Math.min(sim, baseline),
        barWidth * 0.9,
        Math.abs(baseline - sim),
        PALETTE[algIndex % PALETTE.length],
      ),
    );
    parts.push(
      polyline(
        [
          [x0 - 1, theory],
          [x0 + barWidth * 0.9 + 1, theory],
        ],
        "#111",
        { width: 2 },
      ),
    );
  }
  parts.push(
    ...legend(
      [
        ...algorithms.map((label, i) => ({
          label: `${label} (simulation)`,
          color: PALETTE[i % PALETTE.length],
        })),
        { label: "theory", color: "#111" },
      ],
      "br",
    ),
  );
  return document(parts);
}

function trackingFigure(path: string): string {
  const table = requireColumns(readTable(path), [
    "iter",
    "component_index",
    "estimate",
    "truth",
  ]);
  const components = distinct(table, "component_index");
  const estimates = collectSeries(table, "component_index", "iter", "estimate");
  const truths = collectSeries(table, "component_index", "iter", "truth");
  const domains = seriesDomains([...estimates, ...truths]);
  const frame = axes(
    domains.x,
    domains.y,
    "iteration",
    "parameter value",
    "Tracking a parameter with collapsing support",
  );
  const parts = [...frame.parts];
  truths.forEach((s) => {
    parts.push(
      polyline(
        s.points.map(
          ([x, y]) => [frame.x.map(x), frame.y.map(y)] as [number, number],
        ),
        "#777",
        { width: 1, dash: "4,3" },
      ),
    );
  });
  estimates.forEach((s, i) => {
    parts.push(
      polyline(
        s.points.map(
          ([x, y]) => [frame.x.map(x), frame.y.map(y)] as [number, number],
        ),
        PALETTE[i % PALETTE.length],
      ),
    );
  });
  parts.push(
    ...legend(
      [
        ...components.map((componentId, i) => ({
          label: `component ${componentId} estimate`,
          color: PALETTE[i % PALETTE.length],
        })),
        { label: "truth", color: "#777", dash: "4,3" },
      ],
      "tr",
    ),
  );
  return document(parts);
}

/** Render one figure kind from its CSV input path(s) to an SVG string. */
export function renderFigure(kind: FigureKind, inputs: string[]): string {
  const expected = INPUT_COUNT[kind];
  if (inputs.length !== expected) {
    throw new SchemaMismatch(
      `${kind} needs ${expected} input CSV(s), got ${inputs.length}`,
    );
  }
  switch (kind) {
    case "layout":
      return layoutFigure(inputs[0], inputs[1]);
    case "curves":
      return linesFigure(
        readTable(inputs[0]),
        "iter",
        "iteration",
        "network MSD (dB)",
        "Network MSD learning curves",
        "tr",
        false,
      );
    case "gain_vs_nu":
      return linesFigure(
        readTable(inputs[0]),
        "axis_value",
        "nugget",
        "MSD gain (dB)",
        "Field-aware gain vs nugget, per decay rate",
        "tl",
        true,
      );
    case "sparsity_sweep":
      return linesFigure(
        readTable(inputs[0]),
        "axis_value",
        "support size",
        "network MSD (dB)",
        "Steady-state MSD vs parameter support",
        "tl",
        true,
      );
    case "per_node_bars":
      return perNodeBarsFigure(inputs[0]);
    case "tracking":
      return trackingFigure(inputs[0]);
  }
}
