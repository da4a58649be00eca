import type { GraphData, MatrixData, ProjectionData } from "./types.js";

// All four views are plain SVG/DOM built from API payloads. Layout must be
// deterministic (no Math.random) so a re-render of identical data is
// byte-identical.

const SVG_NS = "http://www.w3.org/2000/svg";

function svgElement<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number> = {},
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    el.setAttribute(key, String(value));
  }
  return el;
}

/** Deterministic pseudo-random in [0, 1) from a string seed. */
function hash01(text: string): number {
  let h = 2166136261;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 16777619);
  }
  return (h >>> 0) / 4294967296;
}

export type TokenHandler = (token: string) => void;

/**
 * Force-directed graph: a fixed number of spring/repulsion iterations from
 * hash-seeded positions. Edge weights (cosines) set spring rest lengths, so
 * closer terms sit closer.
 */
export function renderForceGraph(
  data: GraphData,
  width: number,
  height: number,
  onToken?: TokenHandler,
): SVGSVGElement {
  const nodes = data.nodes.map((n, i) => ({
    ...n,
    x: width * (0.15 + 0.7 * hash01(n.id)),
    y: height * (0.15 + 0.7 * hash01(n.id + "#y")),
    isQuery: i === 0,
  }));
  const byId = new Map(nodes.map((n) => [n.id, n]));

  const repulsion = (width * height) / Math.max(1, nodes.length) / 18;
  for (let iter = 0; iter < 150; iter++) {
    const cool = 1 - iter / 150;
    for (const a of nodes) {
      let fx = 0;
      let fy = 0;
      for (const b of nodes) {
        if (a === b) continue;
        const dx = a.x - b.x;
        const dy = a.y - b.y;
        const d2 = Math.max(25, dx * dx + dy * dy);
        const push = repulsion / d2;
        fx += dx * push;
        fy += dy * push;
      }
      for (const link of data.links) {
        let other: string | null = null;
        if (link.source === a.id) other = link.target;
        else if (link.target === a.id) other = link.source;
        if (other === null) continue;
        const b = byId.get(other);
        if (!b) continue;
        // higher cosine -> shorter rest length
        const rest = 40 + 140 * (1 - Math.max(-1, Math.min(1, link.weight)));
        const dx = b.x - a.x;
        const dy = b.y - a.y;
        const dist = Math.max(1, Math.hypot(dx, dy));
        const pull = (dist - rest) * 0.02;
        fx += (dx / dist) * pull * dist * 0.02;
        fy += (dy / dist) * pull * dist * 0.02;
      }
      a.x = Math.min(width - 20, Math.max(20, a.x + fx * cool));
      a.y = Math.min(height - 14, Math.max(14, a.y + fy * cool));
    }
  }

  const svg = svgElement("svg", { width, height, viewBox: `0 0 ${width} ${height}` });
  svg.classList.add("viz-force");
  for (const link of data.links) {
    const a = byId.get(link.source);
    const b = byId.get(link.target);
    if (!a || !b) continue;
    const line = svgElement("line", {
      x1: a.x.toFixed(1),
      y1: a.y.toFixed(1),
      x2: b.x.toFixed(1),
      y2: b.y.toFixed(1),
      stroke: "#9db4c8",
      "stroke-width": (0.5 + 2.5 * Math.max(0, link.weight)).toFixed(2),
    });
    const title = svgElement("title");
    title.textContent = `${link.source} - ${link.target}: ${link.weight.toFixed(4)}`;
    line.appendChild(title);
    svg.appendChild(line);
  }
  for (const node of nodes) {
    const group = svgElement("g");
    group.classList.add("graph-node");
    const circle = svgElement("circle", {
      cx: node.x.toFixed(1),
      cy: node.y.toFixed(1),
      r: node.isQuery ? 7 : 5,
      fill: node.isQuery ? "#d9822b" : "#3b6ea5",
    });
    const text = svgElement("text", {
      x: (node.x + 8).toFixed(1),
      y: (node.y + 4).toFixed(1),
    });
    text.textContent = node.label;
    group.appendChild(circle);
    group.appendChild(text);
    if (!node.isQuery && onToken) {
      group.classList.add("clickable");
      group.addEventListener("click", () => onToken(node.id));
    }
    svg.appendChild(group);
  }
  return svg;
}

/**
 * Sankey view: query-term nodes on the left flow to result terms on the
 * right, band width proportional to the hit score.
 */
export function renderSankey(
  data: GraphData,
  width: number,
  height: number,
  onToken?: TokenHandler,
): SVGSVGElement {
  const svg = svgElement("svg", { width, height, viewBox: `0 0 ${width} ${height}` });
  svg.classList.add("viz-sankey");
  const queryId = data.nodes.length > 0 ? data.nodes[0].id : "";
  const flows = data.links.filter((l) => l.source === queryId);
  if (flows.length === 0) return svg;

  const bandGap = 6;
  const usable = height - bandGap * (flows.length + 1);
  const totalWeight = flows.reduce((sum, f) => sum + Math.max(0.02, f.weight), 0);
  const leftX = 140;
  const rightX = width - 150;

  const queryLabel = data.nodes[0].label;
  const queryBar = svgElement("rect", {
    x: leftX - 10,
    y: bandGap,
    width: 10,
    height: height - 2 * bandGap,
    fill: "#d9822b",
  });
  svg.appendChild(queryBar);
  const queryText = svgElement("text", { x: leftX - 16, y: height / 2, "text-anchor": "end" });
  queryText.textContent = queryLabel;
  svg.appendChild(queryText);

  let y = bandGap;
  for (const flow of flows) {
    const node = data.nodes.find((n) => n.id === flow.target);
    const band = Math.max(3, (Math.max(0.02, flow.weight) / totalWeight) * usable);
    const yMid = y + band / 2;
    const path = svgElement("path", {
      d:
        `M ${leftX} ${yMid.toFixed(1)} ` +
        `C ${(leftX + rightX) / 2} ${yMid.toFixed(1)}, ` +
        `${(leftX + rightX) / 2} ${yMid.toFixed(1)}, ${rightX} ${yMid.toFixed(1)}`,
      stroke: "#9db4c8",
      "stroke-width": band.toFixed(1),
      fill: "none",
      opacity: "0.7",
    });
    const title = svgElement("title");
    title.textContent = `${queryLabel} -> ${node?.label ?? flow.target}: ${flow.weight.toFixed(4)}`;
    path.appendChild(title);
    svg.appendChild(path);

    const bar = svgElement("rect", {
      x: rightX,
      y: (yMid - band / 2).toFixed(1),
      width: 10,
      height: band.toFixed(1),
      fill: "#3b6ea5",
    });
    svg.appendChild(bar);
    const text = svgElement("text", { x: rightX + 16, y: (yMid + 4).toFixed(1) });
    text.textContent = node?.label ?? flow.target;
    if (onToken) {
      text.classList.add("clickable");
      text.addEventListener("click", () => onToken(flow.target));
    }
    svg.appendChild(text);
    y += band + bandGap;
  }
  return svg;
}

/** Heatmap of the pairwise-cosine matrix; the diagonal is max intensity. */
export function renderHeatmap(data: MatrixData, cellSize = 44): HTMLElement {
  const wrap = document.createElement("div");
  wrap.className = "viz-heatmap";
  const table = document.createElement("table");
  const head = document.createElement("tr");
  head.appendChild(document.createElement("th"));
  for (const label of data.labels) {
    const th = document.createElement("th");
    th.textContent = label;
    head.appendChild(th);
  }
  table.appendChild(head);
  data.matrix.forEach((row, i) => {
    const tr = document.createElement("tr");
    const th = document.createElement("th");
    th.textContent = data.labels[i];
    tr.appendChild(th);
    row.forEach((value) => {
      const td = document.createElement("td");
      const intensity = Math.max(0, Math.min(1, (value + 1) / 2));
      const hue = 210 - 170 * intensity;
      td.style.background = `hsl(${hue.toFixed(0)}, 65%, ${(92 - 44 * intensity).toFixed(0)}%)`;
      td.style.width = td.style.height = `${cellSize}px`;
      td.title = value.toFixed(4);
      td.textContent = value.toFixed(2);
      tr.appendChild(td);
    });
    table.appendChild(tr);
  });
  wrap.appendChild(table);
  return wrap;
}

/** Scatter plot of the server's 2-D projection, scaled to the viewport. */
export function renderScatter(
  data: ProjectionData,
  width: number,
  height: number,
  onToken?: TokenHandler,
): SVGSVGElement {
  const svg = svgElement("svg", { width, height, viewBox: `0 0 ${width} ${height}` });
  svg.classList.add("viz-scatter");
  if (data.points.length === 0) return svg;
  const xs = data.points.map((p) => p.x);
  const ys = data.points.map((p) => p.y);
  const pad = 40;
  const spanX = Math.max(1e-9, Math.max(...xs) - Math.min(...xs));
  const spanY = Math.max(1e-9, Math.max(...ys) - Math.min(...ys));
  const minX = Math.min(...xs);
  const minY = Math.min(...ys);
  for (const point of data.points) {
    const cx = pad + ((point.x - minX) / spanX) * (width - 2 * pad);
    const cy = height - pad - ((point.y - minY) / spanY) * (height - 2 * pad);
    const dot = svgElement("circle", { cx: cx.toFixed(1), cy: cy.toFixed(1), r: 5, fill: "#3b6ea5" });
    const text = svgElement("text", { x: (cx + 8).toFixed(1), y: (cy + 4).toFixed(1) });
    text.textContent = point.label;
    if (onToken) {
      dot.classList.add("clickable");
      dot.addEventListener("click", () => onToken(point.token));
    }
    const title = svgElement("title");
    title.textContent = `${point.label} (${point.x.toFixed(4)}, ${point.y.toFixed(4)})`;
    dot.appendChild(title);
    svg.appendChild(dot);
    svg.appendChild(text);
  }
  return svg;
}
