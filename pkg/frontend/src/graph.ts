/** SVG force-directed graph view with hover details, per-property edge
 * legend, pan/zoom, and data-driven coloring. All correctness lives in
 * the pure helpers (viewmodel.ts); this module only draws. */

import { propertyColor } from "./colors.js";
import { DEFAULT_FORCE, initialLayout, tick } from "./force.js";
import type { SimNode } from "./force.js";
import type { ResultDocument } from "./types.js";
import type { GraphFilters, RenderNode } from "./viewmodel.js";
import { visibleEdges, visibleNodes } from "./viewmodel.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 1200;
const HEIGHT = 800;
const TICKS = 180;

export interface GraphCallbacks {
  onNodeClick: (node: RenderNode) => void;
}

export class GraphView {
  private svg: SVGSVGElement;
  private viewport: SVGGElement;
  private tooltip: HTMLDivElement;
  private scale = 1;
  private panX = 0;
  private panY = 0;
  private frame: number | null = null;

  constructor(
    private readonly container: HTMLElement,
    private readonly callbacks: GraphCallbacks,
  ) {
    this.svg = document.createElementNS(SVG_NS, "svg");
    this.svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
    this.svg.classList.add("graph-canvas");
    this.viewport = document.createElementNS(SVG_NS, "g");
    this.svg.appendChild(this.viewport);
    this.tooltip = document.createElement("div");
    this.tooltip.className = "graph-tooltip hidden";
    container.appendChild(this.svg);
    container.appendChild(this.tooltip);
    this.wirePanZoom();
  }

  destroy(): void {
    if (this.frame !== null) cancelAnimationFrame(this.frame);
    this.container.innerHTML = "";
  }

  render(doc: ResultDocument, filters: GraphFilters): void {
    if (this.frame !== null) cancelAnimationFrame(this.frame);
    const nodes = visibleNodes(doc, filters);
    const edges = visibleEdges(doc, nodes);
    const sim = initialLayout(nodes.map((n) => n.id), WIDTH, HEIGHT);
    const simIndex = new Map(sim.map((n) => [n.id, n]));

    this.viewport.innerHTML = "";
    const edgeGroup = document.createElementNS(SVG_NS, "g");
    const nodeGroup = document.createElementNS(SVG_NS, "g");
    this.viewport.appendChild(edgeGroup);
    this.viewport.appendChild(nodeGroup);

    const edgeEls = edges.map((edge) => {
      const line = document.createElementNS(SVG_NS, "line");
      line.setAttribute("stroke", propertyColor(edge.property));
      line.setAttribute("stroke-width", "1.2");
      line.setAttribute("opacity", "0.55");
      edgeGroup.appendChild(line);
      return { edge, line };
    });

    const nodeEls = nodes.map((node) => {
      const circle = document.createElementNS(SVG_NS, "circle");
      circle.setAttribute("r", node.decision === "seed" ? "11" : "7");
      circle.setAttribute("fill", node.color);
      circle.setAttribute("data-node-id", node.id);
      circle.setAttribute("data-decision", node.decision);
      circle.classList.add("graph-node");
      circle.addEventListener("click", () => this.callbacks.onNodeClick(node));
      circle.addEventListener("mouseenter", (event) => this.showTooltip(node, event));
      circle.addEventListener("mouseleave", () => this.tooltip.classList.add("hidden"));
      nodeGroup.appendChild(circle);
      return { node, circle };
    });

    let remaining = TICKS;
    const step = () => {
      const rounds = remaining > TICKS / 2 ? 4 : 2;
      for (let i = 0; i < rounds && remaining > 0; i++, remaining--) {
        tick(sim, edges, WIDTH, HEIGHT, DEFAULT_FORCE);
      }
      for (const { node, circle } of nodeEls) {
        const pos = simIndex.get(node.id) as SimNode;
        circle.setAttribute("cx", String(pos.x));
        circle.setAttribute("cy", String(pos.y));
      }
      for (const { edge, line } of edgeEls) {
        const a = simIndex.get(edge.source) as SimNode;
        const b = simIndex.get(edge.target) as SimNode;
        line.setAttribute("x1", String(a.x));
        line.setAttribute("y1", String(a.y));
        line.setAttribute("x2", String(b.x));
        line.setAttribute("y2", String(b.y));
      }
      if (remaining > 0) this.frame = requestAnimationFrame(step);
    };
    this.frame = requestAnimationFrame(step);
  }

  renderLegend(doc: ResultDocument, target: HTMLElement): void {
    const properties = [...new Set(doc.edges.map((e) => e.property))].sort();
    target.innerHTML = "";
    for (const property of properties) {
      const item = document.createElement("span");
      item.className = "legend-item";
      const swatch = document.createElement("span");
      swatch.className = "legend-swatch";
      swatch.style.background = propertyColor(property);
      item.appendChild(swatch);
      item.appendChild(document.createTextNode(property));
      target.appendChild(item);
    }
  }

  private showTooltip(node: RenderNode, event: MouseEvent): void {
    const votes = node.votes ? ` · votes ${node.votes[0]}/${node.votes[1]}` : "";
    this.tooltip.textContent =
      `${node.label ?? node.id} (${node.id}) · ${node.decision} · depth ${node.depth}${votes}`;
    this.tooltip.classList.remove("hidden");
    const rect = this.container.getBoundingClientRect();
    this.tooltip.style.left = `${event.clientX - rect.left + 12}px`;
    this.tooltip.style.top = `${event.clientY - rect.top + 12}px`;
  }

  private applyTransform(): void {
    this.viewport.setAttribute(
      "transform",
      `translate(${this.panX} ${this.panY}) scale(${this.scale})`,
    );
  }

  private wirePanZoom(): void {
    let dragging = false;
    let lastX = 0;
    let lastY = 0;
    this.svg.addEventListener("mousedown", (event) => {
      if ((event.target as Element).classList?.contains("graph-node")) return;
      dragging = true;
      lastX = event.clientX;
      lastY = event.clientY;
    });
    window.addEventListener("mouseup", () => (dragging = false));
    window.addEventListener("mousemove", (event) => {
      if (!dragging) return;
      this.panX += event.clientX - lastX;
      this.panY += event.clientY - lastY;
      lastX = event.clientX;
      lastY = event.clientY;
      this.applyTransform();
    });
    this.svg.addEventListener("wheel", (event) => {
      event.preventDefault();
      const factor = event.deltaY < 0 ? 1.12 : 1 / 1.12;
      this.scale = Math.min(8, Math.max(0.1, this.scale * factor));
      this.applyTransform();
    });
  }
}
