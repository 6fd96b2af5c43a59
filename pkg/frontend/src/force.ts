/** Minimal force simulation: spring forces along edges, pairwise
 * repulsion, mild centering. Layout is intentionally non-deterministic
 * in feel (seeded only by insertion order); correctness never depends on
 * positions. */

export interface SimNode {
  id: string;
  x: number;
  y: number;
  vx: number;
  vy: number;
  pinned?: boolean;
}

export interface SimEdge {
  source: string;
  target: string;
}

export interface ForceConfig {
  springLength: number;
  springStrength: number;
  repulsion: number;
  centering: number;
  damping: number;
}

export const DEFAULT_FORCE: ForceConfig = {
  springLength: 80,
  springStrength: 0.02,
  repulsion: 1800,
  centering: 0.005,
  damping: 0.85,
};

export function initialLayout(ids: string[], width: number, height: number): SimNode[] {
  // phyllotaxis spiral: stable start without randomness
  const golden = Math.PI * (3 - Math.sqrt(5));
  return ids.map((id, i) => {
    const radius = 12 * Math.sqrt(i + 1);
    const angle = i * golden;
    return {
      id,
      x: width / 2 + radius * Math.cos(angle),
      y: height / 2 + radius * Math.sin(angle),
      vx: 0,
      vy: 0,
    };
  });
}

export function tick(
  nodes: SimNode[],
  edges: SimEdge[],
  width: number,
  height: number,
  config: ForceConfig = DEFAULT_FORCE,
): void {
  const index = new Map(nodes.map((n) => [n.id, n]));
  for (let i = 0; i < nodes.length; i++) {
    const a = nodes[i];
    for (let j = i + 1; j < nodes.length; j++) {
      const b = nodes[j];
      let dx = a.x - b.x;
      let dy = a.y - b.y;
      let sq = dx * dx + dy * dy;
      if (sq < 1) {
        dx = (i % 2 ? 1 : -1) * 0.5;
        dy = (j % 2 ? 1 : -1) * 0.5;
        sq = 0.5;
      }
      const force = config.repulsion / sq;
      const dist = Math.sqrt(sq);
      const fx = (dx / dist) * force;
      const fy = (dy / dist) * force;
      a.vx += fx;
      a.vy += fy;
      b.vx -= fx;
      b.vy -= fy;
    }
  }
  for (const edge of edges) {
    const a = index.get(edge.source);
    const b = index.get(edge.target);
    if (!a || !b || a === b) continue;
    const dx = b.x - a.x;
    const dy = b.y - a.y;
    const dist = Math.max(1, Math.sqrt(dx * dx + dy * dy));
    const stretch = (dist - config.springLength) * config.springStrength;
    const fx = (dx / dist) * stretch;
    const fy = (dy / dist) * stretch;
    a.vx += fx;
    a.vy += fy;
    b.vx -= fx;
    b.vy -= fy;
  }
  for (const node of nodes) {
    if (node.pinned) {
      node.vx = 0;
      node.vy = 0;
      continue;
    }
    node.vx += (width / 2 - node.x) * config.centering;
    node.vy += (height / 2 - node.y) * config.centering;
    node.vx *= config.damping;
    node.vy *= config.damping;
    node.x += node.vx;
    node.y += node.vy;
  }
}
