/** The fixed decision-to-color contract: node color is derived solely from
 * the decision field, nothing else. */

import type { Decision } from "./types.js";

export const DECISION_COLORS: Record<Decision, string> = {
  seed: "#f5c211",       // yellow
  kept: "#2da44e",       // green
  pruned: "#d1242f",     // red
  unembedded: "#8b949e", // gray
};

export function colorFor(decision: Decision): string {
  return DECISION_COLORS[decision];
}

/** Stable per-property edge tint for the legend. */
export function propertyColor(property: string): string {
  let h = 0;
  for (const ch of property) h = (h * 31 + ch.charCodeAt(0)) >>> 0;
  return `hsl(${h % 360} 45% 45%)`;
}
