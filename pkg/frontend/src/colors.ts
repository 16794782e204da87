// Cell color is a pure function of fitness: 0 maps to dark red, 1 to dark
// green, and an unoccupied cell renders as dark red. Values are clamped.

const DARK_RED: [number, number, number] = [139, 0, 0];
const DARK_GREEN: [number, number, number] = [0, 100, 0];

export function fitnessColor(fitness: number | null | undefined): string {
  if (fitness === null || fitness === undefined || Number.isNaN(fitness)) {
    return rgb(DARK_RED);
  }
  const t = Math.min(1, Math.max(0, fitness));
  const mix = DARK_RED.map((c, i) => Math.round(c + (DARK_GREEN[i]! - c) * t));
  return rgb(mix as [number, number, number]);
}

function rgb([r, g, b]: [number, number, number]): string {
  return `rgb(${r}, ${g}, ${b})`;
}
