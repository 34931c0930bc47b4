import { monthSequence } from "./months.js";

const WIDTH = 260;
const HEIGHT = 48;
const PAD = 2;

function polylinePoints(
  months: string[],
  series: Record<string, number>,
  lo: number,
  hi: number
): string {
  const span = hi - lo || 1;
  const step = months.length > 1 ? (WIDTH - 2 * PAD) / (months.length - 1) : 0;
  const points: string[] = [];
  months.forEach((month, i) => {
    const value = series[month];
    if (value === undefined) return; // gaps break nothing, they just skip
    const x = PAD + i * step;
    const y = PAD + (1 - (value - lo) / span) * (HEIGHT - 2 * PAD);
    points.push(`${x.toFixed(1)},${y.toFixed(1)}`);
  });
  return points.join(" ");
}

/**
 * Paired sparkline: the query fund's and one result's monthly returns
 * overlaid on a shared scale across [from, to].
 */
export function pairedSparkline(
  queryReturns: Record<string, number>,
  resultReturns: Record<string, number>,
  from: string,
  to: string
): SVGSVGElement {
  const months = monthSequence(from, to);
  const values = months
    .flatMap((m) => [queryReturns[m], resultReturns[m]])
    .filter((v): v is number => v !== undefined);
  const lo = values.length ? Math.min(...values) : 0;
  const hi = values.length ? Math.max(...values) : 1;

  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("width", String(WIDTH));
  svg.setAttribute("height", String(HEIGHT));
  svg.classList.add("sparkline");

  for (const [series, cls] of [
    [queryReturns, "spark-query"],
    [resultReturns, "spark-result"],
  ] as const) {
    const line = document.createElementNS(
      "http://www.w3.org/2000/svg",
      "polyline"
    );
    line.setAttribute("points", polylinePoints(months, series, lo, hi));
    line.setAttribute("fill", "none");
    line.classList.add(cls);
    svg.appendChild(line);
  }
  return svg;
}
