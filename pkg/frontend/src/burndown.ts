import type { TeamMetrics } from "./types";

// Burndown chart as inline SVG.  Every plotted point carries the exact
// day/hours pair served by the metrics endpoint in data attributes; the
// pixel mapping is presentation only and never rounds the data itself.

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 420;
const HEIGHT = 240;
const PAD = 32;

type Series = [number, number][];

// The sprint currently on the board, or the just-archived one once a
// close has moved the points into history.
export function currentBurndown(metrics: TeamMetrics): Series {
  if (metrics.burndown.length > 0) return metrics.burndown;
  const archived = metrics.burndown_history[metrics.burndown_history.length - 1];
  return archived ?? [];
}

function bounds(series: Series[]): { maxDay: number; maxHours: number } {
  let maxDay = 1;
  let maxHours = 1;
  for (const line of series) {
    for (const [day, hours] of line) {
      if (day > maxDay) maxDay = day;
      if (hours > maxHours) maxHours = hours;
    }
  }
  return { maxDay, maxHours };
}

function polyline(
  line: Series,
  cls: string,
  scale: (day: number, hours: number) => [number, number],
): SVGPolylineElement {
  const el = document.createElementNS(SVG_NS, "polyline");
  el.setAttribute("class", cls);
  el.setAttribute(
    "points",
    line.map(([d, h]) => scale(d, h).join(",")).join(" "),
  );
  return el;
}

function dots(
  line: Series,
  cls: string,
  scale: (day: number, hours: number) => [number, number],
): SVGCircleElement[] {
  return line.map(([day, hours]) => {
    const dot = document.createElementNS(SVG_NS, "circle");
    const [x, y] = scale(day, hours);
    dot.setAttribute("class", cls);
    dot.setAttribute("cx", String(x));
    dot.setAttribute("cy", String(y));
    dot.setAttribute("r", "3");
    dot.setAttribute("data-day", String(day));
    dot.setAttribute("data-hours", String(hours));
    return dot;
  });
}

export function renderBurndown(container: HTMLElement, metrics: TeamMetrics): SVGSVGElement {
  const actual = currentBurndown(metrics);
  const { maxDay, maxHours } = bounds([actual, metrics.ideal]);
  const scale = (day: number, hours: number): [number, number] => [
    PAD + (day / maxDay) * (WIDTH - 2 * PAD),
    HEIGHT - PAD - (hours / maxHours) * (HEIGHT - 2 * PAD),
  ];

  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("class", "burndown");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("width", String(WIDTH));
  svg.setAttribute("height", String(HEIGHT));

  const axes = document.createElementNS(SVG_NS, "path");
  axes.setAttribute("class", "axes");
  axes.setAttribute(
    "d",
    `M ${PAD} ${PAD} L ${PAD} ${HEIGHT - PAD} L ${WIDTH - PAD} ${HEIGHT - PAD}`,
  );
  svg.appendChild(axes);

  svg.appendChild(polyline(metrics.ideal, "ideal", scale));
  svg.appendChild(polyline(actual, "actual", scale));
  for (const dot of dots(metrics.ideal, "ideal-pt", scale)) svg.appendChild(dot);
  for (const dot of dots(actual, "actual-pt", scale)) svg.appendChild(dot);

  container.replaceChildren(svg);
  return svg;
}

// The day/hours pairs currently plotted, read back from the chart itself.
export function plottedPoints(svg: SVGSVGElement, cls: string): [number, number][] {
  return Array.from(svg.querySelectorAll<SVGCircleElement>(`circle.${cls}`)).map(
    (dot) => [Number(dot.getAttribute("data-day")), Number(dot.getAttribute("data-hours"))],
  );
}
