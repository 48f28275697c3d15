/** SVG piano-roll rendering from the pure layout geometry. */

import { computeLayout, type RollLayout } from "./geometry.js";
import type { GenerationRecord } from "./history.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface RenderedRoll {
  svg: SVGSVGElement;
  layout: RollLayout;
  highlight: (index: number | null) => void;
}

export function renderPianoRoll(record: GenerationRecord): RenderedRoll {
  const layout = computeLayout(record.response.melody, record.response.lyrics);
  const svg = document.createElementNS(SVG_NS, "svg");
  const labelBand = 18;
  svg.setAttribute("width", String(Math.max(layout.width, 1)));
  svg.setAttribute("height", String(layout.height + labelBand));
  svg.classList.add("pianoroll");

  // beat grid, one line per quarter note
  for (let q = 0; q <= Math.ceil(layout.totalQuarters); q++) {
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", String(q * layout.pxPerQuarter));
    line.setAttribute("x2", String(q * layout.pxPerQuarter));
    line.setAttribute("y1", "0");
    line.setAttribute("y2", String(layout.height));
    line.setAttribute("class", q % 4 === 0 ? "grid bar" : "grid");
    svg.appendChild(line);
  }

  const noteEls: SVGRectElement[] = [];
  for (const rect of layout.rects) {
    const el = document.createElementNS(SVG_NS, "rect");
    el.setAttribute("x", String(rect.x));
    el.setAttribute("y", String(rect.y));
    el.setAttribute("width", String(Math.max(rect.width - 1, 1)));
    el.setAttribute("height", String(rect.height - 1));
    el.setAttribute("class", "note");
    el.setAttribute("data-index", String(rect.index));
    const tip = document.createElementNS(SVG_NS, "title");
    tip.textContent = `${rect.syllable ?? ""} (midi ${rect.pitch}, q ${rect.onsetQ}-${rect.offsetQ})`;
    el.appendChild(tip);
    svg.appendChild(el);
    noteEls.push(el);

    if (rect.syllable) {
      const label = document.createElementNS(SVG_NS, "text");
      label.setAttribute("x", String(rect.x + 1));
      label.setAttribute("y", String(layout.height + labelBand - 5));
      label.setAttribute("class", "syllable");
      label.textContent = rect.syllable;
      svg.appendChild(label);
    }
  }

  const highlight = (index: number | null) => {
    noteEls.forEach((el, i) => el.classList.toggle("active", i === index));
  };
  return { svg, layout, highlight };
}
