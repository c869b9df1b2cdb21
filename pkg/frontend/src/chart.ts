/**
 * Chart rendering through the Vega-Lite runtime. The runtime's embedded menu
 * (the "..." details block) provides SVG/PNG export; no custom export code.
 */

import vegaEmbed, { Result } from "vega-embed";

export interface ChartRender {
  ok: boolean;
  result: Result | null;
  problem: string | null;
}

export async function renderChart(
  target: HTMLElement,
  document_: Record<string, unknown> | null | undefined,
): Promise<ChartRender> {
  target.replaceChildren();
  if (!document_) {
    return { ok: false, result: null, problem: null };
  }
  try {
    const result = await vegaEmbed(target, document_ as never, {
      renderer: "svg",
      actions: {
        export: { svg: true, png: true },
        source: false,
        compiled: false,
        editor: false,
      },
    });
    return { ok: true, result, problem: null };
  } catch (err) {
    target.replaceChildren();
    const panel = document.createElement("p");
    panel.className = "chart-error";
    panel.textContent = `Chart failed to render: ${String(err)}`;
    target.appendChild(panel);
    return { ok: false, result: null, problem: String(err) };
  }
}
