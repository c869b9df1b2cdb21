// vega probes for a 2D canvas context to measure text; jsdom has no canvas
// backend and logs a noisy "not implemented" error on every probe. Returning
// null switches vega to its estimated text metrics, silently.
HTMLCanvasElement.prototype.getContext = (() => null) as never;

export {};
