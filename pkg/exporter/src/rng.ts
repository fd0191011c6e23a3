// Deterministic string-seeded randomness: FNV-1a over UTF-8, feeding a
// mulberry32 stream. No Math.random anywhere in the exporter.

export function fnv1a(text: string): number {
  let h = 0x811c9dc5;
  const bytes = new TextEncoder().encode(text);
  for (const b of bytes) {
    h ^= b;
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** A fresh unit-interval stream keyed by an arbitrary string. */
export function streamFor(key: string): () => number {
  return mulberry32(fnv1a(key));
}
