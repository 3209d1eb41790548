// Icon picker search: prefix and substring matching over names and tags,
// ranked by match position, then name. An empty query shows a curated
// shelf of frequently useful icons.

import type { IconEntry } from "./protocol.js";

export const FREQUENT_SHELF = [
  "person",
  "dog",
  "house",
  "tree",
  "car",
  "arrow",
  "sun",
  "book",
  "heart",
  "question-mark",
  "circle",
  "cross",
];

function matchPosition(icon: IconEntry, query: string): number | null {
  const name = icon.name.toLowerCase();
  const inName = name.indexOf(query);
  let best = inName >= 0 ? inName : null;
  for (const tag of icon.tags) {
    const inTag = tag.toLowerCase().indexOf(query);
    if (inTag >= 0) {
      // tag matches rank behind name matches at the same offset
      const scored = inTag + 0.5;
      if (best === null || scored < best) best = scored;
    }
  }
  return best;
}

export function searchIcons(
  icons: IconEntry[],
  query: string,
  limit = 24,
  shelf: string[] = FREQUENT_SHELF,
): IconEntry[] {
  const q = query.trim().toLowerCase();
  if (!q) {
    const byId = new Map(icons.map((i) => [i.id, i]));
    return shelf
      .map((id) => byId.get(id))
      .filter((i): i is IconEntry => i !== undefined)
      .slice(0, limit);
  }
  const ranked: { icon: IconEntry; pos: number }[] = [];
  for (const icon of icons) {
    const pos = matchPosition(icon, q);
    if (pos !== null) ranked.push({ icon, pos });
  }
  ranked.sort((a, b) => a.pos - b.pos || a.icon.name.localeCompare(b.icon.name));
  return ranked.slice(0, limit).map((r) => r.icon);
}
