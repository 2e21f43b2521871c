/**
 * Wire-shaped view documents for tests, matching what the story server
 * actually sends (same keys, same null conventions).
 */

export const narrationView = {
  node: "A-1",
  kind: "narration",
  channel: "touch",
  meters: { freewill: 100 },
  finished: null,
  text: "The drone hums back across the strait on autopilot.",
  page: 0,
  pages: 2,
  prompt: null,
  options: null,
  game: null,
  mini: null,
  category: null,
};

export const choiceView = {
  node: "A-2",
  kind: "choice",
  channel: "touch",
  meters: { freewill: 100 },
  finished: null,
  text: null,
  page: null,
  pages: null,
  prompt: "The drone holds a lazy circle over the spit and waits.",
  options: [
    { index: 0, source: 0, label: "Leave the mask where it lies" },
    { index: 1, source: 1, label: "Recover the mask" },
  ],
  game: null,
  mini: null,
  category: null,
};

export const biolinkView = {
  node: "C-2a",
  kind: "minigame",
  channel: "handset",
  meters: { freewill: 74 },
  finished: null,
  text: "Steady the link and guide the creature.",
  page: null,
  pages: null,
  prompt: null,
  options: null,
  game: "biolink",
  mini: {
    creature: "fire-bellied toad",
    position: [1, 1],
    visibility: 2,
    cells: [
      { x: 0, y: 0, cell: "#" },
      { x: 1, y: 0, cell: "#" },
      { x: 2, y: 0, cell: "." },
      { x: 3, y: 0, cell: "T" },
      { x: 0, y: 1, cell: "." },
      { x: 1, y: 1, cell: "." },
      { x: 2, y: 1, cell: "." },
      { x: 3, y: 1, cell: "." },
      { x: 0, y: 2, cell: "#" },
      { x: 1, y: 2, cell: "." },
      { x: 2, y: 2, cell: "#" },
      { x: 3, y: 2, cell: "T" },
      { x: 0, y: 3, cell: "." },
      { x: 1, y: 3, cell: "." },
      { x: 2, y: 3, cell: "." },
      { x: 3, y: 3, cell: "." },
    ],
    collected: 0,
    required: 2,
    meter: "freewill",
  },
  category: null,
};

export const scanView = {
  node: "C-1",
  kind: "minigame",
  channel: "handset",
  meters: { freewill: 100 },
  finished: null,
  text: "Sweep the area and scan anything suspicious.",
  page: null,
  pages: null,
  prompt: null,
  options: null,
  game: "scan",
  mini: {
    width: 5,
    height: 4,
    revealed: [
      { x: 1, y: 1, marker: "decoy" },
      { x: 0, y: 0, marker: "empty" },
    ],
    scans_used: 2,
    budget: 8,
  },
  category: null,
};

export const coordView = {
  node: "B-2",
  kind: "minigame",
  channel: "any",
  meters: { freewill: 100 },
  finished: null,
  text: "Key in the coordinates and confirm.",
  page: null,
  pages: null,
  prompt: null,
  options: null,
  game: "coord",
  mini: { masked: "•••", attempts_used: 1, max_attempts: 3 },
  category: null,
};

export const sequenceView = {
  node: "B-1",
  kind: "minigame",
  channel: "touch",
  meters: { freewill: 100 },
  finished: null,
  text: "Work the controls in the right order.",
  page: null,
  pages: null,
  prompt: null,
  options: null,
  game: "sequence",
  mini: {
    available: ["insert-usb", "open-table", "run-driver", "take-usb"],
    done: 0,
    total: 4,
  },
  category: null,
};

export const endingView = {
  node: "END-MAIN",
  kind: "ending",
  channel: "touch",
  meters: { freewill: 10 },
  finished: null,
  text: "This is your captain speaking. We have begun our descent.",
  page: null,
  pages: null,
  prompt: null,
  options: null,
  game: null,
  mini: null,
  category: "main",
};

export const finishedView = { ...endingView, finished: "END-MAIN" };
