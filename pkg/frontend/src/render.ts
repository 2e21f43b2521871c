/**
 * DOM for the cabin: a seat-back screen (touch surface) and a handset.
 * Rebuilt from scratch on every model change; everything shown comes from
 * the last wire view, nothing is computed ahead of the server.
 */
import type { Gesture } from "./gestures.js";
import { isFinished } from "./viewmodel.js";
import type { ViewModel } from "./viewmodel.js";
import { biolinkOf, coordOf, scanOf, sequenceOf } from "./wire.js";
import type { View } from "./wire.js";

export type Hooks = {
  onGesture: (gesture: Gesture) => void;
  onSave: () => void;
  onRestore: (saveText: string) => void;
  onRestart: () => void;
  onRetry: () => void;
};

const KEYPAD_ROWS: string[][] = [
  ["1", "2", "3"],
  ["4", "5", "6"],
  ["7", "8", "9"],
  [".", "0", "-"],
  ["N", "S", "E", "W"],
  [" ", "⏎"],
];

const KEY_LABELS: Record<string, string> = { " ": "SPC", "⏎": "ENT" };

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function button(
  label: string,
  attrs: Record<string, string>,
  onClick: () => void,
  disabled: boolean
): HTMLButtonElement {
  const b = document.createElement("button");
  b.type = "button";
  b.textContent = label;
  for (const [name, value] of Object.entries(attrs)) b.setAttribute(name, value);
  b.disabled = disabled;
  b.addEventListener("click", onClick);
  return b;
}

export function render(root: HTMLElement, vm: ViewModel, hooks: Hooks): void {
  root.replaceChildren();
  if (vm.broken !== null) {
    const card = el("div", "error-card");
    card.setAttribute("data-control", "error-card");
    card.append(el("h2", "error-title", "screen unavailable"));
    card.append(el("p", "error-text", vm.broken));
    card.append(button("restart", { "data-control": "restart" }, hooks.onRestart, false));
    root.append(card);
    return;
  }

  if (vm.fault !== null) {
    const banner = el("div", "fault-banner");
    banner.setAttribute("data-control", "fault");
    banner.append(el("span", "fault-text", vm.fault));
    banner.append(button("retry", { "data-control": "retry" }, hooks.onRetry, false));
    root.append(banner);
  }

  const locked = isFinished(vm);
  const cabin = el("main", "cabin");
  cabin.append(seatScreen(vm, hooks, locked));
  cabin.append(handset(vm, hooks, locked));
  root.append(cabin);
}

// ---------------------------------------------------------------------------
// Seat-back screen

function seatScreen(vm: ViewModel, hooks: Hooks, locked: boolean): HTMLElement {
  const seat = el("section", "device seat" + (vm.activeDevice === "seat" ? " active" : ""));

  const top = el("header", "seat-top");
  top.append(el("h1", "seat-title", vm.storyTitle ?? vm.storyId ?? "no story"));
  const gauges = el("div", "gauges");
  if (vm.view !== null) {
    for (const [name, value] of Object.entries(vm.view.meters)) {
      const gauge = el("div", "gauge");
      gauge.setAttribute("data-meter", name);
      gauge.append(el("span", "gauge-name", name));
      gauge.append(el("span", "gauge-value", String(value)));
      gauges.append(gauge);
    }
  }
  top.append(gauges);
  top.append(el("span", "busy-light" + (vm.busy ? " on" : "")));
  seat.append(top);

  const body = el("div", "seat-body");
  if (vm.view === null) {
    body.append(el("p", "boot-text", "contacting the cabin system"));
  } else {
    fillSeatBody(body, vm.view, hooks, locked);
  }
  seat.append(body);

  const notes = el("div", "notes");
  for (const note of vm.notes) {
    const hint = el("div", "note", note.message);
    hint.setAttribute("data-note", note.code);
    notes.append(hint);
  }
  seat.append(notes);

  seat.append(seatChrome(vm, hooks, locked));
  return seat;
}

function fillSeatBody(body: HTMLElement, view: View, hooks: Hooks, locked: boolean): void {
  body.setAttribute("data-screen", view.kind);
  if (view.kind === "narration") {
    const page = el("article", "page");
    page.append(el("p", "page-text", view.text ?? ""));
    page.append(el("div", "page-count", `page ${(view.page ?? 0) + 1} of ${view.pages ?? 1}`));
    body.append(page);
    body.append(
      button(
        "touch to continue",
        { "data-control": "advance" },
        () => hooks.onGesture({ device: "seat", control: "advance" }),
        locked
      )
    );
    return;
  }
  if (view.kind === "choice") {
    body.append(el("p", "prompt", view.prompt ?? ""));
    const options = el("div", "options");
    for (const option of view.options ?? []) {
      options.append(
        button(
          option.label,
          { "data-control": "option", "data-index": String(option.index) },
          () => hooks.onGesture({ device: "seat", control: "option", index: option.index }),
          locked
        )
      );
    }
    body.append(options);
    return;
  }
  if (view.kind === "minigame") {
    const card = el("div", "task-card");
    card.append(el("h2", "task-name", view.game ?? "task"));
    card.append(el("p", "task-text", view.text ?? ""));
    const sequence = sequenceOf(view);
    if (sequence !== null) {
      card.append(el("p", "task-progress", `steps done: ${sequence.done} of ${sequence.total}`));
      const steps = el("div", "steps");
      for (const step of sequence.available) {
        steps.append(
          button(
            step,
            { "data-control": "step", "data-step": step, "data-device": "seat" },
            () => hooks.onGesture({ device: "seat", control: "step", step }),
            locked
          )
        );
      }
      card.append(steps);
    } else {
      card.append(el("p", "task-hint", "pick up the handset"));
    }
    body.append(card);
    return;
  }
  const card = el("div", "ending-card");
  card.setAttribute("data-category", view.category ?? "");
  card.append(
    el("span", "ending-stamp", view.category === "main" ? "main ending" : "alternate ending")
  );
  card.append(el("p", "ending-text", view.text ?? ""));
  card.append(
    button(
      "acknowledge",
      { "data-control": "ack" },
      () => hooks.onGesture({ device: "seat", control: "ack" }),
      locked
    )
  );
  body.append(card);
}

function seatChrome(vm: ViewModel, hooks: Hooks, locked: boolean): HTMLElement {
  const chrome = el("footer", "seat-chrome");
  const noSession = vm.sessionId === null;
  const slip = document.createElement("textarea");
  slip.className = "save-slip";
  slip.setAttribute("data-control", "save-slip");
  slip.rows = 2;
  slip.value = vm.saveText ?? "";
  slip.disabled = locked;
  chrome.append(
    button("save", { "data-control": "save" }, hooks.onSave, locked || noSession),
    button(
      "restore",
      { "data-control": "restore" },
      () => hooks.onRestore(slip.value),
      locked || noSession
    ),
    button("restart", { "data-control": "restart" }, hooks.onRestart, noSession),
    slip
  );
  return chrome;
}

// ---------------------------------------------------------------------------
// Handset

function handset(vm: ViewModel, hooks: Hooks, locked: boolean): HTMLElement {
  const unit = el("aside", "device handset" + (vm.activeDevice === "handset" ? " active" : ""));
  unit.append(lcd(vm, hooks, locked));

  const pad = el("div", "dpad");
  const dirs: Array<["n" | "e" | "s" | "w", string, string]> = [
    ["n", "▲", "up"],
    ["w", "◀", "left"],
    ["e", "▶", "right"],
    ["s", "▼", "down"],
  ];
  const center = button(
    "●",
    { "data-control": "center", title: "grab / confirm" },
    () => hooks.onGesture({ device: "handset", control: "center" }),
    locked
  );
  for (const [dir, glyph, title] of dirs) {
    const key = button(
      glyph,
      { "data-dir": dir, title },
      () => hooks.onGesture({ device: "handset", control: "dpad", dir }),
      locked
    );
    key.classList.add(`dpad-${dir}`);
    pad.append(key);
    if (dir === "w") pad.append(center);
  }
  unit.append(pad);

  unit.append(
    button(
      "hold / del",
      { "data-control": "side" },
      () => hooks.onGesture({ device: "handset", control: "side" }),
      locked
    )
  );

  const keypad = el("div", "keypad");
  for (const row of KEYPAD_ROWS) {
    const line = el("div", "keypad-row");
    for (const symbol of row) {
      line.append(
        button(
          KEY_LABELS[symbol] ?? symbol,
          { "data-key": symbol },
          () => hooks.onGesture({ device: "handset", control: "key", symbol }),
          locked
        )
      );
    }
    keypad.append(line);
  }
  unit.append(keypad);
  return unit;
}

function lcd(vm: ViewModel, hooks: Hooks, locked: boolean): HTMLElement {
  const screen = el("div", "lcd");
  const view = vm.view;
  if (view === null || view.kind !== "minigame") {
    screen.setAttribute("data-lcd", "idle");
    screen.append(el("p", "lcd-idle", "the cabin screen has the story"));
    return screen;
  }
  screen.setAttribute("data-lcd", view.game ?? "idle");

  const biolink = biolinkOf(view);
  if (biolink !== null) {
    const meterValue = view.meters[biolink.meter];
    screen.append(el("div", "lcd-line", `link: ${biolink.creature}`));
    screen.append(
      el("div", "lcd-line", `trash ${biolink.collected} of ${biolink.required}  ${biolink.meter} ${meterValue ?? "?"}`)
    );
    const span = 2 * biolink.visibility + 1;
    const grid = el("div", "bio-grid");
    grid.style.gridTemplateColumns = `repeat(${span}, 1fr)`;
    const byPos = new Map<string, string>();
    for (const cell of biolink.cells) byPos.set(`${cell.x},${cell.y}`, cell.cell);
    const [cx, cy] = biolink.position;
    for (let y = cy - biolink.visibility; y <= cy + biolink.visibility; y += 1) {
      for (let x = cx - biolink.visibility; x <= cx + biolink.visibility; x += 1) {
        const cell = byPos.get(`${x},${y}`);
        const tile = el("span", "tile");
        if (x === cx && y === cy) {
          tile.classList.add("creature");
          tile.setAttribute("data-creature", "");
          tile.textContent = "@";
        } else if (cell === undefined) {
          tile.classList.add("void");
        } else {
          tile.setAttribute("data-cell", cell);
          tile.classList.add(cell === "#" ? "wall" : cell === "T" ? "trash" : "open");
          tile.textContent = cell === "." ? "·" : cell;
        }
        grid.append(tile);
      }
    }
    screen.append(grid);
    return screen;
  }

  const scan = scanOf(view);
  if (scan !== null) {
    const spent = scan.budget === null ? `${scan.scans_used}` : `${scan.scans_used} of ${scan.budget}`;
    screen.append(el("div", "lcd-line", `sweep ${scan.width}x${scan.height}  scans ${spent}`));
    const grid = el("div", "scan-grid");
    grid.style.gridTemplateColumns = `repeat(${scan.width}, 1fr)`;
    const markers = new Map<string, string>();
    for (const hit of scan.revealed) markers.set(`${hit.x},${hit.y}`, hit.marker);
    for (let y = 0; y < scan.height; y += 1) {
      for (let x = 0; x < scan.width; x += 1) {
        const marker = markers.get(`${x},${y}`);
        const tile = button(
          marker === "decoy" ? "!" : marker === "empty" ? "x" : "?",
          { "data-scan-x": String(x), "data-scan-y": String(y) },
          () => hooks.onGesture({ device: "handset", control: "scan-cell", x, y }),
          locked || marker !== undefined
        );
        if (marker !== undefined) tile.classList.add(marker);
        grid.append(tile);
      }
    }
    screen.append(grid);
    return screen;
  }

  const coord = coordOf(view);
  if (coord !== null) {
    screen.append(el("div", "lcd-line", "enter coordinates"));
    const echo = el("div", "coord-echo", coord.masked);
    echo.setAttribute("data-control", "coord-echo");
    echo.append(el("span", "caret", "_"));
    screen.append(echo);
    const attempts =
      coord.max_attempts === null
        ? `attempts used: ${coord.attempts_used}`
        : `attempts used: ${coord.attempts_used} of ${coord.max_attempts}`;
    screen.append(el("div", "lcd-line", attempts));
    return screen;
  }

  const sequence = sequenceOf(view);
  if (sequence !== null) {
    screen.append(el("div", "lcd-line", `procedure: ${sequence.done} of ${sequence.total} done`));
    const steps = el("div", "steps");
    for (const step of sequence.available) {
      steps.append(
        button(
          step,
          { "data-control": "step", "data-step": step, "data-device": "handset" },
          () => hooks.onGesture({ device: "handset", control: "step", step }),
          locked
        )
      );
    }
    screen.append(steps);
  }
  return screen;
}
