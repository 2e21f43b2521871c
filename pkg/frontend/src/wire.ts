/**
 * Wire types shared with the story server.
 *
 * Events are validated with strict schemas before they leave the client;
 * views are validated as they arrive so rendering never touches off-shape
 * data. No game rules live here: the schemas describe transport shape only.
 */
import { z } from "zod";

const int = z.number().int();
const channelSchema = z.enum(["touch", "handset"]);

const advanceEvent = z.strictObject({
  channel: channelSchema,
  type: z.literal("advance"),
});
const ackEvent = z.strictObject({
  channel: channelSchema,
  type: z.literal("ack"),
});
const chooseEvent = z.strictObject({
  channel: channelSchema,
  type: z.literal("choose"),
  index: int.nonnegative(),
});
const keyEvent = z.strictObject({
  channel: channelSchema,
  type: z.literal("key"),
  symbol: z.string().length(1),
});
const miniPlainEvent = z.strictObject({
  channel: channelSchema,
  type: z.literal("mini"),
  action: z.enum(["move-n", "move-e", "move-s", "move-w", "wait", "grab", "submit", "backspace"]),
});
const miniScanEvent = z.strictObject({
  channel: channelSchema,
  type: z.literal("mini"),
  action: z.literal("scan"),
  x: int.nonnegative(),
  y: int.nonnegative(),
});
const miniStepEvent = z.strictObject({
  channel: channelSchema,
  type: z.literal("mini"),
  action: z.literal("step"),
  step: z.string().min(1),
});

export const wireEventSchema = z.union([
  advanceEvent,
  ackEvent,
  chooseEvent,
  keyEvent,
  miniPlainEvent,
  miniScanEvent,
  miniStepEvent,
]);

export type Channel = z.infer<typeof channelSchema>;
export type WireEvent = z.infer<typeof wireEventSchema>;

export class WireShapeError extends Error {}

function firstIssue(error: z.ZodError): string {
  const issue = error.issues[0];
  if (issue === undefined) return "unknown shape problem";
  const where = issue.path.length > 0 ? ` at ${issue.path.join(".")}` : "";
  return `${issue.message}${where}`;
}

/** Gate every outgoing event; throws WireShapeError on anything off-shape. */
export function checkEvent(raw: unknown): WireEvent {
  const result = wireEventSchema.safeParse(raw);
  if (!result.success) {
    throw new WireShapeError(`refusing to send event: ${firstIssue(result.error)}`);
  }
  return result.data;
}

// ---------------------------------------------------------------------------
// Views

const optionSchema = z.object({
  index: int.nonnegative(),
  source: int.nonnegative(),
  label: z.string(),
});

const biolinkMiniSchema = z.object({
  creature: z.string(),
  position: z.tuple([int, int]),
  visibility: int.positive(),
  cells: z.array(z.object({ x: int, y: int, cell: z.enum([".", "#", "T"]) })),
  collected: int.nonnegative(),
  required: int.nonnegative(),
  meter: z.string(),
});
const scanMiniSchema = z.object({
  width: int.positive(),
  height: int.positive(),
  revealed: z.array(z.object({ x: int, y: int, marker: z.enum(["decoy", "empty"]) })),
  scans_used: int.nonnegative(),
  budget: int.nullable(),
});
const coordMiniSchema = z.object({
  masked: z.string(),
  attempts_used: int.nonnegative(),
  max_attempts: int.nullable(),
});
const sequenceMiniSchema = z.object({
  available: z.array(z.string()),
  done: int.nonnegative(),
  total: int.positive(),
});

export type Option = z.infer<typeof optionSchema>;
export type BiolinkMini = z.infer<typeof biolinkMiniSchema>;
export type ScanMini = z.infer<typeof scanMiniSchema>;
export type CoordMini = z.infer<typeof coordMiniSchema>;
export type SequenceMini = z.infer<typeof sequenceMiniSchema>;
export type Mini = BiolinkMini | ScanMini | CoordMini | SequenceMini;
export type GameKind = "biolink" | "scan" | "coord" | "sequence";

const baseViewSchema = z.object({
  node: z.string().min(1),
  kind: z.enum(["narration", "choice", "minigame", "ending"]),
  channel: z.enum(["touch", "handset", "any"]),
  meters: z.record(z.string(), int),
  finished: z.string().nullable(),
  text: z.string().nullable(),
  page: int.nullable(),
  pages: int.nullable(),
  prompt: z.string().nullable(),
  options: z.array(optionSchema).nullable(),
  game: z.enum(["biolink", "scan", "coord", "sequence"]).nullable(),
  mini: z.unknown().nullable(),
  category: z.enum(["main", "sub"]).nullable(),
});

export type View = Omit<z.infer<typeof baseViewSchema>, "mini"> & { mini: Mini | null };

const miniSchemas: Record<GameKind, z.ZodType<Mini>> = {
  biolink: biolinkMiniSchema,
  scan: scanMiniSchema,
  coord: coordMiniSchema,
  sequence: sequenceMiniSchema,
};

/** Parse a wire view; throws WireShapeError so callers can show an error card. */
export function parseView(raw: unknown): View {
  const base = baseViewSchema.safeParse(raw);
  if (!base.success) {
    throw new WireShapeError(`bad view from server: ${firstIssue(base.error)}`);
  }
  const view = base.data;
  if (view.kind === "narration" && (view.text === null || view.page === null || view.pages === null)) {
    throw new WireShapeError("bad view from server: narration without text or paging");
  }
  if (view.kind === "choice" && (view.options === null || view.options.length === 0)) {
    throw new WireShapeError("bad view from server: choice without options");
  }
  if (view.kind === "ending" && (view.category === null || view.text === null)) {
    throw new WireShapeError("bad view from server: ending without category text");
  }
  if (view.kind !== "minigame") {
    return { ...view, mini: null };
  }
  if (view.game === null) {
    throw new WireShapeError("bad view from server: minigame without a game tag");
  }
  const mini = miniSchemas[view.game].safeParse(view.mini);
  if (!mini.success) {
    throw new WireShapeError(`bad ${view.game} state from server: ${firstIssue(mini.error)}`);
  }
  return { ...view, mini: mini.data };
}

// Typed accessors: parseView already proved the shape, so the casts are safe.
export function biolinkOf(view: View): BiolinkMini | null {
  return view.game === "biolink" ? (view.mini as BiolinkMini) : null;
}
export function scanOf(view: View): ScanMini | null {
  return view.game === "scan" ? (view.mini as ScanMini) : null;
}
export function coordOf(view: View): CoordMini | null {
  return view.game === "coord" ? (view.mini as CoordMini) : null;
}
export function sequenceOf(view: View): SequenceMini | null {
  return view.game === "sequence" ? (view.mini as SequenceMini) : null;
}

// ---------------------------------------------------------------------------
// Server response envelopes

const noteSchema = z.object({ code: z.string(), message: z.string() });
export type Note = z.infer<typeof noteSchema>;

export const storyListSchema = z.array(
  z.object({ id: z.string(), title: z.string(), endings_count: int })
);
export type StoryInfo = z.infer<typeof storyListSchema>[number];

export const sessionCreatedSchema = z.object({ session_id: z.string(), view: z.unknown() });
export const eventResponseSchema = z.object({ view: z.unknown(), notes: z.array(noteSchema) });
export const viewResponseSchema = z.object({ view: z.unknown() });
export const errorResponseSchema = z.object({
  error: z.object({ code: z.string(), message: z.string() }),
  view: z.unknown().optional(),
});
