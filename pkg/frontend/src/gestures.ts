/**
 * The full gesture-to-event mapping, in one place.
 *
 * Seat-screen touches always go out on the "touch" channel, handset presses
 * on "handset"; the server is the judge of whether the step listens there.
 * Controls with one fixed meaning map unconditionally; the handset's shared
 * physical keys change role with what the last view showed:
 *
 *   control      narration   choice    biolink   scan        coord      sequence  ending
 *   advance      advance     -         -         -           -          -         -
 *   option i     -           choose i  -         -           -          -         -
 *   ack          -           -         -         -           -          -         ack
 *   step id      -           -         -         -           -          step id   -
 *   keypad sym   -           -         -         -           key sym    -         -
 *   d-pad dir    -           -         move-dir  -           -          -         -
 *   center       advance     -         grab      -           submit     -         ack
 *   side         -           -         wait      -           backspace  -         -
 *   scan cell    -           -         -         scan x y    -          -         -
 *
 * A "-" means the gesture is ignored locally: it produces no wire traffic.
 */
import type { View, WireEvent } from "./wire.js";

export type Gesture =
  | { device: "seat"; control: "advance" }
  | { device: "seat"; control: "option"; index: number }
  | { device: "seat"; control: "ack" }
  | { device: "seat"; control: "step"; step: string }
  | { device: "handset"; control: "key"; symbol: string }
  | { device: "handset"; control: "dpad"; dir: "n" | "e" | "s" | "w" }
  | { device: "handset"; control: "center" }
  | { device: "handset"; control: "side" }
  | { device: "handset"; control: "scan-cell"; x: number; y: number }
  | { device: "handset"; control: "step"; step: string };

export type Device = Gesture["device"];

export function gestureToEvent(gesture: Gesture, view: View | null): WireEvent | null {
  if (view === null || view.finished !== null) return null;
  const channel = gesture.device === "seat" ? "touch" : "handset";
  switch (gesture.control) {
    case "advance":
      return view.kind === "narration" ? { channel, type: "advance" } : null;
    case "option":
      return view.kind === "choice" ? { channel, type: "choose", index: gesture.index } : null;
    case "ack":
      return view.kind === "ending" ? { channel, type: "ack" } : null;
    case "step":
      return view.game === "sequence"
        ? { channel, type: "mini", action: "step", step: gesture.step }
        : null;
    case "key":
      return view.game === "coord" ? { channel, type: "key", symbol: gesture.symbol } : null;
    case "dpad":
      return view.game === "biolink"
        ? { channel, type: "mini", action: `move-${gesture.dir}` }
        : null;
    case "center":
      if (view.game === "biolink") return { channel, type: "mini", action: "grab" };
      if (view.game === "coord") return { channel, type: "mini", action: "submit" };
      if (view.kind === "narration") return { channel, type: "advance" };
      if (view.kind === "ending") return { channel, type: "ack" };
      return null;
    case "side":
      if (view.game === "biolink") return { channel, type: "mini", action: "wait" };
      if (view.game === "coord") return { channel, type: "mini", action: "backspace" };
      return null;
    case "scan-cell":
      return view.game === "scan"
        ? { channel, type: "mini", action: "scan", x: gesture.x, y: gesture.y }
        : null;
  }
}
