import type { Note, View } from "./wire.js";
import type { Device } from "./gestures.js";

/**
 * Everything the renderer needs, and nothing the server did not say.
 * The view field is always the last view the server sent; the rest is
 * cabin-side chrome state (which device is in hand, transient hints,
 * fault banners, the last fetched save slip).
 */
export type ViewModel = {
  storyId: string | null;
  storyTitle: string | null;
  sessionId: string | null;
  view: View | null;
  notes: Note[];
  activeDevice: Device;
  busy: boolean;
  /** Network trouble: last event is still queued; a retry re-sends it. */
  fault: string | null;
  /** Unusable wire data: the session is beyond rendering, only restart helps. */
  broken: string | null;
  saveText: string | null;
};

export function freshModel(): ViewModel {
  return {
    storyId: null,
    storyTitle: null,
    sessionId: null,
    view: null,
    notes: [],
    activeDevice: "seat",
    busy: false,
    fault: null,
    broken: null,
    saveText: null,
  };
}

export function isFinished(vm: ViewModel): boolean {
  return vm.view !== null && vm.view.finished !== null;
}
