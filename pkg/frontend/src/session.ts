/**
 * One live session per controller. Gestures become wire events, the events
 * queue client-side, and at most one request is in flight at a time: post
 * the head event, poll the fresh view, repeat. All state transitions come
 * back from the server; this file moves messages and nothing else.
 */
import { ApiError, LocalSchemaError, NetworkFault } from "./api.js";
import type { ApiClient } from "./api.js";
import { gestureToEvent } from "./gestures.js";
import type { Gesture } from "./gestures.js";
import { freshModel, isFinished } from "./viewmodel.js";
import type { ViewModel } from "./viewmodel.js";
import { WireShapeError } from "./wire.js";
import type { WireEvent } from "./wire.js";

export class SessionController {
  readonly vm: ViewModel = freshModel();
  /** Called after every model change; wire this to the renderer. */
  onChange: () => void = () => {};

  private queue: WireEvent[] = [];
  private pumping = false;
  /** True when an event was applied but the follow-up view poll still owes. */
  private pollOwed = false;
  private idleWaiters: Array<() => void> = [];

  constructor(private readonly api: ApiClient) {}

  get violations(): number {
    return this.api.violations;
  }

  async start(storyId: string, storyTitle: string | null, seed?: number): Promise<void> {
    const created = await this.api.createSession(storyId, seed);
    this.queue.length = 0;
    this.pollOwed = false;
    const vm = this.vm;
    vm.storyId = storyId;
    vm.storyTitle = storyTitle;
    vm.sessionId = created.sessionId;
    vm.view = created.view;
    vm.notes = [];
    vm.fault = null;
    vm.broken = null;
    vm.saveText = null;
    this.onChange();
    this.settle();
  }

  async restart(): Promise<void> {
    if (this.vm.storyId === null) return;
    try {
      await this.start(this.vm.storyId, this.vm.storyTitle);
    } catch (err) {
      this.report(err);
    }
  }

  gesture(g: Gesture): void {
    this.vm.activeDevice = g.device;
    const event = gestureToEvent(g, this.vm.view);
    this.onChange();
    if (event === null || this.vm.broken !== null) return;
    this.queue.push(event);
    void this.pump();
  }

  /** Clear a network fault and pick the queue back up. */
  retry(): void {
    if (this.vm.fault === null) return;
    this.vm.fault = null;
    this.onChange();
    void this.pump();
  }

  async save(): Promise<void> {
    if (this.vm.sessionId === null) return;
    try {
      this.vm.saveText = await this.api.fetchSave(this.vm.sessionId);
      this.onChange();
    } catch (err) {
      this.report(err);
    }
  }

  async restoreFromText(saveText: string): Promise<void> {
    if (this.vm.storyId === null) return;
    try {
      const restored = await this.api.restoreSession(this.vm.storyId, saveText);
      this.queue.length = 0;
      this.pollOwed = false;
      this.vm.sessionId = restored.sessionId;
      this.vm.view = restored.view;
      this.vm.notes = [];
      this.vm.fault = null;
      this.onChange();
      this.settle();
    } catch (err) {
      if (err instanceof ApiError) {
        // A bad save slip is a gameplay-sized mistake, not a fault.
        this.vm.notes = [{ code: err.code, message: err.message }];
        this.onChange();
        return;
      }
      this.report(err);
    }
  }

  /** Resolves once the queue is drained (or the session is stuck on a fault). */
  idle(): Promise<void> {
    if (this.quiescent()) return Promise.resolve();
    return new Promise((resolve) => this.idleWaiters.push(resolve));
  }

  private quiescent(): boolean {
    if (this.pumping) return false;
    if (this.vm.fault !== null || this.vm.broken !== null) return true;
    return this.queue.length === 0 && !this.pollOwed;
  }

  private settle(): void {
    if (!this.quiescent()) return;
    const waiters = this.idleWaiters;
    this.idleWaiters = [];
    for (const resolve of waiters) resolve();
  }

  private report(err: unknown): void {
    if (err instanceof NetworkFault) {
      this.vm.fault = err.message;
    } else if (err instanceof WireShapeError) {
      this.vm.broken = err.message;
    } else if (err instanceof Error) {
      this.vm.broken = err.message;
    } else {
      this.vm.broken = String(err);
    }
    this.onChange();
  }

  private async pump(): Promise<void> {
    if (this.pumping) return;
    this.pumping = true;
    this.vm.busy = true;
    this.onChange();
    try {
      while (this.vm.fault === null && this.vm.broken === null) {
        const sessionId = this.vm.sessionId;
        if (sessionId === null) {
          this.queue.length = 0;
          this.pollOwed = false;
          break;
        }
        if (this.pollOwed) {
          try {
            this.vm.view = await this.api.getView(sessionId);
            this.pollOwed = false;
            this.onChange();
          } catch (err) {
            this.report(err);
          }
          continue;
        }
        const event = this.queue[0];
        if (event === undefined) break;
        try {
          const result = await this.api.postEvent(sessionId, event);
          this.queue.shift();
          this.vm.notes = result.notes;
          if (result.conflict) {
            // Finished session: adopt the final view and drop stale inputs.
            this.vm.view = result.view;
            this.queue.length = 0;
          } else {
            this.pollOwed = true;
          }
          this.onChange();
        } catch (err) {
          if (err instanceof LocalSchemaError) {
            this.queue.shift();
            this.vm.notes = [{ code: "not-sent", message: err.message }];
            this.onChange();
            continue;
          }
          if (err instanceof ApiError) {
            this.queue.shift();
            this.vm.notes = [{ code: err.code, message: err.message }];
            this.onChange();
            continue;
          }
          this.report(err);
        }
      }
    } finally {
      this.pumping = false;
      this.vm.busy = false;
      this.onChange();
      this.settle();
    }
  }
}

export { isFinished };
