import { ApiClient } from "./api.js";
import { render } from "./render.js";
import type { Hooks } from "./render.js";
import { SessionController } from "./session.js";

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (root === null) return;
  const api = new ApiClient("");
  const controller = new SessionController(api);
  const hooks: Hooks = {
    onGesture: (gesture) => controller.gesture(gesture),
    onSave: () => void controller.save(),
    onRestore: (saveText) => void controller.restoreFromText(saveText),
    onRestart: () => void controller.restart(),
    onRetry: () => controller.retry(),
  };
  controller.onChange = () => render(root, controller.vm, hooks);
  controller.onChange();
  try {
    const stories = await api.listStories();
    const wanted = new URLSearchParams(window.location.search).get("story");
    const story = stories.find((entry) => entry.id === wanted) ?? stories[0];
    if (story === undefined) {
      controller.vm.broken = "the server lists no stories";
      controller.onChange();
      return;
    }
    await controller.start(story.id, story.title);
  } catch (err) {
    controller.vm.broken = err instanceof Error ? err.message : String(err);
    controller.onChange();
  }
}

void boot();
