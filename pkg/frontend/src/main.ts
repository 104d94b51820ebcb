// Console bootstrap: tabbed chat/study views over one shared state object.

import { ApiClient } from "./api.js";
import { ChatView } from "./chat.js";
import { ConsoleState } from "./state.js";
import { StudyView } from "./study.js";

export function mountConsole(doc: Document, baseUrl = ""): {
  state: ConsoleState;
  chat: ChatView;
  study: StudyView;
  switchView: (name: "chat" | "study") => void;
} {
  const api = new ApiClient(baseUrl);
  const state = new ConsoleState();
  const chat = new ChatView(api, state, doc);
  const study = new StudyView(api, state, doc);

  const root = doc.getElementById("app") ?? doc.body;
  const tabs = doc.createElement("nav");
  tabs.className = "tabs";
  const chatTab = doc.createElement("button");
  chatTab.textContent = "Clip chat";
  const studyTab = doc.createElement("button");
  studyTab.textContent = "Rating study";
  tabs.appendChild(chatTab);
  tabs.appendChild(studyTab);
  root.appendChild(tabs);
  root.appendChild(chat.root);
  root.appendChild(study.root);

  function switchView(name: "chat" | "study"): void {
    state.activeView = name;
    const chatActive = name === "chat";
    chat.root.classList.toggle("hidden", !chatActive);
    study.root.classList.toggle("hidden", chatActive);
    if (chatActive) {
      study.deactivate();
      chat.renderTranscript(); // transcript survives view switches
    } else {
      chat.deactivate();
    }
  }

  chatTab.addEventListener("click", () => switchView("chat"));
  studyTab.addEventListener("click", () => switchView("study"));

  void chat.init();
  switchView("chat");
  return { state, chat, study, switchView };
}

declare const window: (Window & typeof globalThis) | undefined;

if (typeof window !== "undefined" && typeof document !== "undefined") {
  mountConsole(document);
}
