import { ApiClient, ApiError } from "./api.js";
import {
  buildSliders,
  entryOf,
  moveSlider,
  snapToPolicy,
  type ConsoleSelection,
} from "./model.js";
import type {
  ControllerLogRecord,
  ControllerStateDoc,
  PlaybookDoc,
  ScenarioPollDoc,
} from "./types.js";

/** The operator console: equalizer-style sliders over playbook notches, a
 * predicted-distribution bar chart, a live overload timeline, and one-click
 * deployment.  All data comes from the HTTP API; fractions are rendered
 * verbatim, never recomputed. */
export class OperatorConsole {
  selection!: ConsoleSelection;
  private playbook!: PlaybookDoc;
  private countdown = 0;
  private degraded = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ApiClient
  ) {}

  async init(): Promise<void> {
    this.playbook = await this.client.getPlaybook();
    this.selection = buildSliders(this.playbook);
    this.renderSkeleton();
    this.renderSliders();
    this.renderBars();
  }

  /** One refresh cycle: poll the scenario and controller, re-render the
   * live panels.  Any transport failure flips the console into read-only
   * degraded mode until a poll succeeds again. */
  async refresh(scenarioId: string): Promise<void> {
    let poll: ScenarioPollDoc;
    let controller: ControllerStateDoc;
    let log: ControllerLogRecord[];
    try {
      poll = await this.client.pollScenario(scenarioId);
      controller = await this.client.getControllerState();
      log = await this.client.getControllerLog();
    } catch {
      this.setDegraded(true);
      return;
    }
    this.setDegraded(false);
    this.update(poll, controller, log);
  }

  /** Re-render from already-fetched documents (also the test seam). */
  update(
    poll: ScenarioPollDoc,
    controller: ControllerStateDoc,
    log: ControllerLogRecord[]
  ): void {
    const state = poll.state;
    if (state.active_policy !== this.selection.activePolicy) {
      snapToPolicy(this.selection, this.playbook, state.active_policy, "current");
      this.renderSliders();
    }
    this.renderLivePanel(state.per_site, controller.phase);
    this.appendTimeline(state.now, state.per_site, state.active_policy);
    this.setCountdown(poll.propagation_remaining);
    this.renderBanner(controller, log);
  }

  /** Deploy the proposed policy.  A 409 means a change is still
   * propagating: keep the control disabled and show the server's
   * retry-after as the countdown. */
  async deployProposed(): Promise<void> {
    try {
      const result = await this.client.deploy(this.selection.proposedPolicy);
      this.setCountdown(result.effective_in);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        const detail = err.detail as { retry_after?: number };
        this.setCountdown(detail.retry_after ?? 1);
        return;
      }
      throw err;
    }
  }

  /** Propose a specific playbook policy (e.g. picked from a notch label). */
  selectPolicy(policyId: string): void {
    snapToPolicy(this.selection, this.playbook, policyId, "proposed");
    this.renderSliders();
    this.renderBars();
  }

  onSliderMoved(siteId: string, notchIndex: number): void {
    moveSlider(this.selection, this.playbook, siteId, notchIndex);
    this.renderSliders();
    this.renderBars();
  }

  setCountdown(seconds: number): void {
    this.countdown = seconds;
    const button = this.deployButton();
    const label = this.root.querySelector(".countdown") as HTMLElement;
    if (seconds > 0) {
      button.disabled = true;
      label.textContent = `propagating — ${Math.ceil(seconds)}s`;
    } else {
      button.disabled = this.degraded;
      label.textContent = "";
    }
  }

  setDegraded(on: boolean): void {
    this.degraded = on;
    this.root.classList.toggle("degraded", on);
    const banner = this.root.querySelector(".degraded-banner") as HTMLElement;
    banner.hidden = !on;
    banner.textContent = on ? "backend unreachable — read-only" : "";
    for (const input of this.root.querySelectorAll("input,button")) {
      if (on) (input as HTMLInputElement).disabled = true;
    }
    if (!on) {
      for (const input of this.root.querySelectorAll("input.slider")) {
        (input as HTMLInputElement).disabled = false;
      }
      this.setCountdown(this.countdown);
    }
  }

  deployButton(): HTMLButtonElement {
    return this.root.querySelector(".deploy") as HTMLButtonElement;
  }

  private renderSkeleton(): void {
    this.root.innerHTML = `
      <div class="degraded-banner" hidden></div>
      <div class="escalated-banner" hidden></div>
      <div class="sliders"></div>
      <div class="bars"></div>
      <div class="live"></div>
      <div class="timeline"></div>
      <div class="controls">
        <button class="deploy">Deploy</button>
        <span class="countdown"></span>
      </div>`;
    this.deployButton().addEventListener("click", () => {
      void this.deployProposed();
    });
  }

  private renderSliders(): void {
    const host = this.root.querySelector(".sliders") as HTMLElement;
    host.innerHTML = "";
    for (const slider of this.selection.sliders) {
      const row = document.createElement("div");
      row.className = "slider-row";
      row.dataset.site = slider.siteId;
      row.dataset.notchCount = String(slider.notches.length);

      const label = document.createElement("label");
      label.textContent = slider.siteId;
      row.appendChild(label);

      const input = document.createElement("input");
      input.type = "range";
      input.className = "slider";
      input.min = "0";
      input.max = String(slider.notches.length - 1);
      input.step = "1"; // snaps: only notch indices are reachable
      input.value = String(slider.proposedIndex);
      input.addEventListener("input", () => {
        this.onSliderMoved(slider.siteId, Number(input.value));
      });
      row.appendChild(input);

      const ticks = document.createElement("datalist");
      for (const notch of slider.notches) {
        const option = document.createElement("option");
        option.value = String(notch.fraction);
        option.label = notch.policyIds.join(",");
        ticks.appendChild(option);
      }
      row.appendChild(ticks);
      host.appendChild(row);
    }
    const proposed = this.root.querySelector(".controls .deploy") as HTMLElement;
    proposed.textContent = `Deploy ${this.selection.proposedPolicy}`;
  }

  /** Bar chart of the proposed entry's measured per-site fractions. */
  private renderBars(): void {
    const host = this.root.querySelector(".bars") as HTMLElement;
    const entry = entryOf(this.playbook, this.selection.proposedPolicy);
    host.innerHTML = "";
    host.dataset.policy = entry.policy_id;
    for (const siteId of this.playbook.sites) {
      const fraction = entry.fractions[siteId];
      const bar = document.createElement("div");
      bar.className = "bar";
      bar.dataset.site = siteId;
      bar.dataset.fraction = String(fraction);
      bar.style.height = `${fraction * 100}%`;
      bar.textContent = `${siteId} ${(fraction * 100).toFixed(0)}%`;
      host.appendChild(bar);
    }
  }

  private renderLivePanel(
    perSite: ScenarioPollDoc["state"]["per_site"],
    phase: string
  ): void {
    const host = this.root.querySelector(".live") as HTMLElement;
    host.innerHTML = "";
    host.dataset.phase = phase;
    for (const [siteId, sample] of Object.entries(perSite)) {
      const cell = document.createElement("div");
      cell.className = sample.overloaded ? "site overloaded" : "site";
      cell.dataset.site = siteId;
      cell.textContent =
        `${siteId}: ${sample.offered.toFixed(0)} / ` +
        `${sample.capacity.toFixed(0)}`;
      host.appendChild(cell);
    }
  }

  private appendTimeline(
    now: number,
    perSite: ScenarioPollDoc["state"]["per_site"],
    activePolicy: string
  ): void {
    const host = this.root.querySelector(".timeline") as HTMLElement;
    const tick = document.createElement("span");
    const hot = Object.values(perSite).some((s) => s.overloaded);
    tick.className = hot ? "tick hot" : "tick";
    tick.dataset.t = String(now);
    tick.title = `t=${now} policy=${activePolicy}`;
    host.appendChild(tick);
  }

  /** Escalation is a takeover: prominent banner with the controller's
   * decision log inline, handing the incident to the operator. */
  private renderBanner(
    controller: ControllerStateDoc,
    log: ControllerLogRecord[]
  ): void {
    const banner = this.root.querySelector(".escalated-banner") as HTMLElement;
    if (controller.phase !== "escalated") {
      banner.hidden = true;
      banner.innerHTML = "";
      return;
    }
    banner.hidden = false;
    banner.innerHTML = `<strong>Controller escalated — operator action required</strong>`;
    const list = document.createElement("ul");
    list.className = "decision-log";
    for (const record of log) {
      const item = document.createElement("li");
      item.textContent =
        `t=${record.time} ${record.decision}` +
        (record.policy_id ? ` ${record.policy_id}` : "") +
        ` — ${record.rationale}`;
      list.appendChild(item);
    }
    banner.appendChild(list);
  }
}
