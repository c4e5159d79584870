import type { PlaybookDoc, PlaybookEntryDoc } from "./types.js";

/** One allowed slider position: a measured fraction and the playbook
 * policies that put this site at that fraction. */
export interface Notch {
  fraction: number;
  policyIds: string[];
}

/** Per-site slider: positions are notch indices, never free percentages. */
export interface SliderModel {
  siteId: string;
  notches: Notch[];
  /** Notch of the currently active policy. */
  currentIndex: number;
  /** Notch of the operator's proposed policy (snaps on every change). */
  proposedIndex: number;
}

/** The console's selection state: the sliders plus the single policy they
 * currently denote.  Every reachable state maps to exactly one policy_id. */
export interface ConsoleSelection {
  sliders: SliderModel[];
  proposedPolicy: string;
  activePolicy: string;
}

/** Derive the slider notches solely from the playbook document.  The notch
 * count per site equals the number of distinct measured fractions — the
 * playbook's per-site "traffic options". */
export function buildSliders(playbook: PlaybookDoc): ConsoleSelection {
  const sliders = playbook.sites.map((siteId) => {
    const byFraction = new Map<number, string[]>();
    for (const entry of playbook.entries) {
      const fraction = entry.fractions[siteId];
      const ids = byFraction.get(fraction) ?? [];
      ids.push(entry.policy_id);
      byFraction.set(fraction, ids);
    }
    const notches = [...byFraction.entries()]
      .sort(([a], [b]) => a - b)
      .map(([fraction, policyIds]) => ({
        fraction,
        policyIds: policyIds.sort(),
      }));
    return { siteId, notches, currentIndex: 0, proposedIndex: 0 };
  });
  const selection: ConsoleSelection = {
    sliders,
    proposedPolicy: playbook.baseline_id,
    activePolicy: playbook.baseline_id,
  };
  snapToPolicy(selection, playbook, playbook.baseline_id, "both");
  return selection;
}

/** Snap every slider to the given policy's measured fractions. */
export function snapToPolicy(
  selection: ConsoleSelection,
  playbook: PlaybookDoc,
  policyId: string,
  which: "proposed" | "current" | "both" = "proposed"
): void {
  const entry = entryOf(playbook, policyId);
  for (const slider of selection.sliders) {
    const index = slider.notches.findIndex(
      (n) => n.fraction === entry.fractions[slider.siteId]
    );
    if (which !== "current") slider.proposedIndex = index;
    if (which !== "proposed") slider.currentIndex = index;
  }
  if (which !== "current") selection.proposedPolicy = policyId;
  if (which !== "proposed") selection.activePolicy = policyId;
}

/** Operator moved one slider to a notch.  The notch names the candidate
 * policies; the last-moved slider wins and the other sliders snap to the
 * chosen policy ("last moved wins" convention).  Returns the policy now
 * proposed. */
export function moveSlider(
  selection: ConsoleSelection,
  playbook: PlaybookDoc,
  siteId: string,
  notchIndex: number
): string {
  const slider = selection.sliders.find((s) => s.siteId === siteId);
  if (!slider) throw new Error(`unknown site ${siteId}`);
  const notch = slider.notches[notchIndex];
  if (!notch) throw new Error(`site ${siteId} has no notch ${notchIndex}`);
  const policyId = notch.policyIds.includes(selection.proposedPolicy)
    ? selection.proposedPolicy
    : notch.policyIds[0];
  snapToPolicy(selection, playbook, policyId, "proposed");
  return policyId;
}

export function entryOf(
  playbook: PlaybookDoc,
  policyId: string
): PlaybookEntryDoc {
  const entry = playbook.entries.find((e) => e.policy_id === policyId);
  if (!entry) throw new Error(`unknown policy ${policyId}`);
  return entry;
}
