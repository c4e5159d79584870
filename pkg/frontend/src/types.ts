/** Wire types for the mitigation service HTTP API (the console's only
 * data source — nothing here is recomputed client-side). */

export interface SitePolicyDoc {
  prepend: number;
  announce_to: number[] | null;
  poison: number[];
  withdrawn: boolean;
}

export interface PolicyConfigDoc {
  policy_id: string;
  per_site: Record<string, SitePolicyDoc>;
}

export interface PlaybookEntryDoc {
  policy_id: string;
  fractions: Record<string, number>;
  load_fractions: Record<string, number>;
  bins: Record<string, string>;
  measured_at: number;
  config: PolicyConfigDoc;
}

export interface PlaybookDoc {
  baseline_id: string;
  sites: string[];
  entries: PlaybookEntryDoc[];
  option_counts: Record<string, number>;
}

export interface SiteSampleDoc {
  offered: number;
  observed: number;
  dropped: number;
  capacity: number;
  overloaded: boolean;
}

export interface ScenarioStateDoc {
  now: number;
  active_policy: string;
  pending: { policy_id: string; effective_at: number } | null;
  per_site: Record<string, SiteSampleDoc>;
  controller_phase: string;
  unreachable_rate: number;
}

export interface ScenarioPollDoc {
  done: boolean;
  state: ScenarioStateDoc;
  propagation_remaining: number;
}

export interface ControllerStateDoc {
  phase: string;
  active_policy: string;
  attempt: number;
  candidate_set: string[] | null;
  eval_interval: number;
  revert_after: number;
  last_action_at: number | null;
}

export interface ControllerLogRecord {
  time: number;
  decision: string;
  policy_id: string | null;
  rationale: string;
  attempt: number;
  phase: string;
}

export interface DeployResult {
  deployed: string;
  effective_in: number;
}
