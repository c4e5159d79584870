import type {
  ControllerLogRecord,
  ControllerStateDoc,
  DeployResult,
  PlaybookDoc,
  ScenarioPollDoc,
} from "./types.js";

export type FetchLike = (
  input: string,
  init?: RequestInit
) => Promise<Response>;

/** Raised for HTTP-level failures so callers can branch on the status
 * (409 during propagation gets special treatment in the console). */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown
  ) {
    super(`API error ${status}`);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init)
  ) {}

  getPlaybook(): Promise<PlaybookDoc> {
    return this.get("/playbook");
  }

  pollScenario(scenarioId: string, advance = 1): Promise<ScenarioPollDoc> {
    return this.get(`/scenario/${scenarioId}/state?advance=${advance}`);
  }

  getControllerState(): Promise<ControllerStateDoc> {
    return this.get("/controller/state");
  }

  async getControllerLog(): Promise<ControllerLogRecord[]> {
    const doc = await this.get<{ log: ControllerLogRecord[] }>(
      "/controller/log"
    );
    return doc.log;
  }

  async deploy(policyId: string): Promise<DeployResult> {
    const response = await this.fetchFn(`${this.baseUrl}/controller/deploy`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ policy_id: policyId }),
    });
    if (!response.ok) {
      throw new ApiError(response.status, (await response.json()).detail);
    }
    return (await response.json()) as DeployResult;
  }

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`);
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return (await response.json()) as T;
  }
}
