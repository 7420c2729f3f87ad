// Typed client for the labeling/classification HTTP API. Every non-2xx
// response carries a single {status, code, message} error object, which is
// surfaced as RequestFailed so screens can render it.

export interface ActionRecord {
  kind: string;
  node_type: string;
  label?: string;
  parent_type?: string;
  position?: number;
  new_label?: string;
}

export interface ClusterSummary {
  cluster_id: number;
  size: number;
  label: string | null;
  medoid_preview: ActionRecord[];
}

export interface ClusterMember {
  script_id: string;
  actions: ActionRecord[];
  incorrect_src: string | null;
  correct_src: string | null;
}

export interface ClusterDetail {
  cluster_id: number;
  label: string | null;
  members: ClusterMember[];
  medoid_id: string | null;
}

export interface Evidence {
  script_id: string;
  distance: number;
  cluster_id: number;
}

export interface Prediction {
  label: string;
  confidence: number;
  nearest_distance: number;
  method: string;
  evidence: Evidence[];
}

export interface HealthInfo {
  status: string;
  model_digest: string;
}

export class RequestFailed extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "RequestFailed";
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  if (!response.ok) {
    let code = "http_error";
    let message = `HTTP ${response.status}`;
    try {
      const body = await response.json();
      if (body && typeof body.code === "string") {
        code = body.code;
        message = body.message ?? message;
      }
    } catch {
      // non-JSON error body; keep the generic message
    }
    throw new RequestFailed(response.status, code, message);
  }
  if (response.status === 204) {
    return undefined as T;
  }
  return (await response.json()) as T;
}

export class LabelerApi {
  constructor(private readonly base: string = "") {}

  health(): Promise<HealthInfo> {
    return request(`${this.base}/api/health`);
  }

  clusters(): Promise<ClusterSummary[]> {
    return request(`${this.base}/api/clusters`);
  }

  cluster(id: number): Promise<ClusterDetail> {
    return request(`${this.base}/api/clusters/${id}`);
  }

  async setLabel(id: number, label: string): Promise<void> {
    await request<void>(`${this.base}/api/clusters/${id}/label`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ label }),
    });
  }

  classify(source: string): Promise<Prediction> {
    return request(`${this.base}/api/classify`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ source }),
    });
  }
}
