/** Typed client for the wildsplit serve API. The UI never computes clusters
 *  itself; everything displayed comes from these routes. */

export interface DatasetInfo {
  name: string;
  timestamped: boolean;
  images: number;
  identities: number;
  saved_theta: number | null;
  default_theta: number;
}

export interface SweepPoint {
  theta: number;
  tp: number;
  fp: number;
}

export interface ClusterInfo {
  identity: string;
  cluster_id: string;
  size: number;
  image_ids: string[];
  paths: (string | null)[];
  dates: string[];
}

export interface QualityInfo {
  dataset: string;
  theta: number;
  tp: number | null;
  fp: number | null;
  purity: unknown | null;
  cluster_sizes: number[];
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

async function getJson<T>(url: string, signal?: AbortSignal): Promise<T> {
  const resp = await fetch(url, { signal });
  if (!resp.ok) {
    throw new ApiError(resp.status, `${url}: HTTP ${resp.status}`);
  }
  return resp.json() as Promise<T>;
}

export class WorkbenchApi {
  constructor(private readonly base: string = "") {}

  listDatasets(): Promise<{ datasets: DatasetInfo[] }> {
    return getJson(`${this.base}/api/datasets`);
  }

  sweep(dataset: string): Promise<{ timestamped: boolean; points: SweepPoint[] }> {
    return getJson(`${this.base}/api/sweep?dataset=${encodeURIComponent(dataset)}`);
  }

  clusters(
    dataset: string,
    theta: number,
    signal?: AbortSignal,
  ): Promise<{ clusters: ClusterInfo[] }> {
    const q = `dataset=${encodeURIComponent(dataset)}&theta=${theta}`;
    return getJson(`${this.base}/api/clusters?${q}`, signal);
  }

  quality(
    dataset: string,
    theta: number,
    signal?: AbortSignal,
  ): Promise<QualityInfo> {
    const q = `dataset=${encodeURIComponent(dataset)}&theta=${theta}`;
    return getJson(`${this.base}/api/quality?${q}`, signal);
  }

  async saveThreshold(dataset: string, theta: number): Promise<void> {
    const resp = await fetch(`${this.base}/api/threshold`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ dataset, theta }),
    });
    if (!resp.ok) {
      throw new ApiError(resp.status, `save threshold: HTTP ${resp.status}`);
    }
  }

  imageUrl(imageId: string): string {
    return `${this.base}/api/image/${encodeURIComponent(imageId)}`;
  }
}
