import { afterEach, describe, expect, it, vi } from "vitest";
import { ApiError, WorkbenchApi } from "./api.js";

const jsonResponse = (body: unknown, status = 200) =>
  new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });

describe("WorkbenchApi", () => {
  afterEach(() => {
    vi.unstubAllGlobals();
  });

  it("hits the expected routes with encoded query params", async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ clusters: [] }));
    vi.stubGlobal("fetch", fetchMock);
    const api = new WorkbenchApi();
    await api.clusters("sea otters", 0.95);
    expect(fetchMock).toHaveBeenCalledWith(
      "/api/clusters?dataset=sea%20otters&theta=0.95",
      { signal: undefined },
    );
  });

  it("forwards abort signals to fetch", async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ dataset: "d" }));
    vi.stubGlobal("fetch", fetchMock);
    const controller = new AbortController();
    await new WorkbenchApi().quality("d", 0.9, controller.signal);
    const [, init] = fetchMock.mock.calls[0] as unknown as [string, RequestInit];
    expect(init.signal).toBe(controller.signal);
  });

  it("raises ApiError with the status on non-2xx responses", async () => {
    vi.stubGlobal("fetch", vi.fn(async () => jsonResponse({ detail: "x" }, 404)));
    const err = await new WorkbenchApi()
      .sweep("missing")
      .then(() => null, (e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(404);
  });

  it("POSTs threshold saves as JSON", async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ saved: true }));
    vi.stubGlobal("fetch", fetchMock);
    await new WorkbenchApi().saveThreshold("deer", 0.955);
    const [url, init] = fetchMock.mock.calls[0] as unknown as [string, RequestInit];
    expect(url).toBe("/api/threshold");
    expect(init.method).toBe("POST");
    expect(JSON.parse(init.body as string)).toEqual({
      dataset: "deer",
      theta: 0.955,
    });
  });

  it("prefixes a base URL and escapes image ids", () => {
    const api = new WorkbenchApi("http://localhost:8000");
    expect(api.imageUrl("a/b c")).toBe(
      "http://localhost:8000/api/image/a%2Fb%20c",
    );
  });
});
