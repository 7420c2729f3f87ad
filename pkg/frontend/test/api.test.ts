import { afterEach, describe, expect, it, vi } from "vitest";

import { LabelerApi, RequestFailed } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("LabelerApi", () => {
  it("fetches the cluster list", async () => {
    const payload = [
      { cluster_id: 0, size: 3, label: null, medoid_preview: [] },
    ];
    const mock = vi.fn().mockResolvedValue(jsonResponse(payload));
    vi.stubGlobal("fetch", mock);
    const api = new LabelerApi();
    expect(await api.clusters()).toEqual(payload);
    expect(mock).toHaveBeenCalledWith("/api/clusters", undefined);
  });

  it("puts labels as JSON and tolerates a 204", async () => {
    const mock = vi.fn().mockResolvedValue(new Response(null, { status: 204 }));
    vi.stubGlobal("fetch", mock);
    await new LabelerApi().setLabel(3, "off-by-one");
    const [url, init] = mock.mock.calls[0];
    expect(url).toBe("/api/clusters/3/label");
    expect(init.method).toBe("PUT");
    expect(JSON.parse(init.body)).toEqual({ label: "off-by-one" });
  });

  it("surfaces ApiError bodies as RequestFailed", async () => {
    const mock = vi.fn().mockResolvedValue(
      jsonResponse(
        { status: 404, code: "unknown_cluster", message: "no cluster 9" },
        404,
      ),
    );
    vi.stubGlobal("fetch", mock);
    const error = await new LabelerApi()
      .cluster(9)
      .catch((e: unknown) => e);
    expect(error).toBeInstanceOf(RequestFailed);
    expect((error as RequestFailed).status).toBe(404);
    expect((error as RequestFailed).code).toBe("unknown_cluster");
    expect((error as RequestFailed).message).toBe("no cluster 9");
  });

  it("falls back to a generic message on non-JSON errors", async () => {
    const mock = vi
      .fn()
      .mockResolvedValue(new Response("boom", { status: 502 }));
    vi.stubGlobal("fetch", mock);
    const error = (await new LabelerApi()
      .health()
      .catch((e: unknown) => e)) as RequestFailed;
    expect(error.code).toBe("http_error");
    expect(error.message).toBe("HTTP 502");
  });

  it("posts classify requests with the source text", async () => {
    const prediction = {
      label: "X",
      confidence: 1,
      nearest_distance: 0,
      method: "nearest_cluster",
      evidence: [],
    };
    const mock = vi.fn().mockResolvedValue(jsonResponse(prediction));
    vi.stubGlobal("fetch", mock);
    expect(await new LabelerApi().classify("x = 1;")).toEqual(prediction);
    const [url, init] = mock.mock.calls[0];
    expect(url).toBe("/api/classify");
    expect(JSON.parse(init.body)).toEqual({ source: "x = 1;" });
  });

  it("propagates network failures", async () => {
    vi.stubGlobal("fetch", vi.fn().mockRejectedValue(new Error("refused")));
    await expect(new LabelerApi().clusters()).rejects.toThrow("refused");
  });
});
