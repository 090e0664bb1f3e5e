/** Thin HTTP client over the session API. */

import type { SessionPayload } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(`api error ${status}`);
  }
}

export class Client {
  constructor(private base: string) {}

  private async req(path: string, init?: RequestInit): Promise<unknown> {
    const res = await fetch(this.base + path, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    if (!res.ok) {
      let detail: unknown = null;
      try {
        detail = await res.json();
      } catch {
        detail = await res.text();
      }
      throw new ApiError(res.status, detail);
    }
    if (res.status === 204) return null;
    return res.json();
  }

  listFixtures(): Promise<{ fixtures: string[] }> {
    return this.req("/fixtures") as Promise<{ fixtures: string[] }>;
  }

  fixture(name: string): Promise<unknown> {
    return this.req(`/fixtures/${name}`);
  }

  createSession(problem: unknown): Promise<SessionPayload> {
    return this.req("/sessions", {
      method: "POST",
      body: JSON.stringify({ problem }),
    }) as Promise<SessionPayload>;
  }

  read(sid: string): Promise<SessionPayload> {
    return this.req(`/sessions/${sid}`) as Promise<SessionPayload>;
  }

  move(sid: string, action: string): Promise<SessionPayload> {
    return this.req(`/sessions/${sid}/move`, {
      method: "POST",
      body: JSON.stringify({ action }),
    }) as Promise<SessionPayload>;
  }

  whatif(sid: string, action: string): Promise<SessionPayload> {
    return this.req(
      `/sessions/${sid}/whatif?action=${encodeURIComponent(action)}`,
    ) as Promise<SessionPayload>;
  }

  reset(sid: string): Promise<SessionPayload> {
    return this.req(`/sessions/${sid}/reset`, { method: "POST" }) as Promise<
      SessionPayload
    >;
  }

  terminate(sid: string): Promise<SessionPayload> {
    return this.req(`/sessions/${sid}/terminate`, {
      method: "POST",
    }) as Promise<SessionPayload>;
  }
}
