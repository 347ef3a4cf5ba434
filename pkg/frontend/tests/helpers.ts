/**
 * Test helpers: recorded-fixture loading and a routed fetch mock, so every
 * component test runs against real captured API traffic with no service up.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { vi } from "vitest";

const FIXTURES_DIR = join(dirname(fileURLToPath(import.meta.url)), "..", "fixtures");

export interface RecordedExchange {
	status: number;
	body: unknown;
}

export function fixture(name: string): RecordedExchange {
	return JSON.parse(readFileSync(join(FIXTURES_DIR, name), "utf-8"));
}

export type Route = RecordedExchange | ((init?: RequestInit) => RecordedExchange | Promise<RecordedExchange>);

/**
 * Install a fetch mock routed by "METHOD path". Routes given as arrays are
 * consumed one response per call (last one repeats).
 */
export function installFetch(routes: Record<string, Route | RecordedExchange[]>): ReturnType<typeof vi.fn> {
	const cursors = new Map<string, number>();
	const mock = vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
		const url = String(input);
		const method = (init?.method ?? "GET").toUpperCase();
		const path = url.replace(/^https?:\/\/[^/]+/, "");
		const key = `${method} ${path}`;
		const route = routes[key];
		if (route === undefined) {
			throw new Error(`no mock route for ${key}`);
		}
		let exchange: RecordedExchange;
		if (Array.isArray(route)) {
			const cursor = cursors.get(key) ?? 0;
			exchange = route[Math.min(cursor, route.length - 1)];
			cursors.set(key, cursor + 1);
		} else if (typeof route === "function") {
			exchange = await route(init);
		} else {
			exchange = route;
		}
		return new Response(JSON.stringify(exchange.body), {
			status: exchange.status,
			headers: { "Content-Type": "application/json" },
		});
	});
	vi.stubGlobal("fetch", mock);
	return mock;
}

export function mount(): HTMLElement {
	document.body.innerHTML = "";
	const root = document.createElement("div");
	root.id = "app";
	document.body.append(root);
	return root;
}

/** Every string in the fixture, recursively - the "no fabricated values" pool. */
export function fixtureValuePool(value: unknown, pool = new Set<string>()): Set<string> {
	if (value === null || value === undefined) {
		return pool;
	}
	if (Array.isArray(value)) {
		for (const item of value) {
			fixtureValuePool(item, pool);
		}
	} else if (typeof value === "object") {
		for (const item of Object.values(value)) {
			fixtureValuePool(item, pool);
		}
	} else {
		pool.add(String(value));
	}
	return pool;
}
