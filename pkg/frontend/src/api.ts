/**
 * Thin typed client for the recommendation API.
 * Non-2xx responses throw ApiError carrying the service's error envelope
 * verbatim so views can render it without reshaping.
 */

import type {
	EntityCatalogs,
	ErrorEnvelope,
	FeedbackRecord,
	FeedbackReport,
	QueryRequest,
	RecommendResponse,
} from "./types.js";

export class ApiError extends Error {
	constructor(
		public readonly status: number,
		public readonly envelope: ErrorEnvelope,
	) {
		super(envelope.error.message);
	}
}

async function parseOrThrow<T>(response: Response): Promise<T> {
	const body = await response.json();
	if (!response.ok) {
		throw new ApiError(response.status, body as ErrorEnvelope);
	}
	return body as T;
}

export class ApiClient {
	constructor(private readonly baseUrl: string = "") {}

	async getEntities(): Promise<EntityCatalogs> {
		return parseOrThrow(await fetch(`${this.baseUrl}/api/entities`));
	}

	async recommend(query: QueryRequest): Promise<RecommendResponse> {
		return parseOrThrow(
			await fetch(`${this.baseUrl}/api/recommend`, {
				method: "POST",
				headers: { "Content-Type": "application/json" },
				body: JSON.stringify(query),
			}),
		);
	}

	async submitFeedback(record: FeedbackRecord): Promise<FeedbackReport> {
		return parseOrThrow(
			await fetch(`${this.baseUrl}/api/feedback`, {
				method: "POST",
				headers: { "Content-Type": "application/json" },
				body: JSON.stringify(record),
			}),
		);
	}
}

/**
 * Shared in-flight gate: one recommend request per tab, and feedback and
 * recommend submissions never interleave from the same page.
 */
export class RequestGate {
	private busy = false;
	private listeners: ((busy: boolean) => void)[] = [];

	get isBusy(): boolean {
		return this.busy;
	}

	onChange(listener: (busy: boolean) => void): void {
		this.listeners.push(listener);
	}

	async run<T>(work: () => Promise<T>): Promise<T> {
		if (this.busy) {
			throw new Error("a request is already in flight");
		}
		this.setBusy(true);
		try {
			return await work();
		} finally {
			this.setBusy(false);
		}
	}

	private setBusy(value: boolean): void {
		this.busy = value;
		for (const listener of this.listeners) {
			listener(value);
		}
	}
}
