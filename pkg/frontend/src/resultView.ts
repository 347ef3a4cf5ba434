/**
 * Recommendation and evidence rendering.
 *
 * Everything shown here is copied verbatim from the API response: method
 * names, scores, costs, similarities, counts. The view never computes or
 * invents a value of its own (bar widths are the one visual derivation).
 */

import { ApiError } from "./api.js";
import { clear, el } from "./dom.js";
import type { ErrorEnvelope, GraphRow, RecommendResponse, Trend, VectorMatch } from "./types.js";

export class ResultView {
	constructor(readonly root: HTMLElement) {}

	render(response: RecommendResponse): void {
		clear(this.root);
		const { recommendation, reasoning, evidence, warnings } = response;

		if (evidence.used_fallback) {
			this.root.append(
				el("div", { class: "banner fallback-banner", role: "note" }, [
					"Fallback search used: the request exceeds every known problem scale; " +
						"these are the closest large-scale precedents.",
				]),
			);
		}
		for (const warning of warnings) {
			this.root.append(el("div", { class: "banner warning-banner" }, [warning]));
		}

		const badge = recommendation.grounded
			? el("span", { class: "badge grounded" }, ["grounded in evidence"])
			: el("span", { class: "badge ungrounded" }, ["not grounded - treat with care"]);

		const methodItems = recommendation.methods.map((method) => {
			const parts: (Node | string)[] = [el("strong", {}, [method])];
			const parameters = recommendation.parameters[method];
			if (parameters) {
				parts.push(el("code", { class: "params" }, [parameters]));
			}
			return el("li", {}, parts);
		});
		const recommendationSection = el("section", { class: "recommendation" }, [
			el("h2", {}, ["Recommendation", badge]),
			el("ol", { class: "methods" }, methodItems),
		]);
		if (recommendation.representation) {
			recommendationSection.append(
				el("p", {}, [`representation: ${recommendation.representation}`]),
			);
		}
		if (recommendation.constraint_handling) {
			recommendationSection.append(
				el("p", {}, [`constraint handling: ${recommendation.constraint_handling}`]),
			);
		}
		this.root.append(recommendationSection);

		this.root.append(
			el("section", { class: "reasoning" }, [el("h2", {}, ["Reasoning"]), el("p", {}, [reasoning])]),
		);

		this.root.append(
			evidencePanel("Matched problems", "graph-evidence", [graphTable(evidence.graph_rows)]),
			evidencePanel("Similar descriptions", "vector-evidence", [vectorList(evidence.vector_matches)]),
			evidencePanel("Cluster trends", "trend-evidence", evidence.trends.map(trendBlock)),
		);
	}

	renderError(envelope: ErrorEnvelope, status: number, onRetry: () => void): void {
		clear(this.root);
		const retry = el("button", { class: "retry", type: "button" }, ["Retry"]);
		retry.addEventListener("click", onRetry);
		this.root.append(
			el("div", { class: "error-box", role: "alert" }, [
				el("h2", {}, [`${envelope.error.code} (HTTP ${status})`]),
				el("p", { class: "error-message" }, [envelope.error.message]),
				el("pre", { class: "error-details" }, [JSON.stringify(envelope.error.details, null, 2)]),
				retry,
			]),
		);
	}

	renderFailure(error: unknown, onRetry: () => void): void {
		if (error instanceof ApiError) {
			this.renderError(error.envelope, error.status, onRetry);
			return;
		}
		clear(this.root);
		const retry = el("button", { class: "retry", type: "button" }, ["Retry"]);
		retry.addEventListener("click", onRetry);
		this.root.append(
			el("div", { class: "error-box", role: "alert" }, [
				el("h2", {}, ["Request failed"]),
				el("p", { class: "error-message" }, [String(error)]),
				retry,
			]),
		);
	}
}

function evidencePanel(title: string, id: string, children: (Node | string)[]): HTMLElement {
	const summary = el("summary", {}, [title]);
	const details = el("details", { class: "panel", id }, [summary, ...children]);
	details.setAttribute("open", "");
	return details;
}

function graphTable(rows: GraphRow[]): HTMLElement {
	if (rows.length === 0) {
		return el("p", { class: "empty" }, ["no matched problems"]);
	}
	const header = el("tr", {}, [
		...["problem", "n", "method", "obj", "con", "dist", "cost", "time (s)"].map((h) =>
			el("th", {}, [h]),
		),
	]);
	const body = rows.map((row) =>
		el("tr", {}, [
			el("td", {}, [row.problem_id]),
			el("td", {}, [String(row.num_facilities)]),
			el("td", {}, [row.method]),
			el("td", {}, [String(row.objective_score)]),
			el("td", {}, [String(row.constraint_score)]),
			el("td", {}, [String(row.facility_distance)]),
			el("td", {}, [String(row.cost)]),
			el("td", {}, [String(row.time_sec)]),
		]),
	);
	return el("table", { class: "graph-rows" }, [header, ...body]);
}

function vectorList(matches: VectorMatch[]): HTMLElement {
	if (matches.length === 0) {
		return el("p", { class: "empty" }, ["no description matches"]);
	}
	return el(
		"ul",
		{ class: "vector-matches" },
		matches.map((match) =>
			el("li", {}, [
				el("strong", {}, [match.problem_id]),
				` similarity ${match.similarity.toFixed(4)} `,
				el("em", {}, [match.methods.join(", ")]),
				el("div", { class: "description" }, [match.description_text]),
			]),
		),
	);
}

function trendBlock(trend: Trend): HTMLElement {
	const maxCount = Math.max(...trend.entries.map((entry) => entry.count), 1);
	const bars = trend.entries.map((entry) =>
		el("div", { class: "trend-row" }, [
			el("span", { class: "trend-method" }, [entry.method]),
			el("div", {
				class: "bar",
				style: `width: ${(entry.count / maxCount) * 100}%`,
				title: `${entry.count} solutions`,
			}),
			el("span", { class: "trend-count" }, [
				`x${entry.count} (mean cost ${entry.mean_cost})`,
			]),
		]),
	);
	return el("div", { class: "trend" }, [
		el("h3", {}, [`${trend.cluster_kind} cluster "${trend.cluster_label}"`]),
		...bars,
	]);
}
