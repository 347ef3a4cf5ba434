/**
 * Query composition form.
 *
 * Objectives, constraints, and representations come from /api/entities, so
 * the selects can only ever hold catalog values; free text is the one
 * unvalidated field. The submit button is disabled whenever a request is in
 * flight on this page.
 */

import { ApiClient, RequestGate } from "./api.js";
import { clear, el } from "./dom.js";
import type { EntityCatalogs, QueryRequest, RecommendResponse } from "./types.js";

export interface QueryFormHandlers {
	onResult: (response: RecommendResponse) => void;
	onError: (error: unknown) => void;
}

export class QueryForm {
	readonly root: HTMLElement;
	private facilitiesInput!: HTMLInputElement;
	private objectivesSelect!: HTMLSelectElement;
	private constraintsSelect!: HTMLSelectElement;
	private representationSelect!: HTMLSelectElement;
	private freeTextArea!: HTMLTextAreaElement;
	private submitButton!: HTMLButtonElement;
	private statusSpan!: HTMLSpanElement;

	constructor(
		private readonly api: ApiClient,
		private readonly gate: RequestGate,
		private readonly handlers: QueryFormHandlers,
	) {
		this.root = this.build();
		this.gate.onChange((busy) => {
			this.submitButton.disabled = busy;
		});
	}

	private build(): HTMLElement {
		this.facilitiesInput = el("input", {
			id: "num-facilities",
			type: "number",
			min: "1",
			placeholder: "e.g. 10",
		});
		this.objectivesSelect = el("select", { id: "objectives", multiple: "true", size: "4" });
		this.constraintsSelect = el("select", { id: "constraints", multiple: "true", size: "5" });
		this.representationSelect = el("select", { id: "representation" });
		this.freeTextArea = el("textarea", {
			id: "free-text",
			rows: "3",
			placeholder: "optional free-text problem description (unvalidated)",
		});
		this.submitButton = el("button", { id: "submit-query", type: "submit" }, ["Recommend"]);
		this.statusSpan = el("span", { id: "query-status", class: "status" });

		const form = el("form", { id: "query-form" }, [
			field("Number of facilities", this.facilitiesInput),
			field("Objectives", this.objectivesSelect),
			field("Constraints", this.constraintsSelect),
			field("Representation", this.representationSelect),
			field("Description", this.freeTextArea),
			el("div", { class: "form-actions" }, [this.submitButton, this.statusSpan]),
		]);
		form.addEventListener("submit", (event) => {
			event.preventDefault();
			void this.submit();
		});
		return el("section", { id: "query-panel" }, [el("h2", {}, ["Describe your layout problem"]), form]);
	}

	/** Fill the selects from the live entity catalogs. */
	populate(catalogs: EntityCatalogs): void {
		fillSelect(this.objectivesSelect, catalogs.objectives);
		fillSelect(this.constraintsSelect, catalogs.constraints);
		fillSelect(this.representationSelect, catalogs.representations, "(any)");
	}

	async refreshCatalogs(): Promise<void> {
		this.populate(await this.api.getEntities());
	}

	currentQuery(): QueryRequest {
		const query: QueryRequest = {
			objectives: selectedValues(this.objectivesSelect),
			constraints: selectedValues(this.constraintsSelect),
		};
		const n = this.facilitiesInput.value.trim();
		if (n) {
			query.num_facilities = Number(n);
		}
		if (this.representationSelect.value) {
			query.representation = this.representationSelect.value;
		}
		const text = this.freeTextArea.value.trim();
		if (text) {
			query.free_text = text;
		}
		return query;
	}

	async submit(): Promise<void> {
		this.statusSpan.textContent = "asking...";
		try {
			const response = await this.gate.run(() => this.api.recommend(this.currentQuery()));
			this.statusSpan.textContent = "";
			this.handlers.onResult(response);
		} catch (error) {
			this.statusSpan.textContent = "";
			this.handlers.onError(error);
		}
	}
}

function field(label: string, control: HTMLElement): HTMLElement {
	return el("label", { class: "field" }, [el("span", {}, [label]), control]);
}

function fillSelect(select: HTMLSelectElement, values: string[], blankLabel?: string): void {
	const previous = new Set(selectedValues(select));
	clear(select);
	if (blankLabel !== undefined) {
		select.append(el("option", { value: "" }, [blankLabel]));
	}
	for (const value of values) {
		const option = el("option", { value }, [value]);
		if (previous.has(value)) {
			option.selected = true;
		}
		select.append(option);
	}
}

function selectedValues(select: HTMLSelectElement): string[] {
	return Array.from(select.selectedOptions)
		.map((option) => option.value)
		.filter((value) => value !== "");
}
