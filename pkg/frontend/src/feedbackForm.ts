/**
 * Feedback form: submit one solved instance (corpus-row shape).
 *
 * On success the confirmation shows the created/linked counts straight from
 * the API report and the entity catalogs are re-fetched, so any new names
 * appear in the query dropdowns immediately - the learning loop made
 * visible. A 422 renders its field map inline next to the offending inputs.
 */

import { ApiClient, ApiError, RequestGate } from "./api.js";
import { clear, el } from "./dom.js";
import type { EntityCatalogs, FeedbackRecord } from "./types.js";
import { FEEDBACK_FIELDS } from "./types.js";

const NUMERIC_FIELDS: ReadonlySet<string> = new Set([
	"num_facilities",
	"floor_w",
	"floor_h",
	"cost",
	"time_sec",
]);

export class FeedbackForm {
	readonly root: HTMLElement;
	private inputs = new Map<string, HTMLInputElement>();
	private errorSpans = new Map<string, HTMLSpanElement>();
	private submitButton!: HTMLButtonElement;
	private confirmation!: HTMLElement;
	private methodOptions!: HTMLDataListElement;

	constructor(
		private readonly api: ApiClient,
		private readonly gate: RequestGate,
		private readonly onCatalogsRefreshed: (catalogs: EntityCatalogs) => void,
	) {
		this.root = this.build();
		this.gate.onChange((busy) => {
			this.submitButton.disabled = busy;
		});
	}

	private build(): HTMLElement {
		this.methodOptions = el("datalist", { id: "method-options" });
		const rows = FEEDBACK_FIELDS.map((name) => {
			const input = el("input", {
				id: `fb-${name}`,
				name,
				type: NUMERIC_FIELDS.has(name) ? "number" : "text",
				step: "any",
			});
			if (name === "method") {
				input.setAttribute("list", "method-options");
			}
			const errorSpan = el("span", { class: "field-error", "data-field": name });
			this.inputs.set(name, input);
			this.errorSpans.set(name, errorSpan);
			return el("label", { class: "field" }, [el("span", {}, [name]), input, errorSpan]);
		});
		this.submitButton = el("button", { id: "submit-feedback", type: "submit" }, [
			"Submit solved instance",
		]);
		this.confirmation = el("div", { id: "feedback-confirmation" });

		const form = el("form", { id: "feedback-form" }, [
			...rows,
			this.methodOptions,
			el("div", { class: "form-actions" }, [this.submitButton]),
		]);
		form.addEventListener("submit", (event) => {
			event.preventDefault();
			void this.submit();
		});
		return el("section", { id: "feedback-panel" }, [
			el("h2", {}, ["Add a solved instance"]),
			form,
			this.confirmation,
		]);
	}

	populateMethodOptions(catalogs: EntityCatalogs): void {
		clear(this.methodOptions);
		for (const method of catalogs.methods) {
			this.methodOptions.append(el("option", { value: method }));
		}
	}

	currentRecord(): FeedbackRecord {
		const record: Record<string, string | number> = {};
		for (const [name, input] of this.inputs) {
			const raw = input.value.trim();
			record[name] = NUMERIC_FIELDS.has(name) && raw !== "" ? Number(raw) : raw;
		}
		return record as unknown as FeedbackRecord;
	}

	private clearFieldErrors(): void {
		for (const span of this.errorSpans.values()) {
			span.textContent = "";
		}
	}

	private showFieldErrors(details: unknown): void {
		if (typeof details !== "object" || details === null) {
			return;
		}
		for (const [field, message] of Object.entries(details as Record<string, string>)) {
			const span = this.errorSpans.get(field);
			if (span) {
				span.textContent = message;
			}
		}
	}

	async submit(): Promise<void> {
		this.clearFieldErrors();
		clear(this.confirmation);
		try {
			const report = await this.gate.run(() => this.api.submitFeedback(this.currentRecord()));
			this.confirmation.append(
				el("p", { class: "success" }, [
					`Merged ${report.problem_id}: ${report.created_nodes} nodes created, ` +
						`${report.linked_existing} existing entities linked` +
						(report.embedded ? ", embedded for similarity search" : "") +
						".",
				]),
			);
			for (const warning of report.warnings) {
				this.confirmation.append(el("p", { class: "warning" }, [warning]));
			}
			const catalogs = await this.api.getEntities();
			this.populateMethodOptions(catalogs);
			this.onCatalogsRefreshed(catalogs);
		} catch (error) {
			if (error instanceof ApiError && error.envelope.error.code === "ValidationError") {
				this.showFieldErrors(error.envelope.error.details);
				return;
			}
			this.confirmation.append(
				el("p", { class: "failure" }, [
					error instanceof ApiError ? error.envelope.error.message : String(error),
				]),
			);
		}
	}
}
