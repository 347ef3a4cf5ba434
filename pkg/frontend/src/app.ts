/**
 * Application bootstrap: wires the query form, result view, and feedback
 * form to one API client and one shared in-flight gate.
 */

import { ApiClient, RequestGate } from "./api.js";
import { el } from "./dom.js";
import { FeedbackForm } from "./feedbackForm.js";
import { QueryForm } from "./queryForm.js";
import { ResultView } from "./resultView.js";

export interface App {
	queryForm: QueryForm;
	resultView: ResultView;
	feedbackForm: FeedbackForm;
	ready: Promise<void>;
}

export function createApp(root: HTMLElement, apiBaseUrl = ""): App {
	const api = new ApiClient(apiBaseUrl);
	const gate = new RequestGate();
	const resultView = new ResultView(el("section", { id: "result" }));

	const queryForm = new QueryForm(api, gate, {
		onResult: (response) => resultView.render(response),
		onError: (error) => resultView.renderFailure(error, () => void queryForm.submit()),
	});

	const feedbackForm = new FeedbackForm(api, gate, (catalogs) => {
		queryForm.populate(catalogs);
	});

	root.append(
		el("header", {}, [el("h1", {}, ["Layout algorithm advisor"])]),
		queryForm.root,
		resultView.root,
		feedbackForm.root,
	);

	const ready = api
		.getEntities()
		.then((catalogs) => {
			queryForm.populate(catalogs);
			feedbackForm.populateMethodOptions(catalogs);
		})
		.catch((error) => {
			resultView.renderFailure(error, () => window.location.reload());
		});

	return { queryForm, resultView, feedbackForm, ready };
}

if (typeof document !== "undefined" && document.getElementById("app")) {
	const mount = document.getElementById("app") as HTMLElement;
	const base = mount.dataset.apiBase ?? "";
	createApp(mount, base);
}
