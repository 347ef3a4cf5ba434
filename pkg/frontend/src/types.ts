/**
 * Shapes of the JSON the recommendation API serves.
 * These mirror the wire format exactly; the UI adds nothing to them.
 */

export interface EntityCatalogs {
	objectives: string[];
	constraints: string[];
	representations: string[];
	methods: string[];
	constraint_handlings: string[];
}

export interface GraphRow {
	problem_id: string;
	num_facilities: number;
	objective_names: string[];
	constraint_names: string[];
	representation: string | null;
	constraint_handling: string | null;
	method: string;
	model_parameters: string;
	cost: number;
	time_sec: number;
	source: string;
	objective_score: number;
	constraint_score: number;
	facility_distance: number;
}

export interface VectorMatch {
	problem_id: string;
	similarity: number;
	description_text: string;
	methods: string[];
}

export interface TrendEntry {
	method: string;
	count: number;
	mean_cost: number;
}

export interface Trend {
	cluster_kind: string;
	cluster_label: string;
	entries: TrendEntry[];
}

export interface RecommendResponse {
	recommendation: {
		methods: string[];
		parameters: Record<string, string>;
		representation: string | null;
		constraint_handling: string | null;
		grounded: boolean;
		cited_problem_ids: string[];
	};
	reasoning: string;
	evidence: {
		graph_rows: GraphRow[];
		used_fallback: boolean;
		vector_matches: VectorMatch[];
		trends: Trend[];
	};
	warnings: string[];
}

export interface FeedbackReport {
	problem_id: string;
	created_nodes: number;
	linked_existing: number;
	reclustered: boolean;
	embedded: boolean;
	warnings: string[];
}

export interface ErrorEnvelope {
	error: {
		code: string;
		message: string;
		details: unknown;
	};
}

export interface QueryRequest {
	num_facilities?: number;
	objectives: string[];
	constraints: string[];
	representation?: string;
	free_text?: string;
}

/** The corpus-row shape a feedback submission must carry. */
export interface FeedbackRecord {
	problem_id: string;
	num_facilities: number;
	floor_w: number;
	floor_h: number;
	problem_representation: string;
	facility_dimension_data: string;
	objective: string;
	constraints: string;
	constraint_handling: string;
	method: string;
	model_parameters: string;
	cost: number;
	time_sec: number;
	source: string;
}

export const FEEDBACK_FIELDS: (keyof FeedbackRecord)[] = [
	"problem_id",
	"num_facilities",
	"floor_w",
	"floor_h",
	"problem_representation",
	"facility_dimension_data",
	"objective",
	"constraints",
	"constraint_handling",
	"method",
	"model_parameters",
	"cost",
	"time_sec",
	"source",
];
