export interface SearchParams {
    tau: number;
    alpha: number;
    nRuns: number;
    T: number;
    mu: number;
    cropSize: [number, number, number];
}

/** Server-side defaults, mirrored so the panel starts at the real values. */
export const DEFAULT_PARAMS: SearchParams = {
    tau: 0.05,
    alpha: 0.25,
    nRuns: 6,
    T: 80,
    mu: 200,
    cropSize: [10, 10, 6],
};

export type ParamField = keyof SearchParams;

export interface EditResult {
    params: SearchParams;
    error: string | null;
}

function unitInterval(raw: string, name: string): number | string {
    const v = Number(raw);
    if (!Number.isFinite(v) || v < 0 || v > 1) return `${name} must be in [0, 1]`;
    return v;
}

function positiveInt(raw: string, name: string): number | string {
    const v = Number(raw);
    if (!Number.isInteger(v) || v < 1) return `${name} must be an integer >= 1`;
    return v;
}

/**
 * Apply one panel edit. Invalid input returns the params unchanged plus an
 * error message, so the last valid value is kept.
 */
export function applyEdit(params: SearchParams, field: ParamField, raw: string): EditResult {
    const keep = (error: string): EditResult => ({ params, error });
    switch (field) {
        case "tau": {
            const v = unitInterval(raw, "tau");
            return typeof v === "string" ? keep(v) : { params: { ...params, tau: v }, error: null };
        }
        case "alpha": {
            const v = unitInterval(raw, "alpha");
            return typeof v === "string" ? keep(v) : { params: { ...params, alpha: v }, error: null };
        }
        case "nRuns": {
            const v = positiveInt(raw, "n");
            return typeof v === "string" ? keep(v) : { params: { ...params, nRuns: v }, error: null };
        }
        case "T": {
            const v = positiveInt(raw, "T");
            return typeof v === "string" ? keep(v) : { params: { ...params, T: v }, error: null };
        }
        case "mu": {
            const v = positiveInt(raw, "mu");
            return typeof v === "string" ? keep(v) : { params: { ...params, mu: v }, error: null };
        }
        case "cropSize": {
            const parts = raw.split(",").map((p) => Number(p.trim()));
            if (parts.length !== 3 || parts.some((v) => !Number.isInteger(v) || v < 1)) {
                return keep("crop size must be three integers >= 1, e.g. 10,10,6");
            }
            return { params: { ...params, cropSize: [parts[0], parts[1], parts[2]] }, error: null };
        }
    }
}

export interface SegmentBody {
    volume_id: string;
    prompts: number[][];
    tau: number;
    alpha: number;
    n_runs: number;
    T: number;
    mu: number;
    crop_size: [number, number, number];
}

/** Panel values go into the request verbatim; the server re-validates. */
export function buildSegmentBody(volumeId: string, prompts: number[][], params: SearchParams): SegmentBody {
    return {
        volume_id: volumeId,
        prompts: prompts.map((p) => [...p]),
        tau: params.tau,
        alpha: params.alpha,
        n_runs: params.nRuns,
        T: params.T,
        mu: params.mu,
        crop_size: [...params.cropSize],
    };
}
