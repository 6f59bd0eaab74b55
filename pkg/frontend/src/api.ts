import { Axis } from "./slices.js";
import { SegmentBody } from "./params.js";

export interface VolumeInfo {
    id: string;
    dims: [number, number, number, number];
    has_gt: boolean;
}

export interface SliceResponse {
    width: number;
    height: number;
    pixels: string; // base64 uint8, row-major
}

export interface SegmentResponse {
    mask_rle: string;
    dims: [number, number, number];
    crops_evaluated: number;
    runtime_ms: number;
    dice?: number;
}

async function asError(res: Response): Promise<Error> {
    let detail = `${res.status} ${res.statusText}`;
    try {
        const body = await res.json();
        if (body && body.detail) {
            detail = Array.isArray(body.detail) ? body.detail.join("; ") : String(body.detail);
        }
    } catch {
        // non-JSON error body; keep the status line
    }
    return new Error(detail);
}

export class ApiClient {
    constructor(private base: string = "") {}

    private async getJson<T>(path: string): Promise<T> {
        const res = await fetch(this.base + path);
        if (!res.ok) throw await asError(res);
        return res.json() as Promise<T>;
    }

    listVolumes(): Promise<VolumeInfo[]> {
        return this.getJson("/api/volumes");
    }

    getSlice(volumeId: string, axis: Axis, index: number, channel: number): Promise<SliceResponse> {
        const id = encodeURIComponent(volumeId);
        return this.getJson(`/api/volumes/${id}/slices/${axis}/${index}?channel=${channel}`);
    }

    async segment(body: SegmentBody): Promise<SegmentResponse> {
        const res = await fetch(this.base + "/api/segment", {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
        });
        if (!res.ok) throw await asError(res);
        return res.json() as Promise<SegmentResponse>;
    }
}

export function decodeBase64Pixels(b64: string): Uint8Array {
    const raw = atob(b64);
    const out = new Uint8Array(raw.length);
    for (let i = 0; i < raw.length; i++) out[i] = raw.charCodeAt(i);
    return out;
}
