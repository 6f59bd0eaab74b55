export type Dims3 = [number, number, number];

/**
 * Decode a run-length string ("value:count" pairs, comma separated) into a
 * flat binary mask. Flattening is width-fastest: flat index = w + W*(h + H*d),
 * matching the server's mask encoding.
 */
export function decodeRle(rle: string, dims: Dims3): Uint8Array {
    const total = dims[0] * dims[1] * dims[2];
    if (total <= 0) throw new Error(`mask dims must be positive, got ${dims}`);
    const out = new Uint8Array(total);
    let at = 0;
    for (const run of rle.split(",")) {
        const parts = run.split(":");
        if (parts.length !== 2) throw new Error(`malformed run ${JSON.stringify(run)}`);
        const value = Number(parts[0]);
        const count = Number(parts[1]);
        if (value !== 0 && value !== 1) throw new Error(`run value must be 0 or 1, got ${parts[0]}`);
        if (!Number.isInteger(count) || count <= 0) throw new Error(`run count must be a positive int, got ${parts[1]}`);
        if (at + count > total) throw new Error(`runs exceed mask size ${total}`);
        if (value === 1) out.fill(1, at, at + count);
        at += count;
    }
    if (at !== total) throw new Error(`runs cover ${at} voxels, expected ${total}`);
    return out;
}

/** Flat index of a voxel in width-fastest order. */
export function flatIndex(w: number, h: number, d: number, dims: Dims3): number {
    return w + dims[0] * (h + dims[1] * d);
}
