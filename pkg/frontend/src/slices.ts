import { Dims3, flatIndex } from "./rle.js";

export type Axis = "w" | "h" | "d";

export const AXES: Axis[] = ["w", "h", "d"];

/** Image axes per view: [column axis, row axis] in volume (w, h, d) order. */
export const PLANE_AXES: Record<Axis, [number, number]> = {
    w: [1, 2],
    h: [0, 2],
    d: [0, 1],
};

export function axisNumber(axis: Axis): number {
    return AXES.indexOf(axis);
}

export function sliceCount(dims: Dims3, axis: Axis): number {
    return dims[axisNumber(axis)];
}

export function planeSize(dims: Dims3, axis: Axis): { width: number; height: number } {
    const [a0, a1] = PLANE_AXES[axis];
    return { width: dims[a0], height: dims[a1] };
}

/**
 * Voxel coordinate for an image pixel: the column maps to the first plane
 * axis, the row to the second, and the slice index supplies the view axis.
 */
export function voxelFromPixel(axis: Axis, x: number, y: number, sliceIndex: number): Dims3 {
    switch (axis) {
        case "d": return [x, y, sliceIndex];
        case "h": return [x, sliceIndex, y];
        case "w": return [sliceIndex, x, y];
    }
}

/** Inverse of voxelFromPixel: where a voxel lands on the given view. */
export function pixelFromVoxel(axis: Axis, voxel: Dims3): { x: number; y: number; slice: number } {
    const [a0, a1] = PLANE_AXES[axis];
    return { x: voxel[a0], y: voxel[a1], slice: voxel[axisNumber(axis)] };
}

/**
 * Extract one slice of a flat width-fastest mask in image order (row-major,
 * rows along the second plane axis), matching the server's slice pixels.
 */
export function extractMaskSlice(flat: Uint8Array, dims: Dims3, axis: Axis, index: number): Uint8Array {
    const { width, height } = planeSize(dims, axis);
    const out = new Uint8Array(width * height);
    for (let y = 0; y < height; y++) {
        for (let x = 0; x < width; x++) {
            const [w, h, d] = voxelFromPixel(axis, x, y, index);
            out[y * width + x] = flat[flatIndex(w, h, d, dims)];
        }
    }
    return out;
}
