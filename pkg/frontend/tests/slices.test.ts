import { describe, expect, it } from "vitest";
import { decodeRle, flatIndex, Dims3 } from "../src/rle.js";
import {
    AXES,
    Axis,
    axisNumber,
    extractMaskSlice,
    pixelFromVoxel,
    planeSize,
    sliceCount,
    voxelFromPixel,
} from "../src/slices.js";

const DIMS: Dims3 = [6, 5, 4];

describe("axis bookkeeping", () => {
    it("maps axis letters to volume axes in (w, h, d) order", () => {
        expect(AXES).toEqual(["w", "h", "d"]);
        expect(axisNumber("w")).toBe(0);
        expect(axisNumber("h")).toBe(1);
        expect(axisNumber("d")).toBe(2);
    });

    it("counts slices along the view axis", () => {
        expect(sliceCount(DIMS, "w")).toBe(6);
        expect(sliceCount(DIMS, "h")).toBe(5);
        expect(sliceCount(DIMS, "d")).toBe(4);
    });

    it("sizes the image plane from the two remaining axes", () => {
        expect(planeSize(DIMS, "d")).toEqual({ width: 6, height: 5 });
        expect(planeSize(DIMS, "h")).toEqual({ width: 6, height: 4 });
        expect(planeSize(DIMS, "w")).toEqual({ width: 5, height: 4 });
    });
});

describe("pixel to voxel mapping", () => {
    it("maps clicks on each view to voxel coordinates", () => {
        expect(voxelFromPixel("d", 2, 3, 1)).toEqual([2, 3, 1]);
        expect(voxelFromPixel("h", 2, 3, 1)).toEqual([2, 1, 3]);
        expect(voxelFromPixel("w", 2, 3, 1)).toEqual([1, 2, 3]);
    });

    it("pixelFromVoxel inverts voxelFromPixel on every view", () => {
        const dims: Dims3 = [3, 4, 2];
        for (const axis of AXES) {
            const { width, height } = planeSize(dims, axis);
            for (let s = 0; s < sliceCount(dims, axis); s++) {
                for (let y = 0; y < height; y++) {
                    for (let x = 0; x < width; x++) {
                        const at = pixelFromVoxel(axis, voxelFromPixel(axis, x, y, s));
                        expect(at).toEqual({ x, y, slice: s });
                    }
                }
            }
        }
    });
});

describe("extractMaskSlice", () => {
    it("pulls one view-aligned plane in image row-major order", () => {
        const dims: Dims3 = [2, 2, 2];
        const flat = new Uint8Array(8);
        flat[flatIndex(1, 0, 1, dims)] = 1;
        expect(Array.from(extractMaskSlice(flat, dims, "d", 1))).toEqual([0, 1, 0, 0]);
        expect(Array.from(extractMaskSlice(flat, dims, "d", 0))).toEqual([0, 0, 0, 0]);
        // on the h view that voxel sits at column w=1, row d=1
        expect(Array.from(extractMaskSlice(flat, dims, "h", 0))).toEqual([0, 0, 0, 1]);
        expect(Array.from(extractMaskSlice(flat, dims, "w", 1))).toEqual([0, 0, 1, 0]);
    });

    it("covers every voxel exactly once across the slices of a view", () => {
        const dims: Dims3 = [3, 4, 2];
        const total = 3 * 4 * 2;
        const flat = decodeRle(`1:${total}`, dims);
        for (const axis of AXES) {
            let seen = 0;
            for (let s = 0; s < sliceCount(dims, axis); s++) {
                const plane = extractMaskSlice(flat, dims, axis, s);
                const { width, height } = planeSize(dims, axis);
                expect(plane.length).toBe(width * height);
                for (const v of plane) seen += v;
            }
            expect(seen).toBe(total);
        }
    });

    it("agrees with voxelFromPixel for a random-ish pattern", () => {
        const dims: Dims3 = [4, 3, 3];
        const flat = new Uint8Array(36);
        // deterministic sprinkle: every 5th voxel
        for (let i = 0; i < flat.length; i += 5) flat[i] = 1;
        for (const axis of ["w", "h", "d"] as Axis[]) {
            const { width, height } = planeSize(dims, axis);
            for (let s = 0; s < sliceCount(dims, axis); s++) {
                const plane = extractMaskSlice(flat, dims, axis, s);
                for (let y = 0; y < height; y++) {
                    for (let x = 0; x < width; x++) {
                        const [w, h, d] = voxelFromPixel(axis, x, y, s);
                        expect(plane[y * width + x]).toBe(flat[flatIndex(w, h, d, dims)]);
                    }
                }
            }
        }
    });
});
