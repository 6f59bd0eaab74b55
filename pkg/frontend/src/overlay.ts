/** Predicted masks tint red, ground truth tints blue (both may apply). */
const PRED_COLOR: [number, number, number] = [255, 40, 40];
const GT_COLOR: [number, number, number] = [40, 80, 255];

export const OVERLAY_OPACITY = 0.45;

/**
 * Compose a grayscale slice with optional mask overlays into RGBA pixels.
 * Mask edges stay hard: a pixel is either tinted at the fixed opacity or
 * left untouched, with no interpolation.
 */
export function composeOverlay(
    gray: Uint8Array,
    width: number,
    height: number,
    pred: Uint8Array | null,
    gt: Uint8Array | null,
    opacity: number = OVERLAY_OPACITY,
) {
    if (gray.length !== width * height) {
        throw new Error(`slice has ${gray.length} pixels, expected ${width * height}`);
    }
    const out = new Uint8ClampedArray(width * height * 4);
    for (let i = 0; i < gray.length; i++) {
        let r = gray[i];
        let g = gray[i];
        let b = gray[i];
        if (gt && gt[i]) {
            r = r * (1 - opacity) + GT_COLOR[0] * opacity;
            g = g * (1 - opacity) + GT_COLOR[1] * opacity;
            b = b * (1 - opacity) + GT_COLOR[2] * opacity;
        }
        if (pred && pred[i]) {
            r = r * (1 - opacity) + PRED_COLOR[0] * opacity;
            g = g * (1 - opacity) + PRED_COLOR[1] * opacity;
            b = b * (1 - opacity) + PRED_COLOR[2] * opacity;
        }
        const base = i * 4;
        out[base] = Math.round(r);
        out[base + 1] = Math.round(g);
        out[base + 2] = Math.round(b);
        out[base + 3] = 255;
    }
    return out;
}
