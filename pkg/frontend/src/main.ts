import { ApiClient, decodeBase64Pixels, VolumeInfo } from "./api.js";
import { decodeRle, Dims3 } from "./rle.js";
import { composeOverlay } from "./overlay.js";
import { applyEdit, buildSegmentBody, DEFAULT_PARAMS, ParamField, SearchParams } from "./params.js";
import { CoalescingQueue } from "./queue.js";
import { Axis, extractMaskSlice, pixelFromVoxel, sliceCount, voxelFromPixel } from "./slices.js";

interface ViewerState {
    volume: VolumeInfo | null;
    axis: Axis;
    sliceIndex: number;
    channel: number;
    prompts: number[][];
    lastGoodPrompts: number[][];
    params: SearchParams;
    mask: Uint8Array | null;
    maskDims: Dims3 | null;
    slice: { gray: Uint8Array; width: number; height: number } | null;
}

const state: ViewerState = {
    volume: null,
    axis: "d",
    sliceIndex: 0,
    channel: 0,
    prompts: [],
    lastGoodPrompts: [],
    params: { ...DEFAULT_PARAMS, cropSize: [...DEFAULT_PARAMS.cropSize] },
    mask: null,
    maskDims: null,
    slice: null,
};

const api = new ApiClient();
const queue = new CoalescingQueue();

const volumeSelect = document.getElementById("volumeSelect") as HTMLSelectElement;
const axisSelect = document.getElementById("axisSelect") as HTMLSelectElement;
const sliceSlider = document.getElementById("sliceSlider") as HTMLInputElement;
const sliceLabel = document.getElementById("sliceLabel") as HTMLElement;
const channelInput = document.getElementById("channelInput") as HTMLInputElement;
const canvas = document.getElementById("sliceCanvas") as HTMLCanvasElement;
const statusEl = document.getElementById("status") as HTMLElement;
const diagEl = document.getElementById("diagnostics") as HTMLElement;
const errorEl = document.getElementById("errorBanner") as HTMLElement;
const rerunBtn = document.getElementById("rerunBtn") as HTMLButtonElement;
const clearBtn = document.getElementById("clearBtn") as HTMLButtonElement;

const PARAM_INPUTS: Record<ParamField, HTMLInputElement> = {
    tau: document.getElementById("tauInput") as HTMLInputElement,
    alpha: document.getElementById("alphaInput") as HTMLInputElement,
    nRuns: document.getElementById("nInput") as HTMLInputElement,
    T: document.getElementById("tInput") as HTMLInputElement,
    mu: document.getElementById("muInput") as HTMLInputElement,
    cropSize: document.getElementById("cropInput") as HTMLInputElement,
};

function paramText(field: ParamField): string {
    const value = state.params[field];
    return Array.isArray(value) ? value.join(",") : String(value);
}

function showError(message: string): void {
    errorEl.textContent = message;
    errorEl.style.display = "block";
}

function clearError(): void {
    errorEl.style.display = "none";
}

function setStatus(message: string): void {
    statusEl.textContent = message;
}

function spatialDims(volume: VolumeInfo): Dims3 {
    return [volume.dims[0], volume.dims[1], volume.dims[2]];
}

function draw(): void {
    const slice = state.slice;
    if (!slice) return;
    const { gray, width, height } = slice;
    let pred: Uint8Array | null = null;
    if (state.mask && state.maskDims) {
        pred = extractMaskSlice(state.mask, state.maskDims, state.axis, state.sliceIndex);
    }
    canvas.width = width;
    canvas.height = height;
    const scale = Math.max(1, Math.floor(512 / Math.max(width, height)));
    canvas.style.width = `${width * scale}px`;
    canvas.style.height = `${height * scale}px`;

    const ctx = canvas.getContext("2d")!;
    const rgba = composeOverlay(gray, width, height, pred, null);
    ctx.putImageData(new ImageData(rgba, width, height), 0, 0);

    ctx.fillStyle = "#39ff14";
    for (const prompt of state.prompts) {
        const at = pixelFromVoxel(state.axis, [prompt[0], prompt[1], prompt[2]]);
        if (at.slice !== state.sliceIndex) continue;
        ctx.fillRect(at.x - 2, at.y, 5, 1);
        ctx.fillRect(at.x, at.y - 2, 1, 5);
    }
}

async function refreshSlice(): Promise<void> {
    const volume = state.volume;
    if (!volume) return;
    try {
        const res = await api.getSlice(volume.id, state.axis, state.sliceIndex, state.channel);
        state.slice = { gray: decodeBase64Pixels(res.pixels), width: res.width, height: res.height };
        clearError();
        draw();
    } catch (err) {
        showError(`slice fetch failed: ${(err as Error).message}`);
    }
    sliceLabel.textContent = `${state.sliceIndex} / ${sliceCount(spatialDims(volume), state.axis) - 1}`;
}

function requestSegment(): void {
    const volume = state.volume;
    if (!volume || state.prompts.length === 0) return;
    void queue.submit(async () => {
        const body = buildSegmentBody(volume.id, state.prompts, state.params);
        setStatus("segmenting...");
        try {
            const res = await api.segment(body);
            state.mask = decodeRle(res.mask_rle, res.dims);
            state.maskDims = res.dims;
            state.lastGoodPrompts = body.prompts;
            clearError();
            const dice = res.dice === undefined ? "" : `, dice ${res.dice.toFixed(4)}`;
            diagEl.textContent =
                `${res.crops_evaluated} crops in ${Math.round(res.runtime_ms)} ms${dice}`;
            setStatus(`${body.prompts.length} prompt(s)`);
            draw();
        } catch (err) {
            // Rejected prompts must not linger in the batch for later clicks.
            state.prompts = state.lastGoodPrompts.map((p) => [...p]);
            showError(`segment failed: ${(err as Error).message}`);
            setStatus(`${state.prompts.length} prompt(s)`);
            draw();
        }
    });
}

function clearPrompts(): void {
    state.prompts = [];
    state.lastGoodPrompts = [];
    state.mask = null;
    state.maskDims = null;
    diagEl.textContent = "";
    setStatus("prompts cleared");
    draw();
}

function onCanvasClick(ev: MouseEvent): void {
    if (!state.volume || !state.slice) return;
    if (ev.shiftKey) {
        clearPrompts();
        return;
    }
    const rect = canvas.getBoundingClientRect();
    const x = Math.floor(((ev.clientX - rect.left) / rect.width) * state.slice.width);
    const y = Math.floor(((ev.clientY - rect.top) / rect.height) * state.slice.height);
    if (x < 0 || y < 0 || x >= state.slice.width || y >= state.slice.height) return;
    state.prompts.push(voxelFromPixel(state.axis, x, y, state.sliceIndex) as number[]);
    setStatus(`${state.prompts.length} prompt(s)`);
    draw();
    requestSegment();
}

function selectVolume(volume: VolumeInfo): void {
    state.volume = volume;
    state.axis = axisSelect.value as Axis;
    const dims = spatialDims(volume);
    state.sliceIndex = Math.floor(sliceCount(dims, state.axis) / 2);
    state.channel = 0;
    channelInput.value = "0";
    channelInput.max = String(volume.dims[3] - 1);
    sliceSlider.max = String(sliceCount(dims, state.axis) - 1);
    sliceSlider.value = String(state.sliceIndex);
    clearPrompts();
    setStatus(`${volume.id}: ${volume.dims.join("x")}${volume.has_gt ? " (gt available)" : ""}`);
    void refreshSlice();
}

function bindControls(): void {
    volumeSelect.addEventListener("change", () => {
        const info = volumes.find((v) => v.id === volumeSelect.value);
        if (info) selectVolume(info);
    });
    axisSelect.addEventListener("change", () => {
        if (!state.volume) return;
        state.axis = axisSelect.value as Axis;
        const count = sliceCount(spatialDims(state.volume), state.axis);
        state.sliceIndex = Math.min(state.sliceIndex, count - 1);
        sliceSlider.max = String(count - 1);
        sliceSlider.value = String(state.sliceIndex);
        void refreshSlice();
    });
    sliceSlider.addEventListener("input", () => {
        state.sliceIndex = Number(sliceSlider.value);
        void refreshSlice();
    });
    channelInput.addEventListener("change", () => {
        const v = Number(channelInput.value);
        if (state.volume && Number.isInteger(v) && v >= 0 && v < state.volume.dims[3]) {
            state.channel = v;
            void refreshSlice();
        } else {
            channelInput.value = String(state.channel);
        }
    });
    canvas.addEventListener("click", onCanvasClick);
    rerunBtn.addEventListener("click", requestSegment);
    clearBtn.addEventListener("click", clearPrompts);

    for (const field of Object.keys(PARAM_INPUTS) as ParamField[]) {
        const input = PARAM_INPUTS[field];
        input.value = paramText(field);
        input.addEventListener("change", () => {
            const result = applyEdit(state.params, field, input.value);
            state.params = result.params;
            input.value = paramText(field);
            if (result.error) {
                showError(result.error);
            } else {
                clearError();
            }
        });
    }
}

let volumes: VolumeInfo[] = [];

async function start(): Promise<void> {
    bindControls();
    try {
        volumes = await api.listVolumes();
    } catch (err) {
        showError(`cannot reach the service: ${(err as Error).message}`);
        return;
    }
    if (volumes.length === 0) {
        setStatus("no volumes on the server");
        return;
    }
    for (const v of volumes) {
        const opt = document.createElement("option");
        opt.value = v.id;
        opt.textContent = `${v.id} (${v.dims.slice(0, 3).join("x")})`;
        volumeSelect.appendChild(opt);
    }
    selectVolume(volumes[0]);
}

void start();
