import { describe, expect, it } from "vitest";
import { CoalescingQueue } from "../src/queue.js";

function deferred(): { promise: Promise<void>; resolve: () => void } {
    let resolve!: () => void;
    const promise = new Promise<void>((r) => {
        resolve = r;
    });
    return { promise, resolve };
}

describe("CoalescingQueue", () => {
    it("runs sequential submissions in order", async () => {
        const q = new CoalescingQueue();
        const ran: number[] = [];
        await q.submit(async () => {
            ran.push(1);
        });
        await q.submit(async () => {
            ran.push(2);
        });
        expect(ran).toEqual([1, 2]);
        expect(q.busy).toBe(false);
    });

    it("coalesces a click burst into one trailing request", async () => {
        const q = new CoalescingQueue();
        const ran: number[] = [];
        const gate = deferred();
        const first = q.submit(async () => {
            ran.push(1);
            await gate.promise;
        });
        expect(q.busy).toBe(true);
        void q.submit(async () => {
            ran.push(2);
        });
        void q.submit(async () => {
            ran.push(3);
        });
        void q.submit(async () => {
            ran.push(4);
        });
        expect(ran).toEqual([1]);
        gate.resolve();
        await first;
        expect(ran).toEqual([1, 4]);
        expect(q.busy).toBe(false);
    });

    it("lets the trailing task read state mutated after it was queued", async () => {
        const q = new CoalescingQueue();
        const prompts: number[] = [];
        const snapshots: number[][] = [];
        const gate = deferred();
        const send = () =>
            q.submit(async () => {
                snapshots.push([...prompts]);
                await gate.promise;
            });
        prompts.push(1);
        const first = send();
        prompts.push(2);
        void send();
        prompts.push(3);
        void send();
        gate.resolve();
        await first;
        expect(snapshots).toEqual([[1], [1, 2, 3]]);
    });

    it("recovers after a failing task", async () => {
        const q = new CoalescingQueue();
        await expect(
            q.submit(async () => {
                throw new Error("boom");
            }),
        ).rejects.toThrow("boom");
        const ran: string[] = [];
        await q.submit(async () => {
            ran.push("ok");
        });
        expect(ran).toEqual(["ok"]);
        expect(q.busy).toBe(false);
    });

    it("still runs the queued task when the current one fails", async () => {
        const q = new CoalescingQueue();
        const ran: string[] = [];
        const gate = deferred();
        const failing = q.submit(async () => {
            await gate.promise;
            throw new Error("x");
        });
        void q.submit(async () => {
            ran.push("after");
        });
        gate.resolve();
        await expect(failing).rejects.toThrow("x");
        expect(ran).toEqual(["after"]);
    });
});
