/**
 * Keeps at most one request in flight. Tasks submitted while busy replace
 * any queued task, so a click burst coalesces into a single trailing request
 * built from the state current at execution time.
 */
export class CoalescingQueue {
    private inflight = false;
    private pending: (() => Promise<void>) | null = null;

    get busy(): boolean {
        return this.inflight;
    }

    async submit(task: () => Promise<void>): Promise<void> {
        if (this.inflight) {
            this.pending = task;
            return;
        }
        this.inflight = true;
        try {
            await task();
        } finally {
            this.inflight = false;
            const next = this.pending;
            this.pending = null;
            if (next) {
                await this.submit(next);
            }
        }
    }
}
