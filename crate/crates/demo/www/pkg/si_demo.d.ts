/* tslint:disable */
/* eslint-disable */

export class Explorer {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Applies staged drags: `rows[i]` goes to `(xy[2i], xy[2i+1])`.
     * Returns the new revision.
     */
    applyMoves(rows: Uint32Array, xy: Float64Array): number;
    docId(row: number): string | undefined;
    is_empty(): boolean;
    /**
     * Label of every document, in row order.
     */
    labels(): string[];
    len(): number;
    /**
     * Projects the bundled corpus with equal weights.
     */
    constructor();
    pinnedRows(): Uint32Array;
    /**
     * `[x0, y0, x1, y1, ...]` in the unit square.
     */
    positions(): Float64Array;
    reset(): number;
    revision(): number;
    setLambda(lambda: number): void;
    text(row: number): string | undefined;
    /**
     * JSON list of `{dim, weight, tokens}` for the `k` heaviest dimensions.
     */
    topWeights(k: number): string;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_explorer_free: (a: number, b: number) => void;
    readonly explorer_applyMoves: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly explorer_docId: (a: number, b: number) => [number, number];
    readonly explorer_is_empty: (a: number) => number;
    readonly explorer_labels: (a: number) => [number, number];
    readonly explorer_len: (a: number) => number;
    readonly explorer_new: () => number;
    readonly explorer_pinnedRows: (a: number) => [number, number];
    readonly explorer_positions: (a: number) => [number, number];
    readonly explorer_reset: (a: number) => number;
    readonly explorer_revision: (a: number) => number;
    readonly explorer_setLambda: (a: number, b: number) => [number, number];
    readonly explorer_text: (a: number, b: number) => [number, number];
    readonly explorer_topWeights: (a: number, b: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_drop_slice: (a: number, b: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
