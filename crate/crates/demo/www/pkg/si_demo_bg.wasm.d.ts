/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_explorer_free: (a: number, b: number) => void;
export const explorer_applyMoves: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const explorer_docId: (a: number, b: number) => [number, number];
export const explorer_is_empty: (a: number) => number;
export const explorer_labels: (a: number) => [number, number];
export const explorer_len: (a: number) => number;
export const explorer_new: () => number;
export const explorer_pinnedRows: (a: number) => [number, number];
export const explorer_positions: (a: number) => [number, number];
export const explorer_reset: (a: number) => number;
export const explorer_revision: (a: number) => number;
export const explorer_setLambda: (a: number, b: number) => [number, number];
export const explorer_text: (a: number, b: number) => [number, number];
export const explorer_topWeights: (a: number, b: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_drop_slice: (a: number, b: number) => void;
export const __wbindgen_start: () => void;
