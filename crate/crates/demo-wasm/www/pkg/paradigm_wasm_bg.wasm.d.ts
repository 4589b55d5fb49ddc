/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const edit_tree: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
export const learn_rules: (a: number, b: number, c: number, d: number) => [number, number];
export const synthetic_run: (a: number, b: number, c: number, d: number, e: bigint, f: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
