/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const demo_alphaHat: (a: number) => number;
export const demo_boundsTrace: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const demo_compactionCurve: (a: number) => [number, number, number, number];
export const demo_dim: (a: number) => number;
export const demo_levels: (a: number) => number;
export const demo_new: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const demo_pruningProfile: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
