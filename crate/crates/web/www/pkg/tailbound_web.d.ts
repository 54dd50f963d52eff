/* tslint:disable */
/* eslint-disable */

export enum Basis {
    Identity = 0,
    Pca = 1,
    Trained = 2,
}

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    alphaHat(): number;
    /**
     * Lower bounds, upper bounds and the exact squared distance for one
     * query and data point: `[lb_0..lb_L, ub_0..ub_L, exact]`.
     */
    boundsTrace(query_seed: number, candidate: number, white_query: boolean): Float64Array;
    /**
     * Mean fraction of energy left after the first `ℓ` coefficients, `ℓ = 0..=d`.
     */
    compactionCurve(): Float64Array;
    dim(): number;
    levels(): number;
    /**
     * `n` vectors of dimension `dim` with spectrum `e^{−decay·j/dim}`,
     * refined over `levels` equal-width levels.
     */
    constructor(n: number, dim: number, decay: number, levels: number, basis: Basis, seed: number);
    /**
     * Number of candidates pruned at each level `0..L` of a k-NN scan,
     * then the survivors, then `φ`: `L + 3` entries.
     */
    pruningProfile(k: number, query_seed: number, white_query: boolean): Float64Array;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_alphaHat: (a: number) => number;
    readonly demo_boundsTrace: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly demo_compactionCurve: (a: number) => [number, number, number, number];
    readonly demo_dim: (a: number) => number;
    readonly demo_levels: (a: number) => number;
    readonly demo_new: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly demo_pruningProfile: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
