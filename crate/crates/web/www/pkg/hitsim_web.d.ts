/* tslint:disable */
/* eslint-disable */

/**
 * Loss curve on `n` steps: `n + 1` times followed by `n + 1` losses.
 */
export function loss_curve(alpha: number, horizon: number, law_kind: string, p0: number, p1: number, scheme_kind: string, refined: boolean, n: number, particles: number, seed: bigint): Float64Array;

/**
 * Paired refinement study at the horizon over `levels` doublings of `n0`:
 * the sizes, then the paired errors, then `[order, ci_low, ci_high]`.
 */
export function refinement_study(alpha: number, horizon: number, law_kind: string, p0: number, p1: number, scheme_kind: string, refined: boolean, n0: number, levels: number, particles: number, seed: bigint, replicates: number): Float64Array;

/**
 * `[T*, residual, extension condition (0 or 1), extension left-hand side]`.
 */
export function theory(alpha: number, beta: number, b: number, b_hat: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly loss_curve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number, k: number, l: bigint) => [number, number, number, number];
    readonly refinement_study: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number, k: number, l: number, m: bigint, n: number) => [number, number, number, number];
    readonly theory: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
