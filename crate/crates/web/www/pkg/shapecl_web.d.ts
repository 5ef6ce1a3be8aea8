/* tslint:disable */
/* eslint-disable */

/**
 * Shape model of `m` synthetic clouds of one family.
 */
export class ShapeExplorer {
    free(): void;
    [Symbol.dispose](): void;
    k(): number;
    mean(): Float64Array;
    constructor(name: string, n: number, m: number, k: number, seed: number);
    /**
     * `mean + alpha * sum_i eps_i sigma_i V_i`; `eps` needs one entry per mode.
     */
    sample(alpha: number, eps: Float64Array): Float64Array;
    sigmas(): Float64Array;
}

/**
 * Names accepted by [`sample_cloud`] and [`ShapeExplorer::new`].
 */
export function families(): string[];

/**
 * Focal loss of a two-class prediction over `steps` values of `p` in
 * `(0, 1]`; `gamma = 0, alpha_t = 1` is cross-entropy.
 */
export function loss_curve(gamma: number, alpha_t: number, steps: number): Float64Array;

/**
 * One normalized synthetic cloud of `n` points.
 */
export function sample_cloud(name: string, n: number, seed: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_shapeexplorer_free: (a: number, b: number) => void;
    readonly families: () => [number, number];
    readonly loss_curve: (a: number, b: number, c: number) => [number, number, number, number];
    readonly sample_cloud: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly shapeexplorer_k: (a: number) => number;
    readonly shapeexplorer_mean: (a: number) => [number, number];
    readonly shapeexplorer_new: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly shapeexplorer_sample: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly shapeexplorer_sigmas: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_drop_slice: (a: number, b: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
