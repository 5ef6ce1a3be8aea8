/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_shapeexplorer_free: (a: number, b: number) => void;
export const families: () => [number, number];
export const loss_curve: (a: number, b: number, c: number) => [number, number, number, number];
export const sample_cloud: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const shapeexplorer_k: (a: number) => number;
export const shapeexplorer_mean: (a: number) => [number, number];
export const shapeexplorer_new: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const shapeexplorer_sample: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const shapeexplorer_sigmas: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_drop_slice: (a: number, b: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
