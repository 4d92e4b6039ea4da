/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const chainLength: (a: number, b: number) => [number, number, number];
export const graphDemo: (a: number, b: number, c: bigint) => [number, number, number, number];
export const gridDemo: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
