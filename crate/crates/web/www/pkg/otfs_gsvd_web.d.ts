/* tslint:disable */
/* eslint-disable */

/**
 * Runs a BER sweep at `M = 4`, `N = 2` and returns the records.
 */
export function ber_sweep(scheme: string, c: number, g: number, snr_start: number, snr_step: number, snr_stop: number, frames: number, csi_rho: number, seed: bigint): string;

/**
 * `|H e_(0,0)|` for one random link: where a delay-Doppler impulse lands.
 */
export function dd_impulse_response(m: number, n: number, v_max_kmh: number, seed: bigint): string;

/**
 * Factors a random `(H1, H2)` pair and reports the stream split and gains.
 */
export function gsvd_streams(c: number, g: number, m: number, n: number, seed: bigint): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly ber_sweep: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: bigint) => [number, number, number, number];
    readonly dd_impulse_response: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly gsvd_streams: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
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
