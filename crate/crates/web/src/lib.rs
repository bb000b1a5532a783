//! Browser bindings: GSVD stream structure of a random channel pair, the
//! delay-Doppler impulse response of one antenna link, and a small BER
//! sweep. Every export returns a JSON string.

use otfs_gsvd::channel::{DdOperator, DelayUnit, MimoDdChannel, MimoRealization, PathProfile};
use otfs_gsvd::config::ExperimentConfig;
use otfs_gsvd::frame::{DdFrame, FrameParams};
use otfs_gsvd::linalg::gsvd;
use otfs_gsvd::precode::{classify_regime, Scheme};
use otfs_gsvd::sim::{run_sweep_at, substream, BerRecord};
use otfs_gsvd::{Complex64, Error};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn js_err(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, JsError> {
    serde_json::to_string(value).map_err(|e| JsError::new(&e.to_string()))
}

/// Reference powers on the first `min(M, 9)` delay bins.
fn demo_profile(params: &FrameParams, v_max_kmh: f64) -> PathProfile {
    let reference = PathProfile::reference(DelayUnit::Bins, v_max_kmh);
    let taps = params.m.min(reference.delays.len());
    PathProfile {
        delays: reference.delays[..taps].to_vec(),
        powers_db: reference.powers_db[..taps].to_vec(),
        ..reference
    }
}

fn demo_params(m: usize, n: usize) -> Result<FrameParams, JsError> {
    if m * n > 64 {
        return Err(JsError::new("keep M*N at 64 or below in the browser"));
    }
    FrameParams::new(m, n, 15e3, 4e9).map_err(js_err)
}

fn rng(seed: u64) -> ChaCha8Rng {
    substream(seed, 0, 0, 0)
}

#[derive(Serialize)]
struct GsvdSummary {
    regime: String,
    private1: usize,
    common: usize,
    private2: usize,
    /// Per-stream gains seen by each user; 0 where the stream is unseen.
    gains1: Vec<f64>,
    gains2: Vec<f64>,
}

/// Factors a random `(H1, H2)` pair and reports the stream split and gains.
#[wasm_bindgen]
pub fn gsvd_streams(c: usize, g: usize, m: usize, n: usize, seed: u64) -> Result<String, JsError> {
    if c == 0 || g == 0 || c > 6 || g > 6 {
        return Err(JsError::new("antenna counts must lie in 1..=6"));
    }
    let params = demo_params(m, n)?;
    let profile = demo_profile(&params, 500.0);
    let real = MimoRealization::draw(&profile, &params, c, g, &mut rng(seed)).map_err(js_err)?;
    let ch = MimoDdChannel::from_realization(&real, &DdOperator::new(&params));
    let f = gsvd(&ch.h1, &ch.h2).map_err(js_err)?;
    let q = f.q();
    let seen = |user: usize, gains: &[f64]| -> Vec<f64> {
        (0..q).map(|j| if f.row_for_stream(user, j).is_some() { gains[j] } else { 0.0 }).collect()
    };
    to_json(&GsvdSummary {
        regime: classify_regime(c, g).to_string(),
        private1: f.r,
        common: f.t,
        private2: f.r2,
        gains1: seen(1, &f.gains1),
        gains2: seen(2, &f.gains2),
    })
}

#[derive(Serialize)]
struct Grid {
    m: usize,
    n: usize,
    /// Row-major `M x N` magnitudes.
    magnitude: Vec<f64>,
}

/// `|H e_(0,0)|` for one random link: where a delay-Doppler impulse lands.
#[wasm_bindgen]
pub fn dd_impulse_response(m: usize, n: usize, v_max_kmh: f64, seed: u64) -> Result<String, JsError> {
    let params = demo_params(m, n)?;
    let profile = demo_profile(&params, v_max_kmh);
    profile.validate().map_err(js_err)?;
    let real = MimoRealization::draw(&profile, &params, 1, 1, &mut rng(seed)).map_err(js_err)?;
    let h = DdOperator::new(&params).dd_matrix(real.get(0, 1, 0));
    let mut impulse = DdFrame::zeros(&params);
    impulse.grid[(0, 0)] = Complex64::new(1.0, 0.0);
    let out = DdFrame::from_vector(&(h * impulse.to_vector()), m, n).map_err(js_err)?;
    let magnitude = (0..m).flat_map(|l| (0..n).map(move |k| (l, k))).map(|(l, k)| out.grid[(l, k)].norm()).collect();
    to_json(&Grid { m, n, magnitude })
}

/// Runs a BER sweep at `M = 4`, `N = 2` and returns the records.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn ber_sweep(
    scheme: &str,
    c: usize,
    g: usize,
    snr_start: f64,
    snr_step: f64,
    snr_stop: f64,
    frames: usize,
    csi_rho: f64,
    seed: u64,
) -> Result<String, JsError> {
    let params = demo_params(4, 2)?;
    let schemes = scheme
        .split(',')
        .map(|s| s.trim().parse::<Scheme>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(js_err)?;
    if frames > 2000 {
        return Err(JsError::new("at most 2000 frames"));
    }
    let config = ExperimentConfig {
        schemes,
        c,
        g,
        snr_db: otfs_gsvd::config::parse_snr_range(&format!("{snr_start}:{snr_step}:{snr_stop}")).map_err(js_err)?,
        frames,
        seed,
        csi_rho: vec![csi_rho],
        max_retries: 8,
        frame: params,
        channel: demo_profile(&params, 500.0),
    };
    config.validate().map_err(js_err)?;
    let records: Vec<BerRecord> = run_sweep_at(&config, csi_rho).map_err(js_err)?;
    to_json(&records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exports_produce_json() {
        let s: serde_json::Value = serde_json::from_str(&gsvd_streams(4, 3, 4, 2, 1).unwrap()).unwrap();
        assert_eq!(s["regime"], "I");
        assert_eq!(s["private1"], 8);
        let grid: serde_json::Value = serde_json::from_str(&dd_impulse_response(4, 4, 500.0, 2).unwrap()).unwrap();
        assert_eq!(grid["magnitude"].as_array().unwrap().len(), 16);
        let recs: serde_json::Value =
            serde_json::from_str(&ber_sweep("gsvd", 2, 2, 0.0, 10.0, 20.0, 3, 1.0, 3).unwrap()).unwrap();
        assert!(!recs.as_array().unwrap().is_empty());
    }
}
