//! Doubly dispersive multipath channels: tap profiles, random realizations,
//! their time-domain and delay-Doppler matrices, and MIMO assembly.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{zak_matrix, FrameParams};
use crate::linalg::CMat;

/// Speed of light used for Doppler conversion, in m/s.
pub const SPEED_OF_LIGHT: f64 = 2.998e8;

/// Tap delays of the reference profile, in nanoseconds.
pub const REFERENCE_DELAYS_NS: [f64; 9] = [0.0, 30.0, 150.0, 310.0, 370.0, 710.0, 1090.0, 1730.0, 2510.0];
/// Tap powers of the reference profile, in dB.
pub const REFERENCE_POWERS_DB: [f64; 9] = [0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayUnit {
    Seconds,
    #[default]
    Bins,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DopplerModel {
    /// `k = k_max * cos(theta)`, `theta` uniform on `[0, 2pi)`.
    #[default]
    Jakes,
    /// `k` uniform on `[-k_max, k_max]`.
    Uniform,
}

/// Power-delay profile plus the mobility that sets the Doppler spread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathProfile {
    pub delays: Vec<f64>,
    pub powers_db: Vec<f64>,
    #[serde(default)]
    pub delay_unit: DelayUnit,
    pub v_max_kmh: f64,
    #[serde(default)]
    pub doppler_model: DopplerModel,
}

impl PathProfile {
    /// The nine-tap reference profile. With [`DelayUnit::Bins`] the taps sit
    /// on delay bins `0..=8`.
    pub fn reference(delay_unit: DelayUnit, v_max_kmh: f64) -> Self {
        let delays = match delay_unit {
            DelayUnit::Seconds => REFERENCE_DELAYS_NS.iter().map(|d| d * 1e-9).collect(),
            DelayUnit::Bins => (0..REFERENCE_DELAYS_NS.len()).map(|i| i as f64).collect(),
        };
        Self {
            delays,
            powers_db: REFERENCE_POWERS_DB.to_vec(),
            delay_unit,
            v_max_kmh,
            doppler_model: DopplerModel::Jakes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.delays.is_empty() {
            return Err(Error::Config("channel.delays must not be empty".into()));
        }
        if self.delays.len() != self.powers_db.len() {
            return Err(Error::Config(format!(
                "channel.delays has {} entries but channel.powers_db has {}",
                self.delays.len(),
                self.powers_db.len()
            )));
        }
        if self.delays.iter().chain(&self.powers_db).any(|x| !x.is_finite()) {
            return Err(Error::Config("channel profile values must be finite".into()));
        }
        if self.delays[0] < 0.0 || self.delays.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "channel.delays must be non-negative and strictly ascending".into(),
            ));
        }
        if !(self.v_max_kmh.is_finite() && self.v_max_kmh >= 0.0) {
            return Err(Error::Config(format!(
                "channel.v_max_kmh must be non-negative, got {}",
                self.v_max_kmh
            )));
        }
        Ok(())
    }

    /// Linear tap powers normalized to unit sum.
    pub fn linear_powers(&self) -> Vec<f64> {
        let lin: Vec<f64> = self.powers_db.iter().map(|db| 10f64.powf(db / 10.0)).collect();
        let total: f64 = lin.iter().sum();
        lin.into_iter().map(|p| p / total).collect()
    }

    /// Delay bin of every tap; delays past the last bin are rejected.
    pub fn delay_bins(&self, params: &FrameParams) -> Result<Vec<usize>> {
        self.delays
            .iter()
            .map(|&d| {
                let bin = match self.delay_unit {
                    DelayUnit::Seconds => (d * params.bandwidth()).round(),
                    DelayUnit::Bins => d.round(),
                };
                if bin > (params.m - 1) as f64 {
                    Err(Error::Config(format!(
                        "tap delay {d} maps to bin {bin}, beyond the last delay bin {}",
                        params.m - 1
                    )))
                } else {
                    Ok(bin as usize)
                }
            })
            .collect()
    }

    /// Largest normalized Doppler `nu_max * Tf` in Doppler-bin units.
    pub fn max_normalized_doppler(&self, params: &FrameParams) -> Result<f64> {
        Ok(max_doppler_hz(self.v_max_kmh, params.fc)? * params.frame_duration())
    }
}

/// `nu_max = v * fc / c` with `v` given in km/h.
pub fn max_doppler_hz(v_kmh: f64, fc: f64) -> Result<f64> {
    if !(v_kmh.is_finite() && v_kmh >= 0.0) {
        return Err(Error::Argument(format!("speed must be non-negative, got {v_kmh}")));
    }
    if !(fc.is_finite() && fc > 0.0) {
        return Err(Error::Argument(format!("carrier frequency must be positive, got {fc}")));
    }
    Ok(v_kmh / 3.6 * fc / SPEED_OF_LIGHT)
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub gain: Complex64,
    pub delay_bin: usize,
    /// Normalized Doppler in Doppler bins, fractional values allowed.
    pub doppler: f64,
    /// Mean linear power the gain was drawn with.
    pub power: f64,
}

/// One draw of the multipath channel between a transmit and a receive
/// antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRealization {
    pub taps: Vec<Tap>,
}

/// Circularly-symmetric complex Gaussian with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

pub fn draw_channel_realization<R: Rng + ?Sized>(
    profile: &PathProfile,
    params: &FrameParams,
    rng: &mut R,
) -> Result<PathRealization> {
    profile.validate()?;
    let bins = profile.delay_bins(params)?;
    let powers = profile.linear_powers();
    let k_max = profile.max_normalized_doppler(params)?;
    let taps = bins
        .into_iter()
        .zip(powers)
        .map(|(delay_bin, power)| {
            let gain = complex_gaussian(rng, power);
            let u: f64 = rng.random();
            let doppler = match profile.doppler_model {
                DopplerModel::Jakes => k_max * (2.0 * PI * u).cos(),
                DopplerModel::Uniform => k_max * (2.0 * u - 1.0),
            };
            Tap { gain, delay_bin, doppler, power }
        })
        .collect();
    Ok(PathRealization { taps })
}

/// Imperfect channel knowledge: `h_est = rho*h + e`, `e ~ CN(0, (1-rho^2) P)`
/// per tap. With `rho == 1` the realization is returned unchanged and no
/// randomness is consumed.
pub fn corrupt_csi<R: Rng + ?Sized>(
    realization: &PathRealization,
    csi_rho: f64,
    rng: &mut R,
) -> Result<PathRealization> {
    if !(0.0..=1.0).contains(&csi_rho) {
        return Err(Error::Argument(format!("csi_rho must lie in [0, 1], got {csi_rho}")));
    }
    if csi_rho == 1.0 {
        return Ok(realization.clone());
    }
    let taps = realization
        .taps
        .iter()
        .map(|tap| {
            let err = complex_gaussian(rng, (1.0 - csi_rho * csi_rho) * tap.power);
            Tap { gain: tap.gain * csi_rho + err, ..*tap }
        })
        .collect();
    Ok(PathRealization { taps })
}

fn doppler_phase(doppler: f64, n: usize, mn: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * doppler * n as f64 / mn as f64)
}

/// `H_t = sum_i h_i * Delta(k_i) * Pi^{l_i}` on the `MN` frame samples, with
/// `Pi` the cyclic forward shift and `Delta(k) = diag(e^{j2pi k n/(MN)})`.
pub fn build_time_channel_matrix(realization: &PathRealization, params: &FrameParams) -> CMat {
    let mn = params.mn();
    let mut h = CMat::zeros(mn, mn);
    for tap in &realization.taps {
        for n in 0..mn {
            let col = (n + mn - tap.delay_bin % mn) % mn;
            h[(n, col)] += tap.gain * doppler_phase(tap.doppler, n, mn);
        }
    }
    h
}

/// Maps time-domain channels to the delay-Doppler domain, caching the Zak
/// matrix for one frame geometry.
#[derive(Debug, Clone)]
pub struct DdOperator {
    params: FrameParams,
    zak: CMat,
    zak_adj: CMat,
}

impl DdOperator {
    pub fn new(params: &FrameParams) -> Self {
        let zak = zak_matrix(params);
        let zak_adj = zak.adjoint();
        Self { params: *params, zak, zak_adj }
    }

    pub fn params(&self) -> &FrameParams {
        &self.params
    }

    /// `H = Z * H_t * Z^H`.
    pub fn dd_matrix(&self, realization: &PathRealization) -> CMat {
        let mn = self.params.mn();
        // H_t has one entry per tap in every row, so build H_t * Z^H row by row.
        let mut right = CMat::zeros(mn, mn);
        for tap in &realization.taps {
            for n in 0..mn {
                let src = (n + mn - tap.delay_bin % mn) % mn;
                let coef = tap.gain * doppler_phase(tap.doppler, n, mn);
                let row = self.zak_adj.row(src) * coef;
                let mut dst = right.row_mut(n);
                dst += row;
            }
        }
        &self.zak * right
    }
}

/// Delay-Doppler channel matrix of one antenna pair.
pub fn dd_channel_matrix(realization: &PathRealization, params: &FrameParams) -> CMat {
    DdOperator::new(params).dd_matrix(realization)
}

/// Realizations for every (receive antenna, user, transmit antenna) triple.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoRealization {
    pub c: usize,
    pub g: usize,
    taps: Vec<PathRealization>,
}

impl MimoRealization {
    fn index(&self, g: usize, user: usize, c: usize) -> usize {
        (g * 2 + (user - 1)) * self.c + c
    }

    /// Zero-based antenna indices, `user` in `{1, 2}`.
    pub fn get(&self, g: usize, user: usize, c: usize) -> &PathRealization {
        &self.taps[self.index(g, user, c)]
    }

    /// Independent draws for all `2 * G * C` antenna pairs.
    pub fn draw<R: Rng + ?Sized>(
        profile: &PathProfile,
        params: &FrameParams,
        c: usize,
        g: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let taps = (0..2 * g * c)
            .map(|_| draw_channel_realization(profile, params, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { c, g, taps })
    }

    pub fn corrupt<R: Rng + ?Sized>(&self, csi_rho: f64, rng: &mut R) -> Result<Self> {
        let taps = self
            .taps
            .iter()
            .map(|r| corrupt_csi(r, csi_rho, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { c: self.c, g: self.g, taps })
    }

    /// Nested `[g][user-1][c]` view.
    pub fn nested(&self) -> Vec<Vec<Vec<PathRealization>>> {
        (0..self.g)
            .map(|g| {
                (1..=2)
                    .map(|u| (0..self.c).map(|c| self.get(g, u, c).clone()).collect())
                    .collect()
            })
            .collect()
    }
}

/// Per-antenna-pair delay-Doppler blocks and the two users' stacked
/// `MNG x MNC` channel matrices.
#[derive(Debug, Clone)]
pub struct MimoDdChannel {
    pub c: usize,
    pub g: usize,
    pub mn: usize,
    blocks: Vec<CMat>,
    pub h1: CMat,
    pub h2: CMat,
}

impl MimoDdChannel {
    pub fn from_realization(realization: &MimoRealization, op: &DdOperator) -> Self {
        let (c, g) = (realization.c, realization.g);
        let blocks = realization.taps.iter().map(|r| op.dd_matrix(r)).collect();
        Self::from_blocks(blocks, c, g, op.params().mn())
    }

    fn from_blocks(blocks: Vec<CMat>, c: usize, g: usize, mn: usize) -> Self {
        let mut h = [CMat::zeros(mn * g, mn * c), CMat::zeros(mn * g, mn * c)];
        for gi in 0..g {
            for (u, hu) in h.iter_mut().enumerate() {
                for ci in 0..c {
                    let block = &blocks[(gi * 2 + u) * c + ci];
                    hu.view_mut((gi * mn, ci * mn), (mn, mn)).copy_from(block);
                }
            }
        }
        let [h1, h2] = h;
        Self { c, g, mn, blocks, h1, h2 }
    }

    /// Block between transmit antenna `c` and antenna `g` of `user`.
    pub fn block(&self, g: usize, user: usize, c: usize) -> &CMat {
        &self.blocks[(g * 2 + (user - 1)) * self.c + c]
    }

    /// Stacked channel of `user` (1 or 2).
    pub fn user(&self, user: usize) -> &CMat {
        if user == 1 {
            &self.h1
        } else {
            &self.h2
        }
    }
}

/// Builds the stacked channels from a `[g][user-1][c]` grid of realizations.
pub fn assemble_mimo_channel(
    realizations: &[Vec<Vec<PathRealization>>],
    params: &FrameParams,
    c: usize,
    g: usize,
) -> Result<MimoDdChannel> {
    let complete = realizations.len() == g
        && realizations.iter().all(|per_g| per_g.len() == 2 && per_g.iter().all(|per_u| per_u.len() == c));
    if !complete || c == 0 || g == 0 {
        return Err(Error::Argument(format!(
            "expected a full {g} x 2 x {c} grid of channel realizations"
        )));
    }
    let op = DdOperator::new(params);
    let blocks = realizations
        .iter()
        .flat_map(|per_g| per_g.iter().flat_map(|per_u| per_u.iter().map(|r| op.dd_matrix(r))))
        .collect();
    Ok(MimoDdChannel::from_blocks(blocks, c, g, params.mn()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{dzt_demodulate, dzt_modulate, DdFrame};
    use crate::linalg::{numerical_rank, vstack, CVec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(m: usize, n: usize) -> FrameParams {
        FrameParams::new(m, n, 15e3, 4e9).unwrap()
    }

    fn single(gain: f64, delay_bin: usize, doppler: f64) -> PathRealization {
        PathRealization {
            taps: vec![Tap { gain: Complex64::new(gain, 0.0), delay_bin, doppler, power: 1.0 }],
        }
    }

    fn small_profile(v: f64) -> PathProfile {
        PathProfile {
            delays: vec![0.0, 1.0, 3.0],
            powers_db: vec![0.0, -3.0, -6.0],
            delay_unit: DelayUnit::Bins,
            v_max_kmh: v,
            doppler_model: DopplerModel::Jakes,
        }
    }

    #[test]
    fn reference_doppler_numbers() {
        let nu = max_doppler_hz(500.0, 4e9).unwrap();
        assert!((nu - 1853.0).abs() <= 1.0, "{nu}");
        assert_eq!(max_doppler_hz(0.0, 4e9).unwrap(), 0.0);
        assert!(max_doppler_hz(-1.0, 4e9).is_err());
        let p = params(16, 8);
        let k_max = PathProfile::reference(DelayUnit::Bins, 500.0).max_normalized_doppler(&p).unwrap();
        assert!((k_max - 0.9883).abs() <= 1e-3, "{k_max}");
    }

    #[test]
    fn profile_validation() {
        let mut p = small_profile(10.0);
        assert!(p.validate().is_ok());
        p.delays = vec![0.0, 0.0, 1.0];
        assert!(p.validate().is_err());
        let mut p = small_profile(10.0);
        p.powers_db.pop();
        assert!(p.validate().is_err());
        let mut p = small_profile(-3.0);
        assert!(p.validate().is_err());
        p.v_max_kmh = 1.0;
        let total: f64 = p.linear_powers().iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reference_delays_in_seconds_map_to_first_bins() {
        let p = params(16, 8);
        let bins = PathProfile::reference(DelayUnit::Seconds, 500.0).delay_bins(&p).unwrap();
        // 2.51 us * 240 kHz = 0.60 rounds up; every other tap rounds to 0
        assert_eq!(bins, vec![0, 0, 0, 0, 0, 0, 0, 0, 1]);
    }

    #[test]
    fn delay_beyond_grid_is_a_config_error() {
        let p = params(8, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = draw_channel_realization(&PathProfile::reference(DelayUnit::Bins, 0.0), &p, &mut rng);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn static_channel_has_zero_doppler() {
        let p = params(4, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = draw_channel_realization(&small_profile(0.0), &p, &mut rng).unwrap();
        assert!(r.taps.iter().all(|t| t.doppler == 0.0));
    }

    #[test]
    fn doppler_within_bound() {
        let p = params(16, 8);
        let mut profile = PathProfile::reference(DelayUnit::Bins, 500.0);
        let k_max = profile.max_normalized_doppler(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for model in [DopplerModel::Jakes, DopplerModel::Uniform] {
            profile.doppler_model = model;
            for _ in 0..50 {
                let r = draw_channel_realization(&profile, &p, &mut rng).unwrap();
                assert!(r.taps.iter().all(|t| t.doppler.abs() <= k_max));
            }
        }
    }

    #[test]
    fn unit_tap_power_statistics() {
        let p = params(4, 2);
        let profile = PathProfile {
            delays: vec![0.0],
            powers_db: vec![0.0],
            delay_unit: DelayUnit::Bins,
            v_max_kmh: 100.0,
            doppler_model: DopplerModel::Jakes,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 10_000;
        let mean: f64 = (0..draws)
            .map(|_| draw_channel_realization(&profile, &p, &mut rng).unwrap().taps[0].gain.norm_sqr())
            .sum::<f64>()
            / draws as f64;
        // |h|^2 is unit-mean exponential: standard error 1/sqrt(draws)
        assert!((mean - 1.0).abs() <= 3.0 / (draws as f64).sqrt(), "{mean}");
    }

    #[test]
    fn time_matrix_examples() {
        let p = params(3, 2);
        let mn = p.mn();
        assert_eq!(build_time_channel_matrix(&single(1.0, 0, 0.0), &p), CMat::identity(mn, mn));
        let shift = build_time_channel_matrix(&single(1.0, 1, 0.0), &p);
        for n in 0..mn {
            for j in 0..mn {
                let expect = if j == (n + mn - 1) % mn { 1.0 } else { 0.0 };
                assert_eq!(shift[(n, j)], Complex64::new(expect, 0.0));
            }
        }
        let diag = build_time_channel_matrix(&single(1.0, 0, 0.37), &p);
        for n in 0..mn {
            assert!((diag[(n, n)] - doppler_phase(0.37, n, mn)).norm() < 1e-15);
        }
        assert!((diag.norm_squared() - mn as f64).abs() < 1e-12);
    }

    #[test]
    fn identity_time_channel_is_identity_in_dd() {
        let p = params(4, 2);
        let h = dd_channel_matrix(&single(1.0, 0, 0.0), &p);
        assert!((h - CMat::identity(8, 8)).norm() < 1e-13);
    }

    #[test]
    fn integer_tap_is_a_phase_rotated_cyclic_shift() {
        let p = params(4, 4);
        let mn = p.mn();
        let (l, k) = (1usize, 2.0);
        let h = dd_channel_matrix(&single(1.0, l, k), &p);
        for src in 0..mn {
            let mut x = CVec::zeros(mn);
            x[src] = Complex64::new(1.0, 0.0);
            let y = &h * &x;
            let nonzero: Vec<usize> = (0..mn).filter(|&i| y[i].norm() > 1e-10).collect();
            assert_eq!(nonzero.len(), 1, "src {src}");
            assert!((y[nonzero[0]].norm() - 1.0).abs() < 1e-12);
            // oracle: modulate, shift and rotate in time, demodulate
            let frame = DdFrame::from_vector(&x, p.m, p.n).unwrap();
            let s = dzt_modulate(&frame, &p).unwrap();
            let r = build_time_channel_matrix(&single(1.0, l, k), &p) * s;
            let back = dzt_demodulate(&r, &p).unwrap().to_vector();
            assert!((back - y).norm() < 1e-12);
        }
    }

    #[test]
    fn frobenius_norm_preserved_and_linear_in_taps() {
        let p = params(4, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = draw_channel_realization(&small_profile(300.0), &p, &mut rng).unwrap();
        let ht = build_time_channel_matrix(&r, &p);
        let h = dd_channel_matrix(&r, &p);
        assert!((h.norm() - ht.norm()).abs() < 1e-12 * ht.norm());
        let sum = r
            .taps
            .iter()
            .map(|t| dd_channel_matrix(&PathRealization { taps: vec![*t] }, &p))
            .fold(CMat::zeros(12, 12), |acc, m| acc + m);
        assert!((sum - h).norm() < 1e-12);
    }

    #[test]
    fn average_channel_energy_is_one_per_bin() {
        let p = params(4, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let op = DdOperator::new(&p);
        let profile = PathProfile::reference(DelayUnit::Seconds, 500.0);
        let draws = 1000;
        let samples: Vec<f64> = (0..draws)
            .map(|_| op.dd_matrix(&draw_channel_realization(&profile, &p, &mut rng).unwrap()).norm_squared() / 8.0)
            .collect();
        let mean = samples.iter().sum::<f64>() / draws as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        assert!((mean - 1.0).abs() <= 3.0 * (var / draws as f64).sqrt(), "{mean}");
    }

    #[test]
    fn assembly_layout_and_shapes() {
        let p = params(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mimo = MimoRealization::draw(&small_profile(100.0), &params(4, 2), 3, 2, &mut rng).unwrap();
        let p4 = params(4, 2);
        let ch = assemble_mimo_channel(&mimo.nested(), &p4, 3, 2).unwrap();
        let direct = MimoDdChannel::from_realization(&mimo, &DdOperator::new(&p4));
        assert_eq!(ch.h1, direct.h1);
        assert_eq!(ch.h1.shape(), (16, 24));
        for g in 0..2 {
            for c in 0..3 {
                assert_eq!(ch.h2.view((g * 8, c * 8), (8, 8)), *ch.block(g, 2, c));
            }
        }
        let one = single(1.0, 1, 0.2);
        let grid = vec![vec![vec![one.clone()], vec![one.clone()]]];
        let ch = assemble_mimo_channel(&grid, &p, 1, 1).unwrap();
        assert_eq!(ch.h1, dd_channel_matrix(&one, &p));
        assert!(assemble_mimo_channel(&grid, &p, 2, 1).is_err());
    }

    #[test]
    fn reference_scale_dimensions() {
        let p = params(16, 8);
        let r = single(1.0, 0, 0.0);
        let grid = vec![vec![vec![r.clone(); 4]; 2]; 3];
        let ch = assemble_mimo_channel(&grid, &p, 4, 3).unwrap();
        assert_eq!(ch.h1.shape(), (384, 512));
    }

    #[test]
    fn stacked_rank_is_generic() {
        let p = params(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let mimo = MimoRealization::draw(&small_profile(200.0).clone_with_m(2), &p, 2, 2, &mut rng).unwrap();
            let ch = MimoDdChannel::from_realization(&mimo, &DdOperator::new(&p));
            assert_eq!(numerical_rank(ch.block(0, 1, 0)), 4);
            let k = vstack(&ch.h1, &ch.h2).unwrap();
            assert_eq!(numerical_rank(&k), 4 * 2);
        }
    }

    impl PathProfile {
        fn clone_with_m(&self, m: usize) -> Self {
            let keep = self.delays.iter().filter(|&&d| d < m as f64).count();
            Self {
                delays: self.delays[..keep].to_vec(),
                powers_db: self.powers_db[..keep].to_vec(),
                ..self.clone()
            }
        }
    }

    #[test]
    fn csi_corruption_moments() {
        let r = single(1.0, 0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        assert_eq!(corrupt_csi(&r, 1.0, &mut rng).unwrap(), r);
        assert!(corrupt_csi(&r, 1.5, &mut rng).is_err());
        assert!(corrupt_csi(&r, -0.1, &mut rng).is_err());

        let profile = PathProfile {
            delays: vec![0.0],
            powers_db: vec![0.0],
            delay_unit: DelayUnit::Bins,
            v_max_kmh: 0.0,
            doppler_model: DopplerModel::Jakes,
        };
        let p = params(2, 2);
        let draws = 10_000;
        for rho in [0.9, 0.0] {
            let mut est_energy = 0.0;
            let mut cross = Complex64::new(0.0, 0.0);
            for _ in 0..draws {
                let r = draw_channel_realization(&profile, &p, &mut rng).unwrap();
                let e = corrupt_csi(&r, rho, &mut rng).unwrap();
                est_energy += e.taps[0].gain.norm_sqr();
                cross += e.taps[0].gain * r.taps[0].gain.conj();
            }
            let bound = 3.0 / (draws as f64).sqrt();
            assert!((est_energy / draws as f64 - 1.0).abs() <= bound, "rho {rho}");
            // correlation with the true tap is rho
            assert!((cross / draws as f64 - Complex64::new(rho, 0.0)).norm() <= 2.0 * bound, "rho {rho}");
        }
    }
}
