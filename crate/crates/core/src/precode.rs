//! Transceiver plans: the GSVD precoder with unitary detectors for the
//! three antenna regimes, plus the block-diagonalization, MMSE-equalizer
//! and MMSE-precoder baselines.
//!
//! Every plan transmits `x = P s / rho` with `rho^2 = ||P||_F^2 / (MN C)`,
//! so the average transmit power is one per antenna per delay-Doppler bin
//! for unit-energy symbols.

use std::borrow::Cow;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gsvd, null_space_basis, solve_hpd, vstack, CMat, CVec, GsvdFactors};

/// Antenna regime of a `(C, G)` configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `G < C < 2G`: private and common streams.
    I,
    /// `C <= G`: common streams only.
    II,
    /// `C >= 2G`: private streams only.
    III,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::I => "I",
            Regime::II => "II",
            Regime::III => "III",
        })
    }
}

/// `C = G` goes to II and `C = 2G` to III.
pub fn classify_regime(c: usize, g: usize) -> Regime {
    if c <= g {
        Regime::II
    } else if c >= 2 * g {
        Regime::III
    } else {
        Regime::I
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Gsvd,
    BdMmse,
    MmseEq,
    MmsePrec,
    /// Diagnostic: one user behind an identity channel, no precoding.
    Awgn,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [Scheme::Gsvd, Scheme::BdMmse, Scheme::MmseEq, Scheme::MmsePrec, Scheme::Awgn];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Gsvd => "gsvd",
            Scheme::BdMmse => "bd_mmse",
            Scheme::MmseEq => "mmse_eq",
            Scheme::MmsePrec => "mmse_prec",
            Scheme::Awgn => "awgn",
        }
    }

    /// Rejects antenna counts the scheme cannot serve.
    pub fn check_antennas(self, c: usize, g: usize) -> Result<()> {
        if c == 0 || g == 0 {
            return Err(Error::Config(format!("antenna counts must be positive, got C={c}, G={g}")));
        }
        let ok = match self {
            Scheme::Gsvd | Scheme::Awgn => true,
            Scheme::BdMmse => c > g,
            Scheme::MmseEq => c <= g,
            Scheme::MmsePrec => 2 * g <= c,
        };
        if ok {
            Ok(())
        } else {
            let need = match self {
                Scheme::BdMmse => "C > G",
                Scheme::MmseEq => "C <= G",
                _ => "C >= 2G",
            };
            Err(Error::Unsupported(format!("{} needs {need}, got C={c}, G={g}", self.name())))
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StreamClass {
    #[serde(rename = "private-1")]
    Private1,
    #[serde(rename = "common")]
    Common,
    #[serde(rename = "private-2")]
    Private2,
}

impl StreamClass {
    pub fn name(self) -> &'static str {
        match self {
            StreamClass::Private1 => "private-1",
            StreamClass::Common => "common",
            StreamClass::Private2 => "private-2",
        }
    }
}

impl fmt::Display for StreamClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Stream `stream` is read from entry `row` of the detected vector, where it
/// arrives scaled by `gain`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamTap {
    pub row: usize,
    pub stream: usize,
    pub gain: Complex64,
}

/// Output of [`single_tap_mmse_detect`].
#[derive(Debug, Clone, PartialEq)]
pub struct SingleTapOutput {
    pub estimates: Vec<Complex64>,
    /// Streams whose gain is exactly zero; their estimate is 0.
    pub unreachable: Vec<bool>,
}

/// Elementwise `conj(g) r / (|g|^2 + noise_var)`.
pub fn single_tap_mmse_detect(received: &[Complex64], gains: &[Complex64], noise_var: f64) -> Result<SingleTapOutput> {
    if received.len() != gains.len() {
        return Err(Error::Shape(format!(
            "{} received entries for {} gains",
            received.len(),
            gains.len()
        )));
    }
    let mut estimates = Vec::with_capacity(gains.len());
    let mut unreachable = Vec::with_capacity(gains.len());
    for (&r, &g) in received.iter().zip(gains) {
        if g.norm_sqr() == 0.0 {
            estimates.push(Complex64::new(0.0, 0.0));
            unreachable.push(true);
        } else {
            estimates.push(g.conj() * r / (g.norm_sqr() + noise_var));
            unreachable.push(false);
        }
    }
    Ok(SingleTapOutput { estimates, unreachable })
}

/// `(H^H H + noise_var I)^{-1} H^H y`.
pub fn mmse_equalize(h: &CMat, y: &CVec, noise_var: f64) -> Result<CVec> {
    if h.nrows() != y.len() {
        return Err(Error::Shape(format!("channel has {} rows, signal has {}", h.nrows(), y.len())));
    }
    let w = mmse_equalizer(h, noise_var)?;
    Ok(w * y)
}

fn mmse_equalizer(h: &CMat, noise_var: f64) -> Result<CMat> {
    let n = h.ncols();
    let gram = h.ad_mul(h) + CMat::identity(n, n) * Complex64::new(noise_var, 0.0);
    solve_hpd(gram, &h.adjoint())
}

/// Receive processing of one user.
#[derive(Debug, Clone)]
pub enum Detector {
    /// `r = scale * D y` (or `scale * y` without `D`), then a single-tap
    /// MMSE division per stream with effective noise `scale^2 N0`.
    SingleTap { transform: Option<CMat>, scale: f64, taps: Vec<StreamTap> },
    /// `s_hat = W y` for the listed streams.
    Linear { equalizer: CMat, streams: Vec<usize> },
}

impl Detector {
    pub fn streams(&self) -> Vec<usize> {
        match self {
            Detector::SingleTap { taps, .. } => taps.iter().map(|t| t.stream).collect(),
            Detector::Linear { streams, .. } => streams.clone(),
        }
    }

    /// Estimates, paired with their stream index, for every stream this user
    /// decodes.
    pub fn detect(&self, y: &CVec, noise_var: f64) -> Result<Vec<(usize, Complex64)>> {
        match self {
            Detector::SingleTap { transform, scale, taps } => {
                let r = match transform {
                    Some(d) => {
                        if d.ncols() != y.len() {
                            return Err(Error::Shape(format!("detector expects {} samples, got {}", d.ncols(), y.len())));
                        }
                        d * y
                    }
                    None => y.clone(),
                };
                let received: Vec<Complex64> = taps.iter().map(|t| r[t.row] * *scale).collect();
                let gains: Vec<Complex64> = taps.iter().map(|t| t.gain).collect();
                let out = single_tap_mmse_detect(&received, &gains, scale * scale * noise_var)?;
                Ok(taps
                    .iter()
                    .zip(out.estimates.into_iter().zip(out.unreachable))
                    .filter(|(_, (_, unreachable))| !unreachable)
                    .map(|(t, (est, _))| (t.stream, est))
                    .collect())
            }
            Detector::Linear { equalizer, streams } => {
                if equalizer.ncols() != y.len() {
                    return Err(Error::Shape(format!(
                        "equalizer expects {} samples, got {}",
                        equalizer.ncols(),
                        y.len()
                    )));
                }
                let est = equalizer * y;
                Ok(streams.iter().copied().zip(est.iter().copied()).collect())
            }
        }
    }
}

/// Precoder, detectors and stream bookkeeping for one channel realization.
#[derive(Debug, Clone)]
pub struct TransceiverPlan {
    pub scheme: Scheme,
    pub regime: Option<Regime>,
    /// Delay-Doppler bins per frame.
    pub mn: usize,
    /// Streams per delay-Doppler bin.
    pub streams_per_bin: usize,
    /// `MNC x MNs`.
    pub precoder: CMat,
    pub rho: f64,
    /// Class of every stream, `MNs` entries.
    pub stream_class: Vec<StreamClass>,
    /// `(user, detector)` for every served user.
    pub detectors: Vec<(usize, Detector)>,
}

impl TransceiverPlan {
    pub fn stream_count(&self) -> usize {
        self.precoder.ncols()
    }

    /// Transmit antennas.
    pub fn antennas(&self) -> usize {
        self.precoder.nrows() / self.mn
    }

    /// Stream group (one stream per delay-Doppler bin) of a stream.
    pub fn group(&self, stream: usize) -> usize {
        stream / self.mn
    }

    /// `x = P s / rho`.
    pub fn transmit(&self, symbols: &CVec) -> Result<CVec> {
        if symbols.len() != self.stream_count() {
            return Err(Error::Shape(format!(
                "plan carries {} streams, got {} symbols",
                self.stream_count(),
                symbols.len()
            )));
        }
        Ok(&self.precoder * symbols / Complex64::new(self.rho, 0.0))
    }

    pub fn detector(&self, user: usize) -> Option<&Detector> {
        self.detectors.iter().find(|(u, _)| *u == user).map(|(_, d)| d)
    }

    /// Effective single-tap gain `user` sees on every stream (0 where the
    /// stream is not reachable or the detector is not single-tap).
    pub fn user_gains(&self, user: usize) -> Vec<f64> {
        let mut gains = vec![0.0; self.stream_count()];
        if let Some(Detector::SingleTap { taps, .. }) = self.detector(user) {
            for t in taps {
                gains[t.stream] = t.gain.norm();
            }
        }
        gains
    }

    /// `(1/rho^2) ||P||_F^2`, equal to `MN C` by construction.
    pub fn transmit_energy(&self) -> f64 {
        self.precoder.norm_squared() / (self.rho * self.rho)
    }
}

fn power_factor(precoder: &CMat, mn: usize, c: usize) -> f64 {
    (precoder.norm_squared() / (mn * c) as f64).sqrt()
}

fn check_pair(h1: &CMat, h2: &CMat, mn: usize, c: usize, g: usize) -> Result<()> {
    if mn == 0 || h1.shape() != (mn * g, mn * c) || h2.shape() != (mn * g, mn * c) {
        return Err(Error::Shape(format!(
            "channels are {:?} and {:?}, expected {}x{}",
            h1.shape(),
            h2.shape(),
            mn * g,
            mn * c
        )));
    }
    Ok(())
}

/// Which construction of the GSVD precoder to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsvdPrecoderForm {
    /// `Y_q S_q^{-1} W` from the stacked-channel SVD `[H1; H2] = X S Y^H`;
    /// equals `(V^H)^{-1}` when `V` is square.
    Factored,
    /// `V (V^H V)^{-1}`, by a linear solve.
    PseudoInverse,
}

/// Right inverse of `V^H`.
pub fn gsvd_precoder(factors: &GsvdFactors, form: GsvdPrecoderForm) -> Result<CMat> {
    match form {
        GsvdPrecoderForm::Factored => {
            let mut scaled = factors.row_basis.clone();
            for (j, &s) in factors.stacked_singular_values.iter().enumerate() {
                scaled.column_mut(j).scale_mut(1.0 / s);
            }
            Ok(scaled * &factors.w)
        }
        GsvdPrecoderForm::PseudoInverse => {
            let gram = factors.v.ad_mul(&factors.v);
            let q = gram.nrows();
            let inv = gram
                .lu()
                .solve(&CMat::identity(q, q))
                .ok_or_else(|| Error::DegenerateChannel("V^H V is singular".into()))?;
            Ok(&factors.v * inv)
        }
    }
}

/// GSVD plan from precomputed factors.
pub fn gsvd_plan_from_factors(factors: &GsvdFactors, mn: usize, c: usize, g: usize) -> Result<TransceiverPlan> {
    let regime = classify_regime(c, g);
    let expected_streams = match regime {
        Regime::I | Regime::II => c,
        Regime::III => 2 * g,
    };
    let q = factors.q();
    if q != expected_streams * mn {
        return Err(Error::DegenerateChannel(format!(
            "joint factor has {q} streams, regime {regime} needs {}",
            expected_streams * mn
        )));
    }
    let precoder = gsvd_precoder(factors, GsvdPrecoderForm::Factored)?;
    let rho = power_factor(&precoder, mn, c);
    let stream_class = (0..q)
        .map(|j| {
            if j < factors.r {
                StreamClass::Private1
            } else if j < factors.r + factors.t {
                StreamClass::Common
            } else {
                StreamClass::Private2
            }
        })
        .collect();
    let taps = |user: usize, gains: &[f64]| -> Vec<StreamTap> {
        (0..q)
            .filter_map(|j| {
                factors.row_for_stream(user, j).map(|row| StreamTap {
                    row,
                    stream: j,
                    gain: Complex64::new(gains[j], 0.0),
                })
            })
            .collect()
    };
    let detectors = vec![
        (
            1,
            Detector::SingleTap { transform: Some(factors.u1.adjoint()), scale: rho, taps: taps(1, &factors.gains1) },
        ),
        (
            2,
            Detector::SingleTap { transform: Some(factors.u2.adjoint()), scale: rho, taps: taps(2, &factors.gains2) },
        ),
    ];
    Ok(TransceiverPlan {
        scheme: Scheme::Gsvd,
        regime: Some(regime),
        mn,
        streams_per_bin: expected_streams,
        precoder,
        rho,
        stream_class,
        detectors,
    })
}

/// GSVD precoder `P = (V^H)^{-1}` (regimes I, II) or its ZF right inverse
/// (regime III), with detectors `U1^H`, `U2^H`.
pub fn build_gsvd_plan(h1: &CMat, h2: &CMat, c: usize, g: usize, mn: usize) -> Result<TransceiverPlan> {
    check_pair(h1, h2, mn, c, g)?;
    let factors = gsvd(h1, h2)?;
    gsvd_plan_from_factors(&factors, mn, c, g)
}

/// Noise-independent part of a scheme, computed once per channel
/// realization and turned into a plan for each noise level.
#[derive(Debug, Clone)]
pub enum PreparedScheme {
    Gsvd(TransceiverPlan),
    BdMmse { h1: CMat, h2: CMat, nulls: [CMat; 2], mn: usize, c: usize },
    MmseEq { h1: CMat, h2: CMat, mn: usize, c: usize },
    MmsePrec { h1: CMat, h2: CMat, stacked_gram: CMat, mn: usize, c: usize, g: usize },
    Awgn(TransceiverPlan),
}

impl PreparedScheme {
    /// `h1`, `h2` are the channels the transmitter believes in.
    pub fn prepare(scheme: Scheme, h1: &CMat, h2: &CMat, mn: usize, c: usize, g: usize) -> Result<Self> {
        scheme.check_antennas(c, g)?;
        if scheme == Scheme::Awgn {
            return Ok(PreparedScheme::Awgn(awgn_plan(mn, c)));
        }
        check_pair(h1, h2, mn, c, g)?;
        Ok(match scheme {
            Scheme::Gsvd => PreparedScheme::Gsvd(build_gsvd_plan(h1, h2, c, g, mn)?),
            Scheme::BdMmse => {
                let per_user = mn * (c - g);
                let p1 = null_space_basis(h2);
                let p2 = null_space_basis(h1);
                if p1.ncols() != per_user || p2.ncols() != per_user {
                    return Err(Error::DegenerateChannel(format!(
                        "null spaces have dimensions {} and {}, expected {per_user}",
                        p1.ncols(),
                        p2.ncols()
                    )));
                }
                PreparedScheme::BdMmse { h1: h1.clone(), h2: h2.clone(), nulls: [p1, p2], mn, c }
            }
            Scheme::MmseEq => PreparedScheme::MmseEq { h1: h1.clone(), h2: h2.clone(), mn, c },
            Scheme::MmsePrec => {
                let stacked = vstack(h1, h2)?;
                let stacked_gram = &stacked * stacked.adjoint();
                PreparedScheme::MmsePrec { h1: h1.clone(), h2: h2.clone(), stacked_gram, mn, c, g }
            }
            Scheme::Awgn => unreachable!(),
        })
    }

    pub fn plan(&self, noise_var: f64) -> Result<Cow<'_, TransceiverPlan>> {
        match self {
            PreparedScheme::Gsvd(plan) | PreparedScheme::Awgn(plan) => Ok(Cow::Borrowed(plan)),
            PreparedScheme::BdMmse { h1, h2, nulls, mn, c } => {
                bd_plan_from_nulls(h1, h2, nulls, *mn, *c, noise_var).map(Cow::Owned)
            }
            PreparedScheme::MmseEq { h1, h2, mn, c } => mmse_eq_plan_inner(h1, h2, *mn, *c, noise_var).map(Cow::Owned),
            PreparedScheme::MmsePrec { h1, h2, stacked_gram, mn, c, g } => {
                mmse_prec_plan_inner(h1, h2, stacked_gram, *mn, *c, *g, noise_var).map(Cow::Owned)
            }
        }
    }
}

fn bd_plan_from_nulls(h1: &CMat, h2: &CMat, nulls: &[CMat; 2], mn: usize, c: usize, noise_var: f64) -> Result<TransceiverPlan> {
    let per_user = nulls[0].ncols();
    let mut precoder = CMat::zeros(mn * c, 2 * per_user);
    precoder.columns_mut(0, per_user).copy_from(&nulls[0]);
    precoder.columns_mut(per_user, per_user).copy_from(&nulls[1]);
    let rho = power_factor(&precoder, mn, c);
    let mut detectors = Vec::with_capacity(2);
    for (user, h) in [(1usize, h1), (2, h2)] {
        let effective = h * &nulls[user - 1] / Complex64::new(rho, 0.0);
        let equalizer = mmse_equalizer(&effective, noise_var)?;
        let offset = (user - 1) * per_user;
        detectors.push((user, Detector::Linear { equalizer, streams: (offset..offset + per_user).collect() }));
    }
    let mut stream_class = vec![StreamClass::Private1; per_user];
    stream_class.extend(std::iter::repeat_n(StreamClass::Private2, per_user));
    Ok(TransceiverPlan {
        scheme: Scheme::BdMmse,
        regime: None,
        mn,
        streams_per_bin: 2 * per_user / mn,
        precoder,
        rho,
        stream_class,
        detectors,
    })
}

/// Block diagonalization: user 1 transmits in the null space of `H2` and
/// vice versa; each receiver runs a linear MMSE equalizer on its own
/// effective channel.
pub fn bd_mmse_plan(h1: &CMat, h2: &CMat, mn: usize, c: usize, g: usize, noise_var: f64) -> Result<TransceiverPlan> {
    PreparedScheme::prepare(Scheme::BdMmse, h1, h2, mn, c, g)?.plan(noise_var).map(Cow::into_owned)
}

fn mmse_eq_plan_inner(h1: &CMat, h2: &CMat, mn: usize, c: usize, noise_var: f64) -> Result<TransceiverPlan> {
    let streams = mn * c;
    let precoder = CMat::identity(streams, streams);
    let rho = power_factor(&precoder, mn, c);
    let detectors = vec![
        (1, Detector::Linear { equalizer: mmse_equalizer(h1, noise_var)?, streams: (0..streams).collect() }),
        (2, Detector::Linear { equalizer: mmse_equalizer(h2, noise_var)?, streams: (0..streams).collect() }),
    ];
    Ok(TransceiverPlan {
        scheme: Scheme::MmseEq,
        regime: None,
        mn,
        streams_per_bin: c,
        precoder,
        rho,
        stream_class: vec![StreamClass::Common; streams],
        detectors,
    })
}

/// Unprecoded broadcast of `MNC` streams; both users run the full MMSE
/// equalizer.
pub fn mmse_eq_plan(h1: &CMat, h2: &CMat, mn: usize, c: usize, g: usize, noise_var: f64) -> Result<TransceiverPlan> {
    PreparedScheme::prepare(Scheme::MmseEq, h1, h2, mn, c, g)?.plan(noise_var).map(Cow::into_owned)
}

/// Loading `alpha = N0 * (streams / antennas)` of the regularized ZF
/// precoder.
pub fn mmse_precoder_loading(noise_var: f64, c: usize, g: usize) -> f64 {
    noise_var * (2 * g) as f64 / c as f64
}

fn mmse_prec_plan_inner(
    h1: &CMat,
    h2: &CMat,
    stacked_gram: &CMat,
    mn: usize,
    c: usize,
    g: usize,
    noise_var: f64,
) -> Result<TransceiverPlan> {
    let alpha = mmse_precoder_loading(noise_var, c, g);
    let k = stacked_gram.nrows();
    let regularized = stacked_gram + CMat::identity(k, k) * Complex64::new(alpha, 0.0);
    let inv = solve_hpd(regularized, &CMat::identity(k, k))?;
    let stacked = vstack(h1, h2)?;
    let precoder = stacked.adjoint() * inv;
    let rho = power_factor(&precoder, mn, c);
    let per_user = mn * g;
    let mut detectors = Vec::with_capacity(2);
    for (user, h) in [(1usize, h1), (2, h2)] {
        let offset = (user - 1) * per_user;
        let effective = h * precoder.columns(offset, per_user);
        let taps = (0..per_user)
            .map(|row| StreamTap { row, stream: offset + row, gain: effective[(row, row)] })
            .collect();
        detectors.push((user, Detector::SingleTap { transform: None, scale: rho, taps }));
    }
    let mut stream_class = vec![StreamClass::Private1; per_user];
    stream_class.extend(std::iter::repeat_n(StreamClass::Private2, per_user));
    Ok(TransceiverPlan {
        scheme: Scheme::MmsePrec,
        regime: None,
        mn,
        streams_per_bin: 2 * g,
        precoder,
        rho,
        stream_class,
        detectors,
    })
}

/// Regularized ZF `P = H^H (H H^H + alpha I)^{-1}` over the stacked channel.
pub fn mmse_precoder_plan(h1: &CMat, h2: &CMat, mn: usize, c: usize, g: usize, noise_var: f64) -> Result<TransceiverPlan> {
    PreparedScheme::prepare(Scheme::MmsePrec, h1, h2, mn, c, g)?.plan(noise_var).map(Cow::into_owned)
}

/// Identity channel, identity precoder, unit single-tap gains, one user.
pub fn awgn_plan(mn: usize, c: usize) -> TransceiverPlan {
    let streams = mn * c;
    let taps = (0..streams)
        .map(|j| StreamTap { row: j, stream: j, gain: Complex64::new(1.0, 0.0) })
        .collect();
    TransceiverPlan {
        scheme: Scheme::Awgn,
        regime: None,
        mn,
        streams_per_bin: c,
        precoder: CMat::identity(streams, streams),
        rho: 1.0,
        stream_class: vec![StreamClass::Private1; streams],
        detectors: vec![(1, Detector::SingleTap { transform: None, scale: 1.0, taps })],
    }
}

/// Noise-free received vectors after detection, `rho * D_u * H_u * x`,
/// for checking the diagonalization.
pub fn detected_noise_free(plan: &TransceiverPlan, h: &CMat, user: usize, symbols: &CVec) -> Result<CVec> {
    let x = plan.transmit(symbols)?;
    let y = h * x;
    match plan.detector(user) {
        Some(Detector::SingleTap { transform: Some(d), scale, .. }) => Ok(d * y * Complex64::new(*scale, 0.0)),
        Some(Detector::SingleTap { transform: None, scale, .. }) => Ok(y * Complex64::new(*scale, 0.0)),
        _ => Err(Error::Argument(format!("user {user} has no single-tap detector"))),
    }
}
