//! Seeded Monte Carlo BER engine.
//!
//! Each frame draws one channel realization (block fading) that is shared by
//! every SNR point and scheme of the run, so curves are compared on common
//! channels. Bits and noise come from a separate substream per
//! `(scheme, SNR point, frame)`. Error counts are integers summed in a fixed
//! key order, which makes the result independent of the worker count.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::{complex_gaussian, DdOperator, MimoDdChannel, MimoRealization};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};
use crate::precode::{PreparedScheme, Scheme, StreamClass, TransceiverPlan};
use crate::qam::{qam_demap_hard, qam_map, BITS_PER_SYMBOL};

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959964;

const DOMAIN_CHANNEL: u64 = 1;
const DOMAIN_CSI: u64 = 2;
const DOMAIN_DATA: u64 = 16;

/// Independent generator for `(seed, domain, a, b)`.
pub fn substream(seed: u64, domain: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (chunk, word) in key.chunks_exact_mut(8).zip([seed, domain, a, b]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// `N0 = 10^(-snr/10)` for unit transmit power per antenna and bin.
pub fn noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Wilson score interval at [`WILSON_Z`].
pub fn wilson_interval(errors: u64, bits: u64) -> (f64, f64) {
    if bits == 0 {
        return (0.0, 1.0);
    }
    let n = bits as f64;
    let p = errors as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

/// Error count with its Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BerEstimate {
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl BerEstimate {
    pub fn new(errors: u64, bits: u64) -> Self {
        let ber = if bits == 0 { 0.0 } else { errors as f64 / bits as f64 };
        let (ci_low, ci_high) = wilson_interval(errors, bits);
        Self { bits, errors, ber, ci_low, ci_high }
    }

    pub fn overlaps(&self, other: &BerEstimate) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }

    /// Strictly below `other`, with disjoint intervals.
    pub fn significantly_below(&self, other: &BerEstimate) -> bool {
        self.ci_high < other.ci_low
    }

    pub fn half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }
}

/// Pools the counts of several records.
pub fn pool<'a>(records: impl IntoIterator<Item = &'a BerRecord>) -> BerEstimate {
    let (errors, bits) = records.into_iter().fold((0, 0), |(e, b), r| (e + r.errors, b + r.bits));
    BerEstimate::new(errors, bits)
}

/// Measured BER of one stream group of one user at one SNR point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerRecord {
    pub scheme: Scheme,
    pub user: usize,
    pub stream_class: StreamClass,
    /// Stream group: one stream per delay-Doppler bin.
    pub stream_idx: usize,
    pub snr_db: f64,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl BerRecord {
    pub fn new(
        scheme: Scheme,
        user: usize,
        stream_class: StreamClass,
        stream_idx: usize,
        snr_db: f64,
        bits: u64,
        errors: u64,
    ) -> Self {
        let e = BerEstimate::new(errors, bits);
        Self {
            scheme,
            user,
            stream_class,
            stream_idx,
            snr_db,
            bits,
            errors,
            ber: e.ber,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
        }
    }

    pub fn estimate(&self) -> BerEstimate {
        BerEstimate { bits: self.bits, errors: self.errors, ber: self.ber, ci_low: self.ci_low, ci_high: self.ci_high }
    }
}

/// Orders records by scheme, user, stream class, SNR and stream group.
pub fn sort_records(records: &mut [BerRecord]) {
    records.sort_by(|a, b| {
        (a.scheme, a.user, a.stream_class)
            .cmp(&(b.scheme, b.user, b.stream_class))
            .then(a.snr_db.total_cmp(&b.snr_db))
            .then(a.stream_idx.cmp(&b.stream_idx))
    });
}

/// What the transmitted vector passes through.
#[derive(Debug, Clone, Copy)]
pub enum Propagation<'a> {
    /// `y = x + n` for a single user.
    Identity,
    Channel { h1: &'a CMat, h2: &'a CMat },
}

impl<'a> Propagation<'a> {
    pub fn from_channel(channel: &'a MimoDdChannel) -> Self {
        Propagation::Channel { h1: &channel.h1, h2: &channel.h2 }
    }
}

/// Bit errors of one stream at one user in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamErrors {
    pub user: usize,
    pub stream: usize,
    pub bits: u64,
    pub errors: u64,
}

/// Sends one frame of random 4-QAM symbols through `plan` and
/// `propagation`, returning the errors on every stream each user detects.
/// Unreachable streams are not reported.
pub fn simulate_frame<R: Rng + ?Sized>(
    plan: &TransceiverPlan,
    propagation: Propagation<'_>,
    noise_var: f64,
    rng: &mut R,
) -> Result<Vec<StreamErrors>> {
    if !(noise_var.is_finite() && noise_var >= 0.0) {
        return Err(Error::Argument(format!("noise variance must be non-negative, got {noise_var}")));
    }
    let streams = plan.stream_count();
    let bits: Vec<u8> = (0..streams * BITS_PER_SYMBOL).map(|_| rng.random_range(0..2u8)).collect();
    let symbols = CVec::from_vec(qam_map(&bits)?);
    let x = plan.transmit(&symbols)?;
    let mut out = Vec::new();
    for (user, detector) in &plan.detectors {
        let mut y = match propagation {
            Propagation::Identity => x.clone(),
            Propagation::Channel { h1, h2 } => {
                let h = if *user == 1 { h1 } else { h2 };
                if h.ncols() != x.len() {
                    return Err(Error::Shape(format!(
                        "channel has {} inputs, precoder produces {}",
                        h.ncols(),
                        x.len()
                    )));
                }
                h * &x
            }
        };
        if noise_var > 0.0 {
            for v in y.iter_mut() {
                *v += complex_gaussian(rng, noise_var);
            }
        }
        for (stream, estimate) in detector.detect(&y, noise_var)? {
            let decided = qam_demap_hard(&[estimate]);
            let sent = &bits[stream * BITS_PER_SYMBOL..(stream + 1) * BITS_PER_SYMBOL];
            let errors = decided.iter().zip(sent).filter(|(a, b)| a != b).count() as u64;
            out.push(StreamErrors { user: *user, stream, bits: BITS_PER_SYMBOL as u64, errors });
        }
    }
    Ok(out)
}

/// Records of a sweep at one CSI quality.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub csi_rho: f64,
    pub records: Vec<BerRecord>,
}

/// One sweep per configured `csi_rho`.
pub fn run_ber_sweep(config: &ExperimentConfig) -> Result<Vec<SweepResult>> {
    config.validate()?;
    config
        .csi_rho
        .iter()
        .map(|&csi_rho| Ok(SweepResult { csi_rho, records: run_sweep_at(config, csi_rho)? }))
        .collect()
}

/// Like [`run_ber_sweep`] on a dedicated pool of `threads` workers.
#[cfg(feature = "parallel")]
pub fn run_ber_sweep_with_threads(config: &ExperimentConfig, threads: usize) -> Result<Vec<SweepResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Argument(format!("cannot start {threads} worker threads: {e}")))?;
    pool.install(|| run_ber_sweep(config))
}

/// `(scheme, snr index, user, class, stream group)`.
type Key = (Scheme, usize, usize, StreamClass, usize);
type Counts = BTreeMap<Key, (u64, u64)>;

fn merge(mut a: Counts, b: Counts) -> Counts {
    for (k, (bits, errors)) in b {
        let e = a.entry(k).or_insert((0, 0));
        e.0 += bits;
        e.1 += errors;
    }
    a
}

/// Sweep over SNR points and frames for a single `csi_rho`.
pub fn run_sweep_at(config: &ExperimentConfig, csi_rho: f64) -> Result<Vec<BerRecord>> {
    config.validate()?;
    if !(0.0..=1.0).contains(&csi_rho) {
        return Err(Error::Config(format!("csi_rho: must lie in [0, 1], got {csi_rho}")));
    }
    let op = if config.schemes.iter().any(|&s| s != Scheme::Awgn) {
        Some(DdOperator::new(&config.frame))
    } else {
        None
    };
    let run_frame = |frame: usize| frame_counts(config, csi_rho, frame, op.as_ref());

    #[cfg(feature = "parallel")]
    let counts = {
        use rayon::prelude::*;
        (0..config.frames)
            .into_par_iter()
            .map(run_frame)
            .try_reduce(Counts::new, |a, b| Ok(merge(a, b)))?
    };
    #[cfg(not(feature = "parallel"))]
    let counts = (0..config.frames).try_fold(Counts::new(), |acc, f| Ok::<_, Error>(merge(acc, run_frame(f)?)))?;

    let mut records: Vec<BerRecord> = counts
        .into_iter()
        .map(|((scheme, snr_idx, user, class, group), (bits, errors))| {
            BerRecord::new(scheme, user, class, group, config.snr_db[snr_idx], bits, errors)
        })
        .collect();
    sort_records(&mut records);
    Ok(records)
}

/// True channel plus the schemes prepared from the channel the transmitter
/// believes in; degenerate draws are replaced up to the retry budget.
fn prepare_frame(
    config: &ExperimentConfig,
    csi_rho: f64,
    frame: usize,
    op: &DdOperator,
) -> Result<(MimoDdChannel, Vec<(Scheme, PreparedScheme)>)> {
    let (c, g, mn) = (config.c, config.g, config.frame.mn());
    let mut last = String::new();
    for attempt in 0..=config.max_retries {
        let mut rng = substream(config.seed, DOMAIN_CHANNEL, frame as u64, attempt as u64);
        let realization = MimoRealization::draw(&config.channel, &config.frame, c, g, &mut rng)?;
        let truth = MimoDdChannel::from_realization(&realization, op);
        let believed = if csi_rho < 1.0 {
            let mut rng = substream(config.seed, DOMAIN_CSI, frame as u64, attempt as u64);
            Some(MimoDdChannel::from_realization(&realization.corrupt(csi_rho, &mut rng)?, op))
        } else {
            None
        };
        let known = believed.as_ref().unwrap_or(&truth);
        let prepared: Result<Vec<_>> = config
            .schemes
            .iter()
            .map(|&s| PreparedScheme::prepare(s, &known.h1, &known.h2, mn, c, g).map(|p| (s, p)))
            .collect();
        match prepared {
            Ok(p) => return Ok((truth, p)),
            Err(Error::DegenerateChannel(msg)) => last = msg,
            Err(e) => return Err(e),
        }
    }
    Err(Error::DegenerateChannel(format!(
        "frame {frame}: no usable channel in {} draws ({last})",
        config.max_retries + 1
    )))
}

fn frame_counts(config: &ExperimentConfig, csi_rho: f64, frame: usize, op: Option<&DdOperator>) -> Result<Counts> {
    let mn = config.frame.mn();
    let (truth, prepared) = match op {
        Some(op) => {
            let (t, p) = prepare_frame(config, csi_rho, frame, op)?;
            (Some(t), p)
        }
        None => (
            None,
            vec![(Scheme::Awgn, PreparedScheme::prepare(Scheme::Awgn, &CMat::zeros(0, 0), &CMat::zeros(0, 0), mn, config.c, config.g)?)],
        ),
    };
    let mut counts = Counts::new();
    for (scheme, prep) in &prepared {
        let scheme_id = Scheme::ALL.iter().position(|s| s == scheme).unwrap_or(0) as u64;
        let propagation = match (scheme, &truth) {
            (Scheme::Awgn, _) | (_, None) => Propagation::Identity,
            (_, Some(t)) => Propagation::from_channel(t),
        };
        for (snr_idx, &snr) in config.snr_db.iter().enumerate() {
            let noise_var = noise_variance(snr);
            let plan = prep.plan(noise_var)?;
            let mut rng = substream(config.seed, DOMAIN_DATA + scheme_id, snr_idx as u64, frame as u64);
            for e in simulate_frame(&plan, propagation, noise_var, &mut rng)? {
                let class = plan.stream_class[e.stream];
                let entry = counts
                    .entry((*scheme, snr_idx, e.user, class, plan.group(e.stream)))
                    .or_insert((0, 0));
                entry.0 += e.bits;
                entry.1 += e.errors;
            }
        }
    }
    Ok(counts)
}
