//! OTFS frame geometry and the discrete Zak transform between the
//! delay-Doppler grid and the time-domain sample stream.
//!
//! Time samples are indexed delay-major, `n = l + m*M`, and one cyclic
//! prefix covers the whole frame, so every channel acts on the `MN` samples
//! as a circular operator.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};

/// Delay-Doppler grid geometry and physical constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameParams {
    /// Delay bins.
    pub m: usize,
    /// Doppler bins.
    pub n: usize,
    /// Subcarrier spacing in Hz.
    pub delta_f: f64,
    /// Carrier frequency in Hz.
    pub fc: f64,
}

impl FrameParams {
    pub fn new(m: usize, n: usize, delta_f: f64, fc: f64) -> Result<Self> {
        let params = Self { m, n, delta_f, fc };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::Argument(format!(
                "grid must be at least 1x1, got {}x{}",
                self.m, self.n
            )));
        }
        if !(self.delta_f.is_finite() && self.delta_f > 0.0) {
            return Err(Error::Argument(format!("delta_f must be positive, got {}", self.delta_f)));
        }
        if !(self.fc.is_finite() && self.fc > 0.0) {
            return Err(Error::Argument(format!("fc must be positive, got {}", self.fc)));
        }
        Ok(())
    }

    /// Number of grid points, `M*N`.
    pub fn mn(&self) -> usize {
        self.m * self.n
    }

    /// Bandwidth `M * delta_f`.
    pub fn bandwidth(&self) -> f64 {
        self.m as f64 * self.delta_f
    }

    /// Sub-symbol duration `1 / delta_f`.
    pub fn symbol_duration(&self) -> f64 {
        1.0 / self.delta_f
    }

    /// Frame duration `N * Ts`.
    pub fn frame_duration(&self) -> f64 {
        self.n as f64 * self.symbol_duration()
    }
}

/// One delay-Doppler frame: `grid[(l, k)]` is delay bin `l`, Doppler bin `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DdFrame {
    pub grid: CMat,
}

impl DdFrame {
    pub fn new(grid: CMat) -> Self {
        Self { grid }
    }

    pub fn zeros(params: &FrameParams) -> Self {
        Self { grid: CMat::zeros(params.m, params.n) }
    }

    pub fn delay_bins(&self) -> usize {
        self.grid.nrows()
    }

    pub fn doppler_bins(&self) -> usize {
        self.grid.ncols()
    }

    /// Row-major flattening of the grid (`vec` of its transpose): entry
    /// `k + l*N` holds `grid[(l, k)]`.
    pub fn to_vector(&self) -> CVec {
        let (m, n) = self.grid.shape();
        DVector::from_fn(m * n, |idx, _| self.grid[(idx / n, idx % n)])
    }

    pub fn from_vector(v: &CVec, m: usize, n: usize) -> Result<Self> {
        if v.len() != m * n {
            return Err(Error::Shape(format!("vector of length {} cannot fill a {m}x{n} grid", v.len())));
        }
        Ok(Self { grid: DMatrix::from_fn(m, n, |l, k| v[k + l * n]) })
    }
}

fn check_frame(frame: &DdFrame, params: &FrameParams) -> Result<()> {
    if frame.grid.shape() != (params.m, params.n) {
        return Err(Error::Shape(format!(
            "frame is {}x{}, params expect {}x{}",
            frame.delay_bins(),
            frame.doppler_bins(),
            params.m,
            params.n
        )));
    }
    Ok(())
}

fn twiddle(num: usize, den: usize, sign: f64) -> Complex64 {
    Complex64::from_polar(1.0, sign * 2.0 * PI * (num % den) as f64 / den as f64)
}

/// Inverse Zak transform: `s[l + m*M] = N^{-1/2} sum_k X[l,k] e^{j2pi mk/N}`.
pub fn dzt_modulate(frame: &DdFrame, params: &FrameParams) -> Result<CVec> {
    check_frame(frame, params)?;
    let (m_bins, n_bins) = (params.m, params.n);
    let scale = 1.0 / (n_bins as f64).sqrt();
    let mut out = CVec::zeros(params.mn());
    for l in 0..m_bins {
        for m in 0..n_bins {
            let acc: Complex64 = (0..n_bins)
                .map(|k| frame.grid[(l, k)] * twiddle(m * k, n_bins, 1.0))
                .sum();
            out[l + m * m_bins] = acc * scale;
        }
    }
    Ok(out)
}

/// Zak transform, the inverse of [`dzt_modulate`].
pub fn dzt_demodulate(samples: &CVec, params: &FrameParams) -> Result<DdFrame> {
    if samples.len() != params.mn() {
        return Err(Error::Shape(format!(
            "expected {} samples, got {}",
            params.mn(),
            samples.len()
        )));
    }
    let (m_bins, n_bins) = (params.m, params.n);
    let scale = 1.0 / (n_bins as f64).sqrt();
    let grid = DMatrix::from_fn(m_bins, n_bins, |l, k| {
        let acc: Complex64 = (0..n_bins)
            .map(|m| samples[l + m * m_bins] * twiddle(m * k, n_bins, -1.0))
            .sum();
        acc * scale
    });
    Ok(DdFrame { grid })
}

/// Matrix of [`dzt_demodulate`] acting on sample vectors and producing the
/// flattened delay-Doppler vector. It is unitary; its adjoint modulates.
pub fn zak_matrix(params: &FrameParams) -> CMat {
    let (m_bins, n_bins) = (params.m, params.n);
    let scale = 1.0 / (n_bins as f64).sqrt();
    let mut z = CMat::zeros(params.mn(), params.mn());
    for l in 0..m_bins {
        for k in 0..n_bins {
            for m in 0..n_bins {
                z[(k + l * n_bins, l + m * m_bins)] = twiddle(m * k, n_bins, -1.0) * scale;
            }
        }
    }
    z
}
