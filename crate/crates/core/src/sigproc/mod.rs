//! The analysis pipeline applied to (simulated) position records: analytic
//! signals, rotating-frame demodulation, spectral estimation, line-shape
//! fits, eigenmode reconstruction, phase-locking statistics and empirical
//! second-order correlations.

mod fit;
mod g2;
mod hilbert;
mod modes;
mod psd;
mod scan;

pub use fit::{breit_wigner_fit, phase_lock_histogram, BreitWignerFit, PhaseLockHistogram};
pub use g2::{
    average_g2, band_pass_zero_phase, empirical_g2, filtered_g2_fit, g2_band_edges, EmpiricalG2,
    G2PhaseFit,
};
pub use hilbert::{analytic_signal, guard_trim};
pub use modes::{reconstruct_eigenmodes, ReconstructedModes};
pub use psd::{
    average_psds, local_maxima, parabolic_peak, welch_psd_complex, welch_psd_real, PsdEstimate,
    WindowKind,
};
pub use scan::{minimum_gap, spectrogram_scan, ScanSettings, SpectrogramScan};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rotating-frame bookkeeping of a complex series: the accumulated
/// demodulation multiplies the original data by e^{i 2 pi demod_hz t}, and
/// `phase_correction` records any constant phase removed from the channel.
/// Together they determine the mapping back to the lab frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameInfo {
    pub demod_hz: f64,
    pub phase_correction: f64,
}

impl FrameInfo {
    pub fn bare() -> FrameInfo {
        FrameInfo { demod_hz: 0.0, phase_correction: 0.0 }
    }
}

/// Complex mode amplitudes on a uniform time grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplexAmplitudeSeries {
    pub data: Vec<Complex64>,
    pub dt: f64,
    /// Time of the first sample.
    pub t0: f64,
    pub frame: FrameInfo,
}

impl ComplexAmplitudeSeries {
    pub fn from_data(data: Vec<Complex64>, dt: f64) -> ComplexAmplitudeSeries {
        ComplexAmplitudeSeries { data, dt, t0: 0.0, frame: FrameInfo::bare() }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn time(&self, index: usize) -> f64 {
        self.t0 + index as f64 * self.dt
    }

    /// Mean modulus squared, an occupation estimate for calibrated data.
    pub fn mean_power(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.len().max(1) as f64
    }

    /// Drop a fraction of samples at each end (Hilbert edge guard).
    pub fn trimmed(&self, fraction: f64) -> ComplexAmplitudeSeries {
        let cut = (self.len() as f64 * fraction) as usize;
        let data = self.data[cut..self.len() - cut].to_vec();
        ComplexAmplitudeSeries {
            data,
            dt: self.dt,
            t0: self.time(cut),
            frame: self.frame,
        }
    }
}

/// Multiply a series by e^{i sign 2 pi f_demod t}.
///
/// `sign` is the sign in the exponent. The detuning branch demodulates the
/// two channels at half the optical detuning with signs (-, +); the sum
/// branch uses (+, -) on the (b_1, conjugated b_2) channels.
pub fn demodulate(
    series: &ComplexAmplitudeSeries,
    f_demod_hz: f64,
    sign: i8,
) -> Result<ComplexAmplitudeSeries> {
    let nyquist = 0.5 / series.dt;
    if f_demod_hz.abs() >= nyquist {
        return Err(Error::Config(format!(
            "demodulation frequency {f_demod_hz} Hz exceeds Nyquist {nyquist} Hz"
        )));
    }
    let w = f64::from(sign) * 2.0 * std::f64::consts::PI * f_demod_hz;
    let data = series
        .data
        .iter()
        .enumerate()
        .map(|(k, v)| v * Complex64::from_polar(1.0, w * series.time(k)))
        .collect();
    Ok(ComplexAmplitudeSeries {
        data,
        dt: series.dt,
        t0: series.t0,
        frame: FrameInfo {
            demod_hz: series.frame.demod_hz + f64::from(sign) * f_demod_hz,
            phase_correction: series.frame.phase_correction,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn tone(f: f64, dt: f64, n: usize) -> ComplexAmplitudeSeries {
        ComplexAmplitudeSeries::from_data(
            (0..n)
                .map(|k| Complex64::from_polar(1.0, 2.0 * PI * f * k as f64 * dt))
                .collect(),
            dt,
        )
    }

    #[test]
    fn demodulate_at_zero_is_identity() {
        let s = tone(50.0, 1e-3, 128);
        let d = demodulate(&s, 0.0, 1).unwrap();
        assert!(s.data == d.data);
    }

    #[test]
    fn demodulating_a_tone_at_its_frequency_yields_a_constant() {
        let f = 37.0;
        let s = tone(f, 1e-3, 256);
        let d = demodulate(&s, f, -1).unwrap();
        for v in &d.data {
            assert_relative_eq!(v.re, 1.0, max_relative = 1e-12);
            assert!(v.im.abs() < 1e-10);
        }
    }

    #[test]
    fn opposite_demodulations_compose_to_identity() {
        let s = tone(21.0, 1e-3, 200);
        let d = demodulate(&demodulate(&s, 33.0, 1).unwrap(), 33.0, -1).unwrap();
        for (a, b) in s.data.iter().zip(&d.data) {
            assert!((a - b).norm() < 1e-12);
        }
        assert_relative_eq!(d.frame.demod_hz, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn demodulation_beyond_nyquist_is_rejected() {
        let s = tone(10.0, 1e-3, 128);
        assert!(demodulate(&s, 600.0, 1).is_err());
    }
}
