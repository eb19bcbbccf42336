//! Analytic signal through the frequency-domain one-sided construction:
//! zero the negative-frequency bins, double the positive ones, keep DC and
//! Nyquist, then transform back. The real part is the input by construction.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

pub fn analytic_signal(x: &[f64]) -> Result<Vec<Complex64>> {
    let n = x.len();
    if n < 64 {
        return Err(Error::Config(format!(
            "analytic signal needs at least 64 samples, got {n}"
        )));
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.process(&mut buf);
    let half = n / 2;
    for (k, v) in buf.iter_mut().enumerate() {
        if k == 0 || (n % 2 == 0 && k == half) {
            // DC and Nyquist stay.
        } else if k < half || (n % 2 == 1 && k == half) {
            *v *= 2.0;
        } else {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    ifft.process(&mut buf);
    let scale = 1.0 / n as f64;
    Ok(buf
        .iter()
        .zip(x)
        .map(|(v, &re)| Complex64::new(re, v.im * scale))
        .collect())
}

/// Samples to discard at each end after a Hilbert transform (wrap-around
/// suppression); `fraction` of the record length per side.
pub fn guard_trim(n: usize, fraction: f64) -> (usize, usize) {
    let cut = (n as f64 * fraction) as usize;
    (cut, n - cut)
}
