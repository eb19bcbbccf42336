//! Line-shape and histogram fits: Breit-Wigner (Lorentzian) resonances on
//! PSD estimates and the 2pi-periodic Gaussian fit of phase-difference
//! histograms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{levenberg_marquardt, wrap_angle};
use crate::sigproc::psd::PsdEstimate;
use crate::sigproc::ComplexAmplitudeSeries;

/// Fitted Breit-Wigner line L(f) = a / ((f - f0)^2 + (G/2)^2) + c.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BreitWignerFit {
    /// Line center (Hz).
    pub f0_hz: f64,
    /// Full width at half maximum (Hz).
    pub fwhm_hz: f64,
    pub amplitude: f64,
    pub offset: f64,
    /// Sum of squared residuals.
    pub residual: f64,
    /// Covariance of (a, f0, G, c).
    pub covariance: Vec<Vec<f64>>,
}

impl BreitWignerFit {
    /// One-sigma uncertainty of the fitted center.
    pub fn f0_sigma(&self) -> f64 {
        self.covariance[1][1].max(0.0).sqrt()
    }

    pub fn fwhm_sigma(&self) -> f64 {
        self.covariance[2][2].max(0.0).sqrt()
    }
}

/// Least-squares Breit-Wigner fit on the band [f_lo, f_hi] of a PSD.
///
/// Initialization comes from the peak bin and its half-maximum width; a peak
/// standing less than 5x above the band median is rejected as undetectable.
pub fn breit_wigner_fit(psd: &PsdEstimate, f_lo: f64, f_hi: f64) -> Result<BreitWignerFit> {
    let (lo, hi) = psd.band(f_lo, f_hi);
    if hi - lo < 8 {
        return Err(Error::Config(format!(
            "fit band [{f_lo}, {f_hi}] Hz covers fewer than 8 bins"
        )));
    }
    let band = &psd.density[lo..hi];
    let freqs = &psd.freqs[lo..hi];
    let mut sorted: Vec<f64> = band.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let (peak_idx, &peak) = band
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty band");
    if peak < 5.0 * median.max(f64::MIN_POSITIVE) {
        return Err(Error::Config(format!(
            "no detectable peak in [{f_lo}, {f_hi}] Hz: max/median = {:.2}",
            peak / median
        )));
    }
    // Half-maximum width scan from the peak bin.
    let half = 0.5 * (peak + median);
    let mut right = peak_idx;
    while right + 1 < band.len() && band[right] > half {
        right += 1;
    }
    let mut left = peak_idx;
    while left > 0 && band[left] > half {
        left -= 1;
    }
    let width0 = ((right - left).max(2) as f64) * psd.df;
    let f0_init = freqs[peak_idx];
    let c0 = median;
    let a0 = (peak - c0) * (0.5 * width0).powi(2);
    let model = |p: &[f64], out: &mut [f64]| {
        let (a, f0, g, c) = (p[0], p[1], p[2], p[3]);
        for (i, (&f, &y)) in freqs.iter().zip(band.iter()).enumerate() {
            out[i] = a / ((f - f0).powi(2) + (0.5 * g).powi(2)) + c - y;
        }
    };
    let fit = levenberg_marquardt(model, &[a0, f0_init, width0, c0], band.len(), 400)?;
    let fwhm = fit.params[2].abs();
    if !fwhm.is_finite() || fwhm <= 0.0 {
        return Err(Error::FitFailure("non-positive fitted width".into()));
    }
    Ok(BreitWignerFit {
        f0_hz: fit.params[1],
        fwhm_hz: fwhm,
        amplitude: fit.params[0],
        offset: fit.params[3],
        residual: fit.ssr,
        covariance: fit.covariance,
    })
}

/// Phase-difference histogram with its periodic-Gaussian fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseLockHistogram {
    pub bin_centers: Vec<f64>,
    /// Probability density per bin (integrates to one).
    pub pdf: Vec<f64>,
    /// Location of the fitted peak; the phase-lock estimate.
    pub delta_phi_hat: f64,
    /// max - min of the fitted density.
    pub contrast: f64,
    /// Sampling noise of a uniform histogram at this bin count.
    pub sampling_noise: f64,
    /// Contrast exceeds 5x the sampling noise.
    pub locked: bool,
    /// False when the periodic-Gaussian fit did not converge and the raw
    /// histogram statistics were used instead.
    pub fit_ok: bool,
}

fn periodic_gaussian(phi: f64, mu: f64, sigma: f64) -> f64 {
    let mut s = 0.0;
    for k in -3..=3 {
        let d = phi - mu + 2.0 * std::f64::consts::PI * k as f64;
        s += (-0.5 * (d / sigma).powi(2)).exp();
    }
    s
}

/// Histogram of the instantaneous phase difference arg(b1* b2) on (-pi, pi],
/// fitted with a 2pi-periodic Gaussian.
pub fn phase_lock_histogram(
    b1: &ComplexAmplitudeSeries,
    b2: &ComplexAmplitudeSeries,
    n_bins: usize,
) -> Result<PhaseLockHistogram> {
    if b1.len() != b2.len() || b1.len() < 100 {
        return Err(Error::Config(
            "phase histogram needs two equal records of at least 100 samples".into(),
        ));
    }
    if n_bins < 8 {
        return Err(Error::Config("need at least 8 bins".into()));
    }
    let n = b1.len();
    let two_pi = 2.0 * std::f64::consts::PI;
    let bin_width = two_pi / n_bins as f64;
    let mut counts = vec![0.0f64; n_bins];
    let mut mean_vec = Complex64::new(0.0, 0.0);
    let mut phasors = Vec::with_capacity(n);
    for (a, b) in b1.data.iter().zip(&b2.data) {
        let w = a.conj() * b;
        let phi = w.arg(); // in (-pi, pi]
        let mut idx = ((phi + std::f64::consts::PI) / bin_width) as usize;
        if idx >= n_bins {
            idx = n_bins - 1;
        }
        counts[idx] += 1.0;
        if w.norm_sqr() > 0.0 {
            let unit = w / w.norm();
            mean_vec += unit;
            phasors.push(unit);
        } else {
            phasors.push(Complex64::new(0.0, 0.0));
        }
    }
    let pdf: Vec<f64> = counts.iter().map(|c| c / (n as f64 * bin_width)).collect();
    let bin_centers: Vec<f64> = (0..n_bins)
        .map(|k| -std::f64::consts::PI + (k as f64 + 0.5) * bin_width)
        .collect();
    // Records are autocorrelated; estimate the effective sample count from
    // the integrated autocorrelation time of the centered phasor (via FFT).
    let mean_phasor = mean_vec / n as f64;
    let ess = {
        let fft_len = (2 * n).next_power_of_two();
        let mut planner = rustfft::FftPlanner::new();
        let fft = planner.plan_fft_forward(fft_len);
        let ifft = planner.plan_fft_inverse(fft_len);
        let mut buf: Vec<Complex64> = phasors.iter().map(|u| u - mean_phasor).collect();
        buf.resize(fft_len, Complex64::new(0.0, 0.0));
        fft.process(&mut buf);
        for v in buf.iter_mut() {
            *v = Complex64::new(v.norm_sqr(), 0.0);
        }
        ifft.process(&mut buf);
        let var = buf[0].re;
        let mut tau_int = 1.0;
        if var > 0.0 {
            for (lag, v) in buf.iter().enumerate().skip(1).take(4096.min(n / 4)) {
                let rho = v.re / var * (n as f64 / (n - lag) as f64);
                if rho < 0.05 {
                    break;
                }
                tau_int += 2.0 * rho;
            }
        }
        (n as f64 / tau_int).max(8.0)
    };
    // Uniform-histogram sampling noise, in density units.
    let p = 1.0 / n_bins as f64;
    let sampling_noise = (p * (1.0 - p) / ess).sqrt() / bin_width;
    mean_vec /= n as f64;
    let mu0 = mean_vec.arg();
    let r = mean_vec.norm().clamp(1e-6, 1.0 - 1e-9);
    // Circular-statistics width estimate.
    let sigma0 = (-2.0 * r.ln()).sqrt().clamp(0.1, 4.0);
    let uniform = 1.0 / two_pi;
    let model = |q: &[f64], out: &mut [f64]| {
        for (i, (&phi, &y)) in bin_centers.iter().zip(pdf.iter()).enumerate() {
            out[i] = q[0] * periodic_gaussian(phi, q[1], q[2].abs().max(1e-3)) + q[3] - y;
        }
    };
    let amp0 = (pdf.iter().cloned().fold(0.0, f64::max) - uniform).max(0.01 * uniform);
    let fit = levenberg_marquardt(model, &[amp0, mu0, sigma0, uniform], n_bins, 300);
    let (delta_phi_hat, contrast, fit_ok) = match fit {
        Ok(f) if f.params[0].is_finite() => {
            let (a, mu, sigma, c) = (f.params[0], f.params[1], f.params[2].abs(), f.params[3]);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for k in 0..512 {
                let phi = -std::f64::consts::PI + two_pi * k as f64 / 512.0;
                let v = a * periodic_gaussian(phi, mu, sigma.max(1e-3)) + c;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            (wrap_angle(mu), hi - lo, true)
        }
        _ => {
            let hi = pdf.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = pdf.iter().cloned().fold(f64::INFINITY, f64::min);
            (mu0, hi - lo, false)
        }
    };
    let locked = contrast > 5.0 * sampling_noise;
    Ok(PhaseLockHistogram {
        bin_centers,
        pdf,
        delta_phi_hat,
        contrast,
        sampling_noise,
        locked,
        fit_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigproc::psd::WindowKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use rand_distr::StandardNormal;

    fn lorentzian_psd(a: f64, f0: f64, fwhm: f64, c: f64, noise: f64, seed: u64) -> PsdEstimate {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let df = 2.0;
        let freqs: Vec<f64> = (0..2000).map(|k| k as f64 * df).collect();
        let density: Vec<f64> = freqs
            .iter()
            .map(|&f| {
                let v = a / ((f - f0).powi(2) + (0.5 * fwhm).powi(2)) + c;
                v * (1.0 + noise * rng.sample::<f64, _>(StandardNormal))
            })
            .collect();
        PsdEstimate {
            freqs,
            density,
            segments: 1,
            window: WindowKind::Hann,
            one_sided: true,
            df,
        }
    }

    #[test]
    fn noiseless_lorentzian_is_recovered_exactly() {
        let psd = lorentzian_psd(1e4, 1234.0, 87.0, 0.05, 0.0, 0);
        let fit = breit_wigner_fit(&psd, 400.0, 3000.0).unwrap();
        approx::assert_relative_eq!(fit.f0_hz, 1234.0, max_relative = 1e-6);
        approx::assert_relative_eq!(fit.fwhm_hz, 87.0, max_relative = 1e-6);
    }

    #[test]
    fn noisy_lorentzian_is_recovered_within_two_percent() {
        let psd = lorentzian_psd(1e4, 1234.0, 87.0, 0.05, 0.05, 1);
        let fit = breit_wigner_fit(&psd, 400.0, 3000.0).unwrap();
        assert!((fit.f0_hz - 1234.0).abs() / 1234.0 < 0.02);
        assert!((fit.fwhm_hz - 87.0).abs() / 87.0 < 0.02);
    }

    #[test]
    fn featureless_band_is_rejected() {
        let psd = lorentzian_psd(1e4, 1234.0, 87.0, 1.0, 0.0, 2);
        // A band far away from the peak has max/median close to 1.
        assert!(breit_wigner_fit(&psd, 2500.0, 3900.0).is_err());
    }

    #[test]
    fn locked_phases_produce_a_peaked_histogram() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let n = 20_000;
        let mu = 0.8;
        let mk = |rng: &mut ChaCha12Rng, locked: bool| {
            let mut b1 = Vec::with_capacity(n);
            let mut b2 = Vec::with_capacity(n);
            for _ in 0..n {
                let phi1: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                let amp1 = 1.0 + 0.3 * rng.sample::<f64, _>(StandardNormal);
                b1.push(Complex64::from_polar(amp1.abs(), phi1));
                let phi2 = if locked {
                    phi1 + mu + 0.4 * rng.sample::<f64, _>(StandardNormal)
                } else {
                    rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)
                };
                b2.push(Complex64::from_polar(1.0, phi2));
            }
            (
                ComplexAmplitudeSeries::from_data(b1, 1e-5),
                ComplexAmplitudeSeries::from_data(b2, 1e-5),
            )
        };
        let (b1, b2) = mk(&mut rng, true);
        let h = phase_lock_histogram(&b1, &b2, 60).unwrap();
        assert!(h.locked);
        assert!(h.fit_ok);
        assert!((wrap_angle(h.delta_phi_hat - mu)).abs() < 0.1);

        let (u1, u2) = mk(&mut rng, false);
        let h = phase_lock_histogram(&u1, &u2, 60).unwrap();
        assert!(!h.locked, "contrast {} vs noise {}", h.contrast, h.sampling_noise);
    }
}
