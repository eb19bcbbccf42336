//! Welch power spectral density estimation: averaged modified periodograms,
//! one-sided for real records and two-sided for complex rotating-frame
//! records. Defaults follow the usual lab practice, Hann window with 50%
//! overlap, and the normalization preserves Parseval's identity.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowKind {
    Hann,
    Rect,
}

impl WindowKind {
    fn values(self, n: usize) -> Vec<f64> {
        match self {
            WindowKind::Rect => vec![1.0; n],
            WindowKind::Hann => (0..n)
                .map(|k| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()))
                .collect(),
        }
    }
}

/// A spectral density estimate on a uniform frequency grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsdEstimate {
    /// Frequency grid (Hz); ascending. Two-sided estimates span negative
    /// frequencies.
    pub freqs: Vec<f64>,
    /// Density in (input units)^2 / Hz.
    pub density: Vec<f64>,
    pub segments: usize,
    pub window: WindowKind,
    pub one_sided: bool,
    /// Grid spacing (Hz).
    pub df: f64,
}

impl PsdEstimate {
    /// Total integrated power; equals the time-domain variance within the
    /// windowing bias.
    pub fn integrated_power(&self) -> f64 {
        let mut sum: f64 = self.density.iter().sum();
        if self.one_sided {
            // The half-weight end bins were not doubled.
            sum -= 0.5 * (self.density[0] + self.density[self.density.len() - 1]);
        }
        sum * self.df
    }

    pub fn band(&self, f_lo: f64, f_hi: f64) -> (usize, usize) {
        let lo = self.freqs.partition_point(|&f| f < f_lo);
        let hi = self.freqs.partition_point(|&f| f <= f_hi);
        (lo, hi)
    }
}

fn segment_starts(n: usize, seg: usize, hop: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut s = 0;
    while s + seg <= n {
        out.push(s);
        s += hop;
    }
    out
}

fn check_args(n: usize, segment_length: usize, overlap: f64) -> Result<usize> {
    if segment_length < 8 || segment_length > n {
        return Err(Error::Config(format!(
            "segment length {segment_length} incompatible with record length {n}"
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::Config(format!("overlap fraction {overlap} out of [0, 1)")));
    }
    let hop = ((segment_length as f64) * (1.0 - overlap)).round().max(1.0) as usize;
    Ok(hop)
}

/// One-sided Welch PSD of a real record sampled at spacing `dt`.
pub fn welch_psd_real(
    x: &[f64],
    dt: f64,
    segment_length: usize,
    overlap: f64,
    window: WindowKind,
) -> Result<PsdEstimate> {
    let hop = check_args(x.len(), segment_length, overlap)?;
    let seg = segment_length;
    let w = window.values(seg);
    let u: f64 = w.iter().map(|v| v * v).sum();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(seg);
    let n_out = seg / 2 + 1;
    let mut acc = vec![0.0; n_out];
    let starts = segment_starts(x.len(), seg, hop);
    let mut buf = vec![Complex64::new(0.0, 0.0); seg];
    for &s in &starts {
        let chunk = &x[s..s + seg];
        let mean = chunk.iter().sum::<f64>() / seg as f64;
        for (b, (&v, &wv)) in buf.iter_mut().zip(chunk.iter().zip(&w)) {
            *b = Complex64::new((v - mean) * wv, 0.0);
        }
        fft.process(&mut buf);
        for (k, a) in acc.iter_mut().enumerate() {
            let mut p = buf[k].norm_sqr() * dt / u;
            let nyquist_bin = seg % 2 == 0 && k == seg / 2;
            if k != 0 && !nyquist_bin {
                p *= 2.0;
            }
            *a += p;
        }
    }
    let n_seg = starts.len();
    let df = 1.0 / (seg as f64 * dt);
    Ok(PsdEstimate {
        freqs: (0..n_out).map(|k| k as f64 * df).collect(),
        density: acc.iter().map(|v| v / n_seg as f64).collect(),
        segments: n_seg,
        window,
        one_sided: true,
        df,
    })
}

/// Two-sided Welch PSD of a complex record; the grid is shifted so negative
/// frequencies come first.
pub fn welch_psd_complex(
    x: &[Complex64],
    dt: f64,
    segment_length: usize,
    overlap: f64,
    window: WindowKind,
) -> Result<PsdEstimate> {
    let hop = check_args(x.len(), segment_length, overlap)?;
    let seg = segment_length;
    let w = window.values(seg);
    let u: f64 = w.iter().map(|v| v * v).sum();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(seg);
    let mut acc = vec![0.0; seg];
    let starts = segment_starts(x.len(), seg, hop);
    let mut buf = vec![Complex64::new(0.0, 0.0); seg];
    for &s in &starts {
        let chunk = &x[s..s + seg];
        let mean = chunk.iter().sum::<Complex64>() / seg as f64;
        for (b, (&v, &wv)) in buf.iter_mut().zip(chunk.iter().zip(&w)) {
            *b = (v - mean) * wv;
        }
        fft.process(&mut buf);
        for (k, a) in acc.iter_mut().enumerate() {
            *a += buf[k].norm_sqr() * dt / u;
        }
    }
    let n_seg = starts.len();
    let df = 1.0 / (seg as f64 * dt);
    // fftshift: bins seg/2..seg are the negative frequencies.
    let half = seg.div_ceil(2);
    let mut freqs = Vec::with_capacity(seg);
    let mut density = Vec::with_capacity(seg);
    for k in half..seg {
        freqs.push((k as f64 - seg as f64) * df);
        density.push(acc[k] / n_seg as f64);
    }
    for (k, a) in acc.iter().enumerate().take(half) {
        freqs.push(k as f64 * df);
        density.push(a / n_seg as f64);
    }
    Ok(PsdEstimate {
        freqs,
        density,
        segments: n_seg,
        window,
        one_sided: false,
        df,
    })
}

/// Average several estimates taken on identical grids.
pub fn average_psds(estimates: &[PsdEstimate]) -> Result<PsdEstimate> {
    let first = estimates.first().ok_or_else(|| Error::Config("no estimates".into()))?;
    let mut out = first.clone();
    for e in &estimates[1..] {
        if e.freqs.len() != first.freqs.len() || (e.df - first.df).abs() > 1e-9 * first.df {
            return Err(Error::Config("PSD grids differ".into()));
        }
        for (a, v) in out.density.iter_mut().zip(&e.density) {
            *a += v;
        }
        out.segments += e.segments;
    }
    let n = estimates.len() as f64;
    for a in out.density.iter_mut() {
        *a /= n;
    }
    Ok(out)
}

/// Highest local maximum within [f_lo, f_hi], refined by a parabola through
/// the peak bin and its neighbors. Returns (frequency, height).
pub fn parabolic_peak(psd: &PsdEstimate, f_lo: f64, f_hi: f64) -> Option<(f64, f64)> {
    let (lo, hi) = psd.band(f_lo, f_hi);
    if hi - lo < 3 {
        return None;
    }
    let mut best = lo;
    for k in lo..hi {
        if psd.density[k] > psd.density[best] {
            best = k;
        }
    }
    if best == 0 || best + 1 >= psd.density.len() {
        return Some((psd.freqs[best], psd.density[best]));
    }
    let (ym, y0, yp) = (psd.density[best - 1], psd.density[best], psd.density[best + 1]);
    let denom = ym - 2.0 * y0 + yp;
    let shift = if denom.abs() > 0.0 { 0.5 * (ym - yp) / denom } else { 0.0 };
    let shift = shift.clamp(-0.5, 0.5);
    Some((psd.freqs[best] + shift * psd.df, y0 - 0.25 * (ym - yp) * shift))
}

/// All local maxima in a band, sorted by height (descending), each refined
/// parabolically. `min_rel_height` discards bumps below that fraction of the
/// tallest peak in the band.
pub fn local_maxima(
    psd: &PsdEstimate,
    f_lo: f64,
    f_hi: f64,
    min_rel_height: f64,
) -> Vec<(f64, f64)> {
    let (lo, hi) = psd.band(f_lo, f_hi);
    if hi - lo < 3 {
        return Vec::new();
    }
    let mut peaks = Vec::new();
    for k in (lo.max(1))..(hi.min(psd.density.len() - 1)) {
        if psd.density[k] > psd.density[k - 1] && psd.density[k] >= psd.density[k + 1] {
            let (ym, y0, yp) = (psd.density[k - 1], psd.density[k], psd.density[k + 1]);
            let denom = ym - 2.0 * y0 + yp;
            let shift =
                if denom.abs() > 0.0 { (0.5 * (ym - yp) / denom).clamp(-0.5, 0.5) } else { 0.0 };
            peaks.push((psd.freqs[k] + shift * psd.df, y0 - 0.25 * (ym - yp) * shift));
        }
    }
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    if let Some(&(_, top)) = peaks.first() {
        peaks.retain(|&(_, h)| h >= min_rel_height * top);
    }
    peaks
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use rand_distr::StandardNormal;
    use std::f64::consts::PI;

    #[test]
    fn white_noise_psd_is_flat_at_the_expected_level() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let sigma = 1.7;
        let dt = 1e-4;
        let n = 1 << 17;
        let x: Vec<f64> = (0..n).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect();
        let psd = welch_psd_real(&x, dt, 1024, 0.5, WindowKind::Hann).unwrap();
        // Two-sided density sigma^2 dt folded one-sided: 2 sigma^2 dt, i.e.
        // sigma^2 / f_nyquist.
        let f_nyq = 0.5 / dt;
        let expected = sigma * sigma / f_nyq;
        let (lo, hi) = psd.band(0.05 * f_nyq, 0.95 * f_nyq);
        let mean = psd.density[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        assert!(
            (mean - expected).abs() < 0.05 * expected,
            "flat level {mean:e} vs {expected:e}"
        );
        // Parseval within 2%.
        let var = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let power = psd.integrated_power();
        assert!(
            (power - var).abs() < 0.02 * var,
            "Parseval violated: {power:e} vs {var:e}"
        );
    }

    #[test]
    fn pure_tone_lands_in_the_right_bin() {
        let dt = 1e-4;
        let n = 1 << 14;
        let f0 = 731.0;
        let x: Vec<f64> = (0..n).map(|k| (2.0 * PI * f0 * k as f64 * dt).sin()).collect();
        let psd = welch_psd_real(&x, dt, 2048, 0.5, WindowKind::Hann).unwrap();
        let (fp, _) = parabolic_peak(&psd, 100.0, 3000.0).unwrap();
        assert!((fp - f0).abs() <= psd.df, "peak at {fp}, expected {f0}");
    }

    #[test]
    fn complex_psd_separates_positive_and_negative_tones() {
        let dt = 1e-3;
        let n = 1 << 13;
        let x: Vec<Complex64> = (0..n)
            .map(|k| {
                Complex64::from_polar(1.0, 2.0 * PI * 110.0 * k as f64 * dt)
                    + Complex64::from_polar(0.5, -2.0 * PI * 57.0 * k as f64 * dt)
            })
            .collect();
        let psd = welch_psd_complex(&x, dt, 1024, 0.5, WindowKind::Hann).unwrap();
        let (fp, hp) = parabolic_peak(&psd, 50.0, 400.0).unwrap();
        let (fm, hm) = parabolic_peak(&psd, -400.0, -20.0).unwrap();
        assert!((fp - 110.0).abs() <= psd.df);
        assert!((fm + 57.0).abs() <= psd.df);
        assert!(hp > 2.0 * hm);
        // Two-sided Parseval.
        let var = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        let power = psd.integrated_power();
        assert!((power - var).abs() < 0.02 * var);
    }

    #[test]
    fn bad_segmenting_is_rejected() {
        assert!(welch_psd_real(&[0.0; 100], 1.0, 200, 0.5, WindowKind::Hann).is_err());
        assert!(welch_psd_real(&[0.0; 100], 1.0, 50, 1.2, WindowKind::Hann).is_err());
    }
}
