//! Optical-detuning spectrogram scans: simulate the pair at each detuning,
//! sum the two particles' position PSDs, and extract the dressed-mode ridges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::langevin::{simulate_reduced, Protocol, SimGrid, SimInputs};
use crate::sigproc::psd::{average_psds, local_maxima, welch_psd_real, PsdEstimate, WindowKind};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScanSettings {
    pub n_traj: usize,
    /// Record length per trajectory (s).
    pub duration: f64,
    pub seed: u64,
    /// Welch segment duration (s).
    pub segment_time: f64,
    pub store_every: usize,
    /// Map window (Hz).
    pub map_lo_hz: f64,
    pub map_hi_hz: f64,
    /// Half-width of the ridge-search band around the upper dressed
    /// sideband (Hz).
    pub ridge_halfwidth_hz: f64,
}

/// One row per optical detuning: the summed PSD restricted to the map window
/// plus the extracted ridge frequencies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrogramScan {
    /// Optical detunings (rad/s).
    pub delta_omega: Vec<f64>,
    /// Frequency grid of the map (Hz).
    pub freqs: Vec<f64>,
    /// Summed density rows, one per detuning.
    pub map: Vec<Vec<f64>>,
    /// Ridge frequencies per detuning (Hz), strongest first.
    pub ridges: Vec<Vec<f64>>,
    /// Gap between the two dominant ridges near the upper dressed sideband,
    /// when both are resolved (Hz).
    pub upper_gap_hz: Vec<Option<f64>>,
}

/// Run the scan. The integrator step honors the resolution guard for the
/// fastest frequency anywhere in the grid, so all rows share one time grid.
pub fn spectrogram_scan(
    template: &SimInputs,
    delta_omega_grid: &[f64],
    settings: &ScanSettings,
) -> Result<SpectrogramScan> {
    if delta_omega_grid.is_empty() {
        return Err(Error::Config("empty detuning grid".into()));
    }
    let fastest = delta_omega_grid
        .iter()
        .fold(template.omega[0].max(template.omega[1]), |m, d| m.max(d.abs()));
    let dt = 0.98 * 2.0 * std::f64::consts::PI / (50.0 * fastest);
    let grid = SimGrid { dt, store_every: settings.store_every };
    let dt_out = dt * settings.store_every as f64;
    let seg = ((settings.segment_time / dt_out).round() as usize).max(64);
    let omega_mean = 0.5 * (template.omega[0] + template.omega[1]);

    let mut scan = SpectrogramScan {
        delta_omega: delta_omega_grid.to_vec(),
        freqs: Vec::new(),
        map: Vec::new(),
        ridges: Vec::new(),
        upper_gap_hz: Vec::new(),
    };
    for (point, &dw) in delta_omega_grid.iter().enumerate() {
        let mut inputs = template.clone();
        inputs.delta_omega = dw;
        let protocol = Protocol::free_run(settings.duration);
        let per_traj: Vec<[PsdEstimate; 2]> = simulate_reduced(
            &inputs,
            &protocol,
            grid,
            settings.n_traj,
            // Decorrelate the scan points while staying reproducible.
            settings.seed.wrapping_add(point as u64 * 7919),
            |_, traj| {
                [
                    welch_psd_real(&traj.z[0], dt_out, seg, 0.5, WindowKind::Hann).unwrap(),
                    welch_psd_real(&traj.z[1], dt_out, seg, 0.5, WindowKind::Hann).unwrap(),
                ]
            },
        )?;
        let p1 = average_psds(&per_traj.iter().map(|p| p[0].clone()).collect::<Vec<_>>())?;
        let p2 = average_psds(&per_traj.iter().map(|p| p[1].clone()).collect::<Vec<_>>())?;
        let mut joint = p1.clone();
        for (a, b) in joint.density.iter_mut().zip(&p2.density) {
            *a += b;
        }
        let (lo, hi) = joint.band(settings.map_lo_hz, settings.map_hi_hz);
        if scan.freqs.is_empty() {
            scan.freqs = joint.freqs[lo..hi].to_vec();
        }
        scan.map.push(joint.density[lo..hi].to_vec());
        // Dressed doublet near the upper sideband.
        let center = (omega_mean + 0.5 * dw) / (2.0 * std::f64::consts::PI);
        let peaks = local_maxima(
            &joint,
            center - settings.ridge_halfwidth_hz,
            center + settings.ridge_halfwidth_hz,
            0.02,
        );
        scan.upper_gap_hz.push(if peaks.len() >= 2 {
            Some((peaks[0].0 - peaks[1].0).abs())
        } else {
            None
        });
        scan.ridges.push(peaks.into_iter().map(|(f, _)| f).collect());
    }
    Ok(scan)
}

/// Smallest resolved doublet gap across the scan (Hz).
pub fn minimum_gap(scan: &SpectrogramScan) -> Option<f64> {
    scan.upper_gap_hz.iter().flatten().cloned().fold(None, |m, g| match m {
        None => Some(g),
        Some(v) => Some(v.min(g)),
    })
}
