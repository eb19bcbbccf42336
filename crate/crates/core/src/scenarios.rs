//! End-to-end pipelines pairing the stochastic simulation with its analytic
//! counterparts: each returns plot-ready numbers plus the comparisons the
//! named experiments are judged on.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::correlations::{self, squeezing_gain, stationary_variances, SqueezingGain};
use crate::error::{Error, Result};
use crate::langevin::{
    run_quench, simulate_reduced, Protocol, SimGrid, SimInputs,
};
use crate::model::{ModeParams, Particle, ResonanceBranch};
use crate::numerics::{correlation, levenberg_marquardt, linear_regression, mean_and_se};
use crate::rwa::{lambda, quench_occupations};
use crate::sigproc::{
    average_g2, average_psds, breit_wigner_fit, demodulate, empirical_g2, filtered_g2_fit,
    minimum_gap, reconstruct_eigenmodes, spectrogram_scan, welch_psd_complex, welch_psd_real,
    ComplexAmplitudeSeries, ScanSettings, SpectrogramScan, WindowKind,
};

/// Mass of the nominal 105 nm silica particle (kg).
pub const DEFAULT_MASS: f64 = 8.97e-18;
/// Wavenumber of the 1064 nm trapping light (rad/m).
pub const DEFAULT_WAVENUMBER: f64 = 2.0 * std::f64::consts::PI / 1064e-9;

/// Monte-Carlo knobs shared by the scenario pipelines.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct McSettings {
    pub n_traj: usize,
    /// Record length per trajectory (s).
    pub duration: f64,
    /// Leading time span dropped before stationary averages (s).
    pub discard: f64,
    pub store_every: usize,
    pub seed: u64,
    pub mass: f64,
    pub wavenumber: f64,
}

impl McSettings {
    pub fn new(n_traj: usize, duration: f64, discard: f64, store_every: usize, seed: u64) -> Self {
        McSettings {
            n_traj,
            duration,
            discard,
            store_every,
            seed,
            mass: DEFAULT_MASS,
            wavenumber: DEFAULT_WAVENUMBER,
        }
    }
}

fn inputs_for(params: &ModeParams, mc: &McSettings) -> Result<SimInputs> {
    SimInputs::from_mode_params(params, mc.mass, mc.wavenumber)
}

/// Detuning-branch rotating-frame channels of one trajectory.
fn rotating_channels(
    traj: &crate::langevin::Trajectory,
    inputs: &SimInputs,
    dt_out: f64,
    delta: f64,
) -> Result<(ComplexAmplitudeSeries, ComplexAmplitudeSeries)> {
    let a1 = crate::langevin::to_complex_amplitudes(traj, inputs, dt_out, Particle::One);
    let a2 = crate::langevin::to_complex_amplitudes(traj, inputs, dt_out, Particle::Two);
    let f_half = delta / (4.0 * std::f64::consts::PI);
    Ok((demodulate(&a1, f_half, -1)?, demodulate(&a2, f_half, 1)?))
}

// ---------------------------------------------------------------------------
// Two-mode squashing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SqueezeResult {
    /// Analytic variances in units of the mean thermal occupation.
    pub analytic_z_plus: f64,
    pub analytic_z_minus: f64,
    /// Monte-Carlo variances with standard errors, same units.
    pub mc_z_plus: f64,
    pub mc_z_minus: f64,
    pub se_z_plus: f64,
    pub se_z_minus: f64,
    pub gain: SqueezingGain,
    pub r_max: f64,
    /// Squashing below the thermal level (dB), from the Monte Carlo.
    pub squashing_db: f64,
    pub squashing_db_analytic: f64,
    /// The printed variance-sum formula agreed with quadrature.
    pub closed_form_consistent: bool,
}

/// Stationary two-mode squashing: simulate, demodulate at half the optical
/// detuning, and compare collective quadrature variances with the analytic
/// stationary values.
pub fn run_squeeze(params: &ModeParams, mc: &McSettings) -> Result<SqueezeResult> {
    let inputs = inputs_for(params, mc)?;
    let grid = SimGrid::auto(&inputs, mc.store_every);
    let dt_out = grid.dt * grid.store_every as f64;
    let delta = ResonanceBranch::Detuning.effective_detuning(params);
    let skip = (mc.discard / dt_out) as usize;
    let per_traj: Vec<Result<[f64; 2]>> = simulate_reduced(
        &inputs,
        &Protocol::free_run(mc.duration),
        grid,
        mc.n_traj,
        mc.seed,
        |_, traj| {
            let (b1, b2) = rotating_channels(traj, &inputs, dt_out, delta)?;
            let n = b1.len();
            let mut vp = 0.0;
            let mut vm = 0.0;
            for k in skip..n {
                let plus = b1.data[k].re + b2.data[k].re;
                let minus = b1.data[k].re - b2.data[k].re;
                vp += plus * plus;
                vm += minus * minus;
            }
            let count = (n - skip) as f64;
            // (z1 +- z2)^2 / 2 matches the occupation-unit convention.
            Ok([0.5 * vp / count, 0.5 * vm / count])
        },
    )?;
    let per_traj = per_traj.into_iter().collect::<Result<Vec<_>>>()?;
    let n_bar = 0.5 * (params.n_1 + params.n_2);
    let (vp, se_p) = mean_and_se(&per_traj.iter().map(|v| v[0] / n_bar).collect::<Vec<_>>());
    let (vm, se_m) = mean_and_se(&per_traj.iter().map(|v| v[1] / n_bar).collect::<Vec<_>>());
    let analytic = stationary_variances(params)?;
    let gain = squeezing_gain(vp.min(1.0 - 1e-12), vm.max(1.0 + 1e-12))?;
    Ok(SqueezeResult {
        analytic_z_plus: analytic.z_plus / n_bar,
        analytic_z_minus: analytic.z_minus / n_bar,
        mc_z_plus: vp,
        mc_z_minus: vm,
        se_z_plus: se_p,
        se_z_minus: se_m,
        gain,
        r_max: correlations::r_max(params),
        squashing_db: 10.0 * vp.log10(),
        squashing_db_analytic: 10.0 * (analytic.z_plus / n_bar).log10(),
        closed_form_consistent: analytic.consistent,
    })
}

// ---------------------------------------------------------------------------
// Avoided crossing scan
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetuningScanResult {
    pub scan: SpectrogramScan,
    /// Splitting predicted by the eigen solution at each detuning (Hz).
    pub predicted_gap_hz: Vec<f64>,
    pub min_gap_hz: Option<f64>,
    /// g/2pi, the expected minimum gap (Hz).
    pub oracle_min_gap_hz: f64,
}

pub fn run_detuning_scan(
    params: &ModeParams,
    delta_omega_grid: &[f64],
    mc: &McSettings,
    segment_time: f64,
) -> Result<DetuningScanResult> {
    let inputs = inputs_for(params, mc)?;
    let span = 2.0 * params.g / (2.0 * std::f64::consts::PI)
        + delta_omega_grid
            .iter()
            .map(|d| (d - params.delta_mech()).abs())
            .fold(0.0, f64::max)
            / (2.0 * std::f64::consts::PI);
    let settings = ScanSettings {
        n_traj: mc.n_traj,
        duration: mc.duration,
        seed: mc.seed,
        segment_time,
        store_every: mc.store_every,
        map_lo_hz: params.omega_1 / (2.0 * std::f64::consts::PI) - span - 2e3,
        map_hi_hz: params.omega_2 / (2.0 * std::f64::consts::PI) + span + 2e3,
        ridge_halfwidth_hz: span.max(2.0 * params.g / (2.0 * std::f64::consts::PI)),
    };
    let scan = spectrogram_scan(&inputs, delta_omega_grid, &settings)?;
    let predicted_gap_hz = delta_omega_grid
        .iter()
        .map(|&dw| {
            let mut p = params.clone();
            p.delta_omega = dw;
            lambda(&p, ResonanceBranch::Detuning).re / (2.0 * std::f64::consts::PI)
        })
        .collect();
    let min_gap_hz = minimum_gap(&scan);
    Ok(DetuningScanResult {
        scan,
        predicted_gap_hz,
        min_gap_hz,
        oracle_min_gap_hz: params.g / (2.0 * std::f64::consts::PI),
    })
}

// ---------------------------------------------------------------------------
// Quench (coherent energy exchange)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuenchCompareResult {
    pub t: Vec<f64>,
    /// Ensemble means in units of the respective bath occupations.
    pub mc_n1: Vec<f64>,
    pub mc_n2: Vec<f64>,
    pub se_n1: Vec<f64>,
    pub se_n2: Vec<f64>,
    /// Times of the thinned analytic comparison grid (s); these are the
    /// full-grid samples at indices k * compare_stride.
    pub compare_t: Vec<f64>,
    pub compare_stride: usize,
    pub analytic_n1: Vec<f64>,
    pub analytic_n2: Vec<f64>,
    /// Exchange frequency fitted from the ensemble mean (Hz) and its
    /// rotating-wave prediction Re(Lambda)/2pi.
    pub exchange_freq_fit_hz: f64,
    pub exchange_freq_predicted_hz: f64,
    /// Pearson correlation between the detrended occupation oscillations.
    pub antiphase_correlation: f64,
    /// Largest |mc - analytic| / se over the compared points.
    pub max_sigma_deviation: f64,
}

/// Moving-average trend with the given window (samples); returns residual.
fn detrend_moving_average(y: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1).min(y.len());
    let mut out = Vec::with_capacity(y.len());
    for i in 0..y.len() {
        let lo = i.saturating_sub(w / 2);
        let hi = (i + w / 2 + 1).min(y.len());
        let mean = y[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        out.push(y[i] - mean);
    }
    out
}

fn fit_oscillation_freq(t: &[f64], residual: &[f64], omega0: f64, kappa0: f64) -> Result<f64> {
    let amp0 = residual.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
    let model = |p: &[f64], out: &mut [f64]| {
        for (i, (&ti, &y)) in t.iter().zip(residual).enumerate() {
            out[i] = p[0] * (-p[1].abs() * ti).exp() * (p[2] * ti - p[3]).cos() - y;
        }
    };
    let fit = levenberg_marquardt(model, &[amp0, kappa0, omega0, 0.0], t.len(), 400)?;
    Ok(fit.params[2].abs())
}

pub fn run_quench_compare(
    params: &ModeParams,
    gamma_fb: f64,
    t_cool: f64,
    t_free: f64,
    mc: &McSettings,
) -> Result<QuenchCompareResult> {
    let inputs = inputs_for(params, mc)?;
    let grid = SimGrid::auto(&inputs, mc.store_every);
    let ens = run_quench(&inputs, gamma_fb, t_cool, t_free, grid, mc.n_traj, mc.seed)?;
    let n1_init = params.n_1 * params.gamma / (params.gamma + gamma_fb);
    let n2_init = params.n_2;
    // Analytic overlay on a thinned grid (each point is a fresh quadrature).
    let stride = (ens.t.len() / 120).max(1);
    let mut analytic_n1 = Vec::new();
    let mut analytic_n2 = Vec::new();
    let mut max_sigma: f64 = 0.0;
    let mut t_cmp = Vec::new();
    for (i, &t) in ens.t.iter().enumerate().step_by(stride) {
        let (a1, a2, _) =
            quench_occupations(params, ResonanceBranch::Detuning, n1_init, n2_init, t)?;
        analytic_n1.push(a1 / params.n_1);
        analytic_n2.push(a2 / params.n_2);
        t_cmp.push(t);
        max_sigma = max_sigma
            .max((ens.n_1[i] - a1).abs() / ens.se_1[i].max(1e-300))
            .max((ens.n_2[i] - a2).abs() / ens.se_2[i].max(1e-300));
    }
    let lam = lambda(params, ResonanceBranch::Detuning);
    let dt_out = ens.t[1] - ens.t[0];
    let period_samples = (2.0 * std::f64::consts::PI / lam.re.abs() / dt_out).round() as usize;
    // Frequency fit and antiphase check over the window where the
    // oscillations are alive (a few damping times).
    let fit_span = ((6.0 / params.gamma) / dt_out) as usize;
    let span = fit_span.min(ens.t.len());
    let r1 = detrend_moving_average(&ens.n_1[..span], period_samples);
    let r2 = detrend_moving_average(&ens.n_2[..span], period_samples);
    let freq =
        fit_oscillation_freq(&ens.t[..span], &r1, lam.re, params.gamma).unwrap_or(f64::NAN);
    Ok(QuenchCompareResult {
        t: ens.t.clone(),
        mc_n1: ens.n_1.iter().map(|v| v / params.n_1).collect(),
        mc_n2: ens.n_2.iter().map(|v| v / params.n_2).collect(),
        se_n1: ens.se_1.iter().map(|v| v / params.n_1).collect(),
        se_n2: ens.se_2.iter().map(|v| v / params.n_2).collect(),
        compare_t: t_cmp,
        compare_stride: stride,
        analytic_n1,
        analytic_n2,
        exchange_freq_fit_hz: freq / (2.0 * std::f64::consts::PI),
        exchange_freq_predicted_hz: lam.re / (2.0 * std::f64::consts::PI),
        antiphase_correlation: correlation(&r1, &r2),
        max_sigma_deviation: max_sigma,
    })
}

// ---------------------------------------------------------------------------
// Complex eigenfrequency circle (distance scan)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceScanPoint {
    pub kd: f64,
    /// Fitted mode centers and widths (Hz).
    pub f_plus_hz: f64,
    pub f_minus_hz: f64,
    pub fwhm_plus_hz: f64,
    pub fwhm_minus_hz: f64,
    /// Measured Re and -2 Im of the eigenfrequency difference (Hz):
    /// f_+ - f_- and the linewidth half-difference (G_- - G_+)/2.
    pub re_meas_hz: f64,
    pub im_meas_hz: f64,
    pub re_target_hz: f64,
    pub im_target_hz: f64,
    pub phase_locked: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceScanResult {
    pub points: Vec<DistanceScanPoint>,
    /// Analytic locus g e^{-i kd} at the scanned distances (rad/s).
    pub locus: Vec<Complex64>,
    /// Worst absolute errors across the scan, in units of g.
    pub max_re_err_over_g: f64,
    pub max_im_err_over_g: f64,
}

pub fn run_distance_scan(
    params_template: &ModeParams,
    kd_values: &[f64],
    mc: &McSettings,
    segment_time: f64,
) -> Result<DistanceScanResult> {
    let g_hz = params_template.g / (2.0 * std::f64::consts::PI);
    let mut points = Vec::with_capacity(kd_values.len());
    let mut max_re: f64 = 0.0;
    let mut max_im: f64 = 0.0;
    for (i, &kd) in kd_values.iter().enumerate() {
        let mut params = params_template.clone();
        params.kd = kd;
        let inputs = inputs_for(&params, mc)?;
        let grid = SimGrid::auto(&inputs, mc.store_every);
        let dt_out = grid.dt * grid.store_every as f64;
        let delta = ResonanceBranch::Detuning.effective_detuning(&params);
        let seg = ((segment_time / dt_out).round() as usize).max(64);
        let per_traj: Vec<Result<([crate::sigproc::PsdEstimate; 2], bool)>> = simulate_reduced(
            &inputs,
            &Protocol::free_run(mc.duration),
            grid,
            mc.n_traj,
            mc.seed.wrapping_add(i as u64 * 104729),
            |_, traj| {
                let (b1, b2) = rotating_channels(traj, &inputs, dt_out, delta)?;
                let rec = reconstruct_eigenmodes(&b1, &b2, kd)?;
                let p_plus = welch_psd_complex(&rec.plus.data, dt_out, seg, 0.5, WindowKind::Hann)?;
                let p_minus =
                    welch_psd_complex(&rec.minus.data, dt_out, seg, 0.5, WindowKind::Hann)?;
                Ok(([p_plus, p_minus], rec.phase_locked))
            },
        )?;
        let per_traj = per_traj.into_iter().collect::<Result<Vec<_>>>()?;
        let locked = per_traj.iter().filter(|(_, l)| *l).count() * 2 >= per_traj.len();
        let psd_plus = average_psds(&per_traj.iter().map(|(p, _)| p[0].clone()).collect::<Vec<_>>())?;
        let psd_minus =
            average_psds(&per_traj.iter().map(|(p, _)| p[1].clone()).collect::<Vec<_>>())?;
        let band = 3.0 * (params.gamma + params.g) / (2.0 * std::f64::consts::PI);
        let fit_plus = breit_wigner_fit(&psd_plus, -band, band)?;
        let fit_minus = breit_wigner_fit(&psd_minus, -band, band)?;
        let re_meas = fit_plus.f0_hz - fit_minus.f0_hz;
        let im_meas = 0.5 * (fit_minus.fwhm_hz - fit_plus.fwhm_hz);
        let re_target = g_hz * kd.cos();
        let im_target = g_hz * kd.sin();
        max_re = max_re.max((re_meas - re_target).abs() / g_hz);
        max_im = max_im.max((im_meas - im_target).abs() / g_hz);
        points.push(DistanceScanPoint {
            kd,
            f_plus_hz: fit_plus.f0_hz,
            f_minus_hz: fit_minus.f0_hz,
            fwhm_plus_hz: fit_plus.fwhm_hz,
            fwhm_minus_hz: fit_minus.fwhm_hz,
            re_meas_hz: re_meas,
            im_meas_hz: im_meas,
            re_target_hz: re_target,
            im_target_hz: im_target,
            phase_locked: locked,
        });
    }
    let locus = crate::rwa::eigenfrequency_locus(params_template, kd_values)?;
    Ok(DistanceScanResult { points, locus, max_re_err_over_g: max_re, max_im_err_over_g: max_im })
}

// ---------------------------------------------------------------------------
// kd estimation from empirical g2
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KdEstimatePoint {
    pub kd_true: f64,
    pub kd_est: f64,
    pub b_bar_prime: f64,
    pub b_prime_plus: f64,
    pub b_prime_minus: f64,
    pub predicted_b_bar_prime: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KdEstimateResult {
    pub points: Vec<KdEstimatePoint>,
    /// Regression slope of measured b_bar_prime against true kd.
    pub slope: f64,
    pub slope_target: f64,
    pub max_kd_error: f64,
}

pub fn run_kd_estimate(
    params_template: &ModeParams,
    kd_values: &[f64],
    mc: &McSettings,
    tau_max: f64,
) -> Result<KdEstimateResult> {
    let delta = ResonanceBranch::Detuning.effective_detuning(params_template);
    if delta.abs() <= params_template.g {
        return Err(Error::Config(
            "kd estimation requires |delta| > g (spectral separability)".into(),
        ));
    }
    let mut points = Vec::with_capacity(kd_values.len());
    let mut max_err: f64 = 0.0;
    for (i, &kd) in kd_values.iter().enumerate() {
        let mut params = params_template.clone();
        params.kd = kd;
        let inputs = inputs_for(&params, mc)?;
        let grid = SimGrid::auto(&inputs, mc.store_every);
        let dt_out = grid.dt * grid.store_every as f64;
        let skip = (mc.discard / dt_out) as usize;
        let per_traj: Vec<Result<crate::sigproc::EmpiricalG2>> = simulate_reduced(
            &inputs,
            &Protocol::free_run(mc.duration),
            grid,
            mc.n_traj,
            mc.seed.wrapping_add(i as u64 * 2069),
            |_, traj| {
                let a1 = crate::langevin::to_complex_amplitudes(traj, &inputs, dt_out, Particle::One);
                let a2 = crate::langevin::to_complex_amplitudes(traj, &inputs, dt_out, Particle::Two);
                let a1 = ComplexAmplitudeSeries::from_data(a1.data[skip..].to_vec(), dt_out);
                let a2 = ComplexAmplitudeSeries::from_data(a2.data[skip..].to_vec(), dt_out);
                empirical_g2(&a1, &a2, tau_max)
            },
        )?;
        let per_traj = per_traj.into_iter().collect::<Result<Vec<_>>>()?;
        let mean_g2 = average_g2(&per_traj)?;
        let fit = filtered_g2_fit(&mean_g2, delta, params.gamma)?;
        let kd_est = correlations::kd_from_phase(
            fit.b_bar_prime,
            ResonanceBranch::Detuning,
            delta.signum(),
        );
        let predicted = correlations::gbar_prime_wrapped(&params, ResonanceBranch::Detuning)?;
        let err = (kd_est - kd.rem_euclid(std::f64::consts::PI)).abs();
        max_err = max_err.max(err);
        points.push(KdEstimatePoint {
            kd_true: kd,
            kd_est,
            b_bar_prime: fit.b_bar_prime,
            b_prime_plus: fit.b_prime_plus,
            b_prime_minus: fit.b_prime_minus,
            predicted_b_bar_prime: predicted,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.kd_true).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.b_bar_prime).collect();
    let (_, slope) = linear_regression(&xs, &ys);
    Ok(KdEstimateResult {
        points,
        slope,
        slope_target: -2.0 * delta.signum(),
        max_kd_error: max_err,
    })
}

// ---------------------------------------------------------------------------
// Frequency pinning under modulation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PinningResult {
    /// Fitted peak frequencies (Hz) per particle: uncoupled reference,
    /// modulated off-resonant interaction, static interaction.
    pub f_ref_hz: [f64; 2],
    pub f_mod_hz: [f64; 2],
    pub f_static_hz: [f64; 2],
    pub mod_shift_hz: [f64; 2],
    pub static_shift_hz: [f64; 2],
    /// gamma/10 in Hz, the pinning threshold.
    pub threshold_hz: f64,
}

pub fn run_pinning(
    params: &ModeParams,
    delta_omega_mod: f64,
    mc: &McSettings,
    segment_time: f64,
) -> Result<PinningResult> {
    let fit_peaks = |params: &ModeParams, seed: u64| -> Result<[f64; 2]> {
        let inputs = inputs_for(params, mc)?;
        let grid = SimGrid::auto(&inputs, mc.store_every);
        let dt_out = grid.dt * grid.store_every as f64;
        let seg = ((segment_time / dt_out).round() as usize).max(64);
        let per_traj: Vec<[crate::sigproc::PsdEstimate; 2]> = simulate_reduced(
            &inputs,
            &Protocol::free_run(mc.duration),
            grid,
            mc.n_traj,
            seed,
            |_, traj| {
                [
                    welch_psd_real(&traj.z[0], dt_out, seg, 0.5, WindowKind::Hann).unwrap(),
                    welch_psd_real(&traj.z[1], dt_out, seg, 0.5, WindowKind::Hann).unwrap(),
                ]
            },
        )?;
        let mut out = [0.0; 2];
        for j in 0..2 {
            let psd = average_psds(&per_traj.iter().map(|p| p[j].clone()).collect::<Vec<_>>())?;
            let f_j = params.omega(if j == 0 { Particle::One } else { Particle::Two })
                / (2.0 * std::f64::consts::PI);
            let half_band = 1.8e3 + params.gamma / (2.0 * std::f64::consts::PI);
            let fit = breit_wigner_fit(&psd, f_j - half_band, f_j + half_band)?;
            out[j] = fit.f0_hz;
        }
        Ok(out)
    };
    // Uncoupled reference.
    let mut p_ref = params.clone();
    p_ref.g = 0.0;
    p_ref.delta_omega = 0.0;
    let f_ref = fit_peaks(&p_ref, mc.seed)?;
    // Modulated, off-resonant for every branch.
    let mut p_mod = params.clone();
    p_mod.delta_omega = delta_omega_mod;
    let f_mod = fit_peaks(&p_mod, mc.seed)?;
    // Static interaction.
    let mut p_static = params.clone();
    p_static.delta_omega = 0.0;
    let f_static = fit_peaks(&p_static, mc.seed)?;
    Ok(PinningResult {
        f_ref_hz: f_ref,
        f_mod_hz: f_mod,
        f_static_hz: f_static,
        mod_shift_hz: [f_mod[0] - f_ref[0], f_mod[1] - f_ref[1]],
        static_shift_hz: [f_static[0] - f_ref[0], f_static[1] - f_ref[1]],
        threshold_hz: params.gamma / 10.0 / (2.0 * std::f64::consts::PI),
    })
}

// ---------------------------------------------------------------------------
// Single-mode squeezing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmsResult {
    /// Extremal quadrature variances of the driven particle in units of its
    /// thermal occupation, Monte Carlo and analytic.
    pub mc_var_max: f64,
    pub mc_var_min: f64,
    pub analytic_var_max: f64,
    pub analytic_var_min: f64,
    /// Averaged two-sided PSD of the driven rotating-frame channel.
    pub psd: crate::sigproc::PsdEstimate,
}

pub fn run_sms(
    params: &ModeParams,
    driven: Particle,
    mc: &McSettings,
    segment_time: f64,
) -> Result<SmsResult> {
    let branch = ResonanceBranch::SingleMode(driven);
    let inputs = inputs_for(params, mc)?;
    let grid = SimGrid::auto(&inputs, mc.store_every);
    let dt_out = grid.dt * grid.store_every as f64;
    let delta = branch.effective_detuning(params);
    let skip = (mc.discard / dt_out) as usize;
    let seg = ((segment_time / dt_out).round() as usize).max(64);
    let per_traj: Vec<Result<([f64; 3], crate::sigproc::PsdEstimate)>> = simulate_reduced(
        &inputs,
        &Protocol::free_run(mc.duration),
        grid,
        mc.n_traj,
        mc.seed,
        |_, traj| {
            let a = crate::langevin::to_complex_amplitudes(traj, &inputs, dt_out, driven);
            // b = a e^{+i delta t / 2} on the driven channel.
            let b = demodulate(&a, delta / (4.0 * std::f64::consts::PI), 1)?;
            let (mut xx, mut yy, mut xy) = (0.0, 0.0, 0.0);
            for v in &b.data[skip..] {
                xx += v.re * v.re;
                yy += v.im * v.im;
                xy += v.re * v.im;
            }
            let count = (b.data.len() - skip) as f64;
            let psd =
                welch_psd_complex(&b.data[skip..], dt_out, seg, 0.5, WindowKind::Hann)?;
            Ok(([xx / count, yy / count, xy / count], psd))
        },
    )?;
    let per_traj = per_traj.into_iter().collect::<Result<Vec<_>>>()?;
    let psd = average_psds(&per_traj.iter().map(|(_, p)| p.clone()).collect::<Vec<_>>())?;
    let n = per_traj.len() as f64;
    let (mut xx, mut yy, mut xy) = (0.0, 0.0, 0.0);
    for (v, _) in &per_traj {
        xx += v[0] / n;
        yy += v[1] / n;
        xy += v[2] / n;
    }
    // Extremal variances of the quadrature ellipse.
    let mean = 0.5 * (xx + yy);
    let radius = (0.25 * (xx - yy).powi(2) + xy * xy).sqrt();
    let n_th = params.occupation(driven);
    // Analytic: <|b|^2> and <b b> from the single-mode branch correlators.
    let s = correlations::g1(params, branch, Particle::One, Particle::One, 0.0)?.re;
    let c = correlations::g1(params, branch, Particle::Two, Particle::One, 0.0)?;
    let var_max = 0.5 * (s + c.norm());
    let var_min = 0.5 * (s - c.norm());
    Ok(SmsResult {
        mc_var_max: (mean + radius) / n_th,
        mc_var_min: (mean - radius) / n_th,
        analytic_var_max: var_max / n_th,
        analytic_var_min: var_min / n_th,
        psd,
    })
}
