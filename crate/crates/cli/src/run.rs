//! Scenario dispatch: simulate, analyze, compare with the analytic layer,
//! and emit plot-ready files plus a summary with provenance-tagged numbers.

use std::path::Path;

use fblab_core::correlations::{self, CorrelationValues};
use fblab_core::model::{Particle, ResonanceBranch};
use fblab_core::scenarios::{self, McSettings};
use fblab_core::sigproc;

use crate::config::{Resolved, Scenario};
use crate::output::{write_csv, write_json, write_summary, Metric};

pub enum RunError {
    Numerical(String),
    Io(String),
}

impl From<fblab_core::Error> for RunError {
    fn from(e: fblab_core::Error) -> Self {
        RunError::Numerical(e.to_string())
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

fn mc_settings(r: &Resolved) -> McSettings {
    McSettings {
        n_traj: r.simulation.n_traj,
        duration: r.simulation.duration_s,
        discard: r.simulation.discard_s,
        store_every: r.simulation.store_every,
        seed: r.simulation.seed,
        mass: r.simulation.mass_kg,
        wavenumber: 2.0 * std::f64::consts::PI / r.simulation.wavelength_m,
    }
}

pub fn run(scenario: Scenario, resolved: &Resolved, dir: &Path) -> Result<(), RunError> {
    std::fs::create_dir_all(dir)?;
    let mc = mc_settings(resolved);
    let params = &resolved.params;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut metrics: Vec<Metric> = Vec::new();
    match scenario {
        Scenario::Squeeze => {
            let res = scenarios::run_squeeze(params, &mc)?;
            metrics.push(Metric::with_analytic(
                "z_plus_variance_over_n",
                res.mc_z_plus,
                res.analytic_z_plus,
                "1",
                "simulated",
            ));
            metrics.push(Metric::with_analytic(
                "z_minus_variance_over_n",
                res.mc_z_minus,
                res.analytic_z_minus,
                "1",
                "simulated",
            ));
            metrics.push(Metric::plain("z_plus_se", res.se_z_plus, "1", "simulated"));
            metrics.push(Metric::plain("z_minus_se", res.se_z_minus, "1", "simulated"));
            metrics.push(Metric::with_analytic(
                "squeezing_gain_r",
                res.gain.r,
                correlations::r_max(params),
                "1",
                "fitted",
            ));
            metrics.push(Metric::plain("r_max", res.r_max, "1", "analytic"));
            metrics.push(Metric::with_analytic(
                "squashing_db",
                res.squashing_db,
                res.squashing_db_analytic,
                "dB",
                "simulated",
            ));
            // Analytic correlation functions on a +-5/gamma grid.
            let grid: Vec<f64> = (-80..=80)
                .map(|k| k as f64 / 80.0 * 5.0 / params.gamma)
                .collect();
            let g11 = correlations::g1_series(
                params,
                ResonanceBranch::Detuning,
                Particle::One,
                Particle::One,
                &grid,
            )?;
            let g12 = correlations::g1_series(
                params,
                ResonanceBranch::Detuning,
                Particle::One,
                Particle::Two,
                &grid,
            )?;
            let g2 = correlations::g2_series(params, ResonanceBranch::Detuning, &grid)?;
            let (CorrelationValues::FirstOrder(v11), CorrelationValues::FirstOrder(v12)) =
                (&g11.values, &g12.values)
            else {
                unreachable!()
            };
            let CorrelationValues::SecondOrder(v2) = &g2.values else { unreachable!() };
            write_csv(
                dir,
                "correlations.csv",
                &[
                    "tau [s]",
                    "g1_11 [occupation]",
                    "re_g1_12 [occupation]",
                    "im_g1_12 [occupation]",
                    "g2_12 [occupation^2]",
                ],
                grid.iter().enumerate().map(|(i, &t)| {
                    vec![t, v11[i].re, v12[i].re, v12[i].im, v2[i]]
                }),
            )?;
        }
        Scenario::Quench => {
            let gamma_fb =
                two_pi * resolved.analysis.gamma_fb_hz.unwrap_or(9.0 * params.gamma / two_pi);
            let res = scenarios::run_quench_compare(
                params,
                gamma_fb,
                resolved.analysis.t_cool_s,
                resolved.analysis.t_free_s,
                &mc,
            )?;
            metrics.push(Metric::with_analytic(
                "exchange_frequency",
                res.exchange_freq_fit_hz,
                res.exchange_freq_predicted_hz,
                "Hz",
                "fitted",
            ));
            metrics.push(Metric::plain(
                "antiphase_correlation",
                res.antiphase_correlation,
                "1",
                "simulated",
            ));
            metrics.push(Metric::plain(
                "max_sigma_deviation",
                res.max_sigma_deviation,
                "1",
                "simulated",
            ));
            write_csv(
                dir,
                "correlations.csv",
                &[
                    "t [s]",
                    "n1_mc [bath units]",
                    "n1_se [bath units]",
                    "n1_analytic [bath units]",
                    "n2_mc [bath units]",
                    "n2_se [bath units]",
                    "n2_analytic [bath units]",
                ],
                res.compare_t.iter().enumerate().map(|(k, &t)| {
                    let i = k * res.compare_stride;
                    vec![
                        t,
                        res.mc_n1[i],
                        res.se_n1[i],
                        res.analytic_n1[k],
                        res.mc_n2[i],
                        res.se_n2[i],
                        res.analytic_n2[k],
                    ]
                }),
            )?;
        }
        Scenario::ScanDetuning => {
            let res = scenarios::run_detuning_scan(
                params,
                &resolved.scan_delta_omega,
                &mc,
                resolved.analysis.segment_time_s,
            )?;
            if let Some(min_gap) = res.min_gap_hz {
                metrics.push(Metric::with_analytic(
                    "min_ridge_gap",
                    min_gap,
                    res.oracle_min_gap_hz,
                    "Hz",
                    "fitted",
                ));
            }
            write_csv(
                dir,
                "spectrogram.csv",
                &["delta_omega [Hz]", "frequency [Hz]", "psd [m^2/Hz]"],
                res.scan.delta_omega.iter().enumerate().flat_map(|(i, &dw)| {
                    let freqs = res.scan.freqs.clone();
                    let row = res.scan.map[i].clone();
                    freqs
                        .into_iter()
                        .zip(row)
                        .map(move |(f, p)| vec![dw / two_pi, f, p])
                        .collect::<Vec<_>>()
                }),
            )?;
            write_json(dir, "modes.json", &res)?;
        }
        Scenario::DistanceScan => {
            let mut params = params.clone();
            // The locus is defined at exact resonance.
            params.delta_omega = params.delta_mech();
            let kds = &resolved.scan_kd;
            if kds.is_empty() {
                return Err(RunError::Numerical(
                    "distance-scan needs a kd grid (scan.kd_pi or the fig4 preset)".into(),
                ));
            }
            let res = scenarios::run_distance_scan(
                &params,
                kds,
                &mc,
                resolved.analysis.segment_time_s,
            )?;
            metrics.push(Metric::plain("max_re_err_over_g", res.max_re_err_over_g, "1", "fitted"));
            metrics.push(Metric::plain("max_im_err_over_g", res.max_im_err_over_g, "1", "fitted"));
            write_json(dir, "modes.json", &res)?;
            write_csv(
                dir,
                "correlations.csv",
                &[
                    "kd [rad]",
                    "re_meas [Hz]",
                    "re_target [Hz]",
                    "im_meas [Hz]",
                    "im_target [Hz]",
                ],
                res.points.iter().map(|p| {
                    vec![p.kd, p.re_meas_hz, p.re_target_hz, p.im_meas_hz, p.im_target_hz]
                }),
            )?;
        }
        Scenario::KdEstimate => {
            let kds = &resolved.scan_kd;
            if kds.is_empty() {
                return Err(RunError::Numerical("kd-estimate needs a kd grid".into()));
            }
            let res = scenarios::run_kd_estimate(
                params,
                kds,
                &mc,
                resolved.analysis.tau_max_s,
            )?;
            metrics.push(Metric::with_analytic(
                "b_bar_prime_slope",
                res.slope,
                res.slope_target,
                "rad/rad",
                "fitted",
            ));
            metrics.push(Metric::plain("max_kd_error", res.max_kd_error, "rad", "fitted"));
            write_csv(
                dir,
                "correlations.csv",
                &[
                    "kd_true [rad]",
                    "kd_est [rad]",
                    "b_bar_prime [rad]",
                    "b_prime_plus [rad]",
                    "b_prime_minus [rad]",
                    "b_bar_prime_predicted [rad]",
                ],
                res.points.iter().map(|p| {
                    vec![
                        p.kd_true,
                        p.kd_est,
                        p.b_bar_prime,
                        p.b_prime_plus,
                        p.b_prime_minus,
                        p.predicted_b_bar_prime,
                    ]
                }),
            )?;
            write_json(dir, "modes.json", &res)?;
        }
        Scenario::Sms => {
            let res = scenarios::run_sms(
                params,
                Particle::One,
                &mc,
                resolved.analysis.segment_time_s,
            )?;
            metrics.push(Metric::with_analytic(
                "quadrature_variance_max_over_n",
                res.mc_var_max,
                res.analytic_var_max,
                "1",
                "simulated",
            ));
            metrics.push(Metric::with_analytic(
                "quadrature_variance_min_over_n",
                res.mc_var_min,
                res.analytic_var_min,
                "1",
                "simulated",
            ));
            write_csv(
                dir,
                "psd.csv",
                &["frequency [Hz]", "psd [occupation/Hz]"],
                res.psd.freqs.iter().zip(&res.psd.density).map(|(&f, &p)| vec![f, p]),
            )?;
        }
    }
    write_summary(dir, resolved, &metrics)?;
    Ok(())
}
