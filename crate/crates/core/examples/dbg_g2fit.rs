use fblab_core::sigproc::{filtered_g2_fit, EmpiricalG2};
use std::f64::consts::PI;

fn run_case(with_cosh: bool, delta_hz: f64, gamma_hz: f64, b_phase: f64) {
    let dt = 2e-5;
    let lags = 3000i64;
    let delta = 2.0 * PI * delta_hz;
    let gamma = 2.0 * PI * gamma_hz;
    let tau: Vec<f64> = (-lags..=lags).map(|k| k as f64 * dt).collect();
    let values: Vec<f64> = tau
        .iter()
        .map(|&t| {
            let cosh_part = if with_cosh { 1.4 * (0.3 * gamma * t.abs()).cosh().min(3.0) } else { 0.0 };
            0.2 + (-(gamma * t.abs())).exp() * ((delta * t - b_phase).cos() + cosh_part)
        })
        .collect();
    let g2 = EmpiricalG2 { tau, values, dt };
    match filtered_g2_fit(&g2, delta, gamma) {
        Ok(fit) => println!(
            "cosh={with_cosh} d={delta_hz} g={gamma_hz}: b+ err {:+.3}  b- err {:+.3}  bbar err {:+.3}  (w+ {:.0}, w- {:.0}, delta {:.0})",
            fit.b_prime_plus - b_phase,
            fit.b_prime_minus - b_phase,
            fit.b_bar_prime - b_phase,
            fit.omega_plus, fit.omega_minus, delta
        ),
        Err(e) => println!("fit error: {e}"),
    }
}

fn main() {
    for with_cosh in [false, true] {
        run_case(with_cosh, 1500.0, 250.0, 0.9);
        run_case(with_cosh, 1500.0, 250.0, -2.0);
        run_case(with_cosh, 1200.0, 300.0, 2.8);
        run_case(with_cosh, 2000.0, 150.0, 0.3);
    }
}
