use fblab_core::langevin::*;
use fblab_core::model::ModeParams;
use std::f64::consts::PI;

fn main() {
    let params = ModeParams::new(
        2.0 * PI * 27e3,
        2.0 * PI * 33e3,
        2.0 * PI * 300.0,
        2.0 * PI * 700.0,
        2.0 * PI * 6e3,
        0.0,
        0.4,
        ModeParams::thermal_occupation(2.0 * PI * 27e3, 300.0),
        ModeParams::thermal_occupation(2.0 * PI * 33e3, 300.0),
    )
    .unwrap();
    let inp = SimInputs::from_mode_params(&params, 8.97e-18, 2.0 * PI / 1064e-9).unwrap();
    let grid = SimGrid::auto(&inp, 1);
    println!("dt = {:e}", grid.dt);
    let res = simulate(&inp, &Protocol::free_run(40.0 * grid.dt), grid, 1, 42);
    match res {
        Ok(ens) => {
            for (i, z) in ens.trajectories[0].z[0].iter().enumerate().take(30) {
                println!("{i:3} z1={:+.3e} v1={:+.3e} z2={:+.3e}", z,
                    ens.trajectories[0].v[0][i], ens.trajectories[0].z[1][i]);
            }
        }
        Err(e) => println!("error: {e}"),
    }
}
