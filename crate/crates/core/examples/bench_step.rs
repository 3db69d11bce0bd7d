use prhf::dynamics::{evolve, EvolveOptions, Model, Scheme, SimState, BlowUpPolicy};
use prhf::initial_data::gaussian_family;
use prhf::Grid;
use std::time::Instant;

fn main() {
    let g = Grid::new(64, 16.0).unwrap();
    let t0 = Instant::now();
    let set = gaussian_family(
        &[[-2.0, 0.0, 0.0], [2.0, 0.5, 0.0]],
        &[1.0, 1.2],
        &g,
        1.0,
        0.5,
    )
    .unwrap();
    println!("setup (incl first kernel build via loewdin->no conv): {:?}", t0.elapsed());

    let state = SimState::new(set, Model::Hartree);
    let opts = EvolveOptions {
        scheme: Scheme::Strang,
        dt: 5e-3,
        t_end: 0.1,
        record_interval: 0.05,
        policy: BlowUpPolicy::default(),
        radii: vec![],
    };
    let t0 = Instant::now();
    let out = evolve(&state, &opts).unwrap();
    println!(
        "evolve 20 steps (incl kernel build): {:?}  reason {:?} records {}",
        t0.elapsed(),
        out.reason,
        out.records.len()
    );
    let t0 = Instant::now();
    let out2 = evolve(&out.final_state, &EvolveOptions { t_end: 0.2, ..opts }).unwrap();
    println!("evolve 20 more steps (warm): {:?} {:?}", t0.elapsed(), out2.reason);
}
