use nalgebra::dmatrix;
use rroc_core::baseline::NoncausalBaseline;
use rroc_core::presets::scalar_benchmark;
use rroc_core::specfact::spectral_factorize;
use rroc_core::synthesis::{hinf_min_gamma, synthesize_regret, Partition, RegretMode, SynthOptions};
use rroc_core::lft::{lft_upper, RobustPlant};

fn weighted_robust(gamma_r: f64) -> RobustPlant<f64> {
    let plant = scalar_benchmark::<f64>();
    let realized = plant.realize(&dmatrix![0.0]).unwrap();
    let nc = NoncausalBaseline::for_plant(&realized).unwrap();
    let pair = spectral_factorize(&nc, gamma_r).unwrap();
    let w = pair.f_inv;
    let a = nalgebra::dmatrix![0.5, 5.0*w.c()[(0,0)]; 0.0, w.a()[(0,0)]];
    let b = nalgebra::dmatrix![0.9, 5.0*w.d()[(0,0)], 1.0; 0.0, w.b()[(0,0)], 0.0];
    let c = nalgebra::dmatrix![1.0, 0.0; 3.0_f64.sqrt(), 0.0; 0.0, 0.0; 1.0, 10.0*w.c()[(0,0)]];
    let d = nalgebra::dmatrix![0.0, 0.0, 0.0; 0.0, 0.0, 0.0; 0.0, 0.0, 1.0; 0.0, 10.0*w.d()[(0,0)], 0.0];
    RobustPlant {
        ss: rroc_core::StateSpace::new(a, b, c, d).unwrap(),
        block: rroc_core::BlockStructure::new(vec![1]).unwrap(),
        n_d: 1, n_u: 1, n_e: 2, n_y: 1,
    }
}

#[test]
fn probe_pointwise_lower_bound() {
    let part = Partition { n_w: 1, n_u: 1, n_e: 2, n_y: 1 };
    for gamma_r in [2.8_f64, 3.15, 3.5] {
        let plant = weighted_robust(gamma_r);
        let mut worst: f64 = 0.0;
        let mut at = 0.0;
        for i in 0..9 {
            let delta = -1.0 + 2.0 * i as f64 / 8.0;
            let open = lft_upper(&plant.ss, &dmatrix![delta]).unwrap();
            match hinf_min_gamma(&open, &part, 1.0, 3e-3, 512).unwrap() {
                Some((lvl, _)) => { if lvl > worst { worst = lvl; at = delta; } }
                None => { worst = f64::INFINITY; at = delta; break; }
            }
        }
        println!("gamma_r={gamma_r}: pointwise lower bound = {worst:.4} at delta={at}");
    }
}

#[test]
fn probe_nominal_again() {
    let plant = scalar_benchmark::<f64>();
    let out = synthesize_regret(&plant, RegretMode::Nominal, &SynthOptions::default()).unwrap();
    println!("nominal gamma with D_yd=10: {:.6}", out.gamma);
}
