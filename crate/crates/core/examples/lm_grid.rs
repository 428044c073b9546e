//! Pilot harness for the model-learning contract on the identity-map
//! environment: sweep a grid of distribution targets, run `learn_model`
//! repeatedly against each, and report how often the induced parameter lands
//! within the matching tolerance.
//!
//! Usage: lm_grid [s n_kl delta_lm eta_lm trials seed0]

use perfzero::{catalog, learn_model, OptimizerConfig, RegretLedger, SeededRng, Tolerances, Vector};

fn main() {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric arg")).collect();
    let s = *args.first().unwrap_or(&1500.0) as u64;
    let n_kl = *args.get(1).unwrap_or(&50.0) as u64;
    let delta_lm = *args.get(2).unwrap_or(&0.1);
    let eta_lm = *args.get(3).unwrap_or(&5e-4);
    let trials = *args.get(4).unwrap_or(&50.0) as u64;
    let seed0 = *args.get(5).unwrap_or(&1.0) as u64;

    let tol = Tolerances { eps: 0.5, p: 0.1, eps_lm: 0.05, p_lm: 0.1, eps_kl: 0.002, p_kl: 0.1 };
    let mut worst = 1.0f64;
    for i in 0..9 {
        let target = 0.42 + 0.02 * i as f64;
        let mut hits = 0u64;
        let mut sum_err = 0.0;
        for trial in 0..trials {
            let mut env = catalog::uniform_exp().unwrap();
            let mut cfg = OptimizerConfig::from_tolerances(env.family(), 1, 1, tol).unwrap();
            cfg.s = s as usize;
            cfg.n_kl = n_kl as usize;
            cfg.delta_lm = delta_lm;
            cfg.eta_lm = eta_lm;
            let mut ledger = RegretLedger::new();
            let mut rng = SeededRng::new(seed0 + 1000 * i + trial, 0);
            let out = learn_model(
                &mut env,
                &Vector::new(vec![target]).unwrap(),
                &cfg,
                &mut ledger,
                &mut rng,
            )
            .unwrap();
            let phi = env.phi_of(&out.theta_bar).unwrap();
            let err = (phi.as_slice()[0] - target).abs();
            sum_err += err;
            if err <= 0.05 {
                hits += 1;
            }
        }
        let rate = hits as f64 / trials as f64;
        worst = worst.min(rate);
        println!(
            "target {:.2}: success {:.3} ({} / {}), mean |phi - target| {:.4}",
            target,
            rate,
            hits,
            trials,
            sum_err / trials as f64
        );
    }
    println!("worst-target success: {worst:.3}");
}
