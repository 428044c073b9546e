//! Print the outer iterate path of a two-level run on the square-map label
//! environment: step, phi, gradient-estimate norm, and the two inner
//! divergence readings. Useful when tuning outer/inner step sizes.
//!
//! Usage: phi_trace [seed] [t] [s] [n_kl] [delta] [eta] [delta_lm] [eta_lm]

use perfzero::environment::{catalog, LossSign};
use perfzero::{minimize_pr, OptimizerConfig, SeededRng, Tolerances};

fn arg<T: std::str::FromStr>(idx: usize, default: T) -> T {
    std::env::args()
        .nth(idx)
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

fn main() {
    let seed: u64 = arg(1, 101);
    let t: usize = arg(2, 200);
    let s: usize = arg(3, 125);
    let n_kl: usize = arg(4, 50);
    let delta: f64 = arg(5, 0.0707);
    let eta: f64 = arg(6, 0.070711);
    let delta_lm: f64 = arg(7, 0.0894);
    let eta_lm: f64 = arg(8, 0.089443);

    let mut env = catalog::example1_square(LossSign::Positive, 1.0).unwrap();
    let tol = Tolerances { eps: 0.5, p: 0.1, eps_lm: 0.05, p_lm: 0.1, eps_kl: 0.002, p_kl: 0.1 };
    let cfg = OptimizerConfig::from_tolerances(env.family(), 1, 1, tol)
        .unwrap()
        .with_t(t)
        .unwrap()
        .with_s(s)
        .unwrap()
        .with_n_kl(n_kl)
        .unwrap()
        .with_delta(delta)
        .unwrap()
        .with_eta(eta)
        .unwrap()
        .with_delta_lm(delta_lm)
        .unwrap()
        .with_eta_lm(eta_lm)
        .unwrap();
    let mut rng = SeededRng::new(seed, 0);
    let result = minimize_pr(&mut env, &cfg, &mut rng).unwrap();

    println!("{:>5} {:>10} {:>10} {:>10} {:>10}", "step", "phi", "|g|", "kl+", "kl-");
    for (i, step) in result.trace.iter().enumerate() {
        println!(
            "{:>5} {:>10.5} {:>10.3} {:>10.5} {:>10.5}{}{}",
            i,
            step.phi.as_scalar().unwrap(),
            step.grad_norm,
            step.kl_plus,
            step.kl_minus,
            if step.warn_plus { " w+" } else { "" },
            if step.warn_minus { " w-" } else { "" },
        );
    }
    let phi_bar = result.phi_bar.as_scalar().unwrap();
    let theta_bar = result.theta_bar.as_scalar().unwrap();
    println!(
        "phi_bar = {:.5}, theta_bar = {:.5}, PR(theta_bar) = {:.5}, lm_warnings = {}",
        phi_bar,
        theta_bar,
        env.true_pr(&result.theta_bar).unwrap(),
        result.lm_warnings
    );
}
