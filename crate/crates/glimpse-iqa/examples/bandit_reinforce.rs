//! One-step Gaussian bandit: checks the Monte-Carlo policy-gradient
//! estimator against the closed-form gradient.
//!
//! The policy is a ~ N(theta, sigma); the reward is 1 when |a| < c. The
//! exact gradient of E[R] w.r.t. theta is
//! (phi((c+theta)/sigma) - phi((c-theta)/sigma)) / sigma with phi the
//! standard normal density, while the estimator averages R (a - theta) /
//! sigma^2 over episodes — the same score-function form the attention
//! policy trains with.
//!
//! Run: cargo run --release --example bandit_reinforce

use glimpse_iqa::rng;

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn analytic_grad(theta: f64, sigma: f64, c: f64) -> f64 {
    (normal_pdf((c + theta) / sigma) - normal_pdf((c - theta) / sigma)) / sigma
}

fn main() {
    let c = 0.3;
    let episodes = 100_000;
    println!("{:>8} {:>6} {:>12} {:>12} {:>10} {:>8}", "theta", "sigma", "estimate", "analytic", "3*stderr", "ok");
    for &theta in &[-0.5_f64, 0.0, 0.4] {
        for &sigma in &[0.1_f64, 0.16] {
            let mut rng = rng::stream(2024, &[theta.to_bits(), sigma.to_bits()]);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for _ in 0..episodes {
                let (z, _) = rng::normal_pair(&mut rng);
                let a = theta + sigma * z;
                let reward = if a.abs() < c { 1.0 } else { 0.0 };
                let g = reward * (a - theta) / (sigma * sigma);
                sum += g;
                sumsq += g * g;
            }
            let n = episodes as f64;
            let mean = sum / n;
            let stderr = ((sumsq / n - mean * mean) / n).sqrt();
            let exact = analytic_grad(theta, sigma, c);
            let ok = (mean - exact).abs() <= 3.0 * stderr;
            println!(
                "{theta:>8.2} {sigma:>6.2} {mean:>12.6} {exact:>12.6} {:>10.6} {:>8}",
                3.0 * stderr,
                if ok { "yes" } else { "NO" }
            );
        }
    }
    // epsilon-greedy sanity: with epsilon = 1 the draws are uniform
    let mut policy = glimpse_iqa::policy::GaussianPolicy::seeded(0.1, 1.0, 7, &[0]);
    let mut inside = 0;
    let draws = 10_000;
    for _ in 0..draws {
        let a = policy.sample_location(glimpse_iqa::imgproc::NormalizedLocation::CENTER);
        if a.lx.abs() < 0.5 && a.ly.abs() < 0.5 {
            inside += 1;
        }
    }
    println!(
        "\nepsilon=1 exploration: {:.3} of draws in the center quarter (expect 0.25)",
        inside as f64 / draws as f64
    );
}
