//! Scores the permanental ratio estimator on the sin²/cos² toy problem.
//!
//! `cargo run --release --example toy_study -- [bins] [trials] [variance]`

use std::time::Instant;

use poisratio::kernel::wendland_kernel;
use poisratio::synthetic::toy_ratio_problem;
use poisratio::uq::{crps_beta_prime, hpd_beta_prime};
use poisratio::{ratio_estimation_permproc, RatioOptions};

fn main() -> poisratio::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let bins = args.first().map_or(50, |s| s.parse().expect("bins"));
    let trials = args.get(1).map_or(5, |s| s.parse().expect("trials"));
    let variance = args.get(2).map_or(1.0, |s| s.parse().expect("variance"));

    let mut crps_sum = 0.0;
    let mut abs_err = 0.0;
    let mut rel_err = 0.0;
    let mut truth_sum = 0.0;
    let mut count = 0usize;
    let mut covered = 0usize;
    for seed in 0..trials {
        let data = toy_ratio_problem(bins, seed)?;
        let start = Instant::now();
        let km = wendland_kernel(&data.grid, 0.75, variance)?;
        let post = ratio_estimation_permproc(&data.numerator, &data.denominator, &km, None, &RatioOptions::default())?;
        let elapsed = start.elapsed();
        let mut trial_crps = 0.0;
        for (i, law) in post.laws.iter().enumerate() {
            let law = law.as_ref().expect("valid bin");
            let z = data.truth[i];
            trial_crps += crps_beta_prime(law, 0.0, z, 20001)?.value;
            covered += usize::from(hpd_beta_prime(law, 0.0, 0.95, 2001)?.contains(z));
            let e = (post.map_estimate[i] - z).abs();
            abs_err += e;
            rel_err += e / z;
            truth_sum += z;
            count += 1;
        }
        crps_sum += trial_crps;
        let (fa, fb) = post.fits.as_deref().expect("fits");
        println!(
            "seed {seed}: {elapsed:.2?}, mean CRPS {:.4}, iterations {}/{}, converged {}",
            trial_crps / bins as f64,
            fa.iterations,
            fb.iterations,
            post.converged()
        );
    }
    println!("mean CRPS       {:.4}", crps_sum / count as f64);
    println!("MAE / mean |Z|  {:.2}%", 100.0 * abs_err / truth_sum);
    println!("mean |e|/Z      {:.2}%", 100.0 * rel_err / count as f64);
    println!("95% HPD cover   {:.3}", covered as f64 / count as f64);
    Ok(())
}
