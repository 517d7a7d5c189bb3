//! Whiteness of residuals: white noise against a strongly correlated AR(1).
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use synergy_es::sysid::{whiteness_test, whiteness_threshold};

fn main() -> synergy_es::Result<()> {
    println!("threshold at N = 50: {:.4}", whiteness_threshold(50, 0.95));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let white: Vec<f64> = (0..50).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut ar = vec![0.0f64; 50];
    for i in 1..50 {
        let e: f64 = StandardNormal.sample(&mut rng);
        ar[i] = 0.8 * ar[i - 1] + e;
    }
    for (name, r) in [("white", &white), ("ar(1) 0.8", &ar)] {
        let rep = whiteness_test(r, 0.95)?;
        println!("{name:10} max |rho| {:.3}  passed {}", rep.max_normalized_autocorr, rep.passed);
    }
    Ok(())
}
