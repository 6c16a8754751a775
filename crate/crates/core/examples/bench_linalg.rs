use nonlin_spectra_core::matrix::{mul_with_symmetric_rhs, symmetric_eigenvalues, Matrix};
use rand::prelude::*;
use rand_distr::StandardNormal;
use std::time::Instant;

fn main() {
    let n = 2000;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = rng.sample(StandardNormal);
            m.set(i, j, v / (n as f64).sqrt());
            m.set(j, i, v / (n as f64).sqrt());
        }
    }
    let t = Instant::now();
    let p = mul_with_symmetric_rhs(&m, &m).unwrap();
    println!("matmul {}x{}: {:.2?} ({:.2} GF/s)", n, n, t.elapsed(), 2.0 * (n as f64).powi(3) / t.elapsed().as_secs_f64() / 1e9);
    let t = Instant::now();
    let ev = symmetric_eigenvalues(&p).unwrap();
    println!("eigen {}x{}: {:.2?}; range [{:.3}, {:.3}]", n, n, t.elapsed(), ev[0], ev[n-1]);
}
