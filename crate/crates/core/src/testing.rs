//! Helpers shared by unit tests: seeded random tensors and a central finite-difference checker.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ctensor::ComplexTensor;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(shape: &[usize], seed: u64) -> ComplexTensor {
    let mut rng = rng(seed);
    ComplexTensor::from_fn(shape, |_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Σ re(w)·re(x) + im(w)·im(x): a linear probe whose gradient w.r.t. `x` is `w`.
pub fn probe(w: &ComplexTensor, x: &ComplexTensor) -> f64 {
    w.re().iter().zip(x.re()).chain(w.im().iter().zip(x.im())).map(|(a, b)| a * b).sum()
}

pub fn rel_err(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Central differences of `f` at every real coordinate of `x`, compared to `analytic`.
/// Returns the worst relative error.
pub fn check_tensor_grad(
    x: &ComplexTensor,
    analytic: &ComplexTensor,
    step: f64,
    floor: f64,
    mut f: impl FnMut(&ComplexTensor) -> f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for part in 0..2 {
        for i in 0..x.len() {
            let mut plus = x.clone();
            let mut minus = x.clone();
            if part == 0 {
                plus.re_mut()[i] += step;
                minus.re_mut()[i] -= step;
            } else {
                plus.im_mut()[i] += step;
                minus.im_mut()[i] -= step;
            }
            let numeric = (f(&plus) - f(&minus)) / (2.0 * step);
            let a = if part == 0 { analytic.re()[i] } else { analytic.im()[i] };
            worst = worst.max(rel_err(a, numeric, floor));
        }
    }
    worst
}

/// Central differences over a slice of real parameters.
pub fn check_slice_grad(
    values: &[f64],
    analytic: &[f64],
    step: f64,
    floor: f64,
    mut f: impl FnMut(&[f64]) -> f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    let mut v = values.to_vec();
    for i in 0..v.len() {
        let orig = v[i];
        v[i] = orig + step;
        let up = f(&v);
        v[i] = orig - step;
        let down = f(&v);
        v[i] = orig;
        worst = worst.max(rel_err(analytic[i], (up - down) / (2.0 * step), floor));
    }
    worst
}
