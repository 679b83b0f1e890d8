use std::f64::consts::PI;

use rand::Rng;

/// Complex kernel initialization: Rayleigh-distributed magnitude with scale
/// `1/sqrt(fan_in + fan_out)` and uniform phase. Returns `(real, imaginary)` planes.
pub fn complex_kernel_init<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    fan_in: usize,
    fan_out: usize,
) -> (Vec<f64>, Vec<f64>) {
    let sigma = 1.0 / ((fan_in + fan_out) as f64).sqrt();
    (0..count)
        .map(|_| {
            let u: f64 = rng.gen_range(f64::EPSILON..1.0);
            let magnitude = sigma * (-2.0 * u.ln()).sqrt();
            let phase = rng.gen_range(-PI..PI);
            (magnitude * phase.cos(), magnitude * phase.sin())
        })
        .unzip()
}
