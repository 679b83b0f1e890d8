use crate::error::{Error, Result};

/// Exact squared Euclidean distance from every pixel to the nearest `true` pixel of an
/// `h × w` boolean grid, via separable lower envelopes of parabolas. Pixels are `∞` when
/// the grid has no `true` pixel.
pub fn squared_distance_transform(h: usize, w: usize, sites: &[bool]) -> Result<Vec<f64>> {
    if sites.len() != h * w {
        return Err(Error::LengthMismatch {
            expected: h * w,
            found: sites.len(),
        });
    }
    let mut grid: Vec<f64> = sites.iter().map(|&s| if s { 0.0 } else { f64::INFINITY }).collect();
    let mut line = Vec::with_capacity(h.max(w));
    for x in 0..w {
        line.clear();
        line.extend((0..h).map(|y| grid[y * w + x]));
        for (y, v) in lower_envelope(&line).into_iter().enumerate() {
            grid[y * w + x] = v;
        }
    }
    for y in 0..h {
        let row = lower_envelope(&grid[y * w..(y + 1) * w]);
        grid[y * w..(y + 1) * w].copy_from_slice(&row);
    }
    Ok(grid)
}

/// `d[q] = min_p (q − p)² + f[p]` in linear time.
fn lower_envelope(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![f64::INFINITY; n];
    let finite: Vec<usize> = (0..n).filter(|&p| f[p].is_finite()).collect();
    if finite.is_empty() {
        return out;
    }
    let mut v = vec![0usize; finite.len()];
    let mut z = vec![0.0f64; finite.len() + 1];
    let mut k = 0;
    v[0] = finite[0];
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let intersect = |q: usize, p: usize| {
        let (qf, pf) = (q as f64, p as f64);
        ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * (qf - pf))
    };
    for &q in &finite[1..] {
        let mut s = intersect(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = intersect(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
    out
}
