use num_complex::Complex64;

use crate::error::{Error, Result};

/// An N-dimensional array of complex samples stored as split real and imaginary planes.
///
/// Layout is row-major; for network feature maps the shape is `[batch, channels, height, width]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexTensor {
    shape: Vec<usize>,
    re: Vec<f64>,
    im: Vec<f64>,
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::shape(shape, "extents must be positive"));
    }
    Ok(shape.iter().product())
}

impl ComplexTensor {
    pub fn new(shape: &[usize], re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        let n = check_shape(shape)?;
        if re.len() != n || im.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: re.len().min(im.len()),
            });
        }
        Ok(Self {
            shape: shape.to_vec(),
            re,
            im,
        })
    }

    /// Panics if any extent is zero.
    pub fn zeros(shape: &[usize]) -> Self {
        let n = check_shape(shape).expect("zero-sized tensor");
        Self {
            shape: shape.to_vec(),
            re: vec![0.0; n],
            im: vec![0.0; n],
        }
    }

    pub fn from_real(shape: &[usize], re: Vec<f64>) -> Result<Self> {
        let im = vec![0.0; re.len()];
        Self::new(shape, re, im)
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(usize) -> Complex64) -> Self {
        let mut t = Self::zeros(shape);
        for i in 0..t.len() {
            let z = f(i);
            t.re[i] = z.re;
            t.im[i] = z.im;
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn re(&self) -> &[f64] {
        &self.re
    }

    pub fn im(&self) -> &[f64] {
        &self.im
    }

    pub fn re_mut(&mut self) -> &mut [f64] {
        &mut self.re
    }

    pub fn im_mut(&mut self) -> &mut [f64] {
        &mut self.im
    }

    pub fn parts_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.re, &mut self.im)
    }

    pub fn into_parts(self) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
        (self.shape, self.re, self.im)
    }

    pub fn get(&self, i: usize) -> Complex64 {
        Complex64::new(self.re[i], self.im[i])
    }

    pub fn set(&mut self, i: usize, z: Complex64) {
        self.re[i] = z.re;
        self.im[i] = z.im;
    }

    pub fn iter(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(&re, &im)| Complex64::new(re, im))
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        let n = check_shape(shape)?;
        if n != self.len() {
            return Err(Error::mismatch(&self.shape, shape));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    /// Interprets the tensor as `[batch, channels, height, width]`.
    pub fn dims4(&self) -> Result<(usize, usize, usize, usize)> {
        match *self.shape.as_slice() {
            [b, c, h, w] => Ok((b, c, h, w)),
            _ => Err(Error::shape(&self.shape, "expected [batch, channels, height, width]")),
        }
    }

    /// Height and width of the two trailing axes.
    pub fn spatial(&self) -> Result<(usize, usize)> {
        let r = self.shape.len();
        if r < 2 {
            return Err(Error::shape(&self.shape, "need at least two axes"));
        }
        Ok((self.shape[r - 2], self.shape[r - 1]))
    }

    fn ensure_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::mismatch(&self.shape, &other.shape));
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.ensure_same_shape(other)?;
        let mut out = self.clone();
        for i in 0..out.len() {
            out.set(i, f(self.get(i), other.get(i)));
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn elementwise_mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn mul_scalar(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.re.iter_mut().chain(out.im.iter_mut()).for_each(|v| *v *= s);
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for i in 0..out.len() {
            out.set(i, self.get(i) * s);
        }
        out
    }

    /// Elementwise `|z|`.
    pub fn magnitude(&self) -> RealTensor {
        let data = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(&a, &b)| a.hypot(b))
            .collect();
        RealTensor {
            shape: self.shape.clone(),
            data,
        }
    }

    /// Σ |z|².
    pub fn energy(&self) -> f64 {
        self.re.iter().chain(&self.im).map(|v| v * v).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.ensure_same_shape(other)?;
        Ok((0..self.len())
            .map(|i| (self.get(i) - other.get(i)).norm())
            .fold(0.0, f64::max))
    }

    pub fn is_finite(&self) -> bool {
        self.re.iter().chain(&self.im).all(|v| v.is_finite())
    }

    /// Concatenates `[B, C_i, H, W]` tensors along the channel axis.
    pub fn concat_channels(parts: &[&ComplexTensor]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::config("parts", "nothing to concatenate"))?;
        let (b, _, h, w) = first.dims4()?;
        let mut channels = 0;
        for p in parts {
            let (pb, pc, ph, pw) = p.dims4()?;
            if (pb, ph, pw) != (b, h, w) {
                return Err(Error::mismatch(&[b, pc, h, w], p.shape()));
            }
            channels += pc;
        }
        let plane = h * w;
        let mut out = Self::zeros(&[b, channels, h, w]);
        for bi in 0..b {
            let mut offset = bi * channels * plane;
            for p in parts {
                let n = p.shape[1] * plane;
                let src = bi * n;
                out.re[offset..offset + n].copy_from_slice(&p.re[src..src + n]);
                out.im[offset..offset + n].copy_from_slice(&p.im[src..src + n]);
                offset += n;
            }
        }
        Ok(out)
    }

    /// Inverse of [`ComplexTensor::concat_channels`].
    pub fn split_channels(&self, sizes: &[usize]) -> Result<Vec<Self>> {
        let (b, c, h, w) = self.dims4()?;
        if sizes.iter().sum::<usize>() != c {
            return Err(Error::shape(&self.shape, format!("cannot split channels into {sizes:?}")));
        }
        let plane = h * w;
        let mut outs: Vec<Self> = sizes.iter().map(|&s| Self::zeros(&[b, s, h, w])).collect();
        for bi in 0..b {
            let mut offset = bi * c * plane;
            for (out, &s) in outs.iter_mut().zip(sizes) {
                let n = s * plane;
                let dst = bi * n;
                out.re[dst..dst + n].copy_from_slice(&self.re[offset..offset + n]);
                out.im[dst..dst + n].copy_from_slice(&self.im[offset..offset + n]);
                offset += n;
            }
        }
        Ok(outs)
    }

    /// The `index`-th entry along the leading axis, with that axis dropped.
    pub fn slice_outer(&self, index: usize) -> Result<Self> {
        let outer = self.shape[0];
        if index >= outer || self.shape.len() < 2 {
            return Err(Error::shape(&self.shape, format!("cannot take slice {index}")));
        }
        let n = self.len() / outer;
        Ok(Self {
            shape: self.shape[1..].to_vec(),
            re: self.re[index * n..(index + 1) * n].to_vec(),
            im: self.im[index * n..(index + 1) * n].to_vec(),
        })
    }

    /// Stacks equally shaped tensors along a new leading axis.
    pub fn stack(items: &[&ComplexTensor]) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| Error::config("items", "nothing to stack"))?;
        let mut shape = vec![items.len()];
        shape.extend_from_slice(first.shape());
        let mut re = Vec::with_capacity(first.len() * items.len());
        let mut im = Vec::with_capacity(first.len() * items.len());
        for t in items {
            first.ensure_same_shape(t)?;
            re.extend_from_slice(&t.re);
            im.extend_from_slice(&t.im);
        }
        Self::new(&shape, re, im)
    }
}

/// A real-valued tensor, used for magnitude images, masks and metric inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct RealTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl RealTensor {
    pub fn new(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let n = check_shape(shape)?;
        if data.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: data.len(),
            });
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = check_shape(shape).expect("zero-sized tensor");
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        }
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        let mut t = Self::zeros(shape);
        t.data.fill(value);
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `(height, width)` of a rank-2 image.
    pub fn dims2(&self) -> Result<(usize, usize)> {
        match *self.shape.as_slice() {
            [h, w] => Ok((h, w)),
            _ => Err(Error::shape(&self.shape, "expected a [height, width] image")),
        }
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn slice_outer(&self, index: usize) -> Result<Self> {
        let outer = self.shape[0];
        if index >= outer || self.shape.len() < 2 {
            return Err(Error::shape(&self.shape, format!("cannot take slice {index}")));
        }
        let n = self.len() / outer;
        Ok(Self {
            shape: self.shape[1..].to_vec(),
            data: self.data[index * n..(index + 1) * n].to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(shape: &[usize], seed: u64) -> ComplexTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexTensor::from_fn(shape, |_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn hand_complex_multiply() {
        let a = ComplexTensor::new(&[1], vec![1.0], vec![2.0]).unwrap();
        let b = ComplexTensor::new(&[1], vec![3.0], vec![4.0]).unwrap();
        let p = a.elementwise_mul(&b).unwrap();
        assert_eq!(p.get(0), Complex64::new(-5.0, 10.0));
    }

    #[test]
    fn adding_zero_is_identity() {
        let x = random(&[3, 5], 1);
        assert_eq!(x.add(&ComplexTensor::zeros(&[3, 5])).unwrap(), x);
    }

    #[test]
    fn elementwise_mul_matches_scalar_loop() {
        let a = random(&[4, 4], 2);
        let b = random(&[4, 4], 3);
        let p = a.elementwise_mul(&b).unwrap();
        for i in 0..16 {
            let (ar, ai, br, bi) = (a.re()[i], a.im()[i], b.re()[i], b.im()[i]);
            assert!((p.re()[i] - (ar * br - ai * bi)).abs() < 1e-12);
            assert!((p.im()[i] - (ar * bi + ai * br)).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = ComplexTensor::zeros(&[2, 2]);
        let b = ComplexTensor::zeros(&[4]);
        assert!(matches!(a.add(&b), Err(Error::ShapeMismatch { .. })));
        assert!(ComplexTensor::new(&[2, 2], vec![0.0; 3], vec![0.0; 3]).is_err());
    }

    #[test]
    fn magnitude_cases() {
        let x = ComplexTensor::new(&[2], vec![3.0, -2.5], vec![4.0, 0.0]).unwrap();
        assert_eq!(x.magnitude().data(), &[5.0, 2.5]);
        let y = random(&[3, 3], 4);
        let m = y.magnitude();
        for i in 0..9 {
            let expect = (y.re()[i] * y.re()[i] + y.im()[i] * y.im()[i]).sqrt();
            assert!((m.data()[i] - expect).abs() <= 1e-15);
        }
    }

    #[test]
    fn concat_then_split_restores_parts() {
        let a = random(&[2, 1, 3, 3], 5);
        let b = random(&[2, 3, 3, 3], 6);
        let cat = ComplexTensor::concat_channels(&[&a, &b]).unwrap();
        assert_eq!(cat.shape(), &[2, 4, 3, 3]);
        let parts = cat.split_channels(&[1, 3]).unwrap();
        assert_eq!(parts[0], a);
        assert_eq!(parts[1], b);
    }
}
