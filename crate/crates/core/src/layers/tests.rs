use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::ctensor::ComplexTensor;
use crate::testing::{check_slice_grad, check_tensor_grad, probe, random_tensor, rng};

/// Loops over pixels and taps doing complex multiply-accumulate.
fn conv_oracle(x: &ComplexTensor, layer: &ComplexConv2d, stride: usize, padding: usize) -> ComplexTensor {
    let (b, c, h, w) = x.dims4().unwrap();
    let (o, k) = (layer.out_channels(), layer.kernel());
    let oh = (h + 2 * padding - k) / stride + 1;
    let ow = (w + 2 * padding - k) / stride + 1;
    let mut out = ComplexTensor::zeros(&[b, o, oh, ow]);
    for bi in 0..b {
        for oc in 0..o {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = Complex64::new(layer.bias_re.value[oc], layer.bias_im.value[oc]);
                    for ic in 0..c {
                        for ky in 0..k {
                            for kx in 0..k {
                                let iy = (oy * stride + ky) as isize - padding as isize;
                                let ix = (ox * stride + kx) as isize - padding as isize;
                                if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                    continue;
                                }
                                let wi = ((oc * c + ic) * k + ky) * k + kx;
                                let kernel = Complex64::new(layer.weight_re.value[wi], layer.weight_im.value[wi]);
                                acc += kernel * x.get(((bi * c + ic) * h + iy as usize) * w + ix as usize);
                            }
                        }
                    }
                    out.set(((bi * o + oc) * oh + oy) * ow + ox, acc);
                }
            }
        }
    }
    out
}

fn random_conv(cin: usize, cout: usize, k: usize, stride: usize, padding: usize, seed: u64) -> ComplexConv2d {
    let mut r = rng(seed);
    let mut layer = ComplexConv2d::new(cin, cout, k, stride, padding, &mut r).unwrap();
    for v in layer.bias_re.value.iter_mut().chain(layer.bias_im.value.iter_mut()) {
        *v = r.gen_range(-0.5..0.5);
    }
    layer
}

#[test]
fn unit_kernel_is_identity() {
    let mut layer = ComplexConv2d::zeros(1, 1, 1, 1, 0).unwrap();
    layer.weight_re.value[0] = 1.0;
    let x = random_tensor(&[2, 1, 4, 4], 1);
    assert_eq!(complex_conv2d(&x, &layer).unwrap(), x);
}

#[test]
fn imaginary_unit_kernel_rotates() {
    let mut layer = ComplexConv2d::zeros(1, 1, 1, 1, 0).unwrap();
    layer.weight_im.value[0] = 1.0;
    let x = random_tensor(&[1, 1, 3, 3], 2);
    let y = complex_conv2d(&x, &layer).unwrap();
    for i in 0..9 {
        assert_eq!(y.re()[i], -x.im()[i]);
        assert_eq!(y.im()[i], x.re()[i]);
    }
}

#[test]
fn conv_3x3_matches_scalar_oracle() {
    let layer = random_conv(1, 1, 3, 1, 1, 3);
    let x = random_tensor(&[1, 1, 5, 5], 4);
    let diff = complex_conv2d(&x, &layer)
        .unwrap()
        .max_abs_diff(&conv_oracle(&x, &layer, 1, 1))
        .unwrap();
    assert!(diff < 1e-12, "{diff}");
}

#[test]
fn strided_unpadded_conv_matches_oracle() {
    let layer = random_conv(2, 3, 3, 2, 0, 5);
    let x = random_tensor(&[2, 2, 7, 8], 6);
    let y = complex_conv2d(&x, &layer).unwrap();
    assert_eq!(y.shape(), &[2, 3, 3, 3]);
    assert!(y.max_abs_diff(&conv_oracle(&x, &layer, 2, 0)).unwrap() < 1e-12);
}

#[test]
fn conv_rejects_bad_inputs() {
    assert!(ComplexConv2d::zeros(1, 1, 2, 1, 0).is_err());
    let layer = random_conv(2, 1, 3, 1, 1, 7);
    assert!(complex_conv2d(&random_tensor(&[1, 3, 4, 4], 8), &layer).is_err());
}

#[test]
fn conv_zero_upstream_gives_zero_gradients() {
    let layer = random_conv(2, 2, 3, 1, 1, 9);
    let x = random_tensor(&[1, 2, 4, 4], 10);
    let g = layer.gradients(&x, &ComplexTensor::zeros(&[1, 2, 4, 4])).unwrap();
    assert!(g.input.iter().all(|z| z.norm() == 0.0));
    assert!(g.weight_re.iter().chain(&g.weight_im).chain(&g.bias_re).chain(&g.bias_im).all(|&v| v == 0.0));
}

#[test]
fn conv_scalar_weight_gradient_is_input() {
    // out_re = a·W_R − b·W_I, so ∂out_re/∂W_R = a and ∂out_re/∂W_I = −b
    let layer = random_conv(1, 1, 1, 1, 0, 11);
    let x = ComplexTensor::new(&[1, 1, 1, 1], vec![0.7], vec![-0.3]).unwrap();
    let g = layer
        .gradients(&x, &ComplexTensor::new(&[1, 1, 1, 1], vec![1.0], vec![0.0]).unwrap())
        .unwrap();
    assert_eq!(g.weight_re[0], 0.7);
    assert_eq!(g.weight_im[0], 0.3);
    assert_eq!(g.bias_re[0], 1.0);
}

#[test]
fn conv_gradients_match_finite_differences() {
    let layer = random_conv(2, 3, 3, 1, 1, 12);
    let x = random_tensor(&[2, 2, 5, 4], 13);
    let probe_w = random_tensor(&[2, 3, 5, 4], 14);
    let g = layer.gradients(&x, &probe_w).unwrap();
    let (h, floor) = (1e-5, 1e-6);

    let err = check_tensor_grad(&x, &g.input, h, floor, |xp| probe(&probe_w, &complex_conv2d(xp, &layer).unwrap()));
    assert!(err < 1e-5, "input {err}");

    for which in 0..4 {
        let (values, analytic) = match which {
            0 => (layer.weight_re.value.clone(), g.weight_re.clone()),
            1 => (layer.weight_im.value.clone(), g.weight_im.clone()),
            2 => (layer.bias_re.value.clone(), g.bias_re.clone()),
            _ => (layer.bias_im.value.clone(), g.bias_im.clone()),
        };
        let err = check_slice_grad(&values, &analytic, h, floor, |v| {
            let mut l = layer.clone();
            match which {
                0 => l.weight_re.value = v.to_vec(),
                1 => l.weight_im.value = v.to_vec(),
                2 => l.bias_re.value = v.to_vec(),
                _ => l.bias_im.value = v.to_vec(),
            }
            probe(&probe_w, &complex_conv2d(&x, &l).unwrap())
        });
        assert!(err < 1e-5, "param {which}: {err}");
    }
}

#[test]
fn conv_commutes_with_global_phase() {
    let mut layer = random_conv(3, 2, 3, 1, 1, 15);
    layer.bias_re.value.fill(0.0);
    layer.bias_im.value.fill(0.0);
    let x = random_tensor(&[1, 3, 6, 6], 16);
    for phi in [FRAC_PI_2, FRAC_PI_4] {
        let rot = Complex64::from_polar(1.0, phi);
        let lhs = complex_conv2d(&x.scale(rot), &layer).unwrap();
        let rhs = complex_conv2d(&x, &layer).unwrap().scale(rot);
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn conv_matches_oracle_on_random_instances(
        seed in any::<u64>(),
        cin in 1usize..=4,
        cout in 1usize..=4,
        kidx in 0usize..3,
        h in 5usize..=8,
        w in 5usize..=8,
        b in 1usize..=2,
    ) {
        let k = [1, 3, 5][kidx];
        let layer = random_conv(cin, cout, k, 1, k / 2, seed);
        let x = random_tensor(&[b, cin, h, w], seed.wrapping_add(1));
        let diff = complex_conv2d(&x, &layer).unwrap().max_abs_diff(&conv_oracle(&x, &layer, 1, k / 2)).unwrap();
        prop_assert!(diff < 1e-12);
    }
}

fn channel_cov(t: &ComplexTensor, ch: usize) -> (f64, f64, f64, f64, f64) {
    let (b, c, h, w) = t.dims4().unwrap();
    let p = h * w;
    let n = (b * p) as f64;
    let idx: Vec<usize> = (0..b).flat_map(|bi| ((bi * c + ch) * p)..((bi * c + ch) * p + p)).collect();
    let mr = idx.iter().map(|&i| t.re()[i]).sum::<f64>() / n;
    let mi = idx.iter().map(|&i| t.im()[i]).sum::<f64>() / n;
    let (mut rr, mut ri, mut ii) = (0.0, 0.0, 0.0);
    for &i in &idx {
        let (x, y) = (t.re()[i] - mr, t.im()[i] - mi);
        rr += x * x;
        ri += x * y;
        ii += y * y;
    }
    (mr, mi, rr / n, ri / n, ii / n)
}

#[test]
fn batch_norm_whitens_to_half_identity() {
    let mut bn = ComplexBatchNorm::new(3);
    // correlated parts with unequal variances
    let base = random_tensor(&[4, 3, 6, 6], 20);
    let mixed = ComplexTensor::from_fn(base.shape(), |i| {
        let (a, b) = (base.re()[i], base.im()[i]);
        Complex64::new(2.0 * a + 0.3, 0.8 * a + 0.5 * b - 1.0)
    });
    bn.forward(&mixed, Mode::Train).unwrap();
    let white = bn.last_whitened().unwrap();
    for ch in 0..3 {
        let (mr, mi, rr, ri, ii) = channel_cov(white, ch);
        assert!(mr.abs() < 1e-12 && mi.abs() < 1e-12);
        assert!((rr - 0.5).abs() < 1e-6, "{rr}");
        assert!(ri.abs() < 1e-6, "{ri}");
        assert!((ii - 0.5).abs() < 1e-6, "{ii}");
    }
}

#[test]
fn batch_norm_fixed_point_with_default_affine() {
    let mut bn = ComplexBatchNorm::new(1);
    let x = random_tensor(&[2, 1, 8, 8], 21);
    let first = bn.forward(&x, Mode::Train).unwrap();
    // output of default Γ = I/√2 has covariance Γ (I/2) Γᵀ = I/4
    let (_, _, rr, ri, ii) = channel_cov(&first, 0);
    assert!((rr - 0.25).abs() < 1e-6 && ri.abs() < 1e-6 && (ii - 0.25).abs() < 1e-6);
    // re-normalizing an already whitened input is (nearly) a fixed point
    let white = bn.last_whitened().unwrap().clone();
    bn.forward(&white, Mode::Train).unwrap();
    let again = bn.last_whitened().unwrap();
    assert!(again.max_abs_diff(&white).unwrap() < 1e-5);
}

#[test]
fn batch_norm_constant_input_yields_beta() {
    let mut bn = ComplexBatchNorm::new(2);
    bn.beta.value = vec![0.25, -0.5, 1.0, 2.0];
    let x = ComplexTensor::from_fn(&[3, 2, 4, 4], |_| Complex64::new(1.5, -2.0));
    let y = bn.forward(&x, Mode::Train).unwrap();
    let (b, c, h, w) = y.dims4().unwrap();
    for bi in 0..b {
        for ch in 0..c {
            for i in 0..h * w {
                let z = y.get((bi * c + ch) * h * w + i);
                assert_eq!(z, Complex64::new(bn.beta.value[2 * ch], bn.beta.value[2 * ch + 1]));
            }
        }
    }
}

#[test]
fn batch_norm_rejects_wrong_channels() {
    let mut bn = ComplexBatchNorm::new(2);
    assert!(bn.forward(&random_tensor(&[1, 3, 2, 2], 1), Mode::Train).is_err());
}

fn randomize_affine(bn: &mut ComplexBatchNorm, seed: u64) {
    let mut r = rng(seed);
    for v in bn.gamma.value.iter_mut().chain(bn.beta.value.iter_mut()) {
        *v += r.gen_range(-0.3..0.3);
    }
}

#[test]
fn batch_norm_train_gradients_match_finite_differences() {
    let mut bn = ComplexBatchNorm::new(2);
    randomize_affine(&mut bn, 22);
    let base = random_tensor(&[2, 2, 3, 3], 23);
    let x = ComplexTensor::from_fn(base.shape(), |i| {
        Complex64::new(1.5 * base.re()[i] + 0.2, 0.6 * base.re()[i] + 0.7 * base.im()[i])
    });
    let w = random_tensor(x.shape(), 24);
    bn.forward(&x, Mode::Train).unwrap();
    bn.zero_grad();
    let gx = bn.backward(&w).unwrap();
    let reference = bn.clone();
    let eval = |xp: &ComplexTensor, b: &ComplexBatchNorm| {
        let mut b = b.clone();
        probe(&w, &b.forward(xp, Mode::Train).unwrap())
    };
    let err = check_tensor_grad(&x, &gx, 1e-5, 1e-6, |xp| eval(xp, &reference));
    assert!(err < 1e-5, "input {err}");
    let err = check_slice_grad(&reference.gamma.value, &reference.gamma.grad, 1e-5, 1e-6, |v| {
        let mut b = reference.clone();
        b.gamma.value = v.to_vec();
        eval(&x, &b)
    });
    assert!(err < 1e-5, "gamma {err}");
    let err = check_slice_grad(&reference.beta.value, &reference.beta.grad, 1e-5, 1e-6, |v| {
        let mut b = reference.clone();
        b.beta.value = v.to_vec();
        eval(&x, &b)
    });
    assert!(err < 1e-5, "beta {err}");
}

#[test]
fn batch_norm_eval_gradients_match_finite_differences() {
    let mut bn = ComplexBatchNorm::new(1);
    randomize_affine(&mut bn, 25);
    bn.running_mean.value = vec![0.1, -0.2];
    bn.running_cov.value = vec![0.9, 0.2, 0.5];
    let x = random_tensor(&[1, 1, 3, 3], 26);
    let w = random_tensor(x.shape(), 27);
    bn.forward(&x, Mode::Eval).unwrap();
    let gx = bn.backward(&w).unwrap();
    let reference = bn.clone();
    let err = check_tensor_grad(&x, &gx, 1e-5, 1e-6, |xp| {
        let mut b = reference.clone();
        probe(&w, &b.forward(xp, Mode::Eval).unwrap())
    });
    assert!(err < 1e-5, "{err}");
}

#[test]
fn crelu_per_part() {
    let x = ComplexTensor::new(&[2], vec![-1.0, 3.0], vec![2.0, 4.0]).unwrap();
    let y = crelu(&x);
    assert_eq!(y.get(0), Complex64::new(0.0, 2.0));
    assert_eq!(y.get(1), Complex64::new(3.0, 4.0));
    let r = random_tensor(&[3, 7], 30);
    assert_eq!(crelu(&crelu(&r)), crelu(&r));
}

#[test]
fn maxpool_pools_parts_independently() {
    let x = ComplexTensor::new(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0], vec![8.0, 7.0, 6.0, 5.0]).unwrap();
    let y = cmaxpool2(&x).unwrap();
    assert_eq!(y.shape(), &[1, 1, 1, 1]);
    assert_eq!(y.get(0), Complex64::new(4.0, 8.0));
    assert!(cmaxpool2(&ComplexTensor::zeros(&[1, 1, 3, 2])).is_err());
    let r = random_tensor(&[2, 2, 4, 6], 31);
    let once = cmaxpool2(&crelu(&r)).unwrap();
    assert_eq!(crelu(&once), once);
}

#[test]
fn upsample_nearest() {
    let x = ComplexTensor::new(&[1, 1, 1, 1], vec![0.5], vec![-2.0]).unwrap();
    let y = upsample2(&x).unwrap();
    assert_eq!(y.shape(), &[1, 1, 2, 2]);
    assert!(y.iter().all(|z| z == Complex64::new(0.5, -2.0)));
    let c = ComplexTensor::from_fn(&[1, 2, 4, 4], |_| Complex64::new(1.25, 0.5));
    assert_eq!(cmaxpool2(&upsample2(&c).unwrap()).unwrap(), c);
}

proptest! {
    #[test]
    fn pool_inverts_upsample_on_nonnegative(seed in any::<u64>()) {
        let x = crelu(&random_tensor(&[2, 3, 4, 4], seed));
        prop_assert_eq!(cmaxpool2(&upsample2(&x).unwrap()).unwrap(), x);
    }
}

#[test]
fn activation_gradients_match_finite_differences() {
    let x = random_tensor(&[1, 2, 4, 4], 40);
    let w_relu = random_tensor(x.shape(), 41);
    let mut relu = CRelu::default();
    relu.forward(&x);
    let g = relu.backward(&w_relu).unwrap();
    assert!(check_tensor_grad(&x, &g, 1e-6, 1e-6, |xp| probe(&w_relu, &crelu(xp))) < 1e-6);

    let w_pool = random_tensor(&[1, 2, 2, 2], 42);
    let mut pool = CMaxPool2::default();
    pool.forward(&x).unwrap();
    let g = pool.backward(&w_pool).unwrap();
    assert!(check_tensor_grad(&x, &g, 1e-6, 1e-6, |xp| probe(&w_pool, &cmaxpool2(xp).unwrap())) < 1e-6);

    let w_up = random_tensor(&[1, 2, 8, 8], 43);
    let mut up = Upsample2::default();
    up.forward(&x).unwrap();
    let g = up.backward(&w_up).unwrap();
    assert!(check_tensor_grad(&x, &g, 1e-6, 1e-6, |xp| probe(&w_up, &upsample2(xp).unwrap())) < 1e-6);
}

#[test]
fn dense_block_channel_wiring() {
    let mut r = rng(50);
    let block = DenseBlock::new(16, 8, 3, &mut r).unwrap();
    let ins: Vec<usize> = block.units.iter().map(|u| u.conv.in_channels()).collect();
    assert_eq!(ins, vec![16, 24, 32]);
    assert_eq!(block.out_channels(), 40);
}

#[test]
fn dense_block_zero_input_zero_output() {
    let mut r = rng(51);
    let mut block = DenseBlock::new(2, 3, 3, &mut r).unwrap();
    let y = block.forward(&ComplexTensor::zeros(&[2, 2, 4, 4]), Mode::Train).unwrap();
    assert_eq!(y.shape(), &[2, 11, 4, 4]);
    assert!(y.iter().all(|z| z.norm() == 0.0));
}

#[test]
fn dense_block_gradients_match_finite_differences() {
    let mut r = rng(52);
    let mut block = DenseBlock::new(2, 2, 3, &mut r).unwrap();
    let x = random_tensor(&[2, 2, 4, 4], 53);
    let w = random_tensor(&[2, 8, 4, 4], 54);
    block.forward(&x, Mode::Train).unwrap();
    block.zero_grad();
    let gx = block.backward(&w).unwrap();
    let reference = block.clone();
    let eval = |xp: &ComplexTensor, b: &DenseBlock| {
        let mut b = b.clone();
        probe(&w, &b.forward(xp, Mode::Train).unwrap())
    };
    let err = check_tensor_grad(&x, &gx, 1e-5, 1e-6, |xp| eval(xp, &reference));
    assert!(err < 1e-5, "input {err}");

    let mut names = Vec::new();
    reference.visit_params("", &mut |n, p| {
        if p.trainable {
            names.push((n.to_string(), p.value.clone(), p.grad.clone()));
        }
    });
    for (name, values, grads) in names {
        // conv biases feeding batch norm have an identically zero gradient, so compare
        // tiny values on an absolute scale
        let err = check_slice_grad(&values, &grads, 1e-5, 1e-4, |v| {
            let mut b = reference.clone();
            b.visit_params_mut("", &mut |n, p| {
                if n == name {
                    p.value = v.to_vec();
                }
            });
            eval(&x, &b)
        });
        assert!(err < 1e-5, "{name}: {err}");
    }
}
