use crate::ctensor::{ComplexTensor, FftPlan};
use crate::error::Result;
use crate::sampling::{apply_masks, SamplingMask};

/// Data-consistency layer: keeps acquired k-space samples and imputes the rest.
///
/// `ỹ = F x̃`, then `y(z) = y_u(z)` on Ω and `ỹ(z)` elsewhere, and the result is `F⁻¹ y`.
/// There are no learnable parameters. `masks` holds one mask shared by the batch or one per
/// batch item.
pub fn dcl(x_tilde: &ComplexTensor, y_u: &ComplexTensor, masks: &[SamplingMask], plan: &FftPlan) -> Result<ComplexTensor> {
    if x_tilde.shape() != y_u.shape() {
        return Err(crate::error::Error::mismatch(y_u.shape(), x_tilde.shape()));
    }
    let predicted = plan.forward(x_tilde)?;
    let kept = apply_masks(masks, y_u, false)?;
    let imputed = apply_masks(masks, &predicted, true)?;
    plan.inverse(&kept.add(&imputed)?)
}

/// Adjoint of [`dcl`] with respect to `x̃`: `F⁻¹ (1 − Ω) F g`. Acquired bins get no gradient.
pub fn dcl_backward(grad_x_r: &ComplexTensor, masks: &[SamplingMask], plan: &FftPlan) -> Result<ComplexTensor> {
    let k = plan.forward(grad_x_r)?;
    plan.inverse(&apply_masks(masks, &k, true)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{make_mask, undersample, MaskParams};
    use crate::testing::{check_tensor_grad, probe, random_tensor};

    fn setup(seed: u64) -> (FftPlan, SamplingMask, ComplexTensor, ComplexTensor) {
        let plan = FftPlan::new(16, 8).unwrap();
        let mask = make_mask(16, 8, &MaskParams { acceleration: 2.0, center_lines: 4, seed, ..Default::default() }).unwrap();
        let x_f = random_tensor(&[2, 1, 16, 8], seed);
        let y_u = undersample(&plan.forward(&x_f).unwrap(), &mask).unwrap();
        (plan, mask, x_f, y_u)
    }

    #[test]
    fn empty_mask_is_roundtrip() {
        let (plan, _, _, y_u) = setup(1);
        let x_t = random_tensor(&[2, 1, 16, 8], 2);
        let out = dcl(&x_t, &y_u, &[SamplingMask::empty(16, 8)], &plan).unwrap();
        assert!(out.max_abs_diff(&x_t).unwrap() < 1e-10);
    }

    #[test]
    fn full_mask_returns_acquired_image() {
        let plan = FftPlan::new(16, 8).unwrap();
        let x_f = random_tensor(&[1, 1, 16, 8], 3);
        let full = SamplingMask::full(16, 8);
        let y = plan.forward(&x_f).unwrap();
        let out = dcl(&random_tensor(&[1, 1, 16, 8], 4), &y, &[full], &plan).unwrap();
        assert!(out.max_abs_diff(&x_f).unwrap() < 1e-10);
        assert!(out.max_abs_diff(&plan.inverse(&y).unwrap()).unwrap() < 1e-10);
    }

    #[test]
    fn both_branches_hold_on_random_mask() {
        let (plan, mask, _, y_u) = setup(5);
        let x_t = random_tensor(&[2, 1, 16, 8], 6);
        let k_out = plan.forward(&dcl(&x_t, &y_u, std::slice::from_ref(&mask), &plan).unwrap()).unwrap();
        let k_pred = plan.forward(&x_t).unwrap();
        for i in 0..k_out.len() {
            let row = (i / 8) % 16;
            let want = if mask.rows()[row] { y_u.get(i) } else { k_pred.get(i) };
            assert!((k_out.get(i) - want).norm() < 1e-10);
        }
    }

    #[test]
    fn zero_filled_input_is_a_fixed_point() {
        let (plan, mask, _, y_u) = setup(7);
        let x_u = plan.inverse(&y_u).unwrap();
        assert!(dcl(&x_u, &y_u, std::slice::from_ref(&mask), &plan).unwrap().max_abs_diff(&x_u).unwrap() < 1e-10);
    }

    #[test]
    fn backward_limits() {
        let plan = FftPlan::new(16, 8).unwrap();
        let g = random_tensor(&[1, 1, 16, 8], 8);
        let full = dcl_backward(&g, &[SamplingMask::full(16, 8)], &plan).unwrap();
        assert!(full.iter().all(|z| z.norm() < 1e-12));
        let none = dcl_backward(&g, &[SamplingMask::empty(16, 8)], &plan).unwrap();
        assert!(none.max_abs_diff(&g).unwrap() < 1e-10);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let (plan, mask, _, y_u) = setup(9);
        let x_t = random_tensor(&[2, 1, 16, 8], 10);
        let w = random_tensor(&[2, 1, 16, 8], 11);
        let g = dcl_backward(&w, std::slice::from_ref(&mask), &plan).unwrap();
        let err = check_tensor_grad(&x_t, &g, 1e-5, 1e-6, |x| probe(&w, &dcl(x, &y_u, std::slice::from_ref(&mask), &plan).unwrap()));
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn per_item_masks() {
        let plan = FftPlan::new(16, 8).unwrap();
        let masks: Vec<_> = (0..2)
            .map(|s| make_mask(16, 8, &MaskParams { acceleration: 2.0, center_lines: 2, seed: 40 + s, ..Default::default() }).unwrap())
            .collect();
        assert_ne!(masks[0], masks[1]);
        let x_f = random_tensor(&[2, 1, 16, 8], 12);
        let x_t = random_tensor(&[2, 1, 16, 8], 13);
        let y_f = plan.forward(&x_f).unwrap();
        let y_u = apply_masks(&masks, &y_f, false).unwrap();
        let out = dcl(&x_t, &y_u, &masks, &plan).unwrap();
        for b in 0..2 {
            let one = |t: &ComplexTensor| {
                let s = t.slice_outer(b).unwrap();
                ComplexTensor::new(&[1, 1, 16, 8], s.re().to_vec(), s.im().to_vec()).unwrap()
            };
            let single = dcl(&one(&x_t), &one(&y_u), std::slice::from_ref(&masks[b]), &plan).unwrap();
            assert_eq!(one(&out), single);
        }
        assert!(dcl(&x_t, &y_u, &[masks[0].clone(), masks[1].clone(), masks[0].clone()], &plan).is_err());
        assert!(dcl(&x_t, &y_u, &[], &plan).is_err());
    }
}
