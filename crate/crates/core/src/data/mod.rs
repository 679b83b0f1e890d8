//! Synthetic phantoms, rigid augmentation, training pairs and file formats.

mod augment;
mod export;
mod phantom;
mod tensor_file;

pub use augment::{rigid_augment, RigidTransform, MAX_ROTATION_DEG, MAX_SHIFT_PX};
pub use export::{load_gray, load_mask, magnitude_image, save_gray, save_magnitude, save_mask, save_rgb, TENSOR_EXT};
pub use phantom::{gen_phantom, phantom_seed};
pub use tensor_file::{load_tensor, read_tensor, save_tensor, write_tensor, TENSOR_MAGIC, TENSOR_VERSION};

use crate::ctensor::{ComplexTensor, FftPlan};
use crate::error::Result;
use crate::sampling::{undersample, zero_fill_recon, SamplingMask};

/// One training or evaluation example.
#[derive(Clone, Debug, PartialEq)]
pub struct Pair {
    pub x_f: ComplexTensor,
    pub y_u: ComplexTensor,
    pub x_u: ComplexTensor,
}

/// Retrospectively undersamples a fully sampled image.
pub fn make_pair(x_f: &ComplexTensor, mask: &SamplingMask, plan: &FftPlan) -> Result<Pair> {
    let y_u = undersample(&plan.forward(x_f)?, mask)?;
    let x_u = zero_fill_recon(&y_u, plan)?;
    Ok(Pair {
        x_f: x_f.clone(),
        y_u,
        x_u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{make_mask, MaskParams};

    #[test]
    fn pair_is_determined_by_seeds_and_consistent_on_mask() {
        let build = |ps, ms, aug| {
            let x = rigid_augment(&gen_phantom(32, 32, ps).unwrap(), aug).unwrap();
            let mask = make_mask(32, 32, &MaskParams { seed: ms, center_lines: 4, ..Default::default() }).unwrap();
            (make_pair(&x, &mask, &FftPlan::new(32, 32).unwrap()).unwrap(), mask)
        };
        let (a, mask) = build(1, 2, 3);
        assert_eq!(a, build(1, 2, 3).0);
        assert_ne!(a, build(1, 2, 4).0);
        assert_ne!(a, build(1, 5, 3).0);

        let plan = FftPlan::new(32, 32).unwrap();
        let y_f = plan.forward(&a.x_f).unwrap();
        let y_x = plan.forward(&a.x_u).unwrap();
        let lhs = undersample(&y_f, &mask).unwrap();
        let rhs = mask.apply(&y_x).unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
    }
}
