/// A named tensor owned by a layer.
///
/// Non-trainable params hold running statistics; they are saved in checkpoints but never
/// touched by the optimizer.
#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub shape: Vec<usize>,
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
    pub trainable: bool,
}

impl Param {
    pub fn new(shape: &[usize], value: Vec<f64>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), value.len());
        let grad = vec![0.0; value.len()];
        Self {
            shape: shape.to_vec(),
            value,
            grad,
            trainable: true,
        }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::new(shape, vec![0.0; shape.iter().product()])
    }

    pub fn buffer(shape: &[usize], value: Vec<f64>) -> Self {
        Self {
            trainable: false,
            ..Self::new(shape, value)
        }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

/// Anything that owns [`Param`]s. Names are dot-joined paths such as `enc0.block.unit1.conv.weight_re`.
pub trait Module {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param));
    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param));

    fn zero_grad(&mut self) {
        self.visit_params_mut("", &mut |_, p| p.zero_grad());
    }

    /// Number of trainable scalars.
    fn num_parameters(&self) -> usize {
        let mut n = 0;
        self.visit_params("", &mut |_, p| {
            if p.trainable {
                n += p.len();
            }
        });
        n
    }
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}
