use crate::error::IntegratorError;
use tensor_core::DenseTensor;
use ttn_model::Ttn;

/// Right-hand side F of the evolution equation, evaluated on the extended
/// state space of a node: tensors whose mode 0 carries the parent-facing
/// rank and whose remaining modes each carry one flattened child block.
///
/// A field always supports dense evaluation. Fields whose values admit a
/// tree-network form additionally expose `eval_factored`, which returns the
/// value as a sum of networks over the same tree as the input state; the
/// integrator then works with small factor contractions only and never forms
/// the dense value.
pub trait VectorField {
    fn eval_dense(&self, t: f64, y: &DenseTensor) -> Result<DenseTensor, IntegratorError>;

    /// Value as a list of networks whose sum is F(t, Y). Weights are folded
    /// into the terms. Only called when `supports_factored` is true.
    fn eval_factored(&self, t: f64, y: &Ttn) -> Result<Vec<Ttn>, IntegratorError> {
        let _ = (t, y);
        Err(IntegratorError::shape(
            "field has no factorized evaluation path",
        ))
    }

    fn supports_factored(&self) -> bool {
        false
    }

    /// True when F(t, Y) does not depend on Y. Enables exact-increment
    /// substep solving.
    fn constant_in_y(&self) -> bool {
        false
    }
}

/// F = 0. Useful as a stationarity check: one step must reproduce the
/// initial data exactly.
pub struct ZeroField;

impl VectorField for ZeroField {
    fn eval_dense(&self, _t: f64, y: &DenseTensor) -> Result<DenseTensor, IntegratorError> {
        Ok(DenseTensor::zeros(y.dims()))
    }

    fn eval_factored(&self, _t: f64, _y: &Ttn) -> Result<Vec<Ttn>, IntegratorError> {
        Ok(Vec::new())
    }

    fn supports_factored(&self) -> bool {
        true
    }

    fn constant_in_y(&self) -> bool {
        true
    }
}

/// F(t, Y) = G for a fixed dense tensor G.
pub struct ConstantField {
    pub value: DenseTensor,
}

impl VectorField for ConstantField {
    fn eval_dense(&self, _t: f64, y: &DenseTensor) -> Result<DenseTensor, IntegratorError> {
        if y.len() != self.value.len() {
            return Err(IntegratorError::shape(format!(
                "constant field of {} entries applied to state of {} entries",
                self.value.len(),
                y.len()
            )));
        }
        Ok(self.value.reshape(y.dims())?)
    }

    fn constant_in_y(&self) -> bool {
        true
    }
}

/// F(t, Y) = sum of fixed networks, independent of t and Y. The terms all
/// share one tree; any scalar weights are premultiplied into the top factor.
pub struct ConstantSumField {
    pub terms: Vec<Ttn>,
}

impl ConstantSumField {
    pub fn new(terms: Vec<Ttn>) -> Self {
        ConstantSumField { terms }
    }
}

impl VectorField for ConstantSumField {
    fn eval_dense(&self, _t: f64, y: &DenseTensor) -> Result<DenseTensor, IntegratorError> {
        let mut acc = DenseTensor::zeros(y.dims());
        for term in &self.terms {
            let dense = term.contract_extended()?;
            acc = acc.add_scaled(1.0, &dense.reshape(y.dims())?)?;
        }
        Ok(acc)
    }

    fn eval_factored(&self, _t: f64, _y: &Ttn) -> Result<Vec<Ttn>, IntegratorError> {
        Ok(self.terms.clone())
    }

    fn supports_factored(&self) -> bool {
        true
    }

    fn constant_in_y(&self) -> bool {
        true
    }
}

/// Sums factored field terms densely; empty sums give zeros of the requested
/// shape.
pub fn sum_terms_dense(
    terms: &[Ttn],
    dims: &[usize],
) -> Result<DenseTensor, IntegratorError> {
    let mut acc = DenseTensor::zeros(dims);
    for term in terms {
        let dense = term.contract_extended()?;
        acc = acc.add_scaled(1.0, &dense.reshape(dims)?)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tensor_core::DenseTensor;

    #[test]
    fn zero_field_is_zero_everywhere() {
        let y = DenseTensor::from_data(&[2, 3], (0..6).map(|k| k as f64).collect()).unwrap();
        let f = ZeroField.eval_dense(0.7, &y).unwrap();
        assert!(f.data().iter().all(|&v| v == 0.0));
        assert!(ZeroField.constant_in_y());
    }

    #[test]
    fn constant_field_ignores_time_and_state() {
        let g = DenseTensor::from_data(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let field = ConstantField { value: g.clone() };
        let y = DenseTensor::zeros(&[4]);
        let out = field.eval_dense(3.0, &y).unwrap();
        assert_eq!(out.data(), g.data());
        assert_eq!(out.dims(), &[4]);
    }

    #[test]
    fn constant_field_rejects_size_mismatch() {
        let g = DenseTensor::zeros(&[2, 2]);
        let field = ConstantField { value: g };
        let y = DenseTensor::zeros(&[5]);
        assert!(field.eval_dense(0.0, &y).is_err());
    }
}
