use crate::context::{RestrictedField, RestrictionContext};
use crate::error::IntegratorError;
use crate::field::{sum_terms_dense, VectorField};
use std::cell::Cell;
use ttn_model::Ttn;

/// Samples the agreement between the contraction route and the dense route
/// for restricted field evaluations during a run. Each check picks one child
/// of the current root (rotating through them) and evaluates the restricted
/// field both ways: embed and restrict in network form against prolong,
/// evaluate and restrict through the full product space. The dense route is
/// authoritative; a disagreement beyond the tolerance aborts the run. Checks
/// are spaced out because the dense route costs the full product dimension.
pub struct AgreementProbe {
    every: usize,
    tol: f64,
    calls: Cell<usize>,
    checks: Cell<usize>,
    worst: Cell<f64>,
}

impl AgreementProbe {
    pub fn new(every: usize, tol: f64) -> Self {
        AgreementProbe {
            every: every.max(1),
            tol,
            calls: Cell::new(0),
            checks: Cell::new(0),
            worst: Cell::new(0.0),
        }
    }

    /// Called once per completed step; the first call always checks.
    pub fn observe(
        &self,
        field: &dyn VectorField,
        t: f64,
        y: &Ttn,
    ) -> Result<(), IntegratorError> {
        let n = self.calls.get();
        self.calls.set(n + 1);
        if !field.supports_factored() || n % self.every != 0 {
            return Ok(());
        }
        let child_count = match y {
            Ttn::Internal { children, .. } => children.len(),
            Ttn::Leaf { .. } => {
                return Err(IntegratorError::shape("probe expects a whole network"))
            }
        };
        let ctx = RestrictionContext::new(y, 1 + self.checks.get() % child_count)?;
        let restricted = RestrictedField::new(field, &ctx);
        let at = ctx.restrict_initial()?;
        let terms = restricted.eval_factored(t, &at)?;
        let dense = restricted.eval_dense(t, &at.contract_extended()?)?;
        let factored = sum_terms_dense(&terms, dense.dims())?;
        let rel = factored.sub(&dense)?.norm() / dense.norm().max(1.0);
        self.checks.set(self.checks.get() + 1);
        self.worst.set(self.worst.get().max(rel));
        if rel > self.tol {
            return Err(IntegratorError::FactoredDenseMismatch { t, rel, tol: self.tol });
        }
        Ok(())
    }

    pub fn checks(&self) -> usize {
        self.checks.get()
    }

    pub fn worst_rel(&self) -> f64 {
        self.worst.get()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ConstantSumField;
    use tensor_core::DenseTensor;
    use ttn_model::{parse_tree, random_orthonormal_ttn, DimSpec, RankSpec, RankedTree};

    fn sample() -> Ttn {
        let tree = parse_tree("[1,2]").unwrap();
        let shape = RankedTree::new(&tree, &DimSpec::Uniform(3), &RankSpec::Uniform(2)).unwrap();
        random_orthonormal_ttn(&shape, 4)
    }

    #[test]
    fn matching_routes_pass_and_are_counted() {
        let y = sample();
        let term = random_orthonormal_ttn(
            &RankedTree::new(&parse_tree("[1,2]").unwrap(), &DimSpec::Uniform(3), &RankSpec::Uniform(2))
                .unwrap(),
            9,
        );
        let field = ConstantSumField::new(vec![term]);
        let probe = AgreementProbe::new(2, 1e-11);
        for k in 0..5 {
            probe.observe(&field, k as f64 * 0.1, &y).unwrap();
        }
        assert_eq!(probe.checks(), 3);
        assert!(probe.worst_rel() <= 1e-13);
    }

    #[test]
    fn diverging_routes_abort() {
        struct Liar {
            term: Ttn,
        }
        impl VectorField for Liar {
            fn eval_dense(
                &self,
                _t: f64,
                y: &DenseTensor,
            ) -> Result<DenseTensor, IntegratorError> {
                Ok(DenseTensor::zeros(y.dims()))
            }
            fn eval_factored(&self, _t: f64, _y: &Ttn) -> Result<Vec<Ttn>, IntegratorError> {
                Ok(vec![self.term.clone()])
            }
            fn supports_factored(&self) -> bool {
                true
            }
        }
        let y = sample();
        let field = Liar { term: sample() };
        let probe = AgreementProbe::new(1, 1e-11);
        let err = probe.observe(&field, 0.0, &y);
        assert!(matches!(err, Err(IntegratorError::FactoredDenseMismatch { .. })));
    }
}
