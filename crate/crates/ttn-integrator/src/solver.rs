use crate::error::IntegratorError;
use crate::field::VectorField;
use tensor_core::{DenseTensor, Matrix};

// Gauss-Legendre nodes and weights on [-1, 1], four points. Exact for
// polynomial integrands up to degree 7; for analytic integrands the panel
// error decays like h^9, which is below round-off at the step sizes used
// here.
const GL_NODES: [f64; 4] = [
    -0.8611363115940526,
    -0.3399810435848563,
    0.3399810435848563,
    0.8611363115940526,
];
const GL_WEIGHTS: [f64; 4] = [
    0.3478548451374538,
    0.6521451548625461,
    0.6521451548625461,
    0.3478548451374538,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    /// y1 = y0 + integral of F(t) dt, computed by Gauss-Legendre quadrature.
    /// Only valid when the field does not depend on Y.
    ExactIncrement,
    /// Classical fourth-order Runge-Kutta.
    Rk4,
}

/// How the inner substep differential equations are solved. `substeps`
/// partitions each substep interval into equal panels.
#[derive(Clone, Copy, Debug)]
pub struct SubstepSolver {
    pub method: SolveMethod,
    pub substeps: usize,
}

impl SubstepSolver {
    pub fn exact_increment() -> Self {
        SubstepSolver { method: SolveMethod::ExactIncrement, substeps: 1 }
    }

    pub fn rk4(substeps: usize) -> Self {
        SubstepSolver { method: SolveMethod::Rk4, substeps }
    }

    /// Exact increments when the field allows them, RK4 otherwise.
    pub fn auto(field: &dyn VectorField, substeps: usize) -> Self {
        if field.constant_in_y() {
            SubstepSolver { method: SolveMethod::ExactIncrement, substeps }
        } else {
            SubstepSolver::rk4(substeps)
        }
    }

    /// Advances y' = rhs(t, y) from (t0, y0) to t1. `constant_in_y` must
    /// reflect the actual rhs; exact increments reject rhs that depend on y.
    pub fn solve(
        &self,
        rhs: &mut dyn FnMut(f64, &DenseTensor) -> Result<DenseTensor, IntegratorError>,
        constant_in_y: bool,
        y0: &DenseTensor,
        t0: f64,
        t1: f64,
    ) -> Result<DenseTensor, IntegratorError> {
        if self.substeps == 0 {
            return Err(IntegratorError::shape("substep count must be at least 1"));
        }
        if t1 == t0 {
            return Ok(y0.clone());
        }
        match self.method {
            SolveMethod::ExactIncrement => {
                if !constant_in_y {
                    return Err(IntegratorError::SolverNotApplicable);
                }
                self.exact_panels(rhs, y0, t0, t1)
            }
            SolveMethod::Rk4 => self.rk4_panels(rhs, y0, t0, t1),
        }
    }

    fn exact_panels(
        &self,
        rhs: &mut dyn FnMut(f64, &DenseTensor) -> Result<DenseTensor, IntegratorError>,
        y0: &DenseTensor,
        t0: f64,
        t1: f64,
    ) -> Result<DenseTensor, IntegratorError> {
        let mut y = y0.clone();
        let dt = (t1 - t0) / self.substeps as f64;
        for k in 0..self.substeps {
            let a = t0 + k as f64 * dt;
            let b = if k + 1 == self.substeps { t1 } else { a + dt };
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            for (node, weight) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
                let f = rhs(mid + half * node, &y)?;
                y = y.add_scaled(weight * half, &f)?;
            }
        }
        Ok(y)
    }

    fn rk4_panels(
        &self,
        rhs: &mut dyn FnMut(f64, &DenseTensor) -> Result<DenseTensor, IntegratorError>,
        y0: &DenseTensor,
        t0: f64,
        t1: f64,
    ) -> Result<DenseTensor, IntegratorError> {
        let mut y = y0.clone();
        let dt = (t1 - t0) / self.substeps as f64;
        for k in 0..self.substeps {
            let a = t0 + k as f64 * dt;
            let h = if k + 1 == self.substeps { t1 - a } else { dt };
            let k1 = rhs(a, &y)?;
            let k2 = rhs(a + 0.5 * h, &y.add_scaled(0.5 * h, &k1)?)?;
            let k3 = rhs(a + 0.5 * h, &y.add_scaled(0.5 * h, &k2)?)?;
            let k4 = rhs(a + h, &y.add_scaled(h, &k3)?)?;
            let mut incr = k1;
            incr = incr.add_scaled(2.0, &k2)?;
            incr = incr.add_scaled(2.0, &k3)?;
            incr = incr.add_scaled(1.0, &k4)?;
            y = y.add_scaled(h / 6.0, &incr)?;
        }
        Ok(y)
    }
}

/// A matrix as a two-mode tensor; the buffers coincide because both sides
/// store the first index fastest.
pub(crate) fn matrix_as_tensor(m: &Matrix) -> DenseTensor {
    DenseTensor::from_data(&[m.rows(), m.cols()], m.data().to_vec()).unwrap()
}

pub(crate) fn tensor_as_matrix(t: &DenseTensor) -> Result<Matrix, IntegratorError> {
    if t.order() != 2 {
        return Err(IntegratorError::shape(format!(
            "expected a two-mode tensor, got order {}",
            t.order()
        )));
    }
    Ok(Matrix::from_col_major(t.dims()[0], t.dims()[1], t.data().to_vec())?)
}

/// Solves y' = F(t, y) between t0 and t1 with F evaluated densely.
pub fn solve_substep(
    field: &dyn VectorField,
    y0: &DenseTensor,
    t0: f64,
    t1: f64,
    solver: &SubstepSolver,
) -> Result<DenseTensor, IntegratorError> {
    let mut rhs = |t: f64, y: &DenseTensor| field.eval_dense(t, y);
    solver.solve(&mut rhs, field.constant_in_y(), y0, t0, t1)
}
