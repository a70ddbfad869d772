//! Full-tensor reference integration: classical RK4 with uniform steps,
//! accepted only if halving the step barely moves the endpoint.

use crate::error::OracleError;
use tensor_core::DenseTensor;

pub const DENSE_BUDGET: usize = 20_000_000;

const GATE: f64 = 1e-10;

/// Integrates Ȧ = F(t, A) from `t0` to `t_end` with steps of at most
/// `h_ref`, then repeats with half the step. Returns the finer endpoint if
/// the two agree to 1e-10 relative, else fails the self-consistency gate.
pub fn dense_integrate<F>(
    a0: &DenseTensor,
    field: F,
    t0: f64,
    t_end: f64,
    h_ref: f64,
) -> Result<DenseTensor, OracleError>
where
    F: Fn(f64, &DenseTensor) -> DenseTensor,
{
    if a0.len() > DENSE_BUDGET {
        return Err(OracleError::BudgetExceeded {
            entries: a0.len() as u128,
            budget: DENSE_BUDGET,
        });
    }
    let span = t_end - t0;
    if span == 0.0 {
        return Ok(a0.clone());
    }
    let steps = (span.abs() / h_ref).ceil().max(1.0) as usize;
    let coarse = rk4(a0, &field, t0, span, steps)?;
    let fine = rk4(a0, &field, t0, span, steps * 2)?;
    let denom = fine.norm().max(f64::EPSILON);
    let rel_change = coarse.sub(&fine)?.norm() / denom;
    if rel_change > GATE {
        return Err(OracleError::SelfConsistency { rel_change, limit: GATE });
    }
    Ok(fine)
}

fn rk4<F>(
    a0: &DenseTensor,
    field: &F,
    t0: f64,
    span: f64,
    steps: usize,
) -> Result<DenseTensor, OracleError>
where
    F: Fn(f64, &DenseTensor) -> DenseTensor,
{
    let h = span / steps as f64;
    let mut y = a0.clone();
    for n in 0..steps {
        let t = t0 + h * n as f64;
        let k1 = field(t, &y);
        let k2 = field(t + 0.5 * h, &y.add_scaled(0.5 * h, &k1)?);
        let k3 = field(t + 0.5 * h, &y.add_scaled(0.5 * h, &k2)?);
        let k4 = field(t + h, &y.add_scaled(h, &k3)?);
        let mut incr = k1;
        incr = incr.add_scaled(2.0, &k2)?;
        incr = incr.add_scaled(2.0, &k3)?;
        incr = incr.add_scaled(1.0, &k4)?;
        y = y.add_scaled(h / 6.0, &incr)?;
    }
    Ok(y)
}
