//! Convergence experiment: integrate a state-dependent rotation field whose
//! flow stays on the fixed-rank manifold, against a dense reference, across a
//! ladder of initial conditionings.
//!
//! The field applies one skew generator per leaf, each modulated by a factor
//! that depends on the current state. The modulation keeps the right-hand
//! side genuinely nonlinear (so the step error is visible and first order in
//! h) while every term remains tangent to the manifold, so the reference
//! trajectory never leaves it and the measured error is pure integrator
//! error, at every conditioning.

use anyhow::{anyhow, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tensor_core::{mode_multiply, qr_orthonormal, DenseTensor, Matrix, Mode};
use ttn_integrator::{
    integrate, IntegratorError, RotatingField, StepOptions, StepState, SubstepSolver, VectorField,
};
use ttn_model::{random_orthonormal_ttn, random_skew_unit, Ttn};
use ttn_reference::dense_integrate;

use crate::config::ExperimentConfig;

/// Smallest singular value imposed on the top interaction, from benign to
/// nearly degenerate. The step method never inverts these factors, so the
/// recorded errors should move together across the whole ladder.
pub const SIGMA_LADDER: [f64; 3] = [1e-2, 1e-4, 1e-6];

pub const MIX_SALT: u64 = 0x243f_6a88_85a3_08d3;
const CONDITION_SALT: u64 = 0x1319_8a2e_0370_7344;

/// Substeps handed to the classical solver inside each subflow.
const SUBSTEPS: usize = 6;

/// Reference resolution: the dense integrator checks itself by halving, so
/// this only needs to be comfortably finer than the smallest step size.
const REF_DIVISIONS: f64 = 512.0;

pub struct ConvergeRow {
    pub sigma: f64,
    pub h: f64,
    pub t: f64,
    pub abs_error: f64,
    pub rel_error: f64,
}

/// Per-leaf rotations with state-modulated speeds, plus a rotating carrier
/// family. Each term replaces one leaf factor U_ℓ by W_ℓ U_ℓ, which is a
/// tangent direction at any full-rank point, so the flow preserves tree rank.
pub struct MixedRotations {
    base: RotatingField,
    rho: f64,
    gens: Vec<Matrix>,
    phases: Vec<f64>,
    wide_dims: Vec<usize>,
}

impl MixedRotations {
    pub fn new(base: RotatingField, rho: f64, seed: u64) -> Self {
        let leaf_dims = base.base().leaf_dims();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gens: Vec<Matrix> =
            leaf_dims.iter().map(|&d| random_skew_unit(d, &mut rng)).collect();
        let phases: Vec<f64> =
            leaf_dims.iter().map(|_| rng.gen::<f64>() * std::f64::consts::TAU).collect();
        let mut wide_dims = Vec::with_capacity(leaf_dims.len() + 1);
        wide_dims.push(1);
        wide_dims.extend(leaf_dims);
        MixedRotations { base, rho, gens, phases, wide_dims }
    }
}

impl VectorField for MixedRotations {
    fn eval_dense(&self, t: f64, y: &DenseTensor) -> Result<DenseTensor, IntegratorError> {
        let mut acc = self.base.eval_dense(t, y)?;
        if self.rho == 0.0 {
            return Ok(acc);
        }
        // Free reshape: the buffer is laid out first-index-fastest, so any
        // merge of leaf modes linearizes identically.
        let wide = y.reshape(&self.wide_dims)?;
        let y_norm2 = y.inner(y)?;
        for (l, gen) in self.gens.iter().enumerate() {
            let rotated = mode_multiply(&wide, Mode(l + 1), gen)?;
            let q = rotated.inner(&rotated)? / (1.0 + y_norm2);
            let alpha = 1.0 + 0.5 * (t + self.phases[l]).sin() * q;
            acc = acc.add_scaled(self.rho * alpha, &rotated.reshape(y.dims())?)?;
        }
        Ok(acc)
    }

    fn constant_in_y(&self) -> bool {
        self.rho == 0.0 && self.base.constant_in_y()
    }
}

/// Replace the top interaction of a fresh orthonormal network by one with a
/// geometric singular-value ladder running from 1 down to `sigma`, keeping
/// unit overall norm. All other factors stay orthonormal, so the smallest
/// singular value of the network's top matricization is `sigma` up to the
/// ladder normalization.
pub fn conditioned_state(cfg: &ExperimentConfig, sigma: f64) -> Result<Ttn> {
    let fresh = random_orthonormal_ttn(cfg.shape(), cfg.seed);
    let Ttn::Internal { core, children } = fresh else {
        return Err(anyhow!("tree: a single leaf has no interaction to condition"));
    };
    let dims = core.dims().to_vec();
    let rows = dims[1];
    let cols: usize = dims[2..].iter().product();
    let k = rows.min(cols);

    let mut sv = vec![1.0; k];
    if k > 1 {
        for (i, v) in sv.iter_mut().enumerate() {
            *v = sigma.powf(i as f64 / (k - 1) as f64);
        }
    }
    let scale = 1.0 / sv.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ CONDITION_SALT);
    let (u, _) = qr_orthonormal(&normal_matrix(rows, k, &mut rng)).map_err(|e| anyhow!("{e}"))?;
    let (v, _) = qr_orthonormal(&normal_matrix(cols, k, &mut rng)).map_err(|e| anyhow!("{e}"))?;
    let mut vs = v;
    for j in 0..k {
        for i in 0..cols {
            vs[(i, j)] *= sv[j] * scale;
        }
    }
    let c = u.matmul(&vs.transpose()).map_err(|e| anyhow!("{e}"))?;
    // A col-major (rows × cols) buffer and the first-index-fastest core
    // buffer coincide, so the matrix data drops straight into the core dims.
    let core = DenseTensor::from_data(&dims, c.into_data()).map_err(|e| anyhow!("{e}"))?;
    Ok(Ttn::Internal { core, children })
}

fn normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn run_converge(cfg: &ExperimentConfig) -> Result<Vec<ConvergeRow>> {
    let mut rows = Vec::new();
    for &sigma in &SIGMA_LADDER {
        let y0 = conditioned_state(cfg, sigma)?;
        let field = MixedRotations::new(RotatingField::stationary(&y0), 1.0, cfg.seed ^ MIX_SALT);
        let reference = dense_integrate(
            &y0.contract().map_err(|e| anyhow!("{e}"))?,
            |t, a| field.eval_dense(t, a).expect("dense evaluation on the reference path"),
            0.0,
            cfg.t_end,
            cfg.t_end / REF_DIVISIONS,
        )
        .map_err(|e| anyhow!("sigma={sigma}: {e}"))?;
        let ref_norm = reference.norm();

        for &h in &cfg.step_sizes {
            let solver = SubstepSolver::auto(&field, SUBSTEPS);
            let initial = StepState { t: 0.0, y: y0.clone() };
            let states =
                integrate(&initial, &field, cfg.t_end, h, &solver, &StepOptions::default(), None)
                    .map_err(|e| anyhow!("sigma={sigma} h={h}: {e}"))?;
            let last = states.last().expect("trajectory includes the initial state");
            let abs = last
                .y
                .contract()
                .map_err(|e| anyhow!("{e}"))?
                .sub(&reference)
                .map_err(|e| anyhow!("{e}"))?
                .norm();
            rows.push(ConvergeRow {
                sigma,
                h,
                t: last.t,
                abs_error: abs,
                rel_error: if ref_norm > 0.0 { abs / ref_norm } else { abs },
            });
        }
    }
    Ok(rows)
}

/// Least-squares slope of log(err) against log(h).
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(h, e) in points {
        let (x, y) = (h.ln(), e.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ExperimentKind, RawConfig};

    fn small_config(step_sizes: Vec<f64>) -> ExperimentConfig {
        let mut raw = RawConfig::new(ExperimentKind::Converge, "[[1,2],3]");
        raw.dims = Some("4".into());
        raw.ranks = Some("2".into());
        raw.seed = Some(11);
        raw.t_end = Some(0.5);
        raw.step_sizes = Some(step_sizes);
        raw.validated().unwrap()
    }

    #[test]
    fn zero_coupling_reduces_to_the_stationary_family() {
        let cfg = small_config(vec![0.25]);
        let y0 = conditioned_state(&cfg, 1e-2).unwrap();
        let field = MixedRotations::new(RotatingField::stationary(&y0), 0.0, 5);
        assert!(field.constant_in_y());
        let solver = SubstepSolver::auto(&field, 4);
        let initial = StepState { t: 0.0, y: y0.clone() };
        let states =
            integrate(&initial, &field, 0.5, 0.25, &solver, &StepOptions::default(), None)
                .unwrap();
        let drift = states
            .last()
            .unwrap()
            .y
            .contract()
            .unwrap()
            .sub(&y0.contract().unwrap())
            .unwrap()
            .norm();
        assert!(drift <= 1e-12, "drift {drift}");
    }

    #[test]
    fn conditioned_state_has_unit_norm_and_the_requested_floor() {
        let cfg = small_config(vec![0.25]);
        let y0 = conditioned_state(&cfg, 1e-4).unwrap();
        let dense = y0.contract().unwrap();
        assert!((dense.norm() - 1.0).abs() <= 1e-12);
        assert!(y0.max_deviation() <= 1e-13);
    }

    #[test]
    fn errors_shrink_with_the_step_size_at_every_conditioning() {
        let cfg = small_config(vec![0.25, 0.125]);
        let rows = run_converge(&cfg).unwrap();
        assert_eq!(rows.len(), SIGMA_LADDER.len() * 2);
        for pair in rows.chunks(2) {
            assert!(
                pair[0].abs_error > pair[1].abs_error,
                "sigma={}: {} vs {}",
                pair[0].sigma,
                pair[0].abs_error,
                pair[1].abs_error
            );
        }
    }

    #[test]
    fn slope_fit_recovers_an_exact_power_law() {
        let pts: Vec<(f64, f64)> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&h: &f64| (h, 3.0 * h.powf(1.5)))
            .collect();
        assert!((log_log_slope(&pts) - 1.5).abs() <= 1e-12);
    }
}
