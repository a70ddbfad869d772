//! Orthonormality experiment: run the same rotating-family trajectories as
//! the exactness experiment and record the isometry deviation of every node
//! after every accepted step.

use anyhow::{anyhow, Result};
use ttn_integrator::{integrate, RotatingField, StepOptions, StepState, SubstepSolver};
use ttn_model::random_orthonormal_ttn;

use crate::config::ExperimentConfig;
use crate::exactness::FIELD_SALT;

pub struct DeviationRow {
    pub h: f64,
    pub t: f64,
    pub node: String,
    pub deviation: f64,
}

pub fn run_orthonormality(cfg: &ExperimentConfig) -> Result<Vec<DeviationRow>> {
    let base = random_orthonormal_ttn(cfg.shape(), cfg.seed);
    let field = RotatingField::random(&base, cfg.seed ^ FIELD_SALT);
    let solver = SubstepSolver::exact_increment();
    // The skip switch exists to demonstrate what happens without the
    // re-orthonormalization pass: deviations drift instead of staying pinned.
    let opts = StepOptions {
        skip_leaf_qr: cfg.skip_qr,
        orthonormality_limit: if cfg.skip_qr { None } else { Some(1e-11) },
    };

    let mut rows = Vec::new();
    for &h in &cfg.step_sizes {
        let initial = StepState { t: 0.0, y: base.clone() };
        let states = integrate(&initial, &field, cfg.t_end, h, &solver, &opts, None)
            .map_err(|e| anyhow!("h={h}: {e}"))?;
        for state in &states {
            for entry in state.y.check_orthonormal() {
                rows.push(DeviationRow {
                    h,
                    t: state.t,
                    node: entry.node,
                    deviation: entry.deviation,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ExperimentKind, RawConfig};

    fn config(skip_qr: bool) -> ExperimentConfig {
        let mut raw = RawConfig::new(ExperimentKind::Orthonormality, "[[1,2],3]");
        raw.dims = Some("4".into());
        raw.ranks = Some("2".into());
        raw.t_end = Some(0.4);
        raw.step_sizes = Some(vec![0.1]);
        raw.skip_qr = skip_qr;
        raw.validated().unwrap()
    }

    #[test]
    fn deviations_stay_pinned_with_the_qr_pass() {
        let rows = run_orthonormality(&config(false)).unwrap();
        // 5 trajectory states, 4 isometric nodes each (the root core carries
        // no constraint and is not reported).
        assert_eq!(rows.len(), 5 * 4);
        for row in &rows {
            assert!(row.deviation <= 1e-11, "{} at t={}: {}", row.node, row.t, row.deviation);
        }
    }

    #[test]
    fn skipping_the_qr_pass_lets_deviations_drift() {
        let rows = run_orthonormality(&config(true)).unwrap();
        let worst = rows.iter().map(|r| r.deviation).fold(0.0f64, f64::max);
        assert!(worst > 1e-8, "expected visible drift, worst={worst}");
    }
}
