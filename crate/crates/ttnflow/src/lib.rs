//! Command-line harness for the tree tensor network splitting integrator:
//! four reproducible experiments (exactness, retraction, convergence,
//! orthonormality) with deterministic CSV output.

pub mod config;
pub mod converge;
pub mod exactness;
pub mod orthonorm;
pub mod output;
pub mod retract;

pub use config::{ExperimentConfig, ExperimentKind, RawConfig};

use anyhow::Result;
use output::{field, real, render};

/// Run the configured experiment and render its CSV document, header first.
pub fn run_to_csv(cfg: &ExperimentConfig) -> Result<String> {
    match cfg.experiment {
        ExperimentKind::Exactness => {
            let run = exactness::run_exactness(cfg)?;
            let rows = run
                .rows
                .iter()
                .map(|r| {
                    vec![
                        "exactness".to_string(),
                        real(r.h),
                        real(r.t),
                        real(r.abs_error),
                        real(r.rel_error),
                    ]
                })
                .collect::<Vec<_>>();
            Ok(render("experiment,h,t,abs_error,rel_error", &rows))
        }
        ExperimentKind::Converge => {
            let rows = converge::run_converge(cfg)?
                .iter()
                .map(|r| {
                    vec![
                        format!("converge_sigma{:e}", r.sigma),
                        real(r.h),
                        real(r.t),
                        real(r.abs_error),
                        real(r.rel_error),
                    ]
                })
                .collect::<Vec<_>>();
            Ok(render("experiment,h,t,abs_error,rel_error", &rows))
        }
        ExperimentKind::Retract => {
            let rows = retract::run_retract(cfg)?
                .iter()
                .map(|r| {
                    vec![
                        "retract".to_string(),
                        real(r.b_norm),
                        real(r.err_integrator),
                        real(r.err_truncation),
                        real(r.err_difference),
                    ]
                })
                .collect::<Vec<_>>();
            Ok(render(
                "experiment,b_norm,err_integrator,err_truncation,err_difference",
                &rows,
            ))
        }
        ExperimentKind::Orthonormality => {
            let rows = orthonorm::run_orthonormality(cfg)?
                .iter()
                .map(|r| {
                    vec![
                        "orthonormality".to_string(),
                        real(r.h),
                        real(r.t),
                        field(&r.node),
                        real(r.deviation),
                    ]
                })
                .collect::<Vec<_>>();
            Ok(render("experiment,h,t,node,deviation", &rows))
        }
    }
}
