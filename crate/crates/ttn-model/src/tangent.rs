//! First-order perturbations of a network: one delta per factor, evaluating
//! to the sum of single-factor substitutions (the derivative of a factor
//! path, hence always tangent to the fixed-rank set at the base).

use crate::error::ModelError;
use crate::random::normal_tensor;
use crate::ttn::{combination_norm, Ttn};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tensor_core::{DenseTensor, Matrix};

/// A base network plus one perturbation per node, stored as a second network
/// of identical shape (bases hold δU, cores hold δC).
#[derive(Debug, Clone, PartialEq)]
pub struct TangentTtn {
    pub base: Ttn,
    pub delta: Ttn,
}

impl TangentTtn {
    /// The substitution networks whose sum is the tangent value: term k is
    /// the base with node k's factor replaced by its delta (pre-order).
    pub fn summands(&self) -> Vec<Ttn> {
        let total = count_nodes(&self.base);
        (0..total)
            .map(|k| {
                let mut next = k;
                substitute(&self.base, &self.delta, &mut next)
            })
            .collect()
    }

    /// Dense value: Σ_k contract(summand k).
    pub fn contract_tangent(&self) -> Result<DenseTensor, ModelError> {
        let mut acc: Option<DenseTensor> = None;
        for term in self.summands() {
            let dense = term.contract()?;
            acc = Some(match acc {
                None => dense,
                Some(a) => a.add_scaled(1.0, &dense)?,
            });
        }
        Ok(acc.expect("a network has at least one node"))
    }

    /// Exact Euclidean norm of the tangent value, in factorized form.
    pub fn norm(&self) -> Result<f64, ModelError> {
        let summands = self.summands();
        let terms: Vec<(f64, &Ttn)> = summands.iter().map(|s| (1.0, s)).collect();
        combination_norm(&terms)
    }

    /// The factor path h ↦ (all factors base + h·delta); its derivative at
    /// h = 0 is this tangent's value.
    pub fn path(&self, h: f64) -> Ttn {
        shift(&self.base, &self.delta, h)
    }

    pub fn scale(&self, factor: f64) -> TangentTtn {
        TangentTtn { base: self.base.clone(), delta: scale_all(&self.delta, factor) }
    }
}

fn count_nodes(node: &Ttn) -> usize {
    match node {
        Ttn::Leaf { .. } => 1,
        Ttn::Internal { children, .. } => {
            1 + children.iter().map(count_nodes).sum::<usize>()
        }
    }
}

/// Replaces the factor of pre-order node `*next == 0` by its delta,
/// decrementing `*next` as nodes are passed.
fn substitute(base: &Ttn, delta: &Ttn, next: &mut usize) -> Ttn {
    let replace_here = *next == 0;
    *next = next.wrapping_sub(1);
    match (base, delta) {
        (Ttn::Leaf { label, basis }, Ttn::Leaf { basis: d, .. }) => Ttn::Leaf {
            label: *label,
            basis: if replace_here { d.clone() } else { basis.clone() },
        },
        (
            Ttn::Internal { core, children },
            Ttn::Internal { core: dcore, children: dchildren },
        ) => Ttn::Internal {
            core: if replace_here { dcore.clone() } else { core.clone() },
            children: children
                .iter()
                .zip(dchildren)
                .map(|(c, d)| substitute(c, d, next))
                .collect(),
        },
        _ => unreachable!("base and delta share one tree"),
    }
}

fn shift(base: &Ttn, delta: &Ttn, h: f64) -> Ttn {
    match (base, delta) {
        (Ttn::Leaf { label, basis }, Ttn::Leaf { basis: d, .. }) => Ttn::Leaf {
            label: *label,
            basis: basis.add(&d.scale(h)).expect("same shape"),
        },
        (
            Ttn::Internal { core, children },
            Ttn::Internal { core: dcore, children: dchildren },
        ) => Ttn::Internal {
            core: core.add_scaled(h, dcore).expect("same shape"),
            children: children
                .iter()
                .zip(dchildren)
                .map(|(c, d)| shift(c, d, h))
                .collect(),
        },
        _ => unreachable!("base and delta share one tree"),
    }
}

fn scale_all(node: &Ttn, factor: f64) -> Ttn {
    match node {
        Ttn::Leaf { label, basis } => {
            Ttn::Leaf { label: *label, basis: basis.scale(factor) }
        }
        Ttn::Internal { core, children } => Ttn::Internal {
            core: core.scale(factor),
            children: children.iter().map(|c| scale_all(c, factor)).collect(),
        },
    }
}

/// Random tangent at `x` with prescribed value norm. Deltas are drawn from
/// one ChaCha8 stream in pre-order, then rescaled so the dense tangent value
/// has norm exactly `scale`; scale 0 gives identically zero deltas.
pub fn tangent_sample(x: &Ttn, seed: u64, scale: f64) -> Result<TangentTtn, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delta = sample_like(x, &mut rng);
    if scale == 0.0 {
        return Ok(TangentTtn { base: x.clone(), delta: scale_all(&delta, 0.0) });
    }
    let raw = TangentTtn { base: x.clone(), delta };
    let norm = raw.norm()?;
    if norm == 0.0 {
        return Err(ModelError::validation(
            "degenerate tangent sample has zero norm",
        ));
    }
    Ok(raw.scale(scale / norm))
}

fn sample_like(node: &Ttn, rng: &mut ChaCha8Rng) -> Ttn {
    match node {
        Ttn::Leaf { label, basis } => {
            let data = (0..basis.rows() * basis.cols())
                .map(|_| rng.sample(StandardNormal))
                .collect();
            Ttn::Leaf {
                label: *label,
                basis: Matrix::from_col_major(basis.rows(), basis.cols(), data)
                    .expect("length matches"),
            }
        }
        Ttn::Internal { core, children } => Ttn::Internal {
            core: normal_tensor(core.dims(), rng),
            children: children.iter().map(|c| sample_like(c, rng)).collect(),
        },
    }
}
