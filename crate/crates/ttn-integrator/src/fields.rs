//! Synthetic fields with known factored structure, used to exercise the
//! integrator: a family of networks whose factors rotate rigidly in time.
//! Its time derivative is a sum of single-node substitution networks, so it
//! has both a cheap factored form and a well-defined dense form, and the
//! exact solution at any time is available for error measurements.

use crate::error::IntegratorError;
use crate::field::{sum_terms_dense, VectorField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::cell::RefCell;
use tensor_core::{matrix_exp, mode_multiply, DenseTensor, Matrix, Mode};
use ttn_model::{random_skew_unit, Ttn};

enum GeneratorNode {
    Leaf(Matrix),
    Internal(Matrix, Vec<GeneratorNode>),
}

impl GeneratorNode {
    fn build(base: &Ttn, rng: &mut ChaCha8Rng, scale: f64) -> GeneratorNode {
        match base {
            Ttn::Leaf { basis, .. } => {
                GeneratorNode::Leaf(random_skew_unit(basis.rows(), rng).scale(scale))
            }
            Ttn::Internal { core, children } => {
                // the parent-facing extent; 1 at the root, so the root
                // connection tensor never rotates
                let w = random_skew_unit(core.dims()[0], rng).scale(scale);
                let sub = children.iter().map(|c| Self::build(c, rng, scale)).collect();
                GeneratorNode::Internal(w, sub)
            }
        }
    }

    fn zero(base: &Ttn) -> GeneratorNode {
        match base {
            Ttn::Leaf { basis, .. } => GeneratorNode::Leaf(Matrix::zeros(basis.rows(), basis.rows())),
            Ttn::Internal { core, children } => GeneratorNode::Internal(
                Matrix::zeros(core.dims()[0], core.dims()[0]),
                children.iter().map(Self::zero).collect(),
            ),
        }
    }
}

/// A(t): every leaf basis is premultiplied by exp(t W) for its own skew
/// generator W, and every connection tensor is rotated the same way on its
/// parent-facing mode. The induced field F(t, Y) = A'(t) is independent of
/// the state, and the integrator reproduces A(t) exactly up to round-off.
pub struct RotatingField {
    base: Ttn,
    generators: GeneratorNode,
    cache: RefCell<Vec<(u64, Ttn)>>,
}

const CACHE_CAP: usize = 64;

impl RotatingField {
    /// Unit-norm skew generators drawn per node from the seed.
    pub fn random(base: &Ttn, seed: u64) -> Self {
        Self::random_scaled(base, seed, 1.0)
    }

    /// Same, with all generators scaled by a common factor. Zero gives a
    /// stationary family.
    pub fn random_scaled(base: &Ttn, seed: u64, scale: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let generators = GeneratorNode::build(base, &mut rng, scale);
        RotatingField { base: base.clone(), generators, cache: RefCell::new(Vec::new()) }
    }

    pub fn stationary(base: &Ttn) -> Self {
        RotatingField {
            base: base.clone(),
            generators: GeneratorNode::zero(base),
            cache: RefCell::new(Vec::new()),
        }
    }

    /// Rotates only the node at pre-order index `target`; every other
    /// generator is zero. The root's parent-facing extent is 1, so target 0
    /// gives a stationary family.
    pub fn single_node(base: &Ttn, seed: u64, target: usize) -> Self {
        fn walk(node: &Ttn, next: &mut usize, rng: &mut ChaCha8Rng) -> GeneratorNode {
            let here = *next == 0;
            *next = next.wrapping_sub(1);
            match node {
                Ttn::Leaf { basis, .. } => {
                    let n = basis.rows();
                    GeneratorNode::Leaf(if here {
                        random_skew_unit(n, rng)
                    } else {
                        Matrix::zeros(n, n)
                    })
                }
                Ttn::Internal { core, children } => {
                    let r = core.dims()[0];
                    let w =
                        if here { random_skew_unit(r, rng) } else { Matrix::zeros(r, r) };
                    GeneratorNode::Internal(
                        w,
                        children.iter().map(|c| walk(c, next, rng)).collect(),
                    )
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut next = target;
        let generators = walk(base, &mut next, &mut rng);
        RotatingField { base: base.clone(), generators, cache: RefCell::new(Vec::new()) }
    }

    pub fn base(&self) -> &Ttn {
        &self.base
    }

    /// The family member at time t, with all factors rotated.
    pub fn value_at(&self, t: f64) -> Result<Ttn, IntegratorError> {
        let key = t.to_bits();
        if let Some((_, hit)) = self.cache.borrow().iter().find(|(k, _)| *k == key) {
            return Ok(hit.clone());
        }
        let rotated = rotate(&self.base, &self.generators, t)?;
        let mut cache = self.cache.borrow_mut();
        if cache.len() >= CACHE_CAP {
            cache.remove(0);
        }
        cache.push((key, rotated.clone()));
        Ok(rotated)
    }

    /// A'(t) as one substitution network per rotating node.
    fn derivative_terms(&self, t: f64) -> Result<Vec<Ttn>, IntegratorError> {
        let rotated = self.value_at(t)?;
        let mut out = Vec::new();
        substitute_derivatives(&rotated, &self.generators, &mut out)?;
        Ok(out)
    }
}

fn rotate(node: &Ttn, gen: &GeneratorNode, t: f64) -> Result<Ttn, IntegratorError> {
    match (node, gen) {
        (Ttn::Leaf { label, basis }, GeneratorNode::Leaf(w)) => {
            let rotation = matrix_exp(&w.scale(t))?;
            Ok(Ttn::Leaf { label: *label, basis: rotation.matmul(basis)? })
        }
        (Ttn::Internal { core, children }, GeneratorNode::Internal(w, gens)) => {
            let rotation = matrix_exp(&w.scale(t))?;
            let rotated_core = mode_multiply(core, Mode(0), &rotation)?;
            let rotated_children = children
                .iter()
                .zip(gens)
                .map(|(c, g)| rotate(c, g, t))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Ttn::Internal { core: rotated_core, children: rotated_children })
        }
        _ => Err(IntegratorError::shape("generator tree does not match the network")),
    }
}

/// Appends, for every node with a non-zero generator, the network equal to
/// `rotated` with that node's factor replaced by its time derivative.
fn substitute_derivatives(
    rotated: &Ttn,
    gen: &GeneratorNode,
    out: &mut Vec<Ttn>,
) -> Result<(), IntegratorError> {
    let own = subtree_derivatives(rotated, gen)?;
    out.extend(own);
    Ok(())
}

fn subtree_derivatives(node: &Ttn, gen: &GeneratorNode) -> Result<Vec<Ttn>, IntegratorError> {
    match (node, gen) {
        (Ttn::Leaf { label, basis }, GeneratorNode::Leaf(w)) => {
            if w.max_abs() == 0.0 {
                Ok(Vec::new())
            } else {
                Ok(vec![Ttn::Leaf { label: *label, basis: w.matmul(basis)? }])
            }
        }
        (Ttn::Internal { core, children }, GeneratorNode::Internal(w, gens)) => {
            let mut out = Vec::new();
            if w.max_abs() != 0.0 {
                out.push(Ttn::Internal {
                    core: mode_multiply(core, Mode(0), w)?,
                    children: children.clone(),
                });
            }
            for (j, (child, g)) in children.iter().zip(gens).enumerate() {
                for derived in subtree_derivatives(child, g)? {
                    let mut sub = children.clone();
                    sub[j] = derived;
                    out.push(Ttn::Internal { core: core.clone(), children: sub });
                }
            }
            Ok(out)
        }
        _ => Err(IntegratorError::shape("generator tree does not match the network")),
    }
}

impl VectorField for RotatingField {
    fn eval_dense(&self, t: f64, y: &DenseTensor) -> Result<DenseTensor, IntegratorError> {
        sum_terms_dense(&self.derivative_terms(t)?, y.dims())
    }

    fn eval_factored(&self, t: f64, _y: &Ttn) -> Result<Vec<Ttn>, IntegratorError> {
        self.derivative_terms(t)
    }

    fn supports_factored(&self) -> bool {
        true
    }

    fn constant_in_y(&self) -> bool {
        true
    }
}
