//! Experiment configuration: defaults, the named tree preset, and validation
//! that names the offending key in every error message.

use anyhow::{anyhow, bail, Result};
use std::collections::BTreeMap;
use std::path::PathBuf;
use ttn_model::{parse_tree_spec, DimSpec, RankSpec, RankedTree};

/// The standard demonstration shape: three branches of mixed depth over six
/// leaves, run with uniform dimension 16 and uniform rank 5.
pub const SAMPLE_TREE: &str = "[[1,3,5],[4,2],6]";

pub const DEFAULT_DIMS: usize = 16;
pub const DEFAULT_RANKS: usize = 5;
pub const DEFAULT_STEP_SIZES: [f64; 3] = [0.1, 0.01, 0.001];
pub const DEFAULT_B_NORMS: [f64; 4] = [1e-1, 5e-2, 2.5e-2, 1.25e-2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ExperimentKind {
    Exactness,
    Retract,
    Converge,
    Orthonormality,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Exactness => "exactness",
            ExperimentKind::Retract => "retract",
            ExperimentKind::Converge => "converge",
            ExperimentKind::Orthonormality => "orthonormality",
        }
    }
}

/// Raw argument values as collected from the command line (or built directly
/// in tests); `validated` turns them into a runnable configuration.
#[derive(Clone, Debug)]
pub struct RawConfig {
    pub experiment: ExperimentKind,
    pub tree: String,
    pub dims: Option<String>,
    pub ranks: Option<String>,
    pub seed: Option<u64>,
    pub t_end: Option<f64>,
    pub step_sizes: Option<Vec<f64>>,
    pub b_norms: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub skip_qr: bool,
}

impl RawConfig {
    pub fn new(experiment: ExperimentKind, tree: &str) -> Self {
        RawConfig {
            experiment,
            tree: tree.to_string(),
            dims: None,
            ranks: None,
            seed: None,
            t_end: None,
            step_sizes: None,
            b_norms: None,
            out: None,
            skip_qr: false,
        }
    }

    pub fn validated(self) -> Result<ExperimentConfig> {
        let tree = match self.tree.trim() {
            "sample" => SAMPLE_TREE.to_string(),
            other => other.to_string(),
        };
        let dims = parse_dims(self.dims.as_deref())?;
        let ranks = parse_ranks(self.ranks.as_deref())?;
        let shape = parse_tree_spec(&tree, &dims, &ranks)
            .map_err(|e| anyhow!("tree: {e}"))?;

        let step_sizes =
            self.step_sizes.unwrap_or_else(|| DEFAULT_STEP_SIZES.to_vec());
        positive_list("step_sizes", &step_sizes)?;
        let b_norms = self.b_norms.unwrap_or_else(|| DEFAULT_B_NORMS.to_vec());
        positive_list("b_norms", &b_norms)?;

        let t_end = self.t_end.unwrap_or(1.0);
        if !(t_end >= 0.0) || !t_end.is_finite() {
            bail!("t_end: must be a finite nonnegative time, got {t_end}");
        }

        Ok(ExperimentConfig {
            experiment: self.experiment,
            tree,
            dims,
            ranks,
            shape,
            seed: self.seed.unwrap_or(0),
            step_sizes,
            t_end,
            b_norms,
            out: self.out,
            skip_qr: self.skip_qr,
        })
    }
}

/// A validated experiment description. The tree text is already resolved
/// (presets expanded) and known to parse against the dims and ranks.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub tree: String,
    pub dims: DimSpec,
    pub ranks: RankSpec,
    shape: RankedTree,
    pub seed: u64,
    pub step_sizes: Vec<f64>,
    pub t_end: f64,
    pub b_norms: Vec<f64>,
    pub out: Option<PathBuf>,
    pub skip_qr: bool,
}

impl ExperimentConfig {
    pub fn shape(&self) -> &RankedTree {
        &self.shape
    }
}

fn positive_list(key: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        bail!("{key}: at least one value is required");
    }
    for &v in values {
        if !(v > 0.0) || !v.is_finite() {
            bail!("{key}: every value must be positive and finite, got {v}");
        }
    }
    Ok(())
}

/// Dimensions: one integer for all leaves, or `label=dim` pairs joined with
/// `;` (e.g. `1=16;2=8`).
fn parse_dims(text: Option<&str>) -> Result<DimSpec> {
    let Some(text) = text else {
        return Ok(DimSpec::Uniform(DEFAULT_DIMS));
    };
    let text = text.trim();
    if !text.contains('=') {
        let n: usize = text
            .parse()
            .map_err(|_| anyhow!("dims: expected an integer or label=dim pairs, got {text:?}"))?;
        if n == 0 {
            bail!("dims: leaf dimensions must be at least 1");
        }
        return Ok(DimSpec::Uniform(n));
    }
    let mut map = BTreeMap::new();
    for entry in text.split(';') {
        let (label, dim) = entry
            .split_once('=')
            .ok_or_else(|| anyhow!("dims: malformed entry {entry:?}, expected label=dim"))?;
        let label: usize = label
            .trim()
            .parse()
            .map_err(|_| anyhow!("dims: leaf label {label:?} is not an integer"))?;
        let dim: usize = dim
            .trim()
            .parse()
            .map_err(|_| anyhow!("dims: dimension {dim:?} is not an integer"))?;
        map.insert(label, dim);
    }
    Ok(DimSpec::PerLeaf(map))
}

/// Ranks: one integer for all subtrees, or `subtree=rank` pairs joined with
/// `;`, keyed by the subtree text (e.g. `[1,3,5]=5;6=2`).
fn parse_ranks(text: Option<&str>) -> Result<RankSpec> {
    let Some(text) = text else {
        return Ok(RankSpec::Uniform(DEFAULT_RANKS));
    };
    let text = text.trim();
    if !text.contains('=') {
        let r: usize = text
            .parse()
            .map_err(|_| anyhow!("ranks: expected an integer or subtree=rank pairs, got {text:?}"))?;
        if r == 0 {
            bail!("ranks: ranks must be at least 1");
        }
        return Ok(RankSpec::Uniform(r));
    }
    let mut map = BTreeMap::new();
    for entry in text.split(';') {
        let (node, rank) = entry
            .split_once('=')
            .ok_or_else(|| anyhow!("ranks: malformed entry {entry:?}, expected subtree=rank"))?;
        let rank: usize = rank
            .trim()
            .parse()
            .map_err(|_| anyhow!("ranks: rank {rank:?} is not an integer"))?;
        map.insert(node.trim().to_string(), rank);
    }
    Ok(RankSpec::PerNode(map))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_the_documented_defaults() {
        let cfg = RawConfig::new(ExperimentKind::Exactness, "[1,2]").validated().unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.t_end, 1.0);
        assert_eq!(cfg.step_sizes, vec![0.1, 0.01, 0.001]);
        assert_eq!(cfg.b_norms, DEFAULT_B_NORMS.to_vec());
        assert!(matches!(cfg.dims, DimSpec::Uniform(16)));
        assert!(matches!(cfg.ranks, RankSpec::Uniform(5)));
    }

    #[test]
    fn sample_preset_expands_to_the_three_branch_tree() {
        let cfg = RawConfig::new(ExperimentKind::Exactness, "sample").validated().unwrap();
        assert_eq!(cfg.tree, "[[1,3,5],[4,2],6]");
        assert_eq!(cfg.shape().leaf_dims(), vec![16; 6]);
        assert_eq!(cfg.shape().storage_entries(), 1355);
    }

    #[test]
    fn negative_step_size_is_rejected_naming_the_key() {
        let mut raw = RawConfig::new(ExperimentKind::Exactness, "[1,2]");
        raw.step_sizes = Some(vec![0.1, -0.1]);
        let err = raw.validated().unwrap_err().to_string();
        assert!(err.contains("step_sizes"), "{err}");
    }

    #[test]
    fn nonpositive_b_norm_is_rejected_naming_the_key() {
        let mut raw = RawConfig::new(ExperimentKind::Retract, "[1,2]");
        raw.b_norms = Some(vec![0.0]);
        let err = raw.validated().unwrap_err().to_string();
        assert!(err.contains("b_norms"), "{err}");
    }

    #[test]
    fn invalid_tree_is_rejected_naming_the_key() {
        let err = RawConfig::new(ExperimentKind::Exactness, "[1,2")
            .validated()
            .unwrap_err()
            .to_string();
        assert!(err.starts_with("tree:"), "{err}");
    }

    #[test]
    fn per_leaf_dims_and_per_node_ranks_parse() {
        let mut raw = RawConfig::new(ExperimentKind::Exactness, "[[1,2],3]");
        raw.dims = Some("1=4;2=5;3=6".into());
        raw.ranks = Some("[1,2]=2;1=2;2=2;3=2".into());
        let cfg = raw.validated().unwrap();
        assert_eq!(cfg.shape().leaf_dims(), vec![4, 5, 6]);
    }
}
