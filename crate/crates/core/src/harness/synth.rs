//! Synthetic dataset generation: Gaussian input clusters whose outputs
//! follow cluster-specific linear rules, with optional label noise.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{InferenceBackend, Inferencer};
use crate::model::{DataPoint, Dataset, OutputSpace, StructuredOutput};

use super::schema::SpaceSchema;

/// Generator spec. `input_dim` is the flat dimension for taxonomy spaces
/// and the per-position dimension for sequence spaces.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SynthSpec {
    pub clusters: usize,
    pub points_per_cluster: usize,
    pub input_dim: usize,
    pub space: SpaceSchema,
    #[serde(default)]
    pub noise: f64,
    pub seed: u64,
    /// Distance of each cluster center from the origin.
    #[serde(default = "default_separation")]
    pub separation: f64,
    /// Standard deviation of inputs around their cluster center.
    #[serde(default = "default_spread")]
    pub spread: f64,
    /// With exactly two clusters, give them negated copies of one rule.
    #[serde(default)]
    pub opposed_rules: bool,
    /// Standard deviation of the random rule weights.
    #[serde(default = "default_rule_scale")]
    pub rule_scale: f64,
}

fn default_separation() -> f64 {
    4.0
}

fn default_spread() -> f64 {
    1.0
}

fn default_rule_scale() -> f64 {
    1.0
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.clusters == 0 || self.points_per_cluster == 0 || self.input_dim == 0 {
            return Err(Error::Contract(
                "synthetic spec needs clusters, points_per_cluster and input_dim >= 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::Contract(format!(
                "noise = {} must lie in [0, 1]",
                self.noise
            )));
        }
        if self.opposed_rules && self.clusters != 2 {
            return Err(Error::Contract(
                "opposed_rules needs exactly two clusters".into(),
            ));
        }
        if self.separation < 0.0 || self.spread < 0.0 || self.rule_scale <= 0.0 {
            return Err(Error::Contract(
                "separation/spread must be >= 0 and rule_scale > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Deterministic cluster center: clusters occupy +/- slots along successive
/// axes, moving outward ring by ring once all axes are used.
fn cluster_center(cluster: usize, flat_dim: usize, separation: f64) -> Vec<f64> {
    let axis = (cluster / 2) % flat_dim;
    let sign = if cluster.is_multiple_of(2) { 1.0 } else { -1.0 };
    let ring = 1 + cluster / (2 * flat_dim);
    let mut center = vec![0.0; flat_dim];
    center[axis] = sign * separation * ring as f64;
    center
}

/// Generates a fully-labeled dataset and returns the per-cluster rule
/// weights alongside it.
pub fn generate_synthetic_with_rules(spec: &SynthSpec) -> Result<(Dataset, Vec<Vec<f64>>)> {
    spec.validate()?;
    let space = spec.space.clone().build()?;
    let flat_dim = match &space {
        OutputSpace::Taxonomy(_) => spec.input_dim,
        OutputSpace::Sequence(seq) => seq.length * spec.input_dim,
    };
    let inferencer = Inferencer::new(&space, flat_dim, InferenceBackend::SequenceDp)?;
    let m = inferencer.feature_map().dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut rules: Vec<Vec<f64>> = Vec::with_capacity(spec.clusters);
    for c in 0..spec.clusters {
        if spec.opposed_rules && c == 1 {
            let negated = rules[0].iter().map(|v| -v).collect();
            rules.push(negated);
            continue;
        }
        let rule = (0..m)
            .map(|_| spec.rule_scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        rules.push(rule);
    }

    let n = spec.clusters * spec.points_per_cluster;
    let mut points = Vec::with_capacity(n);
    for c in 0..spec.clusters {
        let center = cluster_center(c, flat_dim, spec.separation);
        for _ in 0..spec.points_per_cluster {
            let input: Vec<f64> = center
                .iter()
                .map(|&mu| mu + spec.spread * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let mut output = inferencer.predict(&rules[c], &input)?;
            if spec.noise > 0.0 && rng.gen::<f64>() < spec.noise {
                output = random_other_output(&space, &output, &mut rng);
            }
            points.push(DataPoint {
                input,
                truth: Some(output),
            });
        }
    }

    let dataset = Dataset {
        points,
        labeled_count: n,
        space,
    };
    debug_assert!(dataset.validate().is_empty());
    Ok((dataset, rules))
}

/// Generates a fully-labeled synthetic dataset (deterministic under the
/// spec's seed).
pub fn generate_synthetic(spec: &SynthSpec) -> Result<Dataset> {
    generate_synthetic_with_rules(spec).map(|(ds, _)| ds)
}

/// A uniform draw over the space excluding `current`.
fn random_other_output(
    space: &OutputSpace,
    current: &StructuredOutput,
    rng: &mut ChaCha8Rng,
) -> StructuredOutput {
    match space {
        OutputSpace::Taxonomy(tax) => {
            let n = tax.num_leaves();
            if n <= 1 {
                return current.clone();
            }
            loop {
                let leaf = rng.gen_range(0..n);
                if StructuredOutput::Leaf(leaf) != *current {
                    return StructuredOutput::Leaf(leaf);
                }
            }
        }
        OutputSpace::Sequence(seq) => {
            let a = seq.alphabet.len();
            if a == 1 {
                return current.clone();
            }
            loop {
                let labels: Vec<usize> = (0..seq.length).map(|_| rng.gen_range(0..a)).collect();
                let cand = StructuredOutput::Sequence(labels);
                if cand != *current {
                    return cand;
                }
            }
        }
    }
}
