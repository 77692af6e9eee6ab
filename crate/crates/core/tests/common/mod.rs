//! Shared test oracles: brute-force enumeration and scoring independent of
//! the inference module, plus random instance generators.

#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sslsop::features::FeatureMap;
use sslsop::loss::{structured_loss, LossSpec};
use sslsop::model::{DataPoint, Dataset, OutputSpace, SequenceSpace, StructuredOutput, Taxonomy};

/// Every output of the space, in canonical order, built by index arithmetic
/// rather than the library's iterator.
pub fn enumerate_all(space: &OutputSpace) -> Vec<StructuredOutput> {
    match space {
        OutputSpace::Taxonomy(tax) => (0..tax.num_leaves()).map(StructuredOutput::Leaf).collect(),
        OutputSpace::Sequence(seq) => {
            let a = seq.alphabet.len();
            let total = a.pow(seq.length as u32);
            (0..total)
                .map(|idx| {
                    let mut labels = vec![0usize; seq.length];
                    let mut rest = idx;
                    for t in (0..seq.length).rev() {
                        labels[t] = rest % a;
                        rest /= a;
                    }
                    StructuredOutput::Sequence(labels)
                })
                .collect()
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Brute-force prediction: first strict maximizer of the materialized score
/// over the enumerated space.
pub fn brute_predict(fmap: &FeatureMap<'_>, w: &[f64], x: &[f64]) -> StructuredOutput {
    let mut best: Option<(StructuredOutput, f64)> = None;
    for y in enumerate_all(fmap.space()) {
        let score = dot(w, &fmap.feature(x, &y).unwrap());
        match &best {
            Some((_, bv)) if score <= *bv => {}
            _ => best = Some((y, score)),
        }
    }
    best.unwrap().0
}

/// Brute-force loss-augmented argmax and its bound value.
pub fn brute_loss_augmented(
    fmap: &FeatureMap<'_>,
    loss: LossSpec,
    w: &[f64],
    x: &[f64],
    y_cur: &StructuredOutput,
) -> (StructuredOutput, f64) {
    let score_cur = dot(w, &fmap.feature(x, y_cur).unwrap());
    let mut best: Option<(StructuredOutput, f64)> = None;
    for y in enumerate_all(fmap.space()) {
        let value = dot(w, &fmap.feature(x, &y).unwrap())
            + structured_loss(loss, fmap.space(), y_cur, &y).unwrap();
        match &best {
            Some((_, bv)) if value <= *bv => {}
            _ => best = Some((y, value)),
        }
    }
    let (y, value) = best.unwrap();
    (y, value - score_cur)
}

/// Brute-force imputation argmin over (weights, target) terms.
pub fn brute_impute(
    fmap: &FeatureMap<'_>,
    loss: LossSpec,
    terms: &[(&[f64], &StructuredOutput)],
    inv_k: f64,
    x: &[f64],
) -> StructuredOutput {
    let mut best: Option<(StructuredOutput, f64)> = None;
    for y in enumerate_all(fmap.space()) {
        let mut value = 0.0;
        for (w, target) in terms {
            value += inv_k
                * (structured_loss(loss, fmap.space(), &y, target).unwrap()
                    - dot(w, &fmap.feature(x, &y).unwrap()));
        }
        match &best {
            Some((_, bv)) if value >= *bv => {}
            _ => best = Some((y, value)),
        }
    }
    best.unwrap().0
}

/// The per-anchor objective with frozen targets, evaluated directly:
/// mean over the neighborhood of the score gap, plus the regularizer.
pub fn anchor_objective(
    fmap: &FeatureMap<'_>,
    w: &[f64],
    members: &[(Vec<f64>, StructuredOutput, StructuredOutput)], // (x_j, target z, current y)
    inv_k: f64,
    c: f64,
) -> f64 {
    let mut total = 0.0;
    for (x, target, current) in members {
        total +=
            dot(w, &fmap.feature(x, target).unwrap()) - dot(w, &fmap.feature(x, current).unwrap());
    }
    inv_k * total + 0.5 * c * dot(w, w)
}

/// The output-phase surrogate with frozen weights and targets: over every
/// (anchor, member) pair, the loss against the target minus the anchor's
/// score of the member's current output.
pub fn output_phase_surrogate(
    fmap: &FeatureMap<'_>,
    loss: LossSpec,
    ds: &Dataset,
    neighborhoods: &[sslsop::model::Neighborhood],
    targets: &dyn Fn(usize, usize) -> StructuredOutput,
    weights: &dyn Fn(usize) -> Vec<f64>,
    outputs: &[StructuredOutput],
    inv_k: f64,
) -> f64 {
    let mut total = 0.0;
    for (anchor, nbh) in neighborhoods.iter().enumerate() {
        let w = weights(anchor);
        for (pos, &j) in nbh.members.iter().enumerate() {
            let target = targets(anchor, pos);
            total += inv_k
                * (structured_loss(loss, &ds.space, &outputs[j], &target).unwrap()
                    - dot(&w, &fmap.feature(&ds.points[j].input, &outputs[j]).unwrap()));
        }
    }
    total
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| normal(rng)).collect()
}

pub fn sequence_space(rng: &mut ChaCha8Rng, max_a: usize, max_l: usize) -> OutputSpace {
    let a = rng.gen_range(2..=max_a);
    let l = rng.gen_range(2..=max_l);
    let alphabet = (0..a).map(|i| format!("s{i}")).collect();
    OutputSpace::Sequence(SequenceSpace::new(alphabet, l).unwrap())
}

pub fn random_output(rng: &mut ChaCha8Rng, space: &OutputSpace) -> StructuredOutput {
    match space {
        OutputSpace::Taxonomy(tax) => StructuredOutput::Leaf(rng.gen_range(0..tax.num_leaves())),
        OutputSpace::Sequence(seq) => StructuredOutput::Sequence(
            (0..seq.length)
                .map(|_| rng.gen_range(0..seq.alphabet.len()))
                .collect(),
        ),
    }
}

/// A random dataset over the given space: Gaussian inputs, random truths on
/// the first `labeled` points.
pub fn random_dataset(
    rng: &mut ChaCha8Rng,
    space: OutputSpace,
    n: usize,
    labeled: usize,
    flat_dim: usize,
) -> Dataset {
    let points = (0..n)
        .map(|i| DataPoint {
            input: normal_vec(rng, flat_dim),
            truth: (i < labeled).then(|| random_output(rng, &space)),
        })
        .collect();
    Dataset {
        points,
        labeled_count: labeled,
        space,
    }
}

pub fn small_taxonomy_space() -> OutputSpace {
    OutputSpace::Taxonomy(Taxonomy::balanced(2, 2).unwrap())
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
