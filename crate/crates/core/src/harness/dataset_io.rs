//! Dataset file format.
//!
//! A dataset is a JSON document with an output-space header and one record
//! per point. Labeled points (those carrying `truth`) must precede
//! unlabeled ones. Taxonomy inputs are flat vectors; sequence inputs are
//! lists of per-position vectors:
//!
//! ```json
//! {
//!   "space": { "type": "sequence", "alphabet": ["O", "B"], "length": 2 },
//!   "points": [
//!     { "input": [[0.1, 0.2], [0.3, 0.4]], "truth": ["O", "B"] },
//!     { "input": [[0.0, 0.1], [0.2, 0.2]] }
//!   ]
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DataPoint, Dataset, OutputSpace, StructuredOutput};

use super::schema::SpaceSchema;

#[derive(Debug, Serialize, Deserialize)]
struct DatasetFile {
    space: SpaceSchema,
    points: Vec<PointSchema>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PointSchema {
    input: InputSchema,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    truth: Option<TruthSchema>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum InputSchema {
    Flat(Vec<f64>),
    PerPosition(Vec<Vec<f64>>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum TruthSchema {
    Leaf(String),
    Labels(Vec<String>),
}

/// Parses the document into an output space and raw points, without the
/// training-set shape requirements (used for prediction inputs, where
/// truths are optional and may appear anywhere).
pub fn parse_records(text: &str) -> Result<(OutputSpace, Vec<DataPoint>)> {
    let file: DatasetFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("dataset: {e}")))?;
    let space = file.space.build()?;

    let mut points = Vec::with_capacity(file.points.len());
    for (i, record) in file.points.into_iter().enumerate() {
        let input = match (record.input, &space) {
            (InputSchema::Flat(x), OutputSpace::Taxonomy(_)) => x,
            (InputSchema::PerPosition(rows), OutputSpace::Sequence(seq)) => {
                if rows.len() != seq.length {
                    return Err(Error::Parse(format!(
                        "point {i}: {} position vectors (sequence length is {})",
                        rows.len(),
                        seq.length
                    )));
                }
                let d = rows.first().map_or(0, |r| r.len());
                if rows.iter().any(|r| r.len() != d) {
                    return Err(Error::Parse(format!(
                        "point {i}: position vectors differ in dimension"
                    )));
                }
                rows.into_iter().flatten().collect()
            }
            (InputSchema::Flat(_), OutputSpace::Sequence(_)) => {
                return Err(Error::Parse(format!(
                    "point {i}: sequence datasets need per-position input vectors"
                )))
            }
            (InputSchema::PerPosition(_), OutputSpace::Taxonomy(_)) => {
                return Err(Error::Parse(format!(
                    "point {i}: taxonomy datasets need flat input vectors"
                )))
            }
        };
        let truth = match record.truth {
            None => None,
            Some(t) => Some(resolve_truth(t, &space, i)?),
        };
        points.push(DataPoint { input, truth });
    }
    Ok((space, points))
}

/// Parses a training dataset: labeled points must precede unlabeled ones,
/// and every dataset invariant must hold.
pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let (space, points) = parse_records(text)?;
    let labeled_count = points.iter().take_while(|p| p.truth.is_some()).count();
    if let Some(late) = points[labeled_count..]
        .iter()
        .position(|p| p.truth.is_some())
    {
        return Err(Error::Parse(format!(
            "point {}: labeled points must precede unlabeled ones",
            labeled_count + late
        )));
    }
    let dataset = Dataset {
        points,
        labeled_count,
        space,
    };
    let report = dataset.validate();
    if !report.is_empty() {
        return Err(Error::Validation(report));
    }
    Ok(dataset)
}

fn resolve_truth(
    truth: TruthSchema,
    space: &OutputSpace,
    point: usize,
) -> Result<StructuredOutput> {
    match (truth, space) {
        (TruthSchema::Leaf(id), OutputSpace::Taxonomy(tax)) => tax
            .leaf_index(&id)
            .map(StructuredOutput::Leaf)
            .ok_or_else(|| Error::Parse(format!("point {point}: unknown taxonomy leaf '{id}'"))),
        (TruthSchema::Labels(labels), OutputSpace::Sequence(seq)) => {
            let mut indices = Vec::with_capacity(labels.len());
            for label in &labels {
                match seq.label_index(label) {
                    Some(idx) => indices.push(idx),
                    None => {
                        return Err(Error::Parse(format!(
                            "point {point}: unknown label '{label}'"
                        )))
                    }
                }
            }
            Ok(StructuredOutput::Sequence(indices))
        }
        (TruthSchema::Leaf(id), OutputSpace::Sequence(_)) => Err(Error::Parse(format!(
            "point {point}: sequence dataset but truth '{id}' is a single leaf"
        ))),
        (TruthSchema::Labels(_), OutputSpace::Taxonomy(_)) => Err(Error::Parse(format!(
            "point {point}: taxonomy dataset but truth is a label sequence"
        ))),
    }
}

/// Renders a dataset back into its JSON document form.
pub fn render_dataset(ds: &Dataset) -> Result<String> {
    let space = SpaceSchema::from_space(&ds.space);
    let points = ds
        .points
        .iter()
        .map(|p| {
            let input = match &ds.space {
                OutputSpace::Taxonomy(_) => InputSchema::Flat(p.input.clone()),
                OutputSpace::Sequence(seq) => {
                    let d = p.input.len() / seq.length;
                    InputSchema::PerPosition(p.input.chunks(d.max(1)).map(|c| c.to_vec()).collect())
                }
            };
            let truth = p.truth.as_ref().map(|t| unresolve_truth(t, &ds.space));
            PointSchema { input, truth }
        })
        .collect();
    Ok(serde_json::to_string_pretty(&DatasetFile { space, points })? + "\n")
}

fn unresolve_truth(truth: &StructuredOutput, space: &OutputSpace) -> TruthSchema {
    match (truth, space) {
        (StructuredOutput::Leaf(leaf), OutputSpace::Taxonomy(tax)) => TruthSchema::Leaf(
            tax.leaf_id(*leaf)
                .expect("validated dataset truths are in-space")
                .to_string(),
        ),
        (StructuredOutput::Sequence(labels), OutputSpace::Sequence(seq)) => {
            TruthSchema::Labels(labels.iter().map(|&l| seq.alphabet[l].clone()).collect())
        }
        _ => unreachable!("validated dataset truths match their space"),
    }
}

/// Loads and validates a dataset file.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse_dataset(&text)
}

/// Writes a dataset file.
pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path.as_ref(), render_dataset(ds)?)?;
    Ok(())
}
