//! Rooted label taxonomy with per-leaf output codes.
//!
//! Leaves are addressed by their position in pre-order, which is also the
//! canonical enumeration order used by inference. Losses between leaves are
//! derived from the height of their lowest common ancestor, where the height
//! of a node is the edge count of the longest downward path to a leaf.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Builder input: one node of the tree, written as a nested value.
///
/// A node without children is a leaf. Leaves may carry an explicit output
/// code; either all leaves carry codes of a common dimension or none do, in
/// which case one-hot codes over the pre-order leaf list are generated.
#[derive(Debug, Clone)]
pub struct TaxonomyNode {
    pub id: String,
    pub children: Vec<TaxonomyNode>,
    pub code: Option<Vec<f64>>,
}

impl TaxonomyNode {
    pub fn leaf(id: impl Into<String>) -> Self {
        TaxonomyNode {
            id: id.into(),
            children: Vec::new(),
            code: None,
        }
    }

    pub fn branch(id: impl Into<String>, children: Vec<TaxonomyNode>) -> Self {
        TaxonomyNode {
            id: id.into(),
            children,
            code: None,
        }
    }
}

/// An immutable rooted tree over string node ids.
///
/// All derived quantities (depths, heights, the pre-order leaf list and the
/// leaf codes) are precomputed at construction, so lookups during inference
/// and training never mutate shared state.
#[derive(Debug, Clone, PartialEq)]
pub struct Taxonomy {
    ids: Vec<String>,
    parent: Vec<Option<usize>>,
    depth: Vec<usize>,
    height: Vec<usize>,
    /// Node indices of the leaves, in pre-order. Position in this list is the
    /// canonical leaf index used by `StructuredOutput::Leaf`.
    leaves: Vec<usize>,
    /// Output code per leaf, aligned with `leaves`.
    codes: Vec<Vec<f64>>,
    leaf_pos: HashMap<String, usize>,
}

impl Taxonomy {
    /// Builds a taxonomy from a nested node description.
    pub fn new(root: TaxonomyNode) -> Result<Self> {
        let mut ids = Vec::new();
        let mut parent = Vec::new();
        let mut depth = Vec::new();
        let mut leaves = Vec::new();
        let mut explicit_codes: Vec<Option<Vec<f64>>> = Vec::new();
        let mut seen = HashMap::new();

        // Pre-order walk without recursion; children pushed in reverse keeps
        // pre-order intact.
        let mut stack = vec![(root, None::<usize>, 0usize)];
        while let Some((node, par, d)) = stack.pop() {
            let idx = ids.len();
            if seen.insert(node.id.clone(), idx).is_some() {
                return Err(Error::InvalidOutput(format!(
                    "duplicate node id '{}' in taxonomy",
                    node.id
                )));
            }
            ids.push(node.id);
            parent.push(par);
            depth.push(d);
            if node.children.is_empty() {
                leaves.push(idx);
                explicit_codes.push(node.code);
            } else {
                if node.code.is_some() {
                    return Err(Error::InvalidOutput(format!(
                        "internal node '{}' carries an output code",
                        ids[idx]
                    )));
                }
                for child in node.children.into_iter().rev() {
                    stack.push((child, Some(idx), d + 1));
                }
            }
        }

        // The pre-order stack interleaves subtrees, so leaf order follows the
        // walk; explicit_codes was filled in the same order as leaves.
        let n_leaves = leaves.len();
        let with_code = explicit_codes.iter().filter(|c| c.is_some()).count();
        let codes: Vec<Vec<f64>> = if with_code == 0 {
            (0..n_leaves)
                .map(|i| {
                    let mut c = vec![0.0; n_leaves];
                    c[i] = 1.0;
                    c
                })
                .collect()
        } else if with_code == n_leaves {
            let codes: Vec<Vec<f64>> = explicit_codes.into_iter().map(|c| c.unwrap()).collect();
            let dim = codes[0].len();
            if dim == 0 || codes.iter().any(|c| c.len() != dim) {
                return Err(Error::InvalidOutput(
                    "leaf output codes must share one non-zero dimension".into(),
                ));
            }
            codes
        } else {
            return Err(Error::InvalidOutput(
                "either all leaves carry output codes or none".into(),
            ));
        };

        let mut height = vec![0usize; ids.len()];
        // Nodes appear before their descendants in pre-order, so a reverse
        // sweep sees every child before its parent.
        for idx in (0..ids.len()).rev() {
            if let Some(p) = parent[idx] {
                height[p] = height[p].max(height[idx] + 1);
            }
        }

        let leaf_pos = leaves
            .iter()
            .enumerate()
            .map(|(pos, &node)| (ids[node].clone(), pos))
            .collect();

        Ok(Taxonomy {
            ids,
            parent,
            depth,
            height,
            leaves,
            codes,
            leaf_pos,
        })
    }

    /// A balanced tree with the given branching factor and depth; leaves get
    /// one-hot codes. Node ids are `root`, `n0`, `n0.1`, ...
    pub fn balanced(branching: usize, depth: usize) -> Result<Self> {
        if branching < 1 || (branching == 1 && depth > 0) {
            return Err(Error::Contract(
                "balanced taxonomy needs branching >= 2 (or depth 0)".into(),
            ));
        }
        fn build(prefix: &str, branching: usize, depth: usize) -> TaxonomyNode {
            if depth == 0 {
                TaxonomyNode::leaf(prefix)
            } else {
                let children = (0..branching)
                    .map(|c| build(&format!("{prefix}.{c}"), branching, depth - 1))
                    .collect();
                TaxonomyNode::branch(prefix, children)
            }
        }
        Taxonomy::new(build("n", branching, depth))
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves.len()
    }

    /// Dimension of the leaf output codes.
    pub fn code_dim(&self) -> usize {
        self.codes.first().map_or(0, |c| c.len())
    }

    pub fn code(&self, leaf: usize) -> Result<&[f64]> {
        self.codes
            .get(leaf)
            .map(|c| c.as_slice())
            .ok_or_else(|| Error::InvalidOutput(format!("leaf index {leaf} out of range")))
    }

    pub fn leaf_id(&self, leaf: usize) -> Option<&str> {
        self.leaves.get(leaf).map(|&n| self.ids[n].as_str())
    }

    /// Canonical (pre-order) position of the leaf with this id.
    pub fn leaf_index(&self, id: &str) -> Option<usize> {
        self.leaf_pos.get(id).copied()
    }

    /// Height of the root: the largest possible ancestor loss.
    pub fn root_height(&self) -> usize {
        self.height[0]
    }

    /// Height of the lowest common ancestor of two leaves (0 when equal).
    pub fn lca_height(&self, a: usize, b: usize) -> Result<usize> {
        let (mut u, mut v) = (
            *self
                .leaves
                .get(a)
                .ok_or_else(|| Error::InvalidOutput(format!("leaf index {a} out of range")))?,
            *self
                .leaves
                .get(b)
                .ok_or_else(|| Error::InvalidOutput(format!("leaf index {b} out of range")))?,
        );
        while self.depth[u] > self.depth[v] {
            u = self.parent[u].expect("depth > 0 implies a parent");
        }
        while self.depth[v] > self.depth[u] {
            v = self.parent[v].expect("depth > 0 implies a parent");
        }
        while u != v {
            u = self.parent[u].expect("distinct nodes at equal depth have parents");
            v = self.parent[v].expect("distinct nodes at equal depth have parents");
        }
        Ok(self.height[u])
    }

    /// Export as a nested node tree (inverse of `new`, codes included).
    pub fn to_node(&self) -> TaxonomyNode {
        fn build(tax: &Taxonomy, idx: usize) -> TaxonomyNode {
            let children: Vec<TaxonomyNode> = (0..tax.ids.len())
                .filter(|&c| tax.parent[c] == Some(idx))
                .map(|c| build(tax, c))
                .collect();
            let code = if children.is_empty() {
                let pos = tax.leaves.iter().position(|&n| n == idx).expect("leaf");
                Some(tax.codes[pos].clone())
            } else {
                None
            };
            TaxonomyNode {
                id: tax.ids[idx].clone(),
                children,
                code,
            }
        }
        build(self, 0)
    }
}
