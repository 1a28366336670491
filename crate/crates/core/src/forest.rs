//! Forests of ordered trees and their on-disk layout.
//!
//! A forest directory holds one file per tree in the degree-sequence text
//! format plus a `manifest.csv` with columns `index,size,seed`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tree::OrderedTree;

/// Tuple of independent trees.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<OrderedTree>,
    seeds: Vec<u64>,
}

impl Forest {
    pub fn new(trees: Vec<OrderedTree>) -> Self {
        let seeds = vec![0; trees.len()];
        Forest { trees, seeds }
    }

    pub fn with_seeds(trees: Vec<OrderedTree>, seeds: Vec<u64>) -> Self {
        assert_eq!(trees.len(), seeds.len());
        Forest { trees, seeds }
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn trees(&self) -> &[OrderedTree] {
        &self.trees
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.trees.iter().map(|t| t.len()).collect()
    }

    /// Writes the forest directory: `tree_<i>.txt` files plus the manifest.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut manifest = String::from("index,size,seed\n");
        for (i, tree) in self.trees.iter().enumerate() {
            let name = format!("tree_{i:06}.txt");
            fs::write(dir.join(&name), tree.to_degree_string())?;
            manifest.push_str(&format!("{},{},{}\n", i, tree.len(), self.seeds[i]));
        }
        fs::write(dir.join("manifest.csv"), manifest)?;
        Ok(())
    }

    /// Reads a forest directory written by [`Forest::save`].
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest = fs::read_to_string(dir.join("manifest.csv"))?;
        let mut trees = Vec::new();
        let mut seeds = Vec::new();
        for (lineno, line) in manifest.lines().enumerate().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!(
                    "manifest line {} has {} fields",
                    lineno + 1,
                    fields.len()
                )));
            }
            let index: usize = fields[0]
                .parse()
                .map_err(|e| Error::Parse(format!("bad index: {e}")))?;
            let size: usize = fields[1]
                .parse()
                .map_err(|e| Error::Parse(format!("bad size: {e}")))?;
            let seed: u64 = fields[2]
                .parse()
                .map_err(|e| Error::Parse(format!("bad seed: {e}")))?;
            let text = fs::read_to_string(dir.join(format!("tree_{index:06}.txt")))?;
            let tree = OrderedTree::from_degree_string(&text)?;
            if tree.len() != size {
                return Err(Error::Parse(format!(
                    "tree {index} has {} nodes, manifest says {size}",
                    tree.len()
                )));
            }
            trees.push(tree);
            seeds.push(seed);
        }
        Ok(Forest { trees, seeds })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::build_tree;

    #[test]
    fn save_load_round_trip() {
        let forest = Forest::with_seeds(
            vec![
                build_tree(&[2, 0, 0]).unwrap(),
                build_tree(&[1, 1, 0]).unwrap(),
            ],
            vec![11, 22],
        );
        let dir = tempfile::tempdir().unwrap();
        forest.save(dir.path()).unwrap();
        let back = Forest::load(dir.path()).unwrap();
        assert_eq!(back, forest);
    }
}
