//! Ordered rooted trees and the deterministic coding transforms between
//! trees, Lukasiewicz walks, height processes, contour processes and Harris
//! paths.
//!
//! Trees live in an index arena; every traversal is iterative so trees with
//! millions of nodes do not touch the call stack.

use crate::error::{Error, Result};

/// One node of an [`OrderedTree`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// Rooted ordered tree stored as an index arena.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedTree {
    nodes: Vec<Node>,
    root: usize,
}

impl OrderedTree {
    /// Single-node tree.
    pub fn singleton() -> Self {
        OrderedTree {
            nodes: vec![Node { parent: None, children: Vec::new() }],
            root: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a tree has at least its root
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, idx: usize) -> &Node {
        &self.nodes[idx]
    }

    pub fn children(&self, idx: usize) -> &[usize] {
        &self.nodes[idx].children
    }

    pub fn parent(&self, idx: usize) -> Option<usize> {
        self.nodes[idx].parent
    }

    /// Height of every node, `h(root) = 0`, computed in preorder.
    pub fn heights(&self) -> Vec<usize> {
        let mut h = vec![0usize; self.nodes.len()];
        // children always have larger arena indices than their parent is NOT
        // guaranteed in general, so walk the tree explicitly
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            for &c in &self.nodes[v].children {
                h[c] = h[v] + 1;
                stack.push(c);
            }
        }
        h
    }

    /// Node indices in depth-first preorder.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            out.push(v);
            for &c in self.nodes[v].children.iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// Child counts in depth-first preorder; the lossless text serialization
    /// of the tree (see [`build_tree`]).
    pub fn preorder_child_counts(&self) -> Vec<usize> {
        self.preorder()
            .into_iter()
            .map(|v| self.nodes[v].children.len())
            .collect()
    }

    /// Comma-separated preorder child counts.
    pub fn to_degree_string(&self) -> String {
        self.preorder_child_counts()
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Parses the output of [`OrderedTree::to_degree_string`].
    pub fn from_degree_string(s: &str) -> Result<Self> {
        let counts: Vec<usize> = s
            .trim()
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("bad child count {t:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        build_tree(&counts)
    }
}

/// Integer lattice excursion of length `2n + 1` coding a tree of `n` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct HarrisPath {
    walk: Vec<i64>,
}

impl HarrisPath {
    /// Wraps a walk after checking every Harris-path invariant.
    pub fn new(walk: Vec<i64>) -> Result<Self> {
        if walk.len() < 3 || walk.len() % 2 == 0 {
            return Err(Error::MalformedPath(format!(
                "length must be odd and at least 3, got {}",
                walk.len()
            )));
        }
        let last = walk.len() - 1;
        if walk[0] != 0 || walk[last] != 0 {
            return Err(Error::MalformedPath("endpoints must be 0".into()));
        }
        for k in 0..last {
            if (walk[k + 1] - walk[k]).abs() != 1 {
                return Err(Error::MalformedPath(format!(
                    "increment at step {k} is not +-1"
                )));
            }
            if walk[k + 1] < 0 {
                return Err(Error::MalformedPath(format!("negative value at {}", k + 1)));
            }
        }
        // walk[1] = 1 and walk[2n-1] = 1 follow from the above, but keep the
        // explicit check so the constructor documents the contract
        if walk[1] != 1 || walk[last - 1] != 1 {
            return Err(Error::MalformedPath("walk must start and end at level 1".into()));
        }
        Ok(HarrisPath { walk })
    }

    /// Tree size `n`; the walk has length `2n + 1`.
    pub fn n(&self) -> usize {
        self.walk.len() / 2
    }

    pub fn walk(&self) -> &[i64] {
        &self.walk
    }

    /// CSV export with columns `k,walk`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,walk\n");
        for (k, v) in self.walk.iter().enumerate() {
            s.push_str(&format!("{k},{v}\n"));
        }
        s
    }
}

/// Lukasiewicz walk, height process and contour process of a single tree.
#[derive(Debug, Clone, PartialEq)]
pub struct CodingWalks {
    pub lukasiewicz: Vec<i64>,
    pub height: Vec<i64>,
    pub contour: Vec<i64>,
}

/// Checks the preorder degree-sequence condition: all strict prefix sums of
/// `count - 1` stay above -1 and the total is exactly `n - 1`.
fn check_degree_sequence(counts: &[usize]) -> Result<()> {
    if counts.is_empty() {
        return Err(Error::InvalidDegreeSequence("empty sequence".into()));
    }
    let n = counts.len();
    let mut sum: i64 = 0;
    for (k, &c) in counts.iter().enumerate() {
        sum += c as i64 - 1;
        if k + 1 < n && sum <= -1 {
            return Err(Error::InvalidDegreeSequence(format!(
                "prefix sum hits -1 after {} entries",
                k + 1
            )));
        }
    }
    if sum != -1 {
        return Err(Error::InvalidDegreeSequence(format!(
            "child counts sum to {} instead of n - 1 = {}",
            sum + n as i64,
            n - 1
        )));
    }
    Ok(())
}

/// Builds the tree whose depth-first preorder child counts are `counts`.
pub fn build_tree(counts: &[usize]) -> Result<OrderedTree> {
    check_degree_sequence(counts)?;
    let n = counts.len();
    let mut nodes: Vec<Node> = Vec::with_capacity(n);
    // stack of nodes still expecting children
    let mut stack: Vec<(usize, usize)> = Vec::new(); // (node, remaining)
    for &c in counts {
        let idx = nodes.len();
        let parent = stack.last().map(|&(p, _)| p);
        nodes.push(Node { parent, children: Vec::with_capacity(c) });
        if let Some(&mut (p, ref mut rem)) = stack.last_mut() {
            nodes[p].children.push(idx);
            *rem -= 1;
        }
        while matches!(stack.last(), Some(&(_, 0))) {
            stack.pop();
        }
        if c > 0 {
            stack.push((idx, c));
        }
    }
    debug_assert!(stack.is_empty());
    Ok(OrderedTree { nodes, root: 0 })
}

/// Depth-first traversal with repeats: each node `v` occurs `#children(v) + 1`
/// times, so the sequence has length `2n - 1`.
pub fn depth_first_traversal(tree: &OrderedTree) -> Vec<usize> {
    let mut out = Vec::with_capacity(2 * tree.len() - 1);
    // (node, index of next child to visit)
    let mut stack: Vec<(usize, usize)> = vec![(tree.root(), 0)];
    out.push(tree.root());
    while let Some(&(v, next)) = stack.last() {
        if next < tree.children(v).len() {
            let c = tree.children(v)[next];
            stack.last_mut().unwrap().1 += 1;
            stack.push((c, 0));
            out.push(c);
        } else {
            stack.pop();
            if let Some(&(p, _)) = stack.last() {
                out.push(p);
            }
        }
    }
    out
}

/// Harris walk of a tree: `walk[k] = h(v_k) + 1` where `v_k` is the k-th
/// element of the depth-first traversal, padded with 0 at both ends.
pub fn harris_walk(tree: &OrderedTree) -> HarrisPath {
    let heights = tree.heights();
    let traversal = depth_first_traversal(tree);
    let mut walk = Vec::with_capacity(2 * tree.len() + 1);
    walk.push(0);
    for v in traversal {
        walk.push(heights[v] as i64 + 1);
    }
    walk.push(0);
    HarrisPath { walk }
}

/// Inverse of [`harris_walk`]: each up-step opens a new node, each down-step
/// closes the current one.
pub fn tree_from_harris(path: &HarrisPath) -> Result<OrderedTree> {
    let walk = path.walk();
    let mut nodes: Vec<Node> = Vec::with_capacity(path.n());
    let mut stack: Vec<usize> = Vec::new();
    for k in 0..walk.len() - 1 {
        if walk[k + 1] > walk[k] {
            let idx = nodes.len();
            let parent = stack.last().copied();
            nodes.push(Node { parent, children: Vec::new() });
            if let Some(p) = parent {
                nodes[p].children.push(idx);
            }
            stack.push(idx);
        } else {
            stack
                .pop()
                .ok_or_else(|| Error::MalformedPath("down-step from level 0".into()))?;
        }
    }
    if !stack.is_empty() {
        return Err(Error::MalformedPath("path does not return to 0".into()));
    }
    Ok(OrderedTree { nodes, root: 0 })
}

/// Lukasiewicz walk of a degree sequence: partial sums of `count - 1`,
/// starting at 0, of length `n`.
pub fn lukasiewicz_walk(counts: &[usize]) -> Result<Vec<i64>> {
    check_degree_sequence(counts)?;
    let mut walk = Vec::with_capacity(counts.len());
    let mut s = 0i64;
    for &c in &counts[..counts.len() - 1] {
        walk.push(s);
        s += c as i64 - 1;
    }
    walk.push(s);
    Ok(walk)
}

/// Height process from the Lukasiewicz walk: `height[k]` counts the indices
/// `j < k` with `walk[j] = min(walk[j..=k])`.
pub fn height_process_from_lukasiewicz(walk: &[i64]) -> Result<Vec<i64>> {
    if walk.is_empty() || walk[0] != 0 {
        return Err(Error::InvalidWalk("walk must start at 0".into()));
    }
    let n = walk.len();
    let mut height = Vec::with_capacity(n);
    // stack of walk values that are running minima seen from the right
    let mut stack: Vec<i64> = Vec::with_capacity(n);
    for (k, &v) in walk.iter().enumerate() {
        if k > 0 && (v - walk[k - 1]) < -1 {
            return Err(Error::InvalidWalk(format!("increment below -1 at step {k}")));
        }
        while matches!(stack.last(), Some(&top) if top > v) {
            stack.pop();
        }
        height.push(stack.len() as i64);
        stack.push(v);
    }
    Ok(height)
}

/// Contour process from the height process, via the sorted time changes
/// `b_k = 2k - height[k]`.
pub fn contour_from_height(height: &[i64]) -> Result<Vec<i64>> {
    let n = height.len();
    if n == 0 || height[0] != 0 {
        return Err(Error::InvalidHeightProcess("height must start at 0".into()));
    }
    for k in 0..n - 1 {
        if height[k + 1] - height[k] > 1 {
            return Err(Error::InvalidHeightProcess(format!(
                "increment above +1 at step {k}"
            )));
        }
        if height[k + 1] < 0 {
            return Err(Error::InvalidHeightProcess(format!("negative height at {}", k + 1)));
        }
    }
    // time changes b_k = 2k - height[k]; strictly increasing for a valid
    // height process
    let b: Vec<i64> = (0..n).map(|k| 2 * k as i64 - height[k]).collect();
    let mut contour = vec![0i64; 2 * n - 1];
    for i in 0..n - 1 {
        // descend from height[i], then one ascending step into node i + 1
        for k in b[i]..b[i + 1] - 1 {
            contour[k as usize] = height[i] - (k - b[i]);
        }
        contour[(b[i + 1] - 1) as usize] = height[i + 1] - 1;
    }
    // final descending branch, down to 0 at time 2n - 2
    for k in b[n - 1]..=(2 * n as i64 - 2) {
        contour[k as usize] = height[n - 1] - (k - b[n - 1]);
    }
    Ok(contour)
}

/// Harris path from the contour process: shift up by one and pad with zeros.
pub fn harris_from_contour(contour: &[i64]) -> Result<HarrisPath> {
    let mut walk = Vec::with_capacity(contour.len() + 2);
    walk.push(0);
    for &c in contour {
        walk.push(c + 1);
    }
    walk.push(0);
    HarrisPath::new(walk)
}

/// Full coding chain of a degree sequence; the cross-check route against the
/// direct [`harris_walk`] constructor.
pub fn coding_walks(counts: &[usize]) -> Result<CodingWalks> {
    let lukasiewicz = lukasiewicz_walk(counts)?;
    let height = height_process_from_lukasiewicz(&lukasiewicz)?;
    let contour = contour_from_height(&height)?;
    Ok(CodingWalks { lukasiewicz, height, contour })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent recursive-descent construction used as oracle for
    /// `build_tree`.
    fn recursive_build(counts: &[usize]) -> OrderedTree {
        fn go(
            counts: &[usize],
            pos: &mut usize,
            parent: Option<usize>,
            nodes: &mut Vec<Node>,
        ) -> usize {
            let idx = nodes.len();
            let c = counts[*pos];
            *pos += 1;
            nodes.push(Node { parent, children: Vec::new() });
            for _ in 0..c {
                let child = go(counts, pos, Some(idx), nodes);
                nodes[idx].children.push(child);
            }
            idx
        }
        let mut nodes = Vec::new();
        let mut pos = 0;
        let root = go(counts, &mut pos, None, &mut nodes);
        assert_eq!(pos, counts.len());
        OrderedTree { nodes, root }
    }

    fn cherry() -> OrderedTree {
        build_tree(&[2, 0, 0]).unwrap()
    }

    fn path3() -> OrderedTree {
        build_tree(&[1, 1, 0]).unwrap()
    }

    #[test]
    fn build_single_node() {
        let t = build_tree(&[0]).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.preorder_child_counts(), vec![0]);
    }

    #[test]
    fn build_cherry() {
        let t = cherry();
        assert_eq!(t.len(), 3);
        assert_eq!(t.children(t.root()).len(), 2);
        assert_eq!(t.preorder_child_counts(), vec![2, 0, 0]);
    }

    #[test]
    fn build_matches_recursive_oracle() {
        for counts in [
            vec![1, 2, 0, 0],
            vec![2, 1, 0, 0],
            vec![3, 0, 1, 0, 0],
            vec![2, 2, 0, 0, 1, 0],
        ] {
            assert_eq!(build_tree(&counts).unwrap(), recursive_build(&counts));
        }
    }

    #[test]
    fn build_rejects_bad_sequences() {
        assert!(build_tree(&[0, 0]).is_err()); // prefix hits -1 early
        assert!(build_tree(&[2, 0]).is_err()); // wrong total
        assert!(build_tree(&[]).is_err());
    }

    #[test]
    fn traversal_single_node() {
        let t = OrderedTree::singleton();
        assert_eq!(depth_first_traversal(&t), vec![0]);
    }

    #[test]
    fn traversal_cherry_revisits_root() {
        let t = cherry();
        // r, a, r, b, r
        assert_eq!(depth_first_traversal(&t), vec![0, 1, 0, 2, 0]);
    }

    #[test]
    fn traversal_path() {
        let t = path3();
        assert_eq!(depth_first_traversal(&t), vec![0, 1, 2, 1, 0]);
    }

    #[test]
    fn traversal_length_and_multiplicity() {
        let t = build_tree(&[3, 1, 0, 0, 2, 0, 0]).unwrap();
        let tr = depth_first_traversal(&t);
        assert_eq!(tr.len(), 2 * t.len() - 1);
        for v in 0..t.len() {
            let occurrences = tr.iter().filter(|&&x| x == v).count();
            assert_eq!(occurrences, t.children(v).len() + 1);
        }
    }

    #[test]
    fn harris_walk_examples() {
        assert_eq!(harris_walk(&OrderedTree::singleton()).walk(), &[0, 1, 0]);
        assert_eq!(harris_walk(&cherry()).walk(), &[0, 1, 2, 1, 2, 1, 0]);
        assert_eq!(harris_walk(&path3()).walk(), &[0, 1, 2, 3, 2, 1, 0]);
    }

    #[test]
    fn tree_from_harris_examples() {
        let single = tree_from_harris(&HarrisPath::new(vec![0, 1, 0]).unwrap()).unwrap();
        assert_eq!(single.len(), 1);
        let t = tree_from_harris(&HarrisPath::new(vec![0, 1, 2, 1, 2, 1, 0]).unwrap()).unwrap();
        assert_eq!(t.preorder_child_counts(), vec![2, 0, 0]);
    }

    #[test]
    fn harris_path_invariants_enforced() {
        assert!(HarrisPath::new(vec![0, 1, 2, 0]).is_err()); // even length
        assert!(HarrisPath::new(vec![0, 2, 0]).is_err()); // bad increment
        assert!(HarrisPath::new(vec![1, 2, 1]).is_err()); // bad endpoints
    }

    #[test]
    fn height_from_lukasiewicz_examples() {
        assert_eq!(height_process_from_lukasiewicz(&[0]).unwrap(), vec![0]);
        assert_eq!(height_process_from_lukasiewicz(&[0, 1, 0]).unwrap(), vec![0, 1, 1]);
        assert_eq!(height_process_from_lukasiewicz(&[0, 0, 0]).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn height_matches_direct_construction() {
        for counts in [
            vec![2, 0, 0],
            vec![1, 1, 0],
            vec![3, 1, 0, 0, 2, 0, 0],
            vec![2, 2, 0, 0, 1, 0],
        ] {
            let tree = build_tree(&counts).unwrap();
            let direct: Vec<i64> = {
                let h = tree.heights();
                tree.preorder().into_iter().map(|v| h[v] as i64).collect()
            };
            let walk = lukasiewicz_walk(&counts).unwrap();
            assert_eq!(height_process_from_lukasiewicz(&walk).unwrap(), direct);
        }
    }

    #[test]
    fn contour_examples() {
        assert_eq!(contour_from_height(&[0]).unwrap(), vec![0]);
        assert_eq!(contour_from_height(&[0, 1, 1]).unwrap(), vec![0, 1, 0, 1, 0]);
        assert_eq!(contour_from_height(&[0, 1, 2]).unwrap(), vec![0, 1, 2, 1, 0]);
    }

    #[test]
    fn harris_from_contour_examples() {
        assert_eq!(harris_from_contour(&[0]).unwrap().walk(), &[0, 1, 0]);
        assert_eq!(
            harris_from_contour(&[0, 1, 0, 1, 0]).unwrap().walk(),
            &[0, 1, 2, 1, 2, 1, 0]
        );
        assert_eq!(
            harris_from_contour(&[0, 1, 2, 1, 0]).unwrap().walk(),
            &[0, 1, 2, 3, 2, 1, 0]
        );
    }

    #[test]
    fn formula_chain_agrees_with_direct_walk() {
        for counts in [
            vec![0],
            vec![2, 0, 0],
            vec![1, 1, 0],
            vec![1, 2, 0, 0],
            vec![3, 1, 0, 0, 2, 0, 0],
            vec![2, 2, 1, 0, 0, 0, 1, 0],
        ] {
            let tree = build_tree(&counts).unwrap();
            let direct = harris_walk(&tree);
            let walks = coding_walks(&counts).unwrap();
            let via_chain = harris_from_contour(&walks.contour).unwrap();
            assert_eq!(via_chain, direct, "chain mismatch for {counts:?}");
        }
    }

    #[test]
    fn degree_string_round_trip() {
        let t = build_tree(&[2, 1, 0, 0]).unwrap();
        let s = t.to_degree_string();
        assert_eq!(s, "2,1,0,0");
        assert_eq!(OrderedTree::from_degree_string(&s).unwrap(), t);
    }

    /// Random valid degree sequences by simulating a left-to-right walk.
    fn degree_sequence_strategy() -> impl Strategy<Value = Vec<usize>> {
        proptest::collection::vec(0usize..4, 1..40).prop_map(|raw| {
            // make it valid: append children until the walk closes
            let mut counts = Vec::new();
            let mut open = 1i64;
            for c in raw {
                if open == 0 {
                    break;
                }
                counts.push(c);
                open += c as i64 - 1;
            }
            while open > 0 {
                counts.push(0);
                open -= 1;
            }
            counts
        })
    }

    proptest! {
        #[test]
        fn round_trip_tree_harris_tree(counts in degree_sequence_strategy()) {
            let tree = build_tree(&counts).unwrap();
            let path = harris_walk(&tree);
            let back = tree_from_harris(&path).unwrap();
            prop_assert_eq!(&back, &tree);
            prop_assert_eq!(harris_walk(&back), path);
        }

        #[test]
        fn chain_route_agreement(counts in degree_sequence_strategy()) {
            let tree = build_tree(&counts).unwrap();
            let walks = coding_walks(&counts).unwrap();
            prop_assert_eq!(harris_from_contour(&walks.contour).unwrap(), harris_walk(&tree));
        }

        #[test]
        fn degree_sum_invariant(counts in degree_sequence_strategy()) {
            let tree = build_tree(&counts).unwrap();
            let total: usize = (0..tree.len()).map(|v| tree.children(v).len()).sum();
            prop_assert_eq!(total, tree.len() - 1);
        }
    }
}
