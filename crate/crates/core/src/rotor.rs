//! Rotor walk on a lazily grown periodic tree with a sink above the root.
//!
//! Vertices live in an arena and are never freed during a walk. Children of a
//! vertex are allocated as one contiguous block the first time the walker
//! steps into any of them. Each rotor is sampled once, at allocation, from a
//! hash of the seed and the vertex's path from the root, so a trajectory does
//! not depend on the order in which parts of the tree were materialized.
//!
//! Rotor state 0 points to the parent (the sink, for the root) and state
//! `k ∈ 1..=d` to the `k`-th child. A step turns the rotor to
//! `(state + 1) mod (d + 1)` and follows it.
//!
//! The walk starts on the sink at time 0, so `τ_0 = 0` is a genuine sink
//! visit, `X_1` is the root and `τ_k − τ_{k−1} = 2|R_k|` holds for every
//! `k ≥ 1`. The sink is never part of the range.

use std::cmp::Ordering;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::generator::Generator;
use crate::law::{LawError, RotorLaw};

const NONE: u32 = u32::MAX;
const ROOT: u32 = 0;
const ROOT_SALT: u64 = 0x5851_f42d_4c95_7f2d;
const CHILD_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
const ROTOR_SALT: u64 = 0xd1b5_4a32_d192_ed03;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WalkError {
    #[error("root type {root_type} out of range 1..={n_types}")]
    RootType { root_type: usize, n_types: usize },
    #[error(transparent)]
    Law(#[from] LawError),
}

/// SplitMix64 finalizer.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent 64-bit seed for stream `index` derived from `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    mix64(base ^ mix64(index.wrapping_add(CHILD_SALT)))
}

fn unit_interval(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Where the walker is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Position {
    Sink,
    Vertex(u32),
}

/// Rotor arithmetic. [`RotorModulus::DegreeOnly`] drops the last child from
/// the rotor cycle; it exists to check that the identity checks notice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RotorModulus {
    #[default]
    Standard,
    DegreeOnly,
}

#[derive(Debug, Clone)]
struct Node {
    ty: u32,
    rotor: u32,
    parent: u32,
    first_child: u32,
    /// Index of the excursion during which the vertex was first visited
    /// (`NONE` while unvisited): first visit in `(τ_e, τ_{e+1}]`.
    epoch: u32,
    key: u64,
}

/// What happened in one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepInfo {
    pub n: u64,
    pub from: Position,
    pub to: Position,
    /// Rotor of the departed vertex after turning; `None` when leaving the sink.
    pub rotor_after: Option<u32>,
}

/// Tunables for a walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkOptions {
    /// Record `(n, |R_n|)` whenever `n` is a multiple of this; 0 disables.
    pub range_stride: u64,
    /// Stop runs once the arena holds this many vertices.
    pub max_vertices: Option<usize>,
    pub modulus: RotorModulus,
}

impl Default for WalkOptions {
    fn default() -> Self {
        WalkOptions {
            range_stride: 0,
            max_vertices: None,
            modulus: RotorModulus::Standard,
        }
    }
}

/// A rotor walk in progress together with the part of the tree it has seen.
#[derive(Debug, Clone)]
pub struct WalkState {
    generator: Generator,
    law: RotorLaw,
    root_type: usize,
    seed: u64,
    options: WalkOptions,
    arena: Vec<Node>,
    position: Position,
    steps: u64,
    range_by_type: Vec<u64>,
    range_total: u64,
    edge_traversals_by_type: Vec<u64>,
    sink_visits: Vec<u64>,
    range_at_returns: Vec<u64>,
    discovery: Vec<u32>,
    range_log: Vec<(u64, u64)>,
    validated: usize,
}

/// Starts a walk on the sink above a root of type `root_type` (1-based).
pub fn new_walk(g: &Generator, law: &RotorLaw, root_type: usize, seed: u64) -> Result<WalkState, WalkError> {
    WalkState::with_options(g, law, root_type, seed, WalkOptions::default())
}

impl WalkState {
    pub fn with_options(
        g: &Generator,
        law: &RotorLaw,
        root_type: usize,
        seed: u64,
        options: WalkOptions,
    ) -> Result<Self, WalkError> {
        if root_type == 0 || root_type > g.n_types() {
            return Err(WalkError::RootType {
                root_type,
                n_types: g.n_types(),
            });
        }
        law.check_matches(g)?;
        let mut walk = WalkState {
            generator: g.clone(),
            law: law.clone(),
            root_type: root_type - 1,
            seed,
            options,
            arena: Vec::new(),
            position: Position::Sink,
            steps: 0,
            range_by_type: vec![0; g.n_types()],
            range_total: 0,
            edge_traversals_by_type: vec![0; g.n_types()],
            sink_visits: Vec::new(),
            range_at_returns: Vec::new(),
            discovery: Vec::new(),
            range_log: Vec::new(),
            validated: 0,
        };
        let key = mix64(seed ^ ROOT_SALT);
        walk.push_node(walk.root_type, NONE, key);
        Ok(walk)
    }

    fn push_node(&mut self, ty: usize, parent: u32, key: u64) {
        let u = unit_interval(mix64(key ^ ROTOR_SALT));
        let rotor = self.law.sample(ty, u) as u32;
        self.arena.push(Node {
            ty: ty as u32,
            rotor,
            parent,
            first_child: NONE,
            epoch: NONE,
            key,
        });
    }

    fn ensure_children(&mut self, v: u32) -> u32 {
        let node = &self.arena[v as usize];
        if node.first_child != NONE {
            return node.first_child;
        }
        let ty = node.ty as usize;
        let parent_key = node.key;
        let first = u32::try_from(self.arena.len()).expect("arena exceeds u32 indices");
        for l in 0..self.generator.degree(ty) {
            let child_ty = self.generator.word(ty)[l];
            let key = mix64(parent_key ^ mix64((l as u64 + 1).wrapping_mul(CHILD_SALT)));
            self.push_node(child_ty, v, key);
        }
        self.arena[v as usize].first_child = first;
        first
    }

    /// Advances the walk by one step.
    pub fn step(&mut self) -> StepInfo {
        let from = self.position;
        let (to, rotor_after, edge_ty) = match from {
            Position::Sink => (Position::Vertex(ROOT), None, self.root_type),
            Position::Vertex(x) => {
                let (ty, d) = {
                    let node = &self.arena[x as usize];
                    (node.ty as usize, self.generator.degree(node.ty as usize) as u32)
                };
                let modulus = match self.options.modulus {
                    RotorModulus::Standard => d + 1,
                    RotorModulus::DegreeOnly => d,
                };
                let rotor = (self.arena[x as usize].rotor + 1) % modulus;
                self.arena[x as usize].rotor = rotor;
                if rotor == 0 {
                    let parent = self.arena[x as usize].parent;
                    let to = if parent == NONE {
                        Position::Sink
                    } else {
                        Position::Vertex(parent)
                    };
                    (to, Some(rotor), ty)
                } else {
                    let child = self.ensure_children(x) + rotor - 1;
                    let child_ty = self.arena[child as usize].ty as usize;
                    (Position::Vertex(child), Some(rotor), child_ty)
                }
            }
        };
        self.steps += 1;
        self.edge_traversals_by_type[edge_ty] += 1;
        match to {
            Position::Sink => {
                self.sink_visits.push(self.steps);
                self.range_at_returns.push(self.range_total);
            }
            Position::Vertex(v) => {
                let epoch = self.sink_visits.len() as u32;
                let node = &mut self.arena[v as usize];
                if node.epoch == NONE {
                    node.epoch = epoch;
                    self.range_by_type[node.ty as usize] += 1;
                    self.range_total += 1;
                    self.discovery.push(v);
                }
            }
        }
        self.position = to;
        let stride = self.options.range_stride;
        if stride > 0 && self.steps.is_multiple_of(stride) {
            self.range_log.push((self.steps, self.range_total));
        }
        StepInfo {
            n: self.steps,
            from,
            to,
            rotor_after,
        }
    }

    fn over_memory(&self) -> bool {
        self.options.max_vertices.is_some_and(|cap| self.arena.len() >= cap)
    }

    /// Steps until `n` steps have been taken in total.
    pub fn run_to(&mut self, n: u64) -> RunStatus {
        while self.steps < n {
            if self.over_memory() {
                return RunStatus::MemoryCapExhausted;
            }
            self.step();
        }
        RunStatus::Completed
    }

    /// Runs until `k` sink returns have happened in total, validating every
    /// new return. At most `step_cap` steps are taken by this call.
    pub fn run_until_returns(&mut self, k: usize, step_cap: u64) -> ReturnRun {
        let start = self.steps;
        let mut records = Vec::new();
        let status = loop {
            while self.validated < self.sink_visits.len() {
                self.validated += 1;
                records.push(self.validate_return(self.validated));
            }
            if self.sink_visits.len() >= k {
                break RunStatus::Completed;
            }
            if self.steps - start >= step_cap {
                break RunStatus::StepCapExhausted;
            }
            if self.over_memory() {
                break RunStatus::MemoryCapExhausted;
            }
            self.step();
        };
        ReturnRun { records, status }
    }

    /// Checks the exact identities at return `k` (1-based) by scanning the
    /// arena. Must be called while the state is still at `τ_k`.
    fn validate_return(&self, k: usize) -> SinkReturnRecord {
        debug_assert_eq!(self.sink_visits.len(), k);
        let n = self.generator.n_types();
        let tau = self.sink_visits[k - 1];
        let prev_tau = if k >= 2 { self.sink_visits[k - 2] } else { 0 };
        let range_total = self.range_at_returns[k - 1];
        let mut violations = Vec::new();

        if tau - prev_tau != 2 * range_total {
            violations.push(Violation::ReturnTime {
                k,
                increment: tau - prev_tau,
                range: range_total,
            });
        }

        // R_k = {epoch < k}; R_{k−1} = {epoch < k − 1}.
        let k32 = k as u32;
        let in_range = |v: u32, bound: u32| {
            let e = self.arena[v as usize].epoch;
            e != NONE && e < bound
        };
        let mut leaves = vec![0u64; n];
        let mut unrestored = None;
        let mut skipped = None;
        for v in 0..self.arena.len() as u32 {
            if !in_range(v, k32) {
                continue;
            }
            let node = &self.arena[v as usize];
            if node.rotor != 0 && unrestored.is_none() {
                unrestored = Some(v);
            }
            let ty = node.ty as usize;
            for (l, &child_ty) in self.generator.word(ty).iter().enumerate() {
                let visited =
                    node.first_child != NONE && in_range(node.first_child + l as u32, k32);
                if !visited {
                    leaves[child_ty] += 1;
                    if k >= 2 && in_range(v, k32 - 1) && skipped.is_none() {
                        skipped = Some(if node.first_child == NONE {
                            VertexPath::child_of(self.path(v), l as u32 + 1)
                        } else {
                            self.path(node.first_child + l as u32)
                        });
                    }
                }
            }
        }
        if let Some(v) = unrestored {
            violations.push(Violation::RotorNotRestored {
                k,
                vertex: self.path(v),
                rotor: self.arena[v as usize].rotor,
            });
        }
        if let Some(vertex) = skipped {
            violations.push(Violation::LeafSkipped { k, vertex });
        }

        let counts = self.generator.adjacency_counts();
        let range = self.range_at_return_by_type(k);
        let formula: Vec<i64> = (0..n)
            .map(|j| {
                let children: u64 = (0..n).map(|i| counts[i][j] * range[i]).sum();
                children as i64 - range[j] as i64 + i64::from(j == self.root_type)
            })
            .collect();
        if formula.iter().zip(&leaves).any(|(f, l)| *f != *l as i64) {
            violations.push(Violation::LeafCount {
                k,
                scanned: leaves.clone(),
                formula,
            });
        }

        if k >= 2 {
            let lo = self.range_at_returns[k - 2] as usize;
            let hi = range_total as usize;
            let mut previous: Option<VertexPath> = None;
            for &v in &self.discovery[lo..hi] {
                let parent = self.arena[v as usize].parent;
                if parent == NONE || !in_range(parent, k32 - 1) {
                    continue;
                }
                let path = self.path(v);
                if let Some(prev) = &previous {
                    if prev.cmp(&path) != Ordering::Less {
                        violations.push(Violation::LeafOrder {
                            k,
                            before: prev.clone(),
                            after: path,
                        });
                        break;
                    }
                }
                previous = Some(path);
            }
        }

        SinkReturnRecord {
            k,
            tau,
            range_by_type: range,
            leaves_by_type: leaves,
            violations,
        }
    }

    fn range_at_return_by_type(&self, k: usize) -> Vec<u64> {
        let hi = self.range_at_returns[k - 1] as usize;
        if hi == self.range_total as usize {
            return self.range_by_type.clone();
        }
        let mut counts = vec![0u64; self.generator.n_types()];
        for &v in &self.discovery[..hi] {
            counts[self.arena[v as usize].ty as usize] += 1;
        }
        counts
    }

    /// Child indices (1-based) leading from the root to `v`.
    pub fn path(&self, v: u32) -> VertexPath {
        let mut steps = Vec::new();
        let mut cur = v;
        while cur != ROOT {
            let parent = self.arena[cur as usize].parent;
            steps.push(cur - self.arena[parent as usize].first_child + 1);
            cur = parent;
        }
        steps.reverse();
        VertexPath(steps)
    }

    pub fn position_path(&self, p: Position) -> String {
        match p {
            Position::Sink => "o".to_string(),
            Position::Vertex(v) => self.path(v).to_string(),
        }
    }

    /// 1-based type of the vertex at `p`, `None` for the sink.
    pub fn position_type(&self, p: Position) -> Option<usize> {
        match p {
            Position::Sink => None,
            Position::Vertex(v) => Some(self.arena[v as usize].ty as usize + 1),
        }
    }

    pub fn position(&self) -> Position {
        self.position
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// 1-based root type.
    pub fn root_type(&self) -> usize {
        self.root_type + 1
    }

    pub fn range_by_type(&self) -> &[u64] {
        &self.range_by_type
    }

    pub fn range_size(&self) -> u64 {
        self.range_total
    }

    pub fn edge_traversals_by_type(&self) -> &[u64] {
        &self.edge_traversals_by_type
    }

    /// Return times `τ_1, τ_2, …`.
    pub fn sink_visits(&self) -> &[u64] {
        &self.sink_visits
    }

    pub fn range_log(&self) -> &[(u64, u64)] {
        &self.range_log
    }

    pub fn materialized(&self) -> usize {
        self.arena.len()
    }

    /// Current rotor state of vertex `v`.
    pub fn rotor(&self, v: u32) -> u32 {
        self.arena[v as usize].rotor
    }

    /// Initial rotor state the walk sampled for the vertex at `path`, without
    /// touching the arena.
    pub fn initial_rotor_at(&self, path: &VertexPath) -> u32 {
        let mut key = mix64(self.seed ^ ROOT_SALT);
        let mut ty = self.root_type;
        for &l in &path.0 {
            key = mix64(key ^ mix64(u64::from(l).wrapping_mul(CHILD_SALT)));
            ty = self.generator.word(ty)[l as usize - 1];
        }
        self.law.sample(ty, unit_interval(mix64(key ^ ROTOR_SALT))) as u32
    }

    /// Vertices in the range, in order of first visit.
    pub fn discovery_order(&self) -> &[u32] {
        &self.discovery
    }
}

/// Path of child indices from the root; lexicographic order is the order in
/// which a depth-first search with increasing child index meets vertices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct VertexPath(pub Vec<u32>);

impl VertexPath {
    fn child_of(mut parent: VertexPath, l: u32) -> VertexPath {
        parent.0.push(l);
        parent
    }
}

impl fmt::Display for VertexPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("r")?;
        for l in &self.0 {
            write!(f, ".{l}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    StepCapExhausted,
    MemoryCapExhausted,
}

/// A broken exact identity at a sink return.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// `τ_k − τ_{k−1} ≠ 2|R_k|`.
    ReturnTime { k: usize, increment: u64, range: u64 },
    /// Scanned leaf counts differ from `(Dᵀ − I)#R_k + e_root`.
    LeafCount { k: usize, scanned: Vec<u64>, formula: Vec<i64> },
    /// A visited vertex whose rotor does not point to its parent at `τ_k`.
    RotorNotRestored { k: usize, vertex: VertexPath, rotor: u32 },
    /// A leaf of `R_{k−1}` still unvisited at `τ_k`.
    LeafSkipped { k: usize, vertex: VertexPath },
    /// Leaves of `R_{k−1}` first reached out of depth-first order.
    LeafOrder { k: usize, before: VertexPath, after: VertexPath },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ReturnTime { k, increment, range } => {
                write!(f, "return {k}: tau increment {increment} != 2 * |R| = {}", 2 * range)
            }
            Violation::LeafCount { k, scanned, formula } => {
                write!(f, "return {k}: leaves {scanned:?} != (D^T - I) #R + e_root = {formula:?}")
            }
            Violation::RotorNotRestored { k, vertex, rotor } => {
                write!(f, "return {k}: rotor at {vertex} is {rotor}, not 0")
            }
            Violation::LeafSkipped { k, vertex } => {
                write!(f, "return {k}: leaf {vertex} of the previous range was not explored")
            }
            Violation::LeafOrder { k, before, after } => {
                write!(f, "return {k}: leaf {after} reached after {before}")
            }
        }
    }
}

/// State of the walk at `τ_k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SinkReturnRecord {
    pub k: usize,
    pub tau: u64,
    pub range_by_type: Vec<u64>,
    /// Leaf counts `𝐋_k` obtained by scanning the tree.
    pub leaves_by_type: Vec<u64>,
    pub violations: Vec<Violation>,
}

impl SinkReturnRecord {
    pub fn range_size(&self) -> u64 {
        self.range_by_type.iter().sum()
    }

    pub fn leaves_size(&self) -> u64 {
        self.leaves_by_type.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct ReturnRun {
    pub records: Vec<SinkReturnRecord>,
    pub status: RunStatus,
}

impl ReturnRun {
    pub fn violations(&self) -> impl Iterator<Item = &Violation> {
        self.records.iter().flat_map(|r| r.violations.iter())
    }
}

/// Per-type total progeny of one good-children tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoodTreeSample {
    pub counts: Vec<u64>,
    pub truncated: bool,
}

/// Samples the good-children branching process directly, without a walk.
/// Stops with `truncated` once more than `size_cap` vertices were generated.
pub fn sample_good_tree(
    g: &Generator,
    law: &RotorLaw,
    root_type: usize,
    seed: u64,
    size_cap: u64,
) -> Result<GoodTreeSample, WalkError> {
    if root_type == 0 || root_type > g.n_types() {
        return Err(WalkError::RootType {
            root_type,
            n_types: g.n_types(),
        });
    }
    law.check_matches(g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; g.n_types()];
    let mut total = 0u64;
    let mut stack = vec![root_type - 1];
    while let Some(ty) = stack.pop() {
        counts[ty] += 1;
        total += 1;
        if total > size_cap {
            return Ok(GoodTreeSample { counts, truncated: true });
        }
        let state = law.sample(ty, rng.random::<f64>());
        stack.extend_from_slice(&g.word(ty)[state..]);
    }
    Ok(GoodTreeSample {
        counts,
        truncated: false,
    })
}
