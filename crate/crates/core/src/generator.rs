//! Base multigraphs that generate periodic trees.
//!
//! A [`Generator`] stores, for every vertex type, the ordered word of child
//! types. The word order is the planar embedding of the tree, so it also fixes
//! the order in which a rotor visits the children of a vertex.
//!
//! Types are numbered `1..=n` in files and error messages and `0..n` inside
//! the crate.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::law::{LawEntry, RotorLaw};
use crate::spectral::{Matrix, RationalMatrix};

/// Problems found while reading or validating a generator.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeneratorError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("missing key `n_types`")]
    MissingTypeCount,
    #[error("`n_types` must be a positive integer, got {0}")]
    BadTypeCount(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: type index must lie in 1..={n_types}")]
    KeyOutOfRange { key: String, n_types: usize },
    #[error("missing word for type {0}")]
    MissingWord(usize),
    #[error("empty word for type {0}")]
    EmptyWord(usize),
    #[error("word for type {ty}, position {position}: {message}")]
    BadEntry {
        ty: usize,
        position: usize,
        message: String,
    },
    #[error("word for type {ty}, position {position}: child type {child} out of range 1..={n_types}")]
    ChildOutOfRange {
        ty: usize,
        position: usize,
        child: i64,
        n_types: usize,
    },
    #[error("rotor law for type {ty}: {message}")]
    BadLaw { ty: usize, message: String },
    #[error("base graph is not strongly connected: type {to} is not reachable from type {from}")]
    NotStronglyConnected { from: usize, to: usize },
}

/// Validated generation function of a periodic tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Generator {
    words: Vec<Vec<usize>>,
}

impl Generator {
    /// Builds a generator from 0-based words, validating every invariant.
    pub fn new(words: Vec<Vec<usize>>) -> Result<Self, GeneratorError> {
        let n = words.len();
        if n == 0 {
            return Err(GeneratorError::BadTypeCount("0".into()));
        }
        for (i, word) in words.iter().enumerate() {
            if word.is_empty() {
                return Err(GeneratorError::EmptyWord(i + 1));
            }
            for (pos, &child) in word.iter().enumerate() {
                if child >= n {
                    return Err(GeneratorError::ChildOutOfRange {
                        ty: i + 1,
                        position: pos + 1,
                        child: child as i64 + 1,
                        n_types: n,
                    });
                }
            }
        }
        let g = Generator { words };
        g.check_strongly_connected()?;
        Ok(g)
    }

    /// Builds a generator from 1-based words, as written in files.
    pub fn from_one_based(words: &[&[usize]]) -> Result<Self, GeneratorError> {
        let n = words.len();
        let mut out = Vec::with_capacity(n);
        for (i, word) in words.iter().enumerate() {
            let mut w = Vec::with_capacity(word.len());
            for (pos, &c) in word.iter().enumerate() {
                if c == 0 || c > n {
                    return Err(GeneratorError::ChildOutOfRange {
                        ty: i + 1,
                        position: pos + 1,
                        child: c as i64,
                        n_types: n,
                    });
                }
                w.push(c - 1);
            }
            out.push(w);
        }
        Generator::new(out)
    }

    pub fn n_types(&self) -> usize {
        self.words.len()
    }

    /// Child word of type `ty` (0-based types).
    pub fn word(&self, ty: usize) -> &[usize] {
        &self.words[ty]
    }

    pub fn words(&self) -> &[Vec<usize>] {
        &self.words
    }

    /// Number of children `d_i` of a type-`ty` vertex.
    pub fn degree(&self, ty: usize) -> usize {
        self.words[ty].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.words.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.words.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Adjacency counts `d_ij = #{k : χ_i(k) = j}`.
    pub fn adjacency_counts(&self) -> Vec<Vec<u64>> {
        let n = self.n_types();
        let mut d = vec![vec![0u64; n]; n];
        for (i, word) in self.words.iter().enumerate() {
            for &c in word {
                d[i][c] += 1;
            }
        }
        d
    }

    /// Adjacency matrix `D` of the base multigraph.
    pub fn adjacency(&self) -> Matrix {
        let counts = self.adjacency_counts();
        Matrix::from_fn(self.n_types(), |i, j| counts[i][j] as f64)
    }

    /// Exact form of [`Generator::adjacency`].
    pub fn adjacency_exact(&self) -> RationalMatrix {
        let counts = self.adjacency_counts();
        RationalMatrix::from_fn(self.n_types(), |i, j| {
            crate::spectral::Rational::from_integer(counts[i][j].into())
        })
    }

    /// True iff every word reads the same forwards and backwards.
    pub fn is_palindromic(&self) -> bool {
        self.words
            .iter()
            .all(|w| w.iter().eq(w.iter().rev()))
    }

    /// Applies a relabeling `perm[old] = new` to types and words.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self, GeneratorError> {
        let n = self.n_types();
        let mut words = vec![Vec::new(); n];
        for (old, word) in self.words.iter().enumerate() {
            words[perm[old]] = word.iter().map(|&c| perm[c]).collect();
        }
        Generator::new(words)
    }

    fn check_strongly_connected(&self) -> Result<(), GeneratorError> {
        let n = self.n_types();
        let forward: Vec<Vec<usize>> = self.words.clone();
        let mut backward = vec![Vec::new(); n];
        for (i, word) in self.words.iter().enumerate() {
            for &c in word {
                backward[c].push(i);
            }
        }
        if let Some(t) = first_unreached(&forward, 0) {
            return Err(GeneratorError::NotStronglyConnected { from: 1, to: t + 1 });
        }
        if let Some(t) = first_unreached(&backward, 0) {
            return Err(GeneratorError::NotStronglyConnected { from: t + 1, to: 1 });
        }
        Ok(())
    }

    /// Serializes to the generator file format. Rotor arrays are emitted only
    /// when a law is given.
    pub fn to_toml(&self, law: Option<&RotorLaw>) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n_types = {}", self.n_types());
        for (i, word) in self.words.iter().enumerate() {
            let items: Vec<String> = word.iter().map(|c| (c + 1).to_string()).collect();
            let _ = writeln!(out, "word.{} = [{}]", i + 1, items.join(", "));
        }
        if let Some(law) = law {
            for i in 0..self.n_types() {
                let items: Vec<String> = (0..=self.degree(i))
                    .map(|k| match law.exact_prob(i, k) {
                        Some(q) => format!("\"{q}\""),
                        None => format!("{:?}", law.prob(i, k)),
                    })
                    .collect();
                let _ = writeln!(out, "rotor.{} = [{}]", i + 1, items.join(", "));
            }
        }
        out
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, word) in self.words.iter().enumerate() {
            let items: Vec<String> = word.iter().map(|c| (c + 1).to_string()).collect();
            writeln!(f, "chi_{} = ({})", i + 1, items.join(","))?;
        }
        Ok(())
    }
}

fn first_unreached(adj: &[Vec<usize>], start: usize) -> Option<usize> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.iter().position(|s| !s)
}

/// A generator file: the tree plus the rotor law it requests (uniform for
/// every type without a `rotor.<i>` entry).
#[derive(Debug, Clone)]
pub struct GeneratorFile {
    pub generator: Generator,
    pub law: RotorLaw,
    /// True when at least one `rotor.<i>` entry was present.
    pub explicit_law: bool,
}

/// Parses a generator file and validates it.
pub fn parse_generator(text: &str) -> Result<GeneratorFile, GeneratorError> {
    let table: toml::Table =
        toml::from_str(text).map_err(|e| GeneratorError::Syntax(e.to_string().trim().to_string()))?;

    let n_types = match table.get("n_types") {
        None => return Err(GeneratorError::MissingTypeCount),
        Some(toml::Value::Integer(n)) if *n >= 1 => *n as usize,
        Some(other) => return Err(GeneratorError::BadTypeCount(other.to_string())),
    };

    let mut words: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut rotors: BTreeMap<usize, toml::value::Array> = BTreeMap::new();
    for (key, value) in &table {
        match key.as_str() {
            "n_types" => {}
            "word" | "rotor" => {
                let sub = value
                    .as_table()
                    .ok_or_else(|| GeneratorError::Syntax(format!("`{key}` must be a table of arrays")))?;
                for (idx, entry) in sub {
                    let full = format!("{key}.{idx}");
                    let ty = parse_type_key(idx, &full, n_types)?;
                    let arr = entry
                        .as_array()
                        .ok_or_else(|| GeneratorError::Syntax(format!("`{full}` must be an array")))?;
                    if key == "word" {
                        words.insert(ty, parse_word(ty, arr, n_types)?);
                    } else {
                        rotors.insert(ty, arr.clone());
                    }
                }
            }
            other => return Err(GeneratorError::UnknownKey(other.to_string())),
        }
    }

    let mut ordered = Vec::with_capacity(n_types);
    for ty in 1..=n_types {
        match words.remove(&ty) {
            Some(w) => ordered.push(w),
            None => return Err(GeneratorError::MissingWord(ty)),
        }
    }
    let generator = Generator::new(ordered)?;
    let explicit_law = !rotors.is_empty();
    let law = law_from_arrays(&generator, &rotors)?;
    Ok(GeneratorFile {
        generator,
        law,
        explicit_law,
    })
}

/// Parses a law file holding only `rotor.<i>` arrays for an existing generator.
pub fn parse_law(text: &str, generator: &Generator) -> Result<RotorLaw, GeneratorError> {
    let table: toml::Table =
        toml::from_str(text).map_err(|e| GeneratorError::Syntax(e.to_string().trim().to_string()))?;
    let n_types = generator.n_types();
    let mut rotors = BTreeMap::new();
    for (key, value) in &table {
        if key != "rotor" {
            return Err(GeneratorError::UnknownKey(key.clone()));
        }
        let sub = value
            .as_table()
            .ok_or_else(|| GeneratorError::Syntax("`rotor` must be a table of arrays".into()))?;
        for (idx, entry) in sub {
            let full = format!("rotor.{idx}");
            let ty = parse_type_key(idx, &full, n_types)?;
            let arr = entry
                .as_array()
                .ok_or_else(|| GeneratorError::Syntax(format!("`{full}` must be an array")))?;
            rotors.insert(ty, arr.clone());
        }
    }
    law_from_arrays(generator, &rotors)
}

fn parse_type_key(idx: &str, full: &str, n_types: usize) -> Result<usize, GeneratorError> {
    match idx.parse::<usize>() {
        Ok(t) if (1..=n_types).contains(&t) => Ok(t),
        Ok(_) => Err(GeneratorError::KeyOutOfRange {
            key: full.to_string(),
            n_types,
        }),
        Err(_) => Err(GeneratorError::UnknownKey(full.to_string())),
    }
}

fn parse_word(ty: usize, arr: &[toml::Value], n_types: usize) -> Result<Vec<usize>, GeneratorError> {
    if arr.is_empty() {
        return Err(GeneratorError::EmptyWord(ty));
    }
    arr.iter()
        .enumerate()
        .map(|(pos, v)| match v {
            toml::Value::Integer(c) if *c >= 1 && (*c as usize) <= n_types => Ok(*c as usize - 1),
            toml::Value::Integer(c) => Err(GeneratorError::ChildOutOfRange {
                ty,
                position: pos + 1,
                child: *c,
                n_types,
            }),
            other => Err(GeneratorError::BadEntry {
                ty,
                position: pos + 1,
                message: format!("expected an integer type, got {other}"),
            }),
        })
        .collect()
}

fn law_from_arrays(
    generator: &Generator,
    rotors: &BTreeMap<usize, toml::value::Array>,
) -> Result<RotorLaw, GeneratorError> {
    let mut per_type = Vec::with_capacity(generator.n_types());
    for ty in 0..generator.n_types() {
        let d = generator.degree(ty);
        match rotors.get(&(ty + 1)) {
            None => per_type.push(RotorLaw::uniform_entries(d)),
            Some(arr) => {
                if arr.len() != d + 1 {
                    return Err(GeneratorError::BadLaw {
                        ty: ty + 1,
                        message: format!("expected {} probabilities (rotor states 0..={d}), got {}", d + 1, arr.len()),
                    });
                }
                let entries = arr
                    .iter()
                    .enumerate()
                    .map(|(k, v)| {
                        LawEntry::from_toml(v).map_err(|message| GeneratorError::BadLaw {
                            ty: ty + 1,
                            message: format!("state {k}: {message}"),
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                per_type.push(entries);
            }
        }
    }
    RotorLaw::from_entries(generator, per_type).map_err(|e| match e {
        crate::law::LawError::Invalid { ty, message } => GeneratorError::BadLaw { ty: ty + 1, message },
        other => GeneratorError::BadLaw {
            ty: 0,
            message: other.to_string(),
        },
    })
}
