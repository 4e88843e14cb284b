use crate::error::{Error, Result};

/// Largest dimension for which the full diagonal move set is materialized.
pub const MAX_FULL_DIM: usize = 12;

/// Allowed per-step displacements on the n-dimensional grid, each component
/// in {-1, 0, +1}. Moves are kept sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoveSet {
    n: usize,
    moves: Vec<Vec<i8>>,
}

impl MoveSet {
    pub fn new(n: usize, mut moves: Vec<Vec<i8>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("move set dimension must be at least 1".into()));
        }
        for m in &moves {
            if m.len() != n {
                return Err(Error::Domain(format!("move {m:?} does not have {n} components")));
            }
            if m.iter().any(|c| !(-1..=1).contains(c)) {
                return Err(Error::Domain(format!("move {m:?} has a component outside -1..=1")));
            }
        }
        moves.sort();
        if moves.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("duplicate move".into()));
        }
        if moves.is_empty() {
            return Err(Error::Domain("move set is empty".into()));
        }
        Ok(MoveSet { n, moves })
    }

    /// All 3^n moves over {-1, 0, 1}^n.
    pub fn full(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_FULL_DIM {
            return Err(Error::Domain(format!(
                "full move set dimension must be in 1..={MAX_FULL_DIM}, got {n}"
            )));
        }
        let sizes = vec![3usize; n];
        let moves = crate::model::odometer(&sizes)
            .into_iter()
            .map(|v| v.into_iter().map(|k| k as i8 - 1).collect())
            .collect();
        Ok(MoveSet { n, moves })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn moves(&self) -> &[Vec<i8>] {
        &self.moves
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// True when every vector of {-1,0,1}^n is present.
    pub fn is_full(&self) -> bool {
        self.moves.len() as u64 == 3u64.pow(self.n as u32)
    }

    /// The moves whose components are all non-negative.
    pub fn nonnegative_subset(&self) -> MoveSet {
        MoveSet {
            n: self.n,
            moves: self
                .moves
                .iter()
                .filter(|m| m.iter().all(|&c| c >= 0))
                .cloned()
                .collect(),
        }
    }

    /// Parses `full<n>` (e.g. `full1`, `full3`).
    pub fn parse(name: &str) -> Result<Self> {
        let n = name
            .strip_prefix("full")
            .and_then(|rest| rest.parse::<usize>().ok())
            .ok_or_else(|| Error::Parse(format!("unknown move set {name:?}, expected full<n>")))?;
        Self::full(n)
    }
}
