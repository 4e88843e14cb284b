//! Exact walk counts by repeated application of the move-set stencil.

use std::ops::AddAssign;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lattice::corridor::CorridorSpec;

/// Largest interior grid handled by the stencil.
pub const MAX_DP_CELLS: u64 = 10_000_000;

/// Exact number of `m`-step walks from `a` to `b` that stay strictly
/// between the walls, stepping by moves of the corridor's move set.
pub fn corridor_count_dp(spec: &CorridorSpec, a: &[i64], b: &[i64], m: u32) -> Result<BigUint> {
    spec.check_interior(a, "start")?;
    spec.check_interior(b, "end")?;
    let grid = Grid::new(&spec.d)?;
    let moves: Vec<&[i8]> = spec.move_set.moves().iter().map(|v| v.as_slice()).collect();
    // u128 suffices while |M|^m < 2^127
    let bits = f64::from(m) * (moves.len() as f64).log2();
    if bits < 126.0 {
        let out: u128 = run(&grid, &moves, a, b, m);
        Ok(BigUint::from(out))
    } else {
        Ok(run::<BigUint>(&grid, &moves, a, b, m))
    }
}

struct Grid {
    /// Interior width per axis (`d_j - 1`).
    widths: Vec<usize>,
    strides: Vec<usize>,
    cells: usize,
}

impl Grid {
    fn new(d: &[i64]) -> Result<Self> {
        let widths: Vec<usize> = d.iter().map(|&dj| (dj - 1) as usize).collect();
        let mut cells: u64 = 1;
        for &w in &widths {
            cells = cells.saturating_mul(w as u64);
        }
        if cells > MAX_DP_CELLS {
            return Err(Error::ResourceLimit(format!(
                "stencil grid has {cells} cells, limit is {MAX_DP_CELLS}"
            )));
        }
        let mut strides = vec![1usize; widths.len()];
        for j in (0..widths.len().saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * widths[j + 1];
        }
        Ok(Grid {
            widths,
            strides,
            cells: cells as usize,
        })
    }

    /// Flat index of an interior point given in corridor coordinates.
    fn flat(&self, p: &[i64]) -> usize {
        p.iter().zip(&self.strides).map(|(&x, &s)| (x - 1) as usize * s).sum()
    }
}

fn run<T>(grid: &Grid, moves: &[&[i8]], a: &[i64], b: &[i64], m: u32) -> T
where
    T: Clone + Zero + One + for<'x> AddAssign<&'x T>,
{
    let n = grid.widths.len();
    let mut cur = vec![T::zero(); grid.cells];
    let mut next = vec![T::zero(); grid.cells];
    cur[grid.flat(a)] = T::one();
    let mut coord = vec![0usize; n];
    for _ in 0..m {
        for x in next.iter_mut() {
            x.set_zero();
        }
        coord.iter_mut().for_each(|c| *c = 0);
        for (flat, value) in cur.iter().enumerate() {
            if !value.is_zero() {
                'moves: for mv in moves {
                    let mut target = flat as isize;
                    for j in 0..n {
                        let c = coord[j] as isize + isize::from(mv[j]);
                        if c < 0 || c >= grid.widths[j] as isize {
                            continue 'moves;
                        }
                        target += isize::from(mv[j]) * grid.strides[j] as isize;
                    }
                    next[target as usize] += value;
                }
            }
            // advance the coordinate odometer, last axis fastest
            for j in (0..n).rev() {
                coord[j] += 1;
                if coord[j] < grid.widths[j] {
                    break;
                }
                coord[j] = 0;
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur[grid.flat(b)].clone()
}
