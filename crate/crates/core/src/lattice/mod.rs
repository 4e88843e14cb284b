//! Lattice path counting in bounded corridors.

pub mod corridor;
pub mod count;
pub mod dp;
pub mod moveset;
pub mod ndim;
pub mod scaling;

pub use corridor::{approx_count_log10, corridor_count_1d, joint_to_corridor, CorridorAxis, CorridorSpec};
pub use count::{ClosedForm, PathCount};
pub use dp::corridor_count_dp;
pub use moveset::MoveSet;
pub use ndim::{
    corridor_count_factorized, corridor_count_factorized_exact, corridor_count_nd, t_hat, NdCount, NdMethod,
};
pub use scaling::{scaling_table, ScalingMethod, ScalingRow, ScalingTable, Series};
