//! Controllability of linear control systems on the nonnilpotent solvable
//! three-dimensional Lie groups R2~, R2, R3, R3_λ, R3'_λ, E~ and E_n.

pub mod algebra;
pub mod cli;
pub mod controllability;
pub mod derivation;
pub mod selftest;
pub mod simulator;
pub mod system;

pub use algebra::{AlgebraElement, GroupClass, GroupElement, GroupKind, Mat2, Vec2};
pub use controllability::{decide, Clause, Verdict};
pub use derivation::{make_derivation, Derivation};
pub use system::LinearSystem;
