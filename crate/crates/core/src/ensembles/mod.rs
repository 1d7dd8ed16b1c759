//! Online ensembles over incremental base learners.

pub mod arf;
pub mod bagging;
pub mod member;
pub mod pool;

pub use arf::{subspace_size, Arf, ArfConfig, ArfMember, SubspacePolicy};
pub use bagging::{BaggingConfig, BoostConfig, OnlineBoost, OzaBag};
pub use member::{poisson_draw, Member, MemberKind};
pub use pool::{Aee, AeeConfig, Dwm, DwmConfig, Expert};
