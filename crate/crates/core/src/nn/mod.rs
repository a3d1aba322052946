//! Dense neural-network building blocks with hand-written backward passes.

pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod module;
pub mod optim;
pub mod tensor;

pub use checkpoint::Checkpoint;
pub use gradcheck::{finite_difference, grad_check, GradCheck};
pub use layers::{BatchNorm, BnMode, Linear, Mlp, MlpCache, ScalarAffine};
pub use module::{Module, Param, TensorKind};
pub use optim::{Adam, LrSchedule};
pub use tensor::{Matrix, Real};
