//! Reduced-complexity processing of binary polarization kernels over recursive
//! trellises, with SC/SCL polar decoding on top.

pub mod codes;
pub mod error;
pub mod gf2;
pub mod kernel;
pub mod oracles;
pub mod plan;
pub mod polar;
pub mod processor;
pub mod sim;
pub mod verify;

use std::fmt::{Debug, Display};

use num_traits::Float;

pub use error::{Error, Result};
pub use kernel::Kernel;
pub use plan::{compile_plan, compile_with_tree, KernelPlan};

/// Real type the runtime computes with.
pub trait Scalar: Float + Debug + Display + Send + Sync + 'static {}

impl<T: Float + Debug + Display + Send + Sync + 'static> Scalar for T {}

/// Kernel processor in double precision.
pub type Processor<'p> = processor::ProcessorState<'p, f64>;
/// Kernel processor in single precision.
pub type Processor32<'p> = processor::ProcessorState<'p, f32>;
