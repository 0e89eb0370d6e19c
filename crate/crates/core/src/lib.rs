pub mod data;
pub mod dsp;
pub mod error;
pub mod model;
pub mod nn;
pub mod scalar;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::{Shape, Tensor};

pub use model::{EegInception, ModelConfig};

pub type Tensor32 = Tensor<f32>;
pub type Tensor64 = Tensor<f64>;
pub type Model32 = EegInception<f32>;
pub type Model64 = EegInception<f64>;
