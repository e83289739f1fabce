pub mod error;
pub mod fit;
pub mod levinson;
pub mod mat2;
pub mod model;
pub mod pipeline;
pub mod recurrence;
pub mod scalar;

pub use error::{Error, Result};
pub use levinson::{AsymptoticBasis, SystemSpec};
pub use mat2::{Mat2, Vec2};
pub use model::{Model, ModelParams, Regime};
pub use pipeline::{AsymptoticAnsatz, Branch, Pipeline};
pub use recurrence::SolutionTrace;
pub use scalar::{Mpf, PrecisionContext, Real};

pub type MpMat2 = Mat2<Mpf>;
pub type MpVec2 = Vec2<Mpf>;
pub type MpModel = Model<Mpf>;
pub type MpPipeline = Pipeline<Mpf>;
pub type MpTrace = SolutionTrace<Mpf>;
pub type MpSystemSpec = SystemSpec<Mpf>;
pub type F64Model = Model<f64>;
pub type F64Pipeline = Pipeline<f64>;
