//! Domain records shared by the simulator, the closed-form models and the
//! fitter.

mod curve;
mod ensemble;
mod result;
mod sequence;

pub use curve::{Axis, SweepCurve};
pub use ensemble::{
    DephasingParams, DipoleKernel, EnsembleSpec, InhomogeneousLine, LineShape, ShfModulation,
    SuddenJumpBath, DEFAULT_TRUNCATION_FWHM, ER_TIO2_LINE_CENTER_HZ,
};
pub use result::FitResult;
pub use sequence::{PulseArea, PulseEvent, PulseSequence};
