mod dynamics;
mod kcurves;
mod properties;
mod shift_sweep;

pub use dynamics::Dynamics;
pub use kcurves::KCurves;
pub use properties::{Properties, PropertyCase};
pub use shift_sweep::ShiftSweep;
