//! Dictionaries evaluated on weighted point sets, their Gram matrices and
//! subspace projections.

mod design;
mod families;
mod io;
mod measure;
mod subspace;

pub use design::{gram, l2_dist, mixture_values, DesignMatrix, GramMatrix, ValueRange};
pub use families::{trig_atom, PredictionDictionary, PredictionFamily};
pub use io::{read_design_csv, write_design_csv, DesignFile};
pub use measure::{MeasureKind, MeasureRep};
pub use subspace::{residual_norms, u_of_l, ResidualReport, SubspaceBasis, UOfL};
