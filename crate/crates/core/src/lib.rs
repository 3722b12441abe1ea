pub mod cli;
pub mod eigcert;
pub mod error;
pub mod floer;
pub mod kernel;
pub mod oneform;
pub mod quad;
pub mod spectrum;
pub mod sum;
pub mod synthetic;
pub mod testfn;
pub mod trace;

pub use error::{Error, Result};
pub use kernel::{Kernel, Parity};
pub use spectrum::{GeodesicRecord, ManifoldData};
pub use synthetic::SyntheticSpectrum;
pub use testfn::TestFunction;
pub use trace::{FormalSide, Side, SideKind, SpincStructure, TraceData};
