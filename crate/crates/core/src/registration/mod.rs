//! Baseline registration methods and the external-result adapter.
//!
//! All methods return *correction* fields in the backward convention: warping
//! the moving slice by the field brings it onto the fixed slice. Methods are
//! deterministic and hold no shared state.

mod elastic;
mod external;
pub(crate) mod ncc;
mod options;
mod pyramid;
mod rigid;
mod stack;
mod translation;

pub use elastic::{register_elastic, ElasticEstimate};
pub use external::{import_external, ExternalKind, TRANSFORMS_FILE};
pub use ncc::ncc;
pub use options::{ElasticOptions, MethodKind, RegistrationMethod, RegistrationOptions, Similarity, StackStrategy};
pub use rigid::{register_rigid, RigidEstimate, LOW_NCC_THRESHOLD};
pub use stack::{register_pair, register_stack, RegistrationResult, SliceDiagnostics, DIAGNOSTICS_FILE};
pub use translation::{register_translation, register_translation_with, TranslationEstimate};
