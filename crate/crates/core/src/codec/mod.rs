//! Coder-controllers: synthesis from tuples, rates and cover extraction.

pub mod controller;
pub mod extract;

pub use controller::{average_data_rate, periodic_extension, synthesize_from_tuple, CoderController, CoderLaw};
pub use extract::{extract_cover_from_codec, ExtractionResult};
