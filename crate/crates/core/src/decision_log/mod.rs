//! Decision records, dense decision cubes and their binary cache.

mod cache;
mod cube;
mod record;

pub use cache::{load_cache, read_cache, save_cache, write_cache, CACHE_MAGIC};
pub use cube::{assemble_cube, DecisionCube, ImageInfo, ModelAccuracy, ModelInfo};
pub use record::{parse_records, write_records_csv, DecisionRecord, LogFormat, LOG_COLUMNS};
