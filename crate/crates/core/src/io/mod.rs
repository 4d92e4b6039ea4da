//! File formats: TU benchmark datasets, plain edge lists, whitespace feature
//! tables and the JSON hierarchy document.

pub mod document;
pub mod edge_list;
pub mod tu;

pub use document::{read_hierarchy, write_hierarchy, HierarchyDocument};
pub use edge_list::{parse_edge_list, parse_features, read_edge_list, read_features};
pub use tu::{read_tu_dataset, TuDataset};

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Content of a line with any `#` comment removed and whitespace trimmed.
pub(crate) fn strip_comment(line: &str) -> &str {
    line.split_once('#').map_or(line, |(head, _)| head).trim()
}
