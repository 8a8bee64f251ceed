pub mod analyze;
pub mod emergence;
pub mod generate;
pub mod selfcheck;

use std::fs;
use std::path::Path;

pub(crate) fn ensure_dir(dir: &Path) -> nmfa::Result<()> {
    fs::create_dir_all(dir).map_err(|e| nmfa::Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}
