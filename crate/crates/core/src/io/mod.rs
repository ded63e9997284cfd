//! Files, metrics and plot data.

pub mod metrics;
pub mod plot;
pub mod tensor;

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::Result;

/// Reads a whole file; errors name the path.
pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| with_path(path, e))
}

pub(crate) fn with_path(path: &Path, e: std::io::Error) -> crate::Error {
    std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into()
}

/// Writes `bytes` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| with_path(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp).map_err(|e| with_path(&tmp, e))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).map_err(|e| with_path(path, e))?;
    Ok(())
}
