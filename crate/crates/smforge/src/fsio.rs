//! Output files are written to a temporary file in the target directory and
//! renamed into place, so a failed command leaves no partial output.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

fn staged(path: &Path, data: &[u8]) -> io::Result<NamedTempFile> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(data)?;
    tmp.as_file().sync_all()?;
    Ok(tmp)
}

/// Write every file or, if staging any of them fails, none.
pub fn write_all_atomic(files: &[(PathBuf, Vec<u8>)]) -> io::Result<()> {
    let mut temps = Vec::with_capacity(files.len());
    for (path, data) in files {
        temps.push(
            staged(path, data)
                .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))?,
        );
    }
    for (tmp, (path, _)) in temps.into_iter().zip(files) {
        tmp.persist(path).map_err(|e| {
            io::Error::new(e.error.kind(), format!("{}: {}", path.display(), e.error))
        })?;
    }
    Ok(())
}

pub fn write_atomic(path: &Path, data: &[u8]) -> io::Result<()> {
    write_all_atomic(&[(path.to_path_buf(), data.to_vec())])
}
