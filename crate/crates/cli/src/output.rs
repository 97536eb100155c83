//! All-or-nothing output: files are written to temporaries in the target
//! directory and renamed into place only once every file is complete.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use tempfile::NamedTempFile;

pub struct Outputs {
    dir: PathBuf,
    pending: Vec<(NamedTempFile, PathBuf)>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf(), pending: Vec::new() }
    }

    /// Outputs next to a single file path.
    pub fn for_file(path: &Path) -> Self {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        Self::new(&dir)
    }

    pub fn write(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<&File>) -> anyhow::Result<()>,
    ) -> anyhow::Result<()> {
        std::fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        let tmp = NamedTempFile::new_in(&self.dir).with_context(|| format!("creating a file in {}", self.dir.display()))?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            f(&mut w).with_context(|| format!("writing {name}"))?;
            w.flush().with_context(|| format!("writing {name}"))?;
        }
        self.pending.push((tmp, self.dir.join(name)));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    /// Moves every written file to its final name.
    pub fn commit(self) -> anyhow::Result<()> {
        for (tmp, path) in self.pending {
            tmp.as_file().sync_all().with_context(|| format!("syncing {}", path.display()))?;
            tmp.persist(&path).with_context(|| format!("renaming into {}", path.display()))?;
        }
        Ok(())
    }
}
