//! Where results go: the summary JSON always to stdout, and CSV plus JSON
//! files into the output directory when one is configured.

use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use serde::Serialize;

pub struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>) -> anyhow::Result<Self> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
        }
        Ok(Self { dir })
    }

    pub fn csv<R: Serialize>(&self, name: &str, rows: &[R]) -> anyhow::Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// For tables whose width depends on the rank.
    pub fn records(&self, name: &str, header: &[String], rows: &[Vec<String>]) -> anyhow::Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes text produced elsewhere (already CSV).
    pub fn text(&self, name: &str, body: &str) -> anyhow::Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(name);
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
    }

    pub fn summary<S: Serialize>(&self, name: &str, value: &S) -> anyhow::Result<()> {
        let body = serde_json::to_string_pretty(value)? + "\n";
        self.text(name, &body)?;
        // a closed pipe (`| head`) is not a failure of the run
        match std::io::stdout().lock().write_all(body.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        }
    }
}
