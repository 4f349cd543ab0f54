use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::Global;

/// Files written into the output directory, recorded in manifest.json.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.raw(name, text.as_bytes())
    }

    pub fn raw(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn with_writer<F>(&mut self, name: &str, write: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        let mut w = BufWriter::new(file);
        write(&mut w)?;
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn finish(mut self, subcommand: &str, g: &Global, extra: Value) -> Result<()> {
        let mut files = self.files.clone();
        files.push("manifest.json".into());
        let manifest = json!({
            "tool": "hslice",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": subcommand,
            "seed": g.seed,
            "workers": g.workers,
            "input": g.input.as_ref().map(|p| p.display().to_string()),
            "params": g.params,
            "constants": g.constants,
            "budget": g.budget,
            "trials": g.trials,
            "cap": g.cap,
            "options": extra,
            "files": files,
        });
        self.json("manifest.json", &manifest)
    }
}
