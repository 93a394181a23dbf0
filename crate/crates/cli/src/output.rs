use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// Rendered output files, written together once every one of them exists.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(&'static str, String)>,
}

impl Outputs {
    pub fn text(&mut self, name: &'static str, contents: String) {
        self.files.push((name, contents));
    }

    pub fn json<T: Serialize>(&mut self, name: &'static str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.text(name, text);
        Ok(())
    }

    pub fn write(self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, contents) in self.files {
            let path = dir.join(name);
            fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}
