//! Versioned JSON report files.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const FORMAT: &str = "tfe-report";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub format: String,
    pub version: u32,
    pub kind: String,
    pub body: T,
}

pub fn write<T: Serialize>(path: &Path, kind: &str, body: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let env = Envelope {
        format: FORMAT.to_string(),
        version: VERSION,
        kind: kind.to_string(),
        body,
    };
    let text = serde_json::to_string_pretty(&env)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn read<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let env: Envelope<serde_json::Value> =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if env.format != FORMAT || env.version != VERSION {
        bail!(
            "{}: expected {FORMAT} v{VERSION}, found {} v{}",
            path.display(),
            env.format,
            env.version
        );
    }
    if env.kind != kind {
        bail!("{}: expected a `{kind}` report, found `{}`", path.display(), env.kind);
    }
    serde_json::from_value(env.body).with_context(|| format!("parsing the `{kind}` body of {}", path.display()))
}
