//! Artifact-directory plumbing: resolved configs and content digests.
//!
//! Every artifact-writing subcommand finishes a directory the same way:
//! `config.toml` (the fully resolved settings, itself a valid `--config`
//! input) and `digests.txt` (SHA-256 of every other file, sorted by path).
//! Two directories are bit-for-bit identical exactly when their digest
//! files match.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

/// Name of the resolved-config file.
pub const CONFIG_FILE: &str = "config.toml";
/// Name of the digest manifest.
pub const DIGESTS_FILE: &str = "digests.txt";

/// Writes the resolved configuration into `dir/config.toml`.
pub fn write_resolved_config(dir: &Path, config: &RunConfig) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(CONFIG_FILE);
    fs::write(&path, config.to_toml()?).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Hex SHA-256 of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

fn collect_files(dir: &Path, base: &Path, acc: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(&path, base, acc)?;
        } else {
            acc.push(
                path.strip_prefix(base)
                    .expect("walk stays under base")
                    .to_path_buf(),
            );
        }
    }
    Ok(())
}

/// Writes `dir/digests.txt`: one `sha256  relative/path` line per file in
/// the directory tree (excluding the digest file itself), sorted by path,
/// `/`-separated on every platform.
pub fn write_digests(dir: &Path) -> Result<()> {
    let mut files = Vec::new();
    collect_files(dir, dir, &mut files)?;
    let mut names: Vec<String> = files
        .into_iter()
        .map(|p| {
            p.components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/")
        })
        .filter(|name| name != DIGESTS_FILE)
        .collect();
    names.sort_unstable();

    let mut out = String::new();
    for name in &names {
        let path = dir.join(name.replace('/', std::path::MAIN_SEPARATOR_STR));
        let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
        out.push_str(&sha256_hex(&bytes));
        out.push_str("  ");
        out.push_str(name);
        out.push('\n');
    }
    fs::write(dir.join(DIGESTS_FILE), out).context("writing digest manifest")?;
    Ok(())
}
