//! Per-stage manifests: recorded file hashes, a config snapshot and hash links to upstream
//! manifests.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::sha256_hex;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    /// Relative to the work directory, `/`-separated.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpstreamLink {
    pub stage: String,
    pub manifest_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub config_hash: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub upstream: Vec<UpstreamLink>,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
}

pub fn manifest_path(work: &Path, stage: &str) -> PathBuf {
    work.join(stage).join(MANIFEST_FILE)
}

pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

fn rel(work: &Path, path: &Path) -> String {
    path.strip_prefix(work)
        .unwrap_or(path)
        .components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Every regular file below `dir`, sorted.
pub fn walk_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    if !dir.exists() {
        return Ok(out);
    }
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).map_err(|e| Error::io(&d, e))? {
            let p = entry.map_err(|e| Error::io(&d, e))?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Hashes every file under `work/stage` except the manifest itself.
pub fn hash_outputs(work: &Path, stage: &str) -> Result<Vec<FileHash>> {
    walk_files(&work.join(stage))?
        .into_iter()
        .filter(|p| p.file_name().is_none_or(|n| n != MANIFEST_FILE))
        .map(|p| {
            Ok(FileHash {
                sha256: hash_file(&p)?,
                path: rel(work, &p),
            })
        })
        .collect()
}

impl Manifest {
    pub fn load(work: &Path, stage: &str) -> Result<Option<(Manifest, String)>> {
        let path = manifest_path(work, stage);
        if !path.exists() {
            return Ok(None);
        }
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let m: Manifest =
            serde_json::from_slice(&bytes).map_err(|e| Error::StaleManifest(format!("{}: {e}", path.display())))?;
        Ok(Some((m, sha256_hex(&bytes))))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = serde_json::to_vec_pretty(self).expect("manifest serializes");
        b.push(b'\n');
        b
    }

    pub fn save(&self, work: &Path) -> Result<String> {
        let path = manifest_path(work, &self.stage);
        let bytes = self.to_bytes();
        std::fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
        Ok(sha256_hex(&bytes))
    }

    /// Fails with a stale-manifest error unless every recorded output is present and unchanged.
    pub fn verify_outputs(&self, work: &Path) -> Result<()> {
        for f in &self.outputs {
            let p = work.join(&f.path);
            if !p.exists() {
                return Err(Error::StaleManifest(format!("{} output {} is missing", self.stage, f.path)));
            }
            if hash_file(&p)? != f.sha256 {
                return Err(Error::StaleManifest(format!(
                    "{} output {} changed since it was recorded",
                    self.stage, f.path
                )));
            }
        }
        let on_disk = hash_outputs(work, &self.stage)?;
        if on_disk.len() != self.outputs.len() {
            return Err(Error::StaleManifest(format!(
                "{} directory holds files not recorded in its manifest",
                self.stage
            )));
        }
        Ok(())
    }
}

/// Result of walking the manifest chain back from a final stage.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    pub manifests: Vec<String>,
    pub artifacts: usize,
    /// Inputs or upstream links whose hash matches nothing recorded upstream.
    pub dangling: Vec<String>,
    /// Files in the work directory not reachable from the final manifest.
    pub unreachable: Vec<String>,
}

impl Provenance {
    pub fn is_complete(&self) -> bool {
        self.dangling.is_empty() && self.unreachable.is_empty()
    }
}

/// Walks upstream links from `final_stage`, checking link hashes, input hashes against upstream
/// outputs, output hashes on disk, and that every file under `work` is accounted for.
pub fn check_provenance(work: &Path, final_stage: &str) -> Result<Provenance> {
    let mut report = Provenance::default();
    let mut seen = BTreeSet::new();
    let mut outputs: BTreeMap<String, String> = BTreeMap::new();
    let mut manifests = Vec::new();
    let mut queue = VecDeque::from([(final_stage.to_string(), None::<String>)]);
    while let Some((stage, expected)) = queue.pop_front() {
        if !seen.insert(stage.clone()) {
            continue;
        }
        let Some((m, hash)) = Manifest::load(work, &stage)? else {
            report.dangling.push(format!("manifest for stage {stage} is missing"));
            continue;
        };
        if let Some(e) = expected {
            if e != hash {
                report.dangling.push(format!("link to {stage} manifest has hash {e}, found {hash}"));
            }
        }
        for f in &m.outputs {
            let p = work.join(&f.path);
            if !p.exists() || hash_file(&p)? != f.sha256 {
                report.dangling.push(format!("{} (recorded by {stage})", f.path));
            }
            outputs.insert(f.path.clone(), f.sha256.clone());
        }
        for u in &m.upstream {
            queue.push_back((u.stage.clone(), Some(u.manifest_sha256.clone())));
        }
        report.manifests.push(stage);
        manifests.push(m);
    }
    for m in &manifests {
        for f in &m.inputs {
            if outputs.get(&f.path) != Some(&f.sha256) {
                report.dangling.push(format!("{} input {} has no matching upstream output", m.stage, f.path));
            }
        }
    }
    report.artifacts = outputs.len();
    let known: BTreeSet<String> = report
        .manifests
        .iter()
        .map(|s| format!("{s}/{MANIFEST_FILE}"))
        .chain(outputs.into_keys())
        .collect();
    for p in walk_files(work)? {
        let r = rel(work, &p);
        if r == super::CONFIG_SNAPSHOT {
            continue;
        }
        if !known.contains(&r) {
            report.unreachable.push(r);
        }
    }
    Ok(report)
}
