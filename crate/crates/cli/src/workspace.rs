//! Output directory with per-stage manifests and all-or-nothing writes.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub key: String,
    pub config: Value,
    pub inputs: BTreeMap<String, String>,
    /// File name → SHA-256 of its contents.
    pub outputs: BTreeMap<String, String>,
    /// Stage-specific facts for downstream stages and humans.
    pub info: Value,
}

/// Content key of a stage: hash of its name, resolved config and input keys.
pub fn stage_key(stage: &str, config: &Value, inputs: &BTreeMap<String, String>) -> String {
    let canonical = serde_json::json!({ "stage": stage, "config": config, "inputs": inputs });
    hex(&Sha256::digest(canonical.to_string().as_bytes()))
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn hash_file(path: &Path) -> Result<String> {
    let mut f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex(&h.finalize()))
}

#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn open(root: &Path) -> Result<Self> {
        fs::create_dir_all(root.join("manifests")).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn manifest_path(&self, stage: &str) -> PathBuf {
        self.root.join("manifests").join(format!("{stage}.json"))
    }

    pub fn manifest(&self, stage: &str) -> Result<Option<Manifest>> {
        let path = self.manifest_path(stage);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path)?;
        Ok(Some(serde_json::from_str(&text).with_context(|| format!("reading {}", path.display()))?))
    }

    /// Checks that every recorded output still has its recorded hash.
    pub fn verify(&self, m: &Manifest) -> Result<()> {
        for (name, want) in &m.outputs {
            let path = self.path(name);
            if !path.exists() {
                bail!("output `{name}` of stage `{}` is missing; rerun `xref {}`", m.stage, command_of(&m.stage));
            }
            if &hash_file(&path)? != want {
                bail!("output `{name}` changed since stage `{}` wrote it; rerun `xref {}`", m.stage, command_of(&m.stage));
            }
        }
        Ok(())
    }

    /// Loads an upstream stage's manifest and checks it against the key
    /// the current configuration implies.
    pub fn require(&self, stage: &str, expected_key: &str) -> Result<Manifest> {
        let m = self
            .manifest(stage)?
            .ok_or_else(|| anyhow!("missing stage `{stage}`: run `xref {}` first", command_of(stage)))?;
        if m.key != expected_key {
            bail!(
                "stage `{stage}` is stale: its configuration or inputs changed since it ran; rerun `xref {}`",
                command_of(stage)
            );
        }
        self.verify(&m)?;
        Ok(m)
    }

    /// True when `stage` already ran with `key` and its outputs are intact.
    pub fn is_fresh(&self, stage: &str, key: &str) -> Result<bool> {
        match self.manifest(stage)? {
            Some(m) if m.key == key => Ok(self.verify(&m).is_ok()),
            _ => Ok(false),
        }
    }

    pub fn begin(&self, stage: &str) -> Staging<'_> {
        Staging { ws: self, stage: stage.to_owned(), files: Vec::new(), committed: false }
    }
}

fn command_of(stage: &str) -> String {
    match stage.split_once('-') {
        Some(("candidates", metric)) => format!("candidates --metric {metric}"),
        Some(("baseline", method)) => format!("baseline --method {method}"),
        _ => stage.to_owned(),
    }
}

/// Outputs written to temporary files and renamed into place together on
/// [`Staging::commit`]; dropped uncommitted, they are removed.
pub struct Staging<'a> {
    ws: &'a Workspace,
    stage: String,
    files: Vec<(String, PathBuf)>,
    committed: bool,
}

impl Staging<'_> {
    fn temp_path(&self, name: &str) -> PathBuf {
        self.ws.path(&format!(".{name}.tmp-{}", std::process::id()))
    }

    pub fn bytes(&mut self, name: &str, data: &[u8]) -> Result<()> {
        self.writer(name, |w| Ok(w.write_all(data)?))
    }

    pub fn writer<F>(&mut self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let tmp = self.temp_path(name);
        self.files.push((name.to_owned(), tmp.clone()));
        let mut w = BufWriter::new(File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?);
        f(&mut w)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        Ok(())
    }

    /// Renames outputs into place and writes the manifest last.
    pub fn commit(mut self, key: &str, config: Value, inputs: BTreeMap<String, String>, info: Value) -> Result<Manifest> {
        let mut outputs = BTreeMap::new();
        for (name, tmp) in &self.files {
            outputs.insert(name.clone(), hash_file(tmp)?);
        }
        let manifest = Manifest { stage: self.stage.clone(), key: key.to_owned(), config, inputs, outputs, info };
        let mpath = self.ws.manifest_path(&self.stage);
        // An interrupted commit must not leave a manifest that vouches for
        // a mix of old and new files.
        if mpath.exists() {
            fs::remove_file(&mpath)?;
        }
        for (name, tmp) in &self.files {
            fs::rename(tmp, self.ws.path(name))?;
        }
        self.committed = true;
        let tmp = self.ws.root.join("manifests").join(format!(".{}.tmp-{}", self.stage, std::process::id()));
        fs::write(&tmp, serde_json::to_string_pretty(&manifest)? + "\n")?;
        fs::rename(&tmp, &mpath)?;
        Ok(manifest)
    }
}

impl Drop for Staging<'_> {
    fn drop(&mut self) {
        if !self.committed {
            for (_, tmp) in &self.files {
                let _ = fs::remove_file(tmp);
            }
        }
    }
}

/// Writes a single file atomically, outside any stage.
pub fn write_atomic(path: &Path, data: &[u8]) -> Result<()> {
    let name = path.file_name().ok_or_else(|| anyhow!("bad output path {}", path.display()))?;
    let tmp = path.with_file_name(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, data)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staging_is_all_or_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::open(dir.path()).unwrap();
        {
            let mut s = ws.begin("demo");
            s.bytes("a.txt", b"one").unwrap();
            let err = s.writer("b.txt", |_| Err(anyhow!("boom")));
            assert!(err.is_err());
        }
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names, [std::ffi::OsString::from("manifests")]);
        assert!(ws.manifest("demo").unwrap().is_none());

        let mut s = ws.begin("demo");
        s.bytes("a.txt", b"one").unwrap();
        let m = s.commit("k1", Value::Null, BTreeMap::new(), Value::Null).unwrap();
        assert_eq!(fs::read(ws.path("a.txt")).unwrap(), b"one");
        assert!(ws.is_fresh("demo", "k1").unwrap());
        assert!(!ws.is_fresh("demo", "k2").unwrap());
        assert_eq!(ws.require("demo", "k1").unwrap(), m);
        assert!(ws.require("demo", "k2").unwrap_err().to_string().contains("stale"));
        fs::write(ws.path("a.txt"), b"two").unwrap();
        assert!(ws.require("demo", "k1").unwrap_err().to_string().contains("changed"));
        assert!(ws.require("other", "k").unwrap_err().to_string().contains("missing stage `other`"));
    }

    #[test]
    fn keys_depend_on_everything() {
        let mut inputs = BTreeMap::new();
        let a = stage_key("s", &serde_json::json!({"x": 1}), &inputs);
        assert_eq!(a, stage_key("s", &serde_json::json!({"x": 1}), &inputs));
        assert_ne!(a, stage_key("t", &serde_json::json!({"x": 1}), &inputs));
        assert_ne!(a, stage_key("s", &serde_json::json!({"x": 2}), &inputs));
        inputs.insert("u".into(), "k".into());
        assert_ne!(a, stage_key("s", &serde_json::json!({"x": 1}), &inputs));
    }
}
