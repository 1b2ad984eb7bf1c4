use crate::stages::StageOutput;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

pub const CACHE_ENV: &str = "BTRENGINE_CACHE_DIR";
pub const DEFAULT_CACHE_DIR: &str = ".btrengine-cache";

/// Content-addressed store of stage outputs.
#[derive(Clone, Debug)]
pub struct ResultCache {
    dir: PathBuf,
}

impl ResultCache {
    pub fn from_env() -> Self {
        let dir = std::env::var_os(CACHE_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR));
        ResultCache { dir }
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        ResultCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(material: &str) -> String {
        Sha256::digest(material.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// A stored entry; unreadable or corrupt entries count as misses.
    pub fn get(&self, key: &str) -> Option<StageOutput> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn put(&self, key: &str, out: &StageOutput) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let tmp = self.dir.join(format!("{key}.tmp{}", std::process::id()));
        fs::write(&tmp, serde_json::to_string(out).expect("stage output serializes"))?;
        fs::rename(tmp, self.path(key))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stages::Check;

    #[test]
    fn floats_survive_a_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let cache = ResultCache::at(tmp.path().join("c"));
        let mut out = StageOutput { stage: "x".into(), ..Default::default() };
        for v in [0.22788033253311102, 1e-300, std::f64::consts::PI, 2.0f64.sqrt()] {
            out.checks.push(Check { name: "v".into(), value: v, bound: "<= 1".into(), pass: true });
        }
        let key = ResultCache::key("material");
        assert_eq!(key.len(), 64);
        assert!(cache.get(&key).is_none());
        cache.put(&key, &out).unwrap();
        assert_eq!(cache.get(&key).unwrap(), out);
        std::fs::write(cache.dir().join(format!("{key}.json")), "{not json").unwrap();
        assert!(cache.get(&key).is_none());
    }
}
