//! Content-addressed file store used by the PubMed response cache and the
//! embedding cache. Keys are arbitrary strings; each value lives in one file
//! named by the SHA-256 of its key, written atomically (temp file + rename) so
//! concurrent writers never expose partial content.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::util::sha256_hex;

#[derive(Debug, Clone)]
pub struct FileStore {
    root: PathBuf,
}

impl FileStore {
    /// Opens (and creates if needed) a store rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(FileStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.root.join(sha256_hex(key.as_bytes()))
    }

    pub fn contains(&self, key: &str) -> bool {
        self.path_for(key).is_file()
    }

    pub fn get(&self, key: &str) -> Option<String> {
        fs::read_to_string(self.path_for(key)).ok()
    }

    pub fn put(&self, key: &str, value: &str) -> io::Result<()> {
        let target = self.path_for(key);
        let tmp = self.root.join(format!(
            ".tmp-{}-{:?}",
            sha256_hex(key.as_bytes()),
            std::thread::current().id()
        ));
        fs::write(&tmp, value)?;
        fs::rename(&tmp, &target)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn put_get_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = FileStore::open(dir.path()).unwrap();
        assert_eq!(store.get("key"), None);
        assert!(!store.contains("key"));
        store.put("key", "value").unwrap();
        assert_eq!(store.get("key").as_deref(), Some("value"));
        assert!(store.contains("key"));
        store.put("key", "updated").unwrap();
        assert_eq!(store.get("key").as_deref(), Some("updated"));
    }

    #[test]
    fn keys_do_not_collide_and_survive_reopen() {
        let dir = tempfile::tempdir().unwrap();
        {
            let store = FileStore::open(dir.path()).unwrap();
            store.put("a", "1").unwrap();
            store.put("b", "2").unwrap();
        }
        let store = FileStore::open(dir.path()).unwrap();
        assert_eq!(store.get("a").as_deref(), Some("1"));
        assert_eq!(store.get("b").as_deref(), Some("2"));
    }

    #[test]
    fn no_temp_files_left_behind() {
        let dir = tempfile::tempdir().unwrap();
        let store = FileStore::open(dir.path()).unwrap();
        store.put("k", "v").unwrap();
        let leftovers: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().starts_with(".tmp-"))
            .collect();
        assert!(leftovers.is_empty());
    }
}
