//! Storage backends for registry records and archives.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{ProjectRecord, RegistryError, UserAccount};
use crate::contracts::ProjectId;
use crate::digest::Hash256;

/// Record storage. Implementations must make every successful write durable
/// before returning.
pub trait ProjectStore: Send + Sync {
    fn put_project(&self, record: &ProjectRecord) -> Result<(), RegistryError>;
    fn get_project(&self, id: &ProjectId) -> Result<Option<ProjectRecord>, RegistryError>;
    fn list_projects(&self) -> Result<Vec<ProjectRecord>, RegistryError>;

    fn put_user(&self, user: &UserAccount) -> Result<(), RegistryError>;
    fn list_users(&self) -> Result<Vec<UserAccount>, RegistryError>;

    /// Write-ahead intents for registrations whose chain commit may not have
    /// finished.
    fn put_intent(&self, record: &ProjectRecord) -> Result<(), RegistryError>;
    fn list_intents(&self) -> Result<Vec<ProjectRecord>, RegistryError>;
    fn remove_intent(&self, id: &ProjectId) -> Result<(), RegistryError>;
}

/// Content-addressed archive storage keyed by SHA-256 of the bytes.
pub trait ArchiveStore: Send + Sync {
    fn put(&self, bytes: &[u8]) -> Result<Hash256, RegistryError>;
    fn get(&self, key: &Hash256) -> Result<Option<Vec<u8>>, RegistryError>;
}

#[derive(Default)]
pub struct MemoryStore {
    projects: RwLock<BTreeMap<ProjectId, ProjectRecord>>,
    users: RwLock<BTreeMap<String, UserAccount>>,
    intents: RwLock<BTreeMap<ProjectId, ProjectRecord>>,
}

impl ProjectStore for MemoryStore {
    fn put_project(&self, record: &ProjectRecord) -> Result<(), RegistryError> {
        self.projects.write().unwrap().insert(record.project_id.clone(), record.clone());
        Ok(())
    }

    fn get_project(&self, id: &ProjectId) -> Result<Option<ProjectRecord>, RegistryError> {
        Ok(self.projects.read().unwrap().get(id).cloned())
    }

    fn list_projects(&self) -> Result<Vec<ProjectRecord>, RegistryError> {
        Ok(self.projects.read().unwrap().values().cloned().collect())
    }

    fn put_user(&self, user: &UserAccount) -> Result<(), RegistryError> {
        self.users.write().unwrap().insert(user.username.clone(), user.clone());
        Ok(())
    }

    fn list_users(&self) -> Result<Vec<UserAccount>, RegistryError> {
        Ok(self.users.read().unwrap().values().cloned().collect())
    }

    fn put_intent(&self, record: &ProjectRecord) -> Result<(), RegistryError> {
        self.intents.write().unwrap().insert(record.project_id.clone(), record.clone());
        Ok(())
    }

    fn list_intents(&self) -> Result<Vec<ProjectRecord>, RegistryError> {
        Ok(self.intents.read().unwrap().values().cloned().collect())
    }

    fn remove_intent(&self, id: &ProjectId) -> Result<(), RegistryError> {
        self.intents.write().unwrap().remove(id);
        Ok(())
    }
}

#[derive(Default)]
pub struct MemoryArchives {
    blobs: RwLock<BTreeMap<Hash256, Vec<u8>>>,
}

impl ArchiveStore for MemoryArchives {
    fn put(&self, bytes: &[u8]) -> Result<Hash256, RegistryError> {
        let key = Hash256::of(bytes);
        self.blobs.write().unwrap().entry(key).or_insert_with(|| bytes.to_vec());
        Ok(key)
    }

    fn get(&self, key: &Hash256) -> Result<Option<Vec<u8>>, RegistryError> {
        Ok(self.blobs.read().unwrap().get(key).cloned())
    }
}

/// One JSON file per record under `projects/`, `users/` and `journal/`.
pub struct FsStore {
    root: PathBuf,
    write_lock: Mutex<()>,
}

impl FsStore {
    pub fn open(root: &Path) -> Result<Self, RegistryError> {
        for sub in ["projects", "users", "journal"] {
            fs::create_dir_all(root.join(sub))?;
        }
        Ok(FsStore { root: root.to_path_buf(), write_lock: Mutex::new(()) })
    }

    fn path(&self, kind: &str, key: &str) -> PathBuf {
        self.root.join(kind).join(format!("{key}.json"))
    }

    fn write<T: Serialize>(&self, kind: &str, key: &str, value: &T) -> Result<(), RegistryError> {
        let _guard = self.write_lock.lock().unwrap();
        let mut bytes = serde_json::to_vec_pretty(value).expect("records serialize");
        bytes.push(b'\n');
        write_atomic(&self.path(kind, key), &bytes)
    }

    fn read<T: DeserializeOwned>(&self, path: &Path) -> Result<Option<T>, RegistryError> {
        match fs::read(path) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map(Some)
                .map_err(|e| RegistryError::Corrupt { path: path.to_path_buf(), reason: e.to_string() }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn list<T: DeserializeOwned>(&self, kind: &str) -> Result<Vec<T>, RegistryError> {
        let mut paths: Vec<PathBuf> = fs::read_dir(self.root.join(kind))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut out = Vec::with_capacity(paths.len());
        for p in paths {
            if let Some(v) = self.read(&p)? {
                out.push(v);
            }
        }
        Ok(out)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RegistryError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

impl ProjectStore for FsStore {
    fn put_project(&self, record: &ProjectRecord) -> Result<(), RegistryError> {
        self.write("projects", record.project_id.as_str(), record)
    }

    fn get_project(&self, id: &ProjectId) -> Result<Option<ProjectRecord>, RegistryError> {
        self.read(&self.path("projects", id.as_str()))
    }

    fn list_projects(&self) -> Result<Vec<ProjectRecord>, RegistryError> {
        self.list("projects")
    }

    fn put_user(&self, user: &UserAccount) -> Result<(), RegistryError> {
        // usernames are free text; key files by a digest of the name
        let key = Hash256::of(user.username.as_bytes()).to_hex();
        self.write("users", &key, user)
    }

    fn list_users(&self) -> Result<Vec<UserAccount>, RegistryError> {
        let mut users: Vec<UserAccount> = self.list("users")?;
        users.sort_by(|a, b| a.username.cmp(&b.username));
        Ok(users)
    }

    fn put_intent(&self, record: &ProjectRecord) -> Result<(), RegistryError> {
        self.write("journal", record.project_id.as_str(), record)
    }

    fn list_intents(&self) -> Result<Vec<ProjectRecord>, RegistryError> {
        self.list("journal")
    }

    fn remove_intent(&self, id: &ProjectId) -> Result<(), RegistryError> {
        let _guard = self.write_lock.lock().unwrap();
        match fs::remove_file(self.path("journal", id.as_str())) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(e.into()),
            _ => Ok(()),
        }
    }
}

/// Archives as `<sha256>.zip` files in one directory.
pub struct FsArchives {
    root: PathBuf,
}

impl FsArchives {
    pub fn open(root: &Path) -> Result<Self, RegistryError> {
        fs::create_dir_all(root)?;
        Ok(FsArchives { root: root.to_path_buf() })
    }

    fn path(&self, key: &Hash256) -> PathBuf {
        self.root.join(format!("{key}.zip"))
    }
}

impl ArchiveStore for FsArchives {
    fn put(&self, bytes: &[u8]) -> Result<Hash256, RegistryError> {
        let key = Hash256::of(bytes);
        let path = self.path(&key);
        if !path.exists() {
            write_atomic(&path, bytes)?;
        }
        Ok(key)
    }

    fn get(&self, key: &Hash256) -> Result<Option<Vec<u8>>, RegistryError> {
        match fs::read(self.path(key)) {
            Ok(bytes) => {
                if Hash256::of(&bytes) != *key {
                    return Err(RegistryError::Corrupt {
                        path: self.path(key),
                        reason: "archive content does not match its key".into(),
                    });
                }
                Ok(Some(bytes))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }
}
