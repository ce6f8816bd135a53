//! Dataset directory layout.
//!
//! A dataset root contains a `manifest` text file plus one subdirectory per
//! class holding its label maps:
//!
//! ```text
//! <root>/manifest
//! <root>/<class_name>/1.pgm .. <count>.pgm
//! <root>/features_train.csv
//! <root>/features_test.csv
//! ```
//!
//! The manifest declares the label count and the classes in id order:
//!
//! ```text
//! l = 30
//! class = kitchen 300
//! class = office 300
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::datagen::SyntheticDataset;
use crate::error::{Error, Result};
use crate::io::{features, pgm};

/// One class entry: directory name and number of map files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassEntry {
    pub name: String,
    pub count: usize,
}

/// Parsed dataset manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub l: usize,
    pub classes: Vec<ClassEntry>,
}

fn valid_class_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

impl Manifest {
    pub fn new(l: usize, classes: Vec<ClassEntry>) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidConfig {
                reason: "manifest label count must be positive".into(),
            });
        }
        if classes.is_empty() {
            return Err(Error::EmptyData {
                what: "manifest class list".into(),
            });
        }
        for entry in &classes {
            if !valid_class_name(&entry.name) {
                return Err(Error::InvalidConfig {
                    reason: format!(
                        "class name {:?} may only contain ASCII letters, digits, '_', '-', '.'",
                        entry.name
                    ),
                });
            }
            if entry.count == 0 {
                return Err(Error::EmptyClass {
                    class: entry.name.clone(),
                });
            }
        }
        for (i, a) in classes.iter().enumerate() {
            if classes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::InvalidConfig {
                    reason: format!("duplicate class name {:?}", a.name),
                });
            }
        }
        Ok(Manifest { l, classes })
    }

    /// Load `<root>/manifest`.
    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join("manifest");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut l: Option<usize> = None;
        let mut classes = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::ingestion(
                    &path,
                    format!("line {}: expected 'key = value'", lineno + 1),
                )
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "l" => {
                    let parsed = value.parse::<usize>().map_err(|_| {
                        Error::ingestion(&path, format!("line {}: bad label count", lineno + 1))
                    })?;
                    l = Some(parsed);
                }
                "class" => {
                    let mut parts = value.split_whitespace();
                    let name = parts.next().unwrap_or_default().to_owned();
                    let count = parts
                        .next()
                        .and_then(|s| s.parse::<usize>().ok())
                        .ok_or_else(|| {
                            Error::ingestion(
                                &path,
                                format!("line {}: expected 'class = <name> <count>'", lineno + 1),
                            )
                        })?;
                    if parts.next().is_some() {
                        return Err(Error::ingestion(
                            &path,
                            format!("line {}: trailing tokens after class entry", lineno + 1),
                        ));
                    }
                    classes.push(ClassEntry { name, count });
                }
                other => {
                    return Err(Error::ingestion(
                        &path,
                        format!("line {}: unknown manifest key {:?}", lineno + 1, other),
                    ));
                }
            }
        }
        let l = l.ok_or_else(|| Error::ingestion(&path, "missing 'l =' line"))?;
        Manifest::new(l, classes).map_err(|e| Error::ingestion(&path, e.to_string()))
    }

    /// Write `<root>/manifest`.
    pub fn save(&self, root: &Path) -> Result<()> {
        let mut text = String::new();
        writeln!(text, "l = {}", self.l).expect("string write");
        for entry in &self.classes {
            writeln!(text, "class = {} {}", entry.name, entry.count).expect("string write");
        }
        let path = root.join("manifest");
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    /// Paths of a class's map files, in index order.
    pub fn map_paths(&self, root: &Path, class: &ClassEntry) -> Vec<PathBuf> {
        (1..=class.count)
            .map(|k| root.join(&class.name).join(format!("{k}.pgm")))
            .collect()
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }
}

pub const TRAIN_FEATURES: &str = "features_train.csv";
pub const TEST_FEATURES: &str = "features_test.csv";

/// Write a generated dataset as the standard layout: manifest, one PGM per
/// instance under its class directory, and the two split feature files.
pub fn write_dataset(root: &Path, dataset: &SyntheticDataset) -> Result<Manifest> {
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let manifest = Manifest::new(
        dataset.l,
        dataset
            .class_names
            .iter()
            .map(|name| ClassEntry {
                name: name.clone(),
                count: dataset.per_class,
            })
            .collect(),
    )?;
    manifest.save(root)?;
    for (class, entry) in manifest.classes.iter().enumerate() {
        let dir = root.join(&entry.name);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (k, map) in dataset.class_maps(class).iter().enumerate() {
            pgm::write_label_map(&dir.join(format!("{}.pgm", k + 1)), map, dataset.l)?;
        }
    }
    features::write(&root.join(TRAIN_FEATURES), &dataset.train_set())?;
    features::write(&root.join(TEST_FEATURES), &dataset.test_set())?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let m = Manifest::new(
            30,
            vec![
                ClassEntry {
                    name: "kitchen".into(),
                    count: 3,
                },
                ClassEntry {
                    name: "office".into(),
                    count: 2,
                },
            ],
        )
        .unwrap();
        m.save(dir.path()).unwrap();
        assert_eq!(Manifest::load(dir.path()).unwrap(), m);
    }

    #[test]
    fn missing_manifest_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let err = Manifest::load(dir.path()).unwrap_err();
        assert!(err.to_string().contains("manifest"));
    }

    #[test]
    fn rejects_duplicate_class_names() {
        let entries = vec![
            ClassEntry {
                name: "a".into(),
                count: 1,
            },
            ClassEntry {
                name: "a".into(),
                count: 2,
            },
        ];
        assert!(Manifest::new(5, entries).is_err());
    }

    #[test]
    fn rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("manifest"), "l = 5\nbogus = 1\n").unwrap();
        let err = Manifest::load(dir.path()).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn rejects_class_names_with_separators() {
        let entries = vec![ClassEntry {
            name: "a,b".into(),
            count: 1,
        }];
        assert!(Manifest::new(5, entries).is_err());
    }
}
