//! In-memory view of a data folder: parsed base documents, taxonomies and
//! lazily created edit sessions.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use tag_core::api::DocumentEntry;
use tag_core::edit::{Presentation, Session};
use tag_core::format::files::{detect, find_taxonomy, load, load_taxonomy, TAXONOMY_EXTENSION};
use tag_core::graph::{Document, SourceFormat, Taxonomy};
use tag_core::layout::ViewConfig;

pub struct Slot {
    pub entry: DocumentEntry,
    pub base: Document,
    /// Created on the first edit; edits take the write lock.
    pub session: tokio::sync::RwLock<Option<Session>>,
}

/// A consistent copy of what a document currently looks like.
pub struct Snapshot {
    pub document: Document,
    pub taxonomy: Option<Taxonomy>,
    pub presentation: Presentation,
}

impl Snapshot {
    pub fn view_config(&self, base: &ViewConfig) -> ViewConfig {
        let mut cfg = base.clone();
        cfg.row_overrides.extend(self.presentation.row_overrides.iter().map(|(k, v)| (*k, *v)));
        cfg.filter.hidden_ids.extend(self.presentation.hidden.iter().cloned());
        cfg
    }
}

pub struct Store {
    pub row_width: f64,
    docs: RwLock<BTreeMap<String, Arc<Slot>>>,
    taxonomies: RwLock<BTreeMap<String, Taxonomy>>,
}

fn stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string()
}

/// Entry ids for the documents of one file: the stem, or `stem-docid` when
/// the file holds several documents.
pub fn entry_ids(stem: &str, docs: &[Document]) -> Vec<String> {
    if docs.len() == 1 {
        vec![stem.to_string()]
    } else {
        docs.iter().map(|d| format!("{stem}-{}", d.id)).collect()
    }
}

impl Store {
    pub fn empty(row_width: f64) -> Self {
        Store { row_width, docs: RwLock::new(BTreeMap::new()), taxonomies: RwLock::new(BTreeMap::new()) }
    }

    /// Loads every document and taxonomy in `dir`. Files that fail to parse
    /// are skipped and described in the returned problem list.
    pub fn open(dir: &Path, row_width: f64) -> io::Result<(Store, Vec<String>)> {
        let store = Store::empty(row_width);
        let mut problems = Vec::new();
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
        paths.sort();

        for path in paths.iter().filter(|p| p.extension().is_some_and(|e| e == TAXONOMY_EXTENSION)) {
            match load_taxonomy(path) {
                Ok(tax) => store.put_taxonomy(stem(path), tax),
                Err(e) => problems.push(e.to_string()),
            }
        }

        for path in &paths {
            let Some(format) = detect(path) else { continue };
            let ext = path.extension().and_then(|e| e.to_str()).unwrap_or_default();
            let mut files = vec![path.clone()];
            if format == SourceFormat::Brat {
                // one entry per pair, keyed on the .ann half
                if ext != "ann" {
                    if !path.with_extension("ann").is_file() {
                        problems.push(format!("{}: no matching .ann file", path.display()));
                    }
                    continue;
                }
                let txt = path.with_extension("txt");
                if !txt.is_file() {
                    problems.push(format!("{}: no matching .txt file", path.display()));
                    continue;
                }
                files.insert(0, txt);
            }
            let docs = match load(path, Some(format)) {
                Ok((docs, _)) => docs,
                Err(e) => {
                    problems.push(e.to_string());
                    continue;
                }
            };
            let taxonomy = find_taxonomy(path).map(|p| stem(&p));
            for (id, doc) in entry_ids(&stem(path), &docs).into_iter().zip(docs) {
                let entry = DocumentEntry { id: id.clone(), format, paths: files.clone(), taxonomy: taxonomy.clone() };
                if let Err(existing) = store.insert(entry, doc) {
                    problems.push(format!("{}: duplicate document id {}", path.display(), existing.entry.id));
                }
            }
        }
        Ok((store, problems))
    }

    /// Adds a document; fails with the existing slot when the id is taken.
    pub fn insert(&self, entry: DocumentEntry, base: Document) -> Result<Arc<Slot>, Arc<Slot>> {
        let mut docs = self.docs.write().expect("store lock");
        if let Some(existing) = docs.get(&entry.id) {
            return Err(existing.clone());
        }
        let slot = Arc::new(Slot { entry: entry.clone(), base, session: tokio::sync::RwLock::new(None) });
        docs.insert(entry.id, slot.clone());
        Ok(slot)
    }

    pub fn entries(&self) -> Vec<DocumentEntry> {
        self.docs.read().expect("store lock").values().map(|s| s.entry.clone()).collect()
    }

    pub fn slot(&self, id: &str) -> Option<Arc<Slot>> {
        self.docs.read().expect("store lock").get(id).cloned()
    }

    pub fn slots(&self) -> Vec<Arc<Slot>> {
        self.docs.read().expect("store lock").values().cloned().collect()
    }

    pub fn taxonomy(&self, id: &str) -> Option<Taxonomy> {
        self.taxonomies.read().expect("store lock").get(id).cloned()
    }

    pub fn taxonomy_ids(&self) -> Vec<String> {
        self.taxonomies.read().expect("store lock").keys().cloned().collect()
    }

    pub fn put_taxonomy(&self, id: String, tax: Taxonomy) {
        self.taxonomies.write().expect("store lock").insert(id, tax);
    }

    pub async fn snapshot(&self, slot: &Slot) -> Snapshot {
        match &*slot.session.read().await {
            Some(s) => Snapshot {
                document: s.document().clone(),
                taxonomy: s.taxonomy().cloned(),
                presentation: s.presentation().clone(),
            },
            None => Snapshot {
                document: slot.base.clone(),
                taxonomy: slot.entry.taxonomy.as_deref().and_then(|t| self.taxonomy(t)),
                presentation: Presentation::default(),
            },
        }
    }

    /// Runs `f` on the document's session, creating it first if needed.
    pub async fn with_session<T>(&self, slot: &Slot, f: impl FnOnce(&mut Session) -> T) -> T {
        let mut guard = slot.session.write().await;
        let session = guard.get_or_insert_with(|| {
            let tax = slot.entry.taxonomy.as_deref().and_then(|t| self.taxonomy(t));
            Session::new(slot.base.clone(), tax)
        });
        f(session)
    }
}
