use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Documents per unit of parallel work. Chunk boundaries depend only on the
/// shard contents, never on the worker count.
pub(crate) const CHUNK_DOCS: usize = 2048;

#[derive(Debug, Clone)]
enum ShardData {
    File(PathBuf),
    Memory(Arc<str>),
}

/// One ordered stream of documents, one document per line.
#[derive(Debug, Clone)]
pub struct Shard {
    name: String,
    data: ShardData,
}

impl Shard {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Backing file, `None` for in-memory shards.
    pub fn path(&self) -> Option<&Path> {
        match &self.data {
            ShardData::File(p) => Some(p),
            ShardData::Memory(_) => None,
        }
    }

    fn read(&self) -> Result<Arc<str>> {
        match &self.data {
            ShardData::Memory(text) => Ok(Arc::clone(text)),
            ShardData::File(path) => {
                let bytes = fs::read(path).map_err(|source| Error::Shard {
                    shard: self.name.clone(),
                    source,
                })?;
                let text = String::from_utf8(bytes).map_err(|e| Error::Shard {
                    shard: self.name.clone(),
                    source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
                })?;
                Ok(Arc::from(text))
            }
        }
    }
}

/// A corpus: an ordered list of UTF-8 shards.
#[derive(Debug, Clone, Default)]
pub struct CorpusSource {
    shards: Vec<Shard>,
}

/// A contiguous run of documents handed to one worker.
#[derive(Debug)]
pub struct Chunk<'a> {
    pub shard: usize,
    pub index: usize,
    /// Line offset of `docs[0]` within its shard.
    pub first_offset: u64,
    pub docs: &'a [&'a str],
}

impl CorpusSource {
    /// All `*.txt` files of `dir`, ordered by file name.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut paths = Vec::new();
        for entry in entries {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if path.is_file() && path.extension().is_some_and(|e| e == "txt") {
                paths.push(path);
            }
        }
        paths.sort();
        Ok(Self::from_files(paths))
    }

    pub fn from_files<I, P>(paths: I) -> Self
    where
        I: IntoIterator<Item = P>,
        P: Into<PathBuf>,
    {
        let shards = paths
            .into_iter()
            .map(|p| {
                let path: PathBuf = p.into();
                Shard {
                    name: path.display().to_string(),
                    data: ShardData::File(path),
                }
            })
            .collect();
        Self { shards }
    }

    /// In-memory shards, each a newline separated block of documents.
    pub fn from_texts<I, N, T>(texts: I) -> Self
    where
        I: IntoIterator<Item = (N, T)>,
        N: Into<String>,
        T: AsRef<str>,
    {
        let shards = texts
            .into_iter()
            .map(|(name, text)| Shard {
                name: name.into(),
                data: ShardData::Memory(Arc::from(text.as_ref())),
            })
            .collect();
        Self { shards }
    }

    /// Single in-memory shard holding the given documents.
    pub fn from_documents<I, S>(docs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut text = String::new();
        for doc in docs {
            text.push_str(doc.as_ref());
            text.push('\n');
        }
        Self::from_texts([("memory", text)])
    }

    pub fn shards(&self) -> &[Shard] {
        &self.shards
    }

    pub fn shard_names(&self) -> Vec<String> {
        self.shards.iter().map(|s| s.name.clone()).collect()
    }

    pub fn document_count(&self) -> Result<u64> {
        let mut total = 0;
        for shard in &self.shards {
            total += shard.read()?.lines().count() as u64;
        }
        Ok(total)
    }

    /// Calls `f` on every document in corpus order.
    pub fn for_each_document(&self, mut f: impl FnMut(usize, u64, &str)) -> Result<()> {
        for (si, shard) in self.shards.iter().enumerate() {
            let text = shard.read()?;
            for (offset, doc) in text.lines().enumerate() {
                f(si, offset as u64, doc);
            }
        }
        Ok(())
    }

    /// Maps `f` over fixed-size document chunks on a pool of `workers`
    /// threads. The returned vector is in corpus order regardless of
    /// scheduling.
    pub(crate) fn map_chunks<T, F>(&self, workers: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(Chunk<'_>) -> T + Sync,
    {
        if workers == 0 {
            return Err(Error::InvalidArgument("workers must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| {
            let per_shard: Result<Vec<Vec<T>>> = self
                .shards
                .par_iter()
                .enumerate()
                .map(|(si, shard)| {
                    let text = shard.read()?;
                    let lines: Vec<&str> = text.lines().collect();
                    Ok(lines
                        .par_chunks(CHUNK_DOCS)
                        .enumerate()
                        .map(|(ci, docs)| {
                            f(Chunk {
                                shard: si,
                                index: ci,
                                first_offset: (ci * CHUNK_DOCS) as u64,
                                docs,
                            })
                        })
                        .collect())
                })
                .collect();
            Ok(per_shard?.into_iter().flatten().collect())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_come_back_in_corpus_order() {
        let docs: Vec<String> = (0..5000).map(|i| format!("doc {i}")).collect();
        let corpus = CorpusSource::from_texts([
            ("a", docs[..3000].join("\n")),
            ("b", docs[3000..].join("\n")),
        ]);
        for workers in [1, 3] {
            let firsts = corpus
                .map_chunks(workers, |c| {
                    (c.shard, c.first_offset, c.docs[0].to_string())
                })
                .unwrap();
            assert_eq!(
                firsts,
                vec![
                    (0, 0, "doc 0".to_string()),
                    (0, 2048, "doc 2048".to_string()),
                    (1, 0, "doc 3000".to_string()),
                ]
            );
        }
    }

    #[test]
    fn missing_file_names_the_shard() {
        let corpus = CorpusSource::from_files(["/nonexistent/shard-7.txt"]);
        let err = corpus.map_chunks(1, |_| ()).unwrap_err();
        assert!(err.to_string().contains("shard-7.txt"), "{err}");
    }

    #[test]
    fn zero_workers_rejected() {
        let corpus = CorpusSource::from_documents(["a"]);
        assert!(corpus.map_chunks(0, |_| ()).is_err());
    }

    #[test]
    fn dir_loading_sorts_and_filters() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("b.txt"), "x\n").unwrap();
        std::fs::write(dir.path().join("a.txt"), "y\n").unwrap();
        std::fs::write(dir.path().join("c.md"), "z\n").unwrap();
        let corpus = CorpusSource::from_dir(dir.path()).unwrap();
        let names = corpus.shard_names();
        assert_eq!(names.len(), 2);
        assert!(names[0].ends_with("a.txt") && names[1].ends_with("b.txt"));
    }
}
