use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{parse_label, GenreLabel};
use crate::error::{Error, Result};

/// File name of the manifest at the corpus root.
pub const MANIFEST_FILE: &str = "manifest.csv";

/// One labelled recording. `file_path` is relative to the corpus root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub song_number: u32,
    pub sample_number: u32,
    pub title: String,
    pub artist: String,
    pub genre: GenreLabel,
    pub file_path: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub records: Vec<TrackRecord>,
    pub corpus_root: PathBuf,
}

impl Manifest {
    pub fn new(records: Vec<TrackRecord>, corpus_root: impl Into<PathBuf>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert((r.song_number, r.sample_number)) {
                return Err(Error::Data(format!(
                    "duplicate (song, sample) pair ({}, {})",
                    r.song_number, r.sample_number
                )));
            }
        }
        Ok(Self { records, corpus_root: corpus_root.into() })
    }

    /// Reads `<root>/manifest.csv` and checks every referenced file exists.
    pub fn load(corpus_root: impl AsRef<Path>) -> Result<Self> {
        let root = corpus_root.as_ref();
        let path = root.join(MANIFEST_FILE);
        if !path.exists() {
            return Err(Error::MissingFile(path));
        }
        let mut reader = csv::Reader::from_path(&path).map_err(csv_error)?;
        let records = reader
            .deserialize()
            .collect::<std::result::Result<Vec<TrackRecord>, _>>()
            .map_err(csv_error)?;
        let manifest = Self::new(records, root)?;
        manifest.verify_files()?;
        Ok(manifest)
    }

    /// Builds a manifest from `<root>/<Genre>/*.wav`, parsing each file name.
    /// Records are ordered by genre id, then file name.
    pub fn scan(corpus_root: impl AsRef<Path>) -> Result<Self> {
        let root = corpus_root.as_ref();
        let mut records = Vec::new();
        for genre in GenreLabel::ALL {
            let first = records.len();
            let dir = root.join(genre.name());
            if !dir.is_dir() {
                continue;
            }
            for entry in std::fs::read_dir(&dir)? {
                let path = entry?.path();
                if path.extension().and_then(|e| e.to_str()).map(|e| e.eq_ignore_ascii_case("wav")) != Some(true) {
                    continue;
                }
                let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
                let fields = parse_label(name)?;
                records.push(TrackRecord {
                    song_number: fields.song_number,
                    sample_number: fields.sample_number,
                    title: fields.title,
                    artist: fields.artist,
                    genre: fields.genre,
                    file_path: format!("{}/{}", genre.name(), name),
                });
            }
            records[first..].sort_by(|a: &TrackRecord, b: &TrackRecord| a.file_path.cmp(&b.file_path));
        }
        Self::new(records, root)
    }

    /// Loads the manifest file when present, otherwise scans the layout.
    pub fn open(corpus_root: impl AsRef<Path>) -> Result<Self> {
        let root = corpus_root.as_ref();
        if root.join(MANIFEST_FILE).exists() {
            Self::load(root)
        } else {
            Self::scan(root)
        }
    }

    pub fn verify_files(&self) -> Result<()> {
        for r in &self.records {
            let p = self.corpus_root.join(&r.file_path);
            if !p.is_file() {
                return Err(Error::MissingFile(p));
            }
        }
        Ok(())
    }

    pub fn write(&self) -> Result<PathBuf> {
        let path = self.corpus_root.join(MANIFEST_FILE);
        let mut writer = csv::Writer::from_path(&path).map_err(csv_error)?;
        for r in &self.records {
            writer.serialize(r).map_err(csv_error)?;
        }
        writer.flush()?;
        Ok(path)
    }

    pub fn class_counts(&self) -> [usize; GenreLabel::COUNT] {
        let mut counts = [0; GenreLabel::COUNT];
        for r in &self.records {
            counts[r.genre.id()] += 1;
        }
        counts
    }

    pub fn path_of(&self, record: &TrackRecord) -> PathBuf {
        self.corpus_root.join(&record.file_path)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

fn csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Data(format!("{other:?}")),
        }
    } else {
        Error::Data(format!("manifest: {e}"))
    }
}
