use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::corpus::{
    default_recipes, generate_synthetic_corpus, load_wav, segment, GenreLabel, Manifest, SegmentationReport,
    MANIFEST_FILE, SEGMENTS_PER_CLIP, SEGMENT_SECONDS, TARGET_RATE,
};
use crate::error::{Error, Result};
use crate::experiment::CorpusSource;
use crate::features::{read_feature_maps, write_feature_maps, FeatureExtractor, FeatureKind, FeatureMap};

/// A corpus on disk, indexed at segment granularity.
#[derive(Debug, Clone)]
pub struct CorpusIndex {
    pub manifest: Manifest,
    /// Genre id of every segment, recording-major.
    pub labels: Vec<usize>,
    /// Recording index of every segment.
    pub groups: Vec<usize>,
    /// SHA-256 over record paths, labels and audio bytes.
    pub hash: String,
}

impl CorpusIndex {
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let manifest = Manifest::open(root)?;
        if manifest.is_empty() {
            return Err(Error::Data("corpus has no recordings".into()));
        }
        let mut hasher = Sha256::new();
        for r in &manifest.records {
            hasher.update(r.file_path.as_bytes());
            hasher.update([0, r.genre.id() as u8]);
            hasher.update(fs::read(manifest.path_of(r))?);
        }
        let hash = hex::encode(hasher.finalize());
        let mut labels = Vec::new();
        let mut groups = Vec::new();
        for (i, r) in manifest.records.iter().enumerate() {
            labels.extend(std::iter::repeat_n(r.genre.id(), SEGMENTS_PER_CLIP));
            groups.extend(std::iter::repeat_n(i, SEGMENTS_PER_CLIP));
        }
        Ok(CorpusIndex { manifest, labels, groups, hash })
    }

    /// Opens the corpus, generating a synthetic one first when asked to and
    /// none exists yet.
    pub fn materialize(source: &CorpusSource) -> Result<Self> {
        if let CorpusSource::Synthetic { path, clips_per_class, seed } = source {
            if !path.join(MANIFEST_FILE).exists() {
                log::info!("generating synthetic corpus ({clips_per_class} clips/class) in {}", path.display());
                generate_synthetic_corpus(&default_recipes(), *clips_per_class, *seed, path)?;
            }
        }
        Self::open(source.root())
    }

    pub fn segments(&self) -> usize {
        self.labels.len()
    }

    pub fn genre_labels(&self) -> Vec<GenreLabel> {
        self.labels.iter().map(|&l| GenreLabel::from_id(l).expect("manifest genre")).collect()
    }
}

/// Disk cache of extracted feature sets, one YMFT file per
/// (corpus, kind, extraction parameters).
#[derive(Debug)]
pub struct FeatureStore {
    dir: PathBuf,
    extractor: FeatureExtractor,
    hits: AtomicUsize,
    misses: AtomicUsize,
    extracted_maps: AtomicUsize,
}

impl FeatureStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self::with_extractor(dir, FeatureExtractor::default())
    }

    pub fn with_extractor(dir: impl Into<PathBuf>, extractor: FeatureExtractor) -> Self {
        FeatureStore {
            dir: dir.into(),
            extractor,
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
            extracted_maps: AtomicUsize::new(0),
        }
    }

    pub fn extractor(&self) -> &FeatureExtractor {
        &self.extractor
    }

    /// Feature sets served from disk.
    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    /// Feature sets that had to be extracted.
    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    /// Individual segment maps computed by this store.
    pub fn extracted_maps(&self) -> usize {
        self.extracted_maps.load(Ordering::Relaxed)
    }

    pub fn key(&self, corpus_hash: &str, kind: FeatureKind) -> String {
        let mut h = Sha256::new();
        for part in [corpus_hash, kind.id(), &self.extractor.fingerprint()] {
            h.update(part.as_bytes());
            h.update([0]);
        }
        hex::encode(h.finalize())
    }

    pub fn path(&self, corpus_hash: &str, kind: FeatureKind) -> PathBuf {
        self.dir.join(format!("{}-{}.ymft", kind.id(), &self.key(corpus_hash, kind)[..16]))
    }

    fn read_cached(&self, corpus: &CorpusIndex, kind: FeatureKind) -> Option<Vec<FeatureMap>> {
        let path = self.path(&corpus.hash, kind);
        let file = fs::File::open(&path).ok()?;
        match read_feature_maps(BufReader::new(file)) {
            Ok(maps) if maps.len() == corpus.segments() && maps.iter().all(|m| m.kind == kind) => Some(maps),
            Ok(_) => {
                log::warn!("ignoring stale cache file {}", path.display());
                None
            }
            Err(e) => {
                log::warn!("ignoring unreadable cache file {}: {e}", path.display());
                None
            }
        }
    }

    /// Written under a unique temporary name, then renamed into place.
    fn write_cached(&self, corpus_hash: &str, kind: FeatureKind, maps: &[FeatureMap]) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path(corpus_hash, kind);
        let tmp = self.dir.join(format!(
            ".{}.{}.{:?}.tmp",
            path.file_name().and_then(|n| n.to_str()).unwrap_or("features"),
            std::process::id(),
            std::thread::current().id()
        ));
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        write_feature_maps(&mut w, maps)?;
        w.flush()?;
        drop(w);
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    /// Every requested feature set for every segment, in corpus order.
    /// Missing sets are extracted together in a single pass over the audio.
    pub fn load_or_extract(
        &self,
        corpus: &CorpusIndex,
        kinds: &[FeatureKind],
    ) -> Result<(BTreeMap<FeatureKind, Vec<FeatureMap>>, Option<SegmentationReport>)> {
        let mut out = BTreeMap::new();
        let mut missing = Vec::new();
        for &kind in kinds {
            match self.read_cached(corpus, kind) {
                Some(maps) => {
                    self.hits.fetch_add(1, Ordering::Relaxed);
                    log::info!("feature cache hit: {kind}");
                    out.insert(kind, maps);
                }
                None if !missing.contains(&kind) => missing.push(kind),
                None => {}
            }
        }
        if missing.is_empty() {
            return Ok((out, None));
        }
        log::info!(
            "extracting {} from {} recordings",
            missing.iter().map(|k| k.id()).collect::<Vec<_>>().join(", "),
            corpus.manifest.len()
        );
        let per_clip: Vec<(Vec<Vec<FeatureMap>>, SegmentationReport)> = corpus
            .manifest
            .records
            .par_iter()
            .map(|r| {
                let path = corpus.manifest.path_of(r);
                let clip = load_wav(&path, TARGET_RATE)
                    .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
                let segments = segment(&clip, SEGMENTS_PER_CLIP, SEGMENT_SECONDS)?;
                let mut report = SegmentationReport::default();
                report.record(&clip, segments.len(), SEGMENTS_PER_CLIP);
                let maps = segments
                    .iter()
                    .map(|s| self.extractor.extract_many(&missing, s))
                    .collect::<Result<Vec<_>>>()?;
                Ok((maps, report))
            })
            .collect::<Result<_>>()?;

        let mut report = SegmentationReport::default();
        let mut sets: Vec<Vec<FeatureMap>> = missing.iter().map(|_| Vec::with_capacity(corpus.segments())).collect();
        for (clip_maps, r) in per_clip {
            report.clips += r.clips;
            report.padded_clips += r.padded_clips;
            report.truncated_clips += r.truncated_clips;
            report.expected_segments += r.expected_segments;
            report.actual_segments += r.actual_segments;
            for seg in clip_maps {
                for (set, map) in sets.iter_mut().zip(seg) {
                    set.push(map);
                }
            }
        }
        for (kind, maps) in missing.into_iter().zip(sets) {
            self.misses.fetch_add(1, Ordering::Relaxed);
            self.extracted_maps.fetch_add(maps.len(), Ordering::Relaxed);
            self.write_cached(&corpus.hash, kind, &maps)?;
            out.insert(kind, maps);
        }
        Ok((out, Some(report)))
    }
}
