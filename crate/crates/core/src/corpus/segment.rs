use crate::corpus::AudioClip;
use crate::error::{Error, Result};

/// Every recording is truncated or zero-padded to this length first.
pub const CLIP_SECONDS: f64 = 30.0;
pub const SEGMENTS_PER_CLIP: usize = 5;
pub const SEGMENT_SECONDS: f64 = 6.0;

/// Bookkeeping for a segmented corpus: expected versus produced segment
/// counts, and how many recordings needed padding or truncation.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SegmentationReport {
    pub clips: usize,
    pub padded_clips: usize,
    pub truncated_clips: usize,
    pub expected_segments: usize,
    pub actual_segments: usize,
}

impl SegmentationReport {
    pub fn record(&mut self, clip: &AudioClip, produced: usize, count: usize) {
        let fixed = (CLIP_SECONDS * clip.sample_rate() as f64).round() as usize;
        self.clips += 1;
        self.padded_clips += usize::from(clip.len() < fixed);
        self.truncated_clips += usize::from(clip.len() > fixed);
        self.expected_segments += count;
        self.actual_segments += produced;
    }
}

/// Fixes the clip to 30 s, then cuts `count` consecutive segments of
/// `seg_seconds` each.
pub fn segment(clip: &AudioClip, count: usize, seg_seconds: f64) -> Result<Vec<AudioClip>> {
    segment_fixed(clip, count, seg_seconds, CLIP_SECONDS)
}

/// Like [`segment`] with an explicit truncate/pad length.
pub fn segment_fixed(
    clip: &AudioClip,
    count: usize,
    seg_seconds: f64,
    fixed_seconds: f64,
) -> Result<Vec<AudioClip>> {
    if count == 0 {
        return Err(Error::Argument("segment count must be positive".into()));
    }
    if !(seg_seconds > 0.0 && seg_seconds.is_finite()) || !(fixed_seconds > 0.0 && fixed_seconds.is_finite()) {
        return Err(Error::Argument("segment and clip durations must be positive".into()));
    }
    let sr = clip.sample_rate();
    let fixed_len = (fixed_seconds * sr as f64).round() as usize;
    let seg_len = (seg_seconds * sr as f64).round() as usize;
    if seg_len == 0 {
        return Err(Error::Argument("segment shorter than one sample".into()));
    }
    if count * seg_len > fixed_len {
        return Err(Error::Argument(format!(
            "{count} x {seg_seconds} s segments do not fit in {fixed_seconds} s"
        )));
    }
    let src = clip.samples();
    (0..count)
        .map(|i| {
            let start = i * seg_len;
            let samples: Vec<f32> = (start..start + seg_len)
                .map(|j| src.get(j).copied().unwrap_or(0.0))
                .collect();
            AudioClip::new(samples, sr)
        })
        .collect()
}
