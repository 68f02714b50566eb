use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureMap};

pub const STD_FLOOR: f64 = 1e-6;

/// Per-row mean and population standard deviation over every training frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub kind: FeatureKind,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn fit_normalizer(train_maps: &[&FeatureMap]) -> Result<NormalizationStats> {
    let first = train_maps.first().ok_or_else(|| Error::Argument("no training maps to fit".into()))?;
    let kind = first.kind;
    let rows = first.rows;
    if let Some(m) = train_maps.iter().find(|m| m.kind != kind || m.rows != rows) {
        return Err(Error::Argument(format!("cannot fit {kind} statistics on a {} map", m.kind)));
    }
    let frames: usize = train_maps.iter().map(|m| m.cols).sum();
    if frames == 0 {
        return Err(Error::Argument("training maps have no frames".into()));
    }
    let mut mean = vec![0.0; rows];
    for m in train_maps {
        for (r, acc) in mean.iter_mut().enumerate() {
            *acc += m.row(r).iter().map(|&v| v as f64).sum::<f64>();
        }
    }
    mean.iter_mut().for_each(|v| *v /= frames as f64);
    let mut var = vec![0.0; rows];
    for m in train_maps {
        for (r, acc) in var.iter_mut().enumerate() {
            *acc += m.row(r).iter().map(|&v| (v as f64 - mean[r]).powi(2)).sum::<f64>();
        }
    }
    let std = var.into_iter().map(|v| (v / frames as f64).sqrt().max(STD_FLOOR)).collect();
    Ok(NormalizationStats { kind, mean, std })
}

/// `(x - mean) / max(std, 1e-6)` per row.
pub fn apply_normalizer(map: &FeatureMap, stats: &NormalizationStats) -> Result<FeatureMap> {
    if map.kind != stats.kind || map.rows != stats.mean.len() {
        return Err(Error::Argument(format!("{} statistics applied to a {} map", stats.kind, map.kind)));
    }
    let mut out = map.clone();
    for r in 0..map.rows {
        let (mu, sd) = (stats.mean[r], stats.std[r].max(STD_FLOOR));
        for v in &mut out.values[r * map.cols..(r + 1) * map.cols] {
            *v = ((*v as f64 - mu) / sd) as f32;
        }
    }
    Ok(out)
}
