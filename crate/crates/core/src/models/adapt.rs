use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureMap};

/// Feature maps with fewer rows are zero-padded to this height.
pub const MIN_INPUT_ROWS: usize = 64;

pub fn adapted_rows(rows: usize) -> usize {
    rows.max(MIN_INPUT_ROWS)
}

/// Model input geometry `C×H×W` for a feature kind at `cols` frames.
pub fn input_geometry(kind: FeatureKind, cols: usize) -> [usize; 3] {
    [1, adapted_rows(kind.rows()), cols]
}

/// `1×1×H×W` tensor; short maps are centred in a zero band of 64 rows with
/// the odd row, if any, at the bottom.
pub fn adapt_input(map: &FeatureMap) -> Tensor<f32> {
    let rows = adapted_rows(map.rows);
    let top = (rows - map.rows) / 2;
    let mut data = vec![0.0f32; rows * map.cols];
    data[top * map.cols..(top + map.rows) * map.cols].copy_from_slice(&map.values);
    Tensor::new(vec![1, 1, rows, map.cols], data).expect("adapted shape is consistent")
}

/// Concatenates `1×C×H×W` samples along the batch axis.
pub fn stack_batch(samples: &[&Tensor<f32>]) -> Result<Tensor<f32>> {
    let first = samples.first().ok_or_else(|| Error::Argument("empty batch".into()))?;
    let [_, c, h, w] = first.dims4()?;
    let mut data = Vec::with_capacity(samples.len() * c * h * w);
    for s in samples {
        if s.shape() != first.shape() {
            return Err(Error::Shape(format!("batch mixes shapes {:?} and {:?}", first.shape(), s.shape())));
        }
        data.extend_from_slice(s.data());
    }
    Tensor::new(vec![samples.len(), c, h, w], data)
}
