use serde::{Deserialize, Serialize};

use crate::autodiff::{conv_axis, Padding};
use crate::error::{Error, Result};

/// One layer of a sequential network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv { filters: usize, kernel: usize, stride: usize, padding: Padding },
    DepthwiseSepConv { filters: usize, kernel: usize, stride: usize, padding: Padding },
    Batchnorm,
    Relu,
    Maxpool { window: usize, stride: usize },
    AdaptiveAvgPool { out_h: usize, out_w: usize },
    Flatten,
    Dense { units: usize },
    Dropout { rate: f64 },
    Softmax,
}

impl LayerSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::Conv { .. } => "conv",
            LayerSpec::DepthwiseSepConv { .. } => "dwconv",
            LayerSpec::Batchnorm => "bn",
            LayerSpec::Relu => "relu",
            LayerSpec::Maxpool { .. } => "pool",
            LayerSpec::AdaptiveAvgPool { .. } => "avgpool",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::Softmax => "softmax",
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let positive = |v: usize, what: &str| if v == 0 { Err(format!("{what} must be positive")) } else { Ok(()) };
        match *self {
            LayerSpec::Conv { filters, kernel, stride, .. } | LayerSpec::DepthwiseSepConv { filters, kernel, stride, .. } => {
                positive(filters, "filters")?;
                positive(kernel, "kernel")?;
                positive(stride, "stride")
            }
            LayerSpec::Maxpool { window, stride } => {
                positive(window, "window")?;
                positive(stride, "stride")
            }
            LayerSpec::AdaptiveAvgPool { out_h, out_w } => {
                positive(out_h, "out_h")?;
                positive(out_w, "out_w")
            }
            LayerSpec::Dense { units } => positive(units, "units"),
            LayerSpec::Dropout { rate } if !(0.0..1.0).contains(&rate) => Err(format!("dropout rate {rate} outside [0, 1)")),
            _ => Ok(()),
        }
    }
}

/// Sequential network description; serializes to one JSON object per layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub name: String,
    pub num_classes: usize,
    pub layers: Vec<LayerSpec>,
}

/// Output shape of one layer, without the batch axis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayerShape {
    pub layer: String,
    pub shape: Vec<usize>,
}

impl ArchitectureSpec {
    /// Names like `conv1`, `bn3`, `dense2`, numbered per kind.
    pub fn layer_names(&self) -> Vec<String> {
        let mut counts = std::collections::HashMap::new();
        self.layers
            .iter()
            .map(|l| {
                let c = counts.entry(l.kind_name()).or_insert(0);
                *c += 1;
                format!("{}{}", l.kind_name(), c)
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        for (layer, name) in self.layers.iter().zip(self.layer_names()) {
            layer.validate().map_err(|e| Error::Config(format!("{}: layer {name}: {e}", self.name)))?;
        }
        let softmaxes = self.layers.iter().filter(|l| matches!(l, LayerSpec::Softmax)).count();
        if softmaxes != 1 || !matches!(self.layers.last(), Some(LayerSpec::Softmax)) {
            return Err(Error::Config(format!("{}: needs exactly one terminal softmax", self.name)));
        }
        let last_dense = self.layers.iter().rev().find_map(|l| match l {
            LayerSpec::Dense { units } => Some(*units),
            _ => None,
        });
        if last_dense != Some(self.num_classes) {
            return Err(Error::Config(format!("{}: final dense layer must have {} units", self.name, self.num_classes)));
        }
        Ok(())
    }

    /// Per-layer output shapes for a `C×H×W` input.
    pub fn infer_shapes(&self, input: [usize; 3]) -> Result<Vec<LayerShape>> {
        self.validate()?;
        let mut shape = input.to_vec();
        let mut out = Vec::with_capacity(self.layers.len());
        for (layer, name) in self.layers.iter().zip(self.layer_names()) {
            let geo = |detail: String| Error::Geometry { layer: name.clone(), detail };
            shape = match (*layer, &shape[..]) {
                (LayerSpec::Conv { filters, kernel, stride, padding }, &[_, h, w])
                | (LayerSpec::DepthwiseSepConv { filters, kernel, stride, padding }, &[_, h, w]) => {
                    let (ho, _) = conv_axis(h, kernel, stride, padding)
                        .map_err(|_| geo(format!("{kernel}×{kernel} kernel does not fit {h}×{w} input")))?;
                    let (wo, _) = conv_axis(w, kernel, stride, padding)
                        .map_err(|_| geo(format!("{kernel}×{kernel} kernel does not fit {h}×{w} input")))?;
                    vec![filters, ho, wo]
                }
                (LayerSpec::Maxpool { window, stride }, &[c, h, w]) => {
                    if window > h || window > w {
                        return Err(geo(format!("{window}×{window} pooling window exceeds {h}×{w} input")));
                    }
                    vec![c, (h - window) / stride + 1, (w - window) / stride + 1]
                }
                (LayerSpec::AdaptiveAvgPool { out_h, out_w }, &[c, _, _]) => vec![c, out_h, out_w],
                (LayerSpec::Batchnorm | LayerSpec::Relu | LayerSpec::Dropout { .. } | LayerSpec::Softmax, s) => s.to_vec(),
                (LayerSpec::Flatten, s) => vec![s.iter().product()],
                (LayerSpec::Dense { units }, &[_]) => vec![units],
                (l, s) => return Err(geo(format!("{} cannot follow output of shape {s:?}", l.kind_name()))),
            };
            if shape.contains(&0) {
                return Err(geo(format!("spatial extent collapsed to {shape:?}")));
            }
            out.push(LayerShape { layer: name, shape: shape.clone() });
        }
        Ok(out)
    }

    /// Trainable parameter count from the spec alone.
    pub fn parameter_count(&self, input: [usize; 3]) -> Result<usize> {
        let shapes = self.infer_shapes(input)?;
        let mut prev = input.to_vec();
        let mut total = 0;
        for (layer, s) in self.layers.iter().zip(&shapes) {
            let c = prev[0];
            total += match *layer {
                LayerSpec::Conv { filters, kernel, .. } => filters * c * kernel * kernel + filters,
                LayerSpec::DepthwiseSepConv { filters, kernel, .. } => c * kernel * kernel + filters * c,
                LayerSpec::Batchnorm => 2 * c,
                LayerSpec::Dense { units } => units * prev[0] + units,
                _ => 0,
            };
            prev = s.shape.clone();
        }
        Ok(total)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("architecture spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }
}
