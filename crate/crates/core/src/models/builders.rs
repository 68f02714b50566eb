use crate::autodiff::Padding;
use crate::models::{ArchitectureSpec, LayerSpec};

pub const NUM_CLASSES: usize = 5;

fn conv(filters: usize, kernel: usize, stride: usize, padding: Padding) -> LayerSpec {
    LayerSpec::Conv { filters, kernel, stride, padding }
}

fn same(filters: usize, kernel: usize) -> LayerSpec {
    conv(filters, kernel, 1, Padding::Same)
}

fn pool(window: usize, stride: usize) -> LayerSpec {
    LayerSpec::Maxpool { window, stride }
}

fn dense(units: usize) -> LayerSpec {
    LayerSpec::Dense { units }
}

fn spec(name: &str, layers: Vec<LayerSpec>) -> ArchitectureSpec {
    ArchitectureSpec { name: name.into(), num_classes: NUM_CLASSES, layers }
}

/// Five conv stages (64, 192, 384, 256, 256) with batch norm, overlapping
/// 3×3/2 pooling after stages 1, 2 and 5, a 4×4 adaptive pool and a
/// 1024/512 dense head.
pub fn build_ymcm() -> ArchitectureSpec {
    use LayerSpec::*;
    let s4 = conv(64, 11, 4, Padding::Same);
    spec(
        "YMCM",
        vec![
            s4,
            Batchnorm,
            Relu,
            pool(3, 2),
            same(192, 5),
            Batchnorm,
            Relu,
            pool(3, 2),
            same(384, 3),
            Batchnorm,
            Relu,
            same(256, 3),
            Batchnorm,
            Relu,
            same(256, 3),
            Batchnorm,
            Relu,
            pool(3, 2),
            AdaptiveAvgPool { out_h: 4, out_w: 4 },
            Flatten,
            dense(1024),
            Relu,
            dense(512),
            Relu,
            dense(NUM_CLASSES),
            Softmax,
        ],
    )
}

/// LeNet-style: two valid 5×5 conv/pool stages and a 128-unit hidden layer.
pub fn build_baseline_cnn() -> ArchitectureSpec {
    use LayerSpec::*;
    spec(
        "CNN",
        vec![
            conv(32, 5, 1, Padding::Valid),
            Relu,
            pool(2, 2),
            conv(64, 5, 1, Padding::Valid),
            Relu,
            pool(2, 2),
            Flatten,
            dense(128),
            Relu,
            dense(NUM_CLASSES),
            Softmax,
        ],
    )
}

pub fn build_alexnet() -> ArchitectureSpec {
    use LayerSpec::*;
    spec(
        "AlexNet",
        vec![
            conv(64, 11, 4, Padding::Same),
            Relu,
            pool(3, 2),
            same(192, 5),
            Relu,
            pool(3, 2),
            same(384, 3),
            Relu,
            same(256, 3),
            Relu,
            same(256, 3),
            Relu,
            pool(3, 2),
            AdaptiveAvgPool { out_h: 6, out_w: 6 },
            Flatten,
            Dropout { rate: 0.5 },
            dense(1024),
            Relu,
            Dropout { rate: 0.5 },
            dense(512),
            Relu,
            dense(NUM_CLASSES),
            Softmax,
        ],
    )
}

/// Thirteen 3×3 convs in blocks of 2, 2, 3, 3, 3 at widths 16/32/64/128/128.
pub fn build_vgg16_mini() -> ArchitectureSpec {
    use LayerSpec::*;
    let mut layers = Vec::new();
    for (width, reps) in [(16, 2), (32, 2), (64, 3), (128, 3), (128, 3)] {
        for _ in 0..reps {
            layers.push(same(width, 3));
            layers.push(Relu);
        }
        layers.push(pool(2, 2));
    }
    layers.extend([AdaptiveAvgPool { out_h: 2, out_w: 2 }, Flatten, dense(256), Relu, dense(NUM_CLASSES), Softmax]);
    spec("VGG16-mini", layers)
}

/// 3×3/2 stem then eight depthwise-separable blocks, each followed by batch
/// norm and ReLU, and global average pooling.
pub fn build_mobilenet_mini() -> ArchitectureSpec {
    use LayerSpec::*;
    let mut layers = vec![conv(8, 3, 2, Padding::Same), Batchnorm, Relu];
    for (filters, stride) in [(16, 1), (32, 2), (32, 1), (64, 2), (64, 1), (128, 2), (128, 1), (128, 1)] {
        layers.extend([DepthwiseSepConv { filters, kernel: 3, stride, padding: Padding::Same }, Batchnorm, Relu]);
    }
    layers.extend([AdaptiveAvgPool { out_h: 1, out_w: 1 }, Flatten, dense(NUM_CLASSES), Softmax]);
    spec("MobileNet-mini", layers)
}
