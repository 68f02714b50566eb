use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{
    kaiming_uniform, one_hot, Adam, BatchNormState, Checkpoint, Mode, Parameter, Tape, Tensor, Var, RELU_GAIN,
};
use crate::error::{Error, Result};
use crate::models::{ArchitectureSpec, LayerShape, LayerSpec};

/// Init gain of the logits layer; keeps untrained outputs near uniform.
pub const OUTPUT_GAIN: f64 = 0.1;

#[derive(Debug, Clone, Copy)]
enum Binding {
    None,
    Conv { kernel: usize, bias: usize },
    DepthwiseSep { depth: usize, point: usize },
    Norm { gamma: usize, beta: usize, state: usize },
    Dense { weight: usize, bias: usize },
}

/// A built network: spec, float-32 parameters, batch-norm statistics and mode.
#[derive(Debug, Clone)]
pub struct ModelInstance {
    spec: ArchitectureSpec,
    input: [usize; 3],
    shapes: Vec<LayerShape>,
    params: Vec<Parameter<f32>>,
    bindings: Vec<Binding>,
    norms: Vec<BatchNormState<f32>>,
    norm_names: Vec<String>,
    mode: Mode,
    seed: u64,
    dropout_calls: u64,
}

fn mix(seed: u64, n: u64) -> u64 {
    let mut z = seed ^ n.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl ModelInstance {
    /// Infers shapes for `input` (C×H×W) and draws initial weights from `seed`.
    pub fn new(spec: ArchitectureSpec, input: [usize; 3], seed: u64) -> Result<Self> {
        let shapes = spec.infer_shapes(input)?;
        let names = spec.layer_names();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::new();
        let mut bindings = Vec::new();
        let mut norms = Vec::new();
        let mut norm_names = Vec::new();
        let mut prev = input.to_vec();
        for (i, layer) in spec.layers.iter().enumerate() {
            let gain = if spec.layers[i + 1..].iter().find(|l| !matches!(l, LayerSpec::Batchnorm | LayerSpec::Dropout { .. }))
                == Some(&LayerSpec::Softmax)
            {
                OUTPUT_GAIN
            } else {
                RELU_GAIN
            };
            let name = &names[i];
            let mut add = |suffix: &str, t: Tensor<f32>| {
                params.push(Parameter::new(format!("{name}.{suffix}"), t));
                params.len() - 1
            };
            let binding = match *layer {
                LayerSpec::Conv { filters, kernel, .. } => {
                    let fan_in = prev[0] * kernel * kernel;
                    Binding::Conv {
                        kernel: add("kernel", kaiming_uniform(&mut rng, &[filters, prev[0], kernel, kernel], fan_in, gain)),
                        bias: add("bias", Tensor::zeros(&[filters])),
                    }
                }
                LayerSpec::DepthwiseSepConv { filters, kernel, .. } => Binding::DepthwiseSep {
                    depth: add("depth", kaiming_uniform(&mut rng, &[prev[0], kernel, kernel], kernel * kernel, 1.0)),
                    point: add("point", kaiming_uniform(&mut rng, &[filters, prev[0]], prev[0], gain)),
                },
                LayerSpec::Batchnorm => {
                    let b = Binding::Norm {
                        gamma: add("gamma", Tensor::full(&[prev[0]], 1.0)),
                        beta: add("beta", Tensor::zeros(&[prev[0]])),
                        state: norms.len(),
                    };
                    norms.push(BatchNormState::new(prev[0]));
                    norm_names.push(name.clone());
                    b
                }
                LayerSpec::Dense { units } => Binding::Dense {
                    weight: add("weight", kaiming_uniform(&mut rng, &[units, prev[0]], prev[0], gain)),
                    bias: add("bias", Tensor::zeros(&[units])),
                },
                _ => Binding::None,
            };
            bindings.push(binding);
            prev = shapes[i].shape.clone();
        }
        Ok(ModelInstance {
            spec,
            input,
            shapes,
            params,
            bindings,
            norms,
            norm_names,
            mode: Mode::Train,
            seed,
            dropout_calls: 0,
        })
    }

    pub fn spec(&self) -> &ArchitectureSpec {
        &self.spec
    }

    pub fn input_geometry(&self) -> [usize; 3] {
        self.input
    }

    pub fn layer_shapes(&self) -> &[LayerShape] {
        &self.shapes
    }

    pub fn parameters(&self) -> &[Parameter<f32>] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [Parameter<f32>] {
        &mut self.params
    }

    /// Trainable scalars actually allocated.
    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(Parameter::len).sum()
    }

    pub fn norm_states(&self) -> &[BatchNormState<f32>] {
        &self.norms
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    fn check_batch(&self, batch: &Tensor<f32>) -> Result<usize> {
        let [n, c, h, w] = batch.dims4()?;
        if [c, h, w] != self.input {
            return Err(Error::Shape(format!(
                "{} built for input {:?}, got batch {:?}",
                self.spec.name,
                self.input,
                batch.shape()
            )));
        }
        Ok(n)
    }

    /// Puts every parameter on `tape`, tracked when `trainable`.
    pub fn bind(&self, tape: &mut Tape<f32>, trainable: bool) -> Vec<Var> {
        self.params.iter().map(|p| tape.leaf(p.value.clone(), trainable)).collect()
    }

    /// Runs all layers except the terminal softmax.
    pub fn logits_on(&mut self, tape: &mut Tape<f32>, x: Var, vars: &[Var]) -> Result<Var> {
        let mut h = x;
        let mode = self.mode;
        for (layer, binding) in self.spec.layers.iter().zip(&self.bindings) {
            h = match (*layer, *binding) {
                (LayerSpec::Conv { stride, padding, .. }, Binding::Conv { kernel, bias }) => {
                    tape.conv2d(h, vars[kernel], vars[bias], stride, padding)?
                }
                (LayerSpec::DepthwiseSepConv { stride, padding, .. }, Binding::DepthwiseSep { depth, point }) => {
                    tape.depthwise_separable_conv(h, vars[depth], vars[point], stride, padding)?
                }
                (LayerSpec::Batchnorm, Binding::Norm { gamma, beta, state }) => {
                    tape.batchnorm2d(h, vars[gamma], vars[beta], &mut self.norms[state], mode)?
                }
                (LayerSpec::Relu, _) => tape.relu(h)?,
                (LayerSpec::Maxpool { window, stride }, _) => tape.maxpool2d(h, window, stride)?,
                (LayerSpec::AdaptiveAvgPool { out_h, out_w }, _) => tape.adaptive_avg_pool(h, out_h, out_w)?,
                (LayerSpec::Flatten, _) => tape.flatten(h)?,
                (LayerSpec::Dense { .. }, Binding::Dense { weight, bias }) => tape.dense(h, vars[weight], vars[bias])?,
                (LayerSpec::Dropout { rate }, _) => {
                    if mode == Mode::Train && rate > 0.0 {
                        self.dropout_calls += 1;
                        tape.dropout(h, rate, mix(self.seed, self.dropout_calls))?
                    } else {
                        h
                    }
                }
                (LayerSpec::Softmax, _) => break,
                (l, _) => return Err(Error::Config(format!("layer {} has no parameter binding", l.kind_name()))),
            };
        }
        Ok(h)
    }

    /// Untracked logits for an `N×C×H×W` batch in the current mode.
    pub fn logits(&mut self, batch: &Tensor<f32>) -> Result<Tensor<f32>> {
        self.check_batch(batch)?;
        let mut tape = Tape::new();
        let x = tape.constant(batch.clone());
        let vars = self.bind(&mut tape, false);
        let out = self.logits_on(&mut tape, x, &vars)?;
        Ok(tape.take_value(out))
    }

    /// Class probabilities, `N×num_classes`.
    pub fn forward(&mut self, batch: &Tensor<f32>) -> Result<Tensor<f32>> {
        let logits = self.logits(batch)?;
        let mut tape = Tape::new();
        let l = tape.constant(logits);
        let p = tape.softmax(l)?;
        Ok(tape.take_value(p))
    }

    /// Mean cross-entropy without touching parameters.
    pub fn loss(&mut self, batch: &Tensor<f32>, labels: &[usize]) -> Result<f32> {
        let logits = self.logits(batch)?;
        self.loss_from_logits(logits, labels)
    }

    pub fn loss_from_logits(&self, logits: Tensor<f32>, labels: &[usize]) -> Result<f32> {
        let mut tape = Tape::new();
        let l = tape.constant(logits);
        let loss = tape.softmax_cross_entropy(l, &one_hot(labels, self.spec.num_classes)?)?;
        Ok(tape.value(loss).data()[0])
    }

    /// One Adam step on a mini-batch in train mode; returns the batch loss.
    pub fn train_step(&mut self, batch: &Tensor<f32>, labels: &[usize], adam: &Adam) -> Result<f32> {
        let n = self.check_batch(batch)?;
        if labels.len() != n {
            return Err(Error::Shape(format!("{} labels for a batch of {n}", labels.len())));
        }
        self.mode = Mode::Train;
        let targets = one_hot(labels, self.spec.num_classes)?;
        let mut tape = Tape::new();
        let x = tape.constant(batch.clone());
        let vars = self.bind(&mut tape, true);
        let logits = self.logits_on(&mut tape, x, &vars)?;
        let loss = tape.softmax_cross_entropy(logits, &targets)?;
        let value = tape.value(loss).data()[0];
        if !value.is_finite() {
            return Err(Error::Training(format!("{}: non-finite loss", self.spec.name)));
        }
        tape.backward(loss)?;
        for (p, v) in self.params.iter_mut().zip(vars) {
            let g = tape.grad(v).ok_or_else(|| Error::Training(format!("no gradient for {}", p.name)))?;
            adam.step(p, g)?;
        }
        Ok(value)
    }

    /// Parameters plus batch-norm running statistics.
    pub fn checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::default();
        for p in &self.params {
            ck.push(p.name.clone(), p.value.shape(), p.value.data().to_vec());
        }
        for (st, name) in self.norms.iter().zip(&self.norm_names) {
            ck.push(format!("{name}.running_mean"), &[st.channels()], st.running_mean.clone());
            ck.push(format!("{name}.running_var"), &[st.channels()], st.running_var.clone());
        }
        ck
    }

    /// Restores values saved by [`ModelInstance::checkpoint`]; Adam moments are kept.
    pub fn load_checkpoint(&mut self, ck: &Checkpoint) -> Result<()> {
        let fetch = |name: &str, shape: &[usize]| -> Result<Vec<f32>> {
            let r = ck.get(name).ok_or_else(|| Error::Data(format!("checkpoint lacks `{name}`")))?;
            if r.shape != shape {
                return Err(Error::Data(format!("checkpoint `{name}` has shape {:?}, expected {shape:?}", r.shape)));
            }
            Ok(r.data.clone())
        };
        for p in &mut self.params {
            let data = fetch(&p.name, p.value.shape())?;
            p.value.data_mut().copy_from_slice(&data);
        }
        for (st, name) in self.norms.iter_mut().zip(&self.norm_names) {
            st.running_mean = fetch(&format!("{name}.running_mean"), &[st.running_mean.len()])?;
            st.running_var = fetch(&format!("{name}.running_var"), &[st.running_var.len()])?;
            st.updates = st.updates.max(1);
        }
        Ok(())
    }
}
