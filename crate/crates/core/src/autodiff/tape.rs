use std::time::Instant;

use crate::autodiff::{Real, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Gradient rule of one recorded op.
///
/// `needs[i]` tells whether input `i` wants a gradient; entries for inputs
/// that do not may be `None`.
pub trait Backward<T: Real> {
    fn name(&self) -> &'static str;

    fn backward(
        &self,
        inputs: &[&Tensor<T>],
        output: &Tensor<T>,
        grad_out: &[T],
        needs: &[bool],
    ) -> Vec<Option<Vec<T>>>;
}

struct Node<T: Real> {
    value: Tensor<T>,
    grad: Option<Vec<T>>,
    requires_grad: bool,
    inputs: Vec<Var>,
    backward: Option<Box<dyn Backward<T>>>,
}

/// Records executed ops in order; [`Tape::backward`] replays them in reverse.
pub struct Tape<T: Real> {
    nodes: Vec<Node<T>>,
    finite_check: bool,
    profile: Option<Profile>,
}

/// Wall time per op kind, collected when profiling is on.
#[derive(Debug, Clone, Default)]
pub struct Profile {
    last: Option<Instant>,
    /// `(op, forward seconds, backward seconds, calls)`
    pub entries: Vec<(&'static str, f64, f64, usize)>,
}

impl Profile {
    fn entry(&mut self, name: &'static str) -> &mut (&'static str, f64, f64, usize) {
        let i = match self.entries.iter().position(|e| e.0 == name) {
            Some(i) => i,
            None => {
                self.entries.push((name, 0.0, 0.0, 0));
                self.entries.len() - 1
            }
        };
        &mut self.entries[i]
    }
}

/// Tells glibc to keep freed blocks in the heap instead of unmapping them.
fn retain_freed_memory() {
    #[cfg(all(target_os = "linux", target_env = "gnu"))]
    {
        static ONCE: std::sync::Once = std::sync::Once::new();
        ONCE.call_once(|| unsafe {
            libc::mallopt(libc::M_MMAP_MAX, 0);
            libc::mallopt(libc::M_TRIM_THRESHOLD, i32::MAX);
        });
    }
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Tape<T> {
    /// Finite checking follows `debug_assertions`.
    pub fn new() -> Self {
        retain_freed_memory();
        Tape { nodes: Vec::new(), finite_check: cfg!(debug_assertions), profile: None }
    }

    /// Records per-op wall time; forward time is measured between
    /// consecutive recorded ops.
    pub fn with_profiling(mut self) -> Self {
        self.profile = Some(Profile { last: Some(Instant::now()), entries: Vec::new() });
        self
    }

    pub fn profile(&self) -> Option<&Profile> {
        self.profile.as_ref()
    }

    pub fn with_finite_check(mut self, on: bool) -> Self {
        self.finite_check = on;
        self
    }

    pub fn finite_check(&self) -> bool {
        self.finite_check
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        if let Some(p) = self.profile.as_mut() {
            p.last = Some(Instant::now());
        }
        self.nodes.push(Node { value, grad: None, requires_grad, inputs: Vec::new(), backward: None });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, false)
    }

    pub fn param(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, true)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Gradient accumulated into a leaf by the last [`Tape::backward`].
    pub fn grad(&self, v: Var) -> Option<&[T]> {
        self.nodes[v.0].grad.as_deref()
    }

    pub fn take_value(&mut self, v: Var) -> Tensor<T> {
        let node = &mut self.nodes[v.0];
        std::mem::replace(&mut node.value, Tensor::zeros(&[1]))
    }

    /// Appends the result of an op. Gradient tracking is enabled when any
    /// input requires it.
    pub fn record(&mut self, value: Tensor<T>, inputs: &[Var], backward: Box<dyn Backward<T>>) -> Result<Var> {
        if self.finite_check && !value.is_finite() {
            return Err(Error::Training(format!("non-finite value produced by {}", backward.name())));
        }
        if let Some(p) = self.profile.as_mut() {
            let now = Instant::now();
            let dt = p.last.map_or(0.0, |t| (now - t).as_secs_f64());
            let e = p.entry(backward.name());
            e.1 += dt;
            e.3 += 1;
            p.last = Some(now);
        }
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            value,
            grad: None,
            requires_grad,
            inputs: inputs.to_vec(),
            backward: if requires_grad { Some(backward) } else { None },
        });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Reverse sweep from a single-element output. Leaf gradients accumulate;
    /// intermediate gradients are released once propagated.
    pub fn backward(&mut self, root: Var) -> Result<()> {
        if self.nodes[root.0].value.len() != 1 {
            return Err(Error::Shape(format!("backward needs a scalar root, got {:?}", self.shape(root))));
        }
        if !self.nodes[root.0].requires_grad {
            return Ok(());
        }
        for node in &mut self.nodes[..=root.0] {
            if node.backward.is_some() {
                node.grad = None;
            }
        }
        self.accumulate(root, vec![T::one()]);
        for i in (0..=root.0).rev() {
            let Some(bw) = self.nodes[i].backward.take() else { continue };
            let Some(grad) = self.nodes[i].grad.take() else {
                self.nodes[i].backward = Some(bw);
                continue;
            };
            let inputs = self.nodes[i].inputs.clone();
            let needs: Vec<bool> = inputs.iter().map(|v| self.nodes[v.0].requires_grad).collect();
            let started = self.profile.as_ref().map(|_| Instant::now());
            let grads = {
                let ins: Vec<&Tensor<T>> = inputs.iter().map(|v| &self.nodes[v.0].value).collect();
                bw.backward(&ins, &self.nodes[i].value, &grad, &needs)
            };
            if let (Some(p), Some(t)) = (self.profile.as_mut(), started) {
                p.entry(bw.name()).2 += t.elapsed().as_secs_f64();
            }
            self.nodes[i].backward = Some(bw);
            for ((v, g), need) in inputs.iter().zip(grads).zip(needs) {
                if let (Some(g), true) = (g, need) {
                    debug_assert_eq!(g.len(), self.nodes[v.0].value.len());
                    if self.finite_check && g.iter().any(|x| !x.is_finite()) {
                        return Err(Error::Training(format!(
                            "non-finite gradient from {}",
                            self.nodes[i].backward.as_ref().map_or("op", |b| b.name())
                        )));
                    }
                    self.accumulate(*v, g);
                }
            }
        }
        Ok(())
    }

    fn accumulate(&mut self, v: Var, g: Vec<T>) {
        let node = &mut self.nodes[v.0];
        match &mut node.grad {
            Some(acc) => acc.iter_mut().zip(g).for_each(|(a, b)| *a += b),
            None => node.grad = Some(g),
        }
    }
}
