//! Reverse-mode automatic differentiation with higher-order support.
//!
//! Every backward rule is written in terms of differentiable [`Var`] ops, so
//! calling [`grad`] with `create_graph = true` yields gradients that can be
//! differentiated again. The gradient penalty of the critic needs exactly this.

pub mod kernels;
mod ops;

use std::cell::{Cell, RefCell};
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use crate::tensor::Tensor;

pub use ops::*;

thread_local! {
    static GRAD_ENABLED: Cell<bool> = const { Cell::new(true) };
    static NEXT_ID: Cell<usize> = const { Cell::new(0) };
}

fn next_id() -> usize {
    NEXT_ID.with(|c| {
        let id = c.get();
        c.set(id + 1);
        id
    })
}

pub fn grad_enabled() -> bool {
    GRAD_ENABLED.with(Cell::get)
}

struct ModeGuard(bool);

impl Drop for ModeGuard {
    fn drop(&mut self) {
        GRAD_ENABLED.with(|c| c.set(self.0));
    }
}

fn with_grad_mode<T>(enabled: bool, f: impl FnOnce() -> T) -> T {
    let prev = GRAD_ENABLED.with(|c| c.replace(enabled));
    let _guard = ModeGuard(prev);
    f()
}

/// Runs `f` without recording any graph.
pub fn no_grad<T>(f: impl FnOnce() -> T) -> T {
    with_grad_mode(false, f)
}

/// Runs `f` with recording on, even inside `no_grad`.
pub fn enable_grad<T>(f: impl FnOnce() -> T) -> T {
    with_grad_mode(true, f)
}

type BackwardFn = dyn Fn(&[Var], &Var, &[bool]) -> Vec<Option<Var>>;

struct GradFn {
    inputs: Vec<Var>,
    backward: Box<BackwardFn>,
}

struct Node {
    id: usize,
    value: RefCell<Tensor>,
    requires_grad: bool,
    grad_fn: Option<GradFn>,
}

/// A node in the computation graph.
#[derive(Clone)]
pub struct Var(Rc<Node>);

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var#{}({:?}, grad={})", self.0.id, self.0.value.borrow(), self.0.requires_grad)
    }
}

impl Var {
    /// A leaf that receives gradients (a parameter or a differentiated input).
    pub fn param(value: Tensor) -> Self {
        Self::leaf(value, true)
    }

    /// A leaf that never receives gradients.
    pub fn constant(value: Tensor) -> Self {
        Self::leaf(value, false)
    }

    fn leaf(value: Tensor, requires_grad: bool) -> Self {
        Var(Rc::new(Node { id: next_id(), value: RefCell::new(value), requires_grad, grad_fn: None }))
    }

    /// Records an op result. The node only joins the graph when grad mode is on
    /// and at least one input requires gradients.
    pub(crate) fn from_op(
        value: Tensor,
        inputs: Vec<Var>,
        backward: impl Fn(&[Var], &Var, &[bool]) -> Vec<Option<Var>> + 'static,
    ) -> Self {
        let track = grad_enabled() && inputs.iter().any(Var::requires_grad);
        if !track {
            return Self::constant(value);
        }
        Var(Rc::new(Node {
            id: next_id(),
            value: RefCell::new(value),
            requires_grad: true,
            grad_fn: Some(GradFn { inputs, backward: Box::new(backward) }),
        }))
    }

    pub fn id(&self) -> usize {
        self.0.id
    }

    pub fn requires_grad(&self) -> bool {
        self.0.requires_grad
    }

    pub fn is_leaf(&self) -> bool {
        self.0.grad_fn.is_none()
    }

    /// Cheap clone of the current value (storage is shared).
    pub fn value(&self) -> Tensor {
        self.0.value.borrow().clone()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.0.value.borrow().shape().to_vec()
    }

    pub fn item(&self) -> f64 {
        self.0.value.borrow().item()
    }

    /// Replaces a leaf's value in place (optimizer updates, checkpoint loads).
    pub fn set_value(&self, value: Tensor) {
        assert!(self.is_leaf(), "set_value on a non-leaf node");
        assert_eq!(self.0.value.borrow().shape(), value.shape(), "set_value shape change");
        *self.0.value.borrow_mut() = value;
    }

    /// Applies `f` to a leaf's storage in place.
    pub fn update(&self, f: impl FnOnce(&mut [f64])) {
        assert!(self.is_leaf(), "update on a non-leaf node");
        let mut v = self.0.value.borrow_mut();
        f(v.data_mut());
    }

    /// A constant sharing this node's value, cut from the graph.
    pub fn detach(&self) -> Var {
        Var::constant(self.value())
    }
}

/// Gradients of the scalar `output` with respect to each of `wrt`.
///
/// With `create_graph` the returned gradients are themselves differentiable.
/// Inputs unreachable from `output` get zero gradients.
pub fn grad(output: &Var, wrt: &[Var], create_graph: bool) -> Vec<Var> {
    assert_eq!(output.value().len(), 1, "grad() needs a scalar output");

    // Post-order DFS over tracked nodes.
    let mut order: Vec<Var> = Vec::new();
    let mut visited: HashMap<usize, bool> = HashMap::new();
    let mut stack: Vec<(Var, bool)> = vec![(output.clone(), false)];
    while let Some((node, expanded)) = stack.pop() {
        if expanded {
            order.push(node);
            continue;
        }
        if visited.contains_key(&node.id()) || !node.requires_grad() {
            continue;
        }
        visited.insert(node.id(), true);
        stack.push((node.clone(), true));
        if let Some(gf) = &node.0.grad_fn {
            for inp in &gf.inputs {
                if inp.requires_grad() && !visited.contains_key(&inp.id()) {
                    stack.push((inp.clone(), false));
                }
            }
        }
    }

    // Which nodes lie on a path to a requested input.
    let targets: std::collections::HashSet<usize> = wrt.iter().map(Var::id).collect();
    let mut reaches: HashMap<usize, bool> = HashMap::new();
    for node in &order {
        let mut r = targets.contains(&node.id());
        if let Some(gf) = &node.0.grad_fn {
            for inp in &gf.inputs {
                r |= reaches.get(&inp.id()).copied().unwrap_or(false);
            }
        }
        reaches.insert(node.id(), r);
    }

    let mut grads: HashMap<usize, Var> = HashMap::new();
    with_grad_mode(create_graph, || {
        grads.insert(output.id(), Var::constant(Tensor::ones(&output.shape())));
        for node in order.iter().rev() {
            if !reaches.get(&node.id()).copied().unwrap_or(false) {
                continue;
            }
            let Some(gf) = &node.0.grad_fn else { continue };
            let Some(g_out) = grads.get(&node.id()).cloned() else { continue };
            if !targets.contains(&node.id()) {
                grads.remove(&node.id());
            }
            let needs: Vec<bool> = gf
                .inputs
                .iter()
                .map(|i| i.requires_grad() && reaches.get(&i.id()).copied().unwrap_or(false))
                .collect();
            let in_grads = (gf.backward)(&gf.inputs, &g_out, &needs);
            for ((inp, g), need) in gf.inputs.iter().zip(in_grads).zip(&needs) {
                if !need {
                    continue;
                }
                let Some(g) = g else { continue };
                let merged = match grads.remove(&inp.id()) {
                    Some(prev) => add(&prev, &g),
                    None => g,
                };
                grads.insert(inp.id(), merged);
            }
        }
    });

    wrt.iter()
        .map(|w| grads.get(&w.id()).cloned().unwrap_or_else(|| Var::constant(Tensor::zeros(&w.shape()))))
        .collect()
}

#[cfg(test)]
mod tests;
