//! In-memory representation of an ONNX computation graph.
//!
//! [`Graph`] is the common currency of every tool in the chain: the loader
//! produces one, the validator fingerprints one, the partitioner rewrites
//! one, and the executor interprets one. Values are immutable after
//! construction; every operation here is a pure function of its inputs.

pub mod canonical;
mod tensor;

pub use tensor::{ElemType, Tensor, Values};

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::ops::{Registry, ShapeCtx};

/// Attribute value kinds admitted by the supported operator subset.
#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    Int(i64),
    Float(f32),
    Ints(Vec<i64>),
    Str(String),
}

impl AttrValue {
    pub fn kind(&self) -> &'static str {
        match self {
            AttrValue::Int(_) => "int",
            AttrValue::Float(_) => "float",
            AttrValue::Ints(_) => "ints",
            AttrValue::Str(_) => "string",
        }
    }

    /// Deterministic rendering used by canonical listings and diff reports.
    pub fn render(&self) -> String {
        match self {
            AttrValue::Int(i) => i.to_string(),
            AttrValue::Float(f) if f.is_nan() => "nan".to_string(),
            AttrValue::Float(f) => format!("{f:?}"),
            AttrValue::Ints(v) => {
                let inner: Vec<String> = v.iter().map(|i| i.to_string()).collect();
                format!("[{}]", inner.join(","))
            }
            AttrValue::Str(s) => format!("{s:?}"),
        }
    }
}

/// One typed operator node. The `name` is bookkeeping only and never enters
/// architecture equivalence.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub name: String,
    pub op_type: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub attrs: BTreeMap<String, AttrValue>,
}

impl Node {
    pub fn new(
        op_type: impl Into<String>,
        inputs: Vec<String>,
        outputs: Vec<String>,
    ) -> Self {
        Node {
            name: String::new(),
            op_type: op_type.into(),
            inputs,
            outputs,
            attrs: BTreeMap::new(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_attr(mut self, name: impl Into<String>, value: AttrValue) -> Self {
        self.attrs.insert(name.into(), value);
        self
    }

    pub fn int_attr(&self, name: &str, default: i64) -> Result<i64> {
        match self.attrs.get(name) {
            None => Ok(default),
            Some(AttrValue::Int(i)) => Ok(*i),
            Some(other) => Err(Error::unsupported(
                &self.op_type,
                format!("attribute '{name}' must be an int, got {}", other.kind()),
            )),
        }
    }

    pub fn float_attr(&self, name: &str, default: f32) -> Result<f32> {
        match self.attrs.get(name) {
            None => Ok(default),
            Some(AttrValue::Float(f)) => Ok(*f),
            Some(other) => Err(Error::unsupported(
                &self.op_type,
                format!("attribute '{name}' must be a float, got {}", other.kind()),
            )),
        }
    }

    pub fn ints_attr(&self, name: &str, default: &[i64]) -> Result<Vec<i64>> {
        match self.attrs.get(name) {
            None => Ok(default.to_vec()),
            Some(AttrValue::Ints(v)) => Ok(v.clone()),
            Some(other) => Err(Error::unsupported(
                &self.op_type,
                format!("attribute '{name}' must be an int list, got {}", other.kind()),
            )),
        }
    }

    pub fn str_attr(&self, name: &str, default: &str) -> Result<String> {
        match self.attrs.get(name) {
            None => Ok(default.to_string()),
            Some(AttrValue::Str(s)) => Ok(s.clone()),
            Some(other) => Err(Error::unsupported(
                &self.op_type,
                format!("attribute '{name}' must be a string, got {}", other.kind()),
            )),
        }
    }

    /// Display name for diagnostics: the node name when present, else the
    /// op type.
    pub fn label(&self) -> &str {
        if self.name.is_empty() { &self.op_type } else { &self.name }
    }
}

/// Name, element type, and concrete shape of a graph-level input or output.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueInfo {
    pub name: String,
    pub elem: ElemType,
    pub shape: Vec<usize>,
}

impl ValueInfo {
    pub fn new(name: impl Into<String>, elem: ElemType, shape: Vec<usize>) -> Self {
        ValueInfo { name: name.into(), elem, shape }
    }

    pub fn meta(&self) -> TensorMeta {
        TensorMeta { elem: self.elem, shape: self.shape.clone() }
    }
}

/// Element type plus shape, without a value buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorMeta {
    pub elem: ElemType,
    pub shape: Vec<usize>,
}

impl fmt::Display for TensorMeta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.elem, render_shape(&self.shape))
    }
}

pub(crate) fn render_shape(shape: &[usize]) -> String {
    let dims: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
    format!("[{}]", dims.join(","))
}

/// Where a tensor name comes from, in SSA terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorSource {
    GraphInput(usize),
    Initializer,
    /// Produced by node `node` at output port `port`.
    Node { node: usize, port: usize },
}

/// A computation graph over the supported operator subset.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Graph {
    pub nodes: Vec<Node>,
    pub inputs: Vec<ValueInfo>,
    pub outputs: Vec<ValueInfo>,
    pub initializers: BTreeMap<String, Tensor>,
    pub metadata: BTreeMap<String, String>,
    pub opset: i64,
}

impl Graph {
    /// Map every defined tensor name to its single source.
    ///
    /// Fails with `Invariant` if any name has two producers.
    pub fn sources(&self) -> Result<HashMap<&str, TensorSource>> {
        let mut map: HashMap<&str, TensorSource> = HashMap::new();
        for (k, vi) in self.inputs.iter().enumerate() {
            if map.insert(vi.name.as_str(), TensorSource::GraphInput(k)).is_some() {
                return Err(Error::Invariant(format!(
                    "tensor '{}' defined more than once",
                    vi.name
                )));
            }
        }
        for name in self.initializers.keys() {
            if map.insert(name.as_str(), TensorSource::Initializer).is_some() {
                return Err(Error::Invariant(format!(
                    "tensor '{name}' defined more than once"
                )));
            }
        }
        for (i, node) in self.nodes.iter().enumerate() {
            for (port, out) in node.outputs.iter().enumerate() {
                if out.is_empty() {
                    return Err(Error::Invariant(format!(
                        "node '{}' has an empty output name",
                        node.label()
                    )));
                }
                if map.insert(out.as_str(), TensorSource::Node { node: i, port }).is_some() {
                    return Err(Error::Invariant(format!(
                        "tensor '{out}' defined more than once"
                    )));
                }
            }
        }
        Ok(map)
    }

    /// Deterministic topological order over tensor-name dependencies.
    ///
    /// Among simultaneously ready nodes the smallest stored index goes
    /// first, so sorting an already-sorted graph is the identity.
    pub fn topo_sort(&self) -> Result<Vec<usize>> {
        let sources = self.sources()?;
        let mut indegree = vec![0usize; self.nodes.len()];
        let mut consumers: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            for input in &node.inputs {
                if input.is_empty() {
                    continue;
                }
                match sources.get(input.as_str()) {
                    Some(TensorSource::Node { node: p, .. }) => {
                        indegree[i] += 1;
                        consumers[*p].push(i);
                    }
                    Some(_) => {}
                    None => {
                        return Err(Error::Invariant(format!(
                            "node '{}' consumes undefined tensor '{input}'",
                            node.label()
                        )))
                    }
                }
            }
        }

        let mut ready: BinaryHeap<Reverse<usize>> = indegree
            .iter()
            .enumerate()
            .filter(|(_, d)| **d == 0)
            .map(|(i, _)| Reverse(i))
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(Reverse(i)) = ready.pop() {
            order.push(i);
            for &c in &consumers[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(Reverse(c));
                }
            }
        }
        if order.len() != self.nodes.len() {
            return Err(self.cycle_error(&indegree, &sources));
        }
        Ok(order)
    }

    /// Reconstruct one concrete cycle for the error message.
    fn cycle_error(
        &self,
        indegree: &[usize],
        sources: &HashMap<&str, TensorSource>,
    ) -> Error {
        let stuck: HashSet<usize> = indegree
            .iter()
            .enumerate()
            .filter(|(_, d)| **d > 0)
            .map(|(i, _)| i)
            .collect();
        let start = *stuck.iter().min().expect("cycle must involve a node");
        // Walk backwards through stuck predecessors until a node repeats.
        let step = |i: usize| -> (usize, String) {
            for input in &self.nodes[i].inputs {
                if let Some(TensorSource::Node { node: p, .. }) = sources.get(input.as_str()) {
                    if stuck.contains(p) {
                        return (*p, input.clone());
                    }
                }
            }
            unreachable!("stuck node must have a stuck predecessor");
        };
        let mut seen: HashMap<usize, usize> = HashMap::new();
        let mut path: Vec<(usize, String)> = Vec::new();
        let mut cur = start;
        loop {
            if let Some(&at) = seen.get(&cur) {
                let tensors: Vec<String> =
                    path[at..].iter().map(|(_, t)| t.clone()).rev().collect();
                return Error::Cycle { tensors };
            }
            seen.insert(cur, path.len());
            let (prev, tensor) = step(cur);
            path.push((cur, tensor));
            cur = prev;
        }
    }

    /// Check every structural invariant: single static assignment, defined
    /// inputs, acyclicity, resolvable graph outputs, and per-node schema
    /// conformance against the operator registry.
    pub fn validate(&self, registry: &Registry) -> Result<()> {
        let sources = self.sources()?;
        for (name, t) in &self.initializers {
            let expect: usize = t.shape.iter().product();
            if t.numel() != expect {
                return Err(Error::Invariant(format!(
                    "initializer '{name}' buffer length {} does not match shape {}",
                    t.numel(),
                    render_shape(&t.shape)
                )));
            }
        }
        self.topo_sort()?;
        for out in &self.outputs {
            if !sources.contains_key(out.name.as_str()) {
                return Err(Error::Invariant(format!(
                    "graph output '{}' is not produced by any node or input",
                    out.name
                )));
            }
        }
        for node in &self.nodes {
            let kernel = registry.get(&node.op_type)?;
            kernel.validate(node)?;
        }
        Ok(())
    }

    /// Concrete element type and shape for every tensor in the graph.
    ///
    /// Graph inputs and initializers seed the map; node outputs are derived
    /// in topological order through the registry's per-operator rules.
    pub fn infer_shapes(&self, registry: &Registry) -> Result<BTreeMap<String, TensorMeta>> {
        let order = self.topo_sort()?;
        let mut metas: BTreeMap<String, TensorMeta> = BTreeMap::new();
        for vi in &self.inputs {
            metas.insert(vi.name.clone(), vi.meta());
        }
        for (name, t) in &self.initializers {
            metas.insert(name.clone(), t.meta());
        }
        for idx in order {
            let node = &self.nodes[idx];
            let kernel = registry.get(&node.op_type)?;
            let out_metas = {
                let slot_metas: Vec<Option<&TensorMeta>> = node
                    .inputs
                    .iter()
                    .map(|n| if n.is_empty() { None } else { metas.get(n.as_str()) })
                    .collect();
                for (slot, m) in slot_metas.iter().enumerate() {
                    if m.is_none() && !node.inputs[slot].is_empty() {
                        return Err(Error::Invariant(format!(
                            "node '{}' consumes undefined tensor '{}'",
                            node.label(),
                            node.inputs[slot]
                        )));
                    }
                }
                let ctx = ShapeCtx {
                    inputs: slot_metas,
                    input_names: &node.inputs,
                    initializers: &self.initializers,
                };
                kernel.infer(node, &ctx)?
            };
            if out_metas.len() != node.outputs.len() {
                return Err(Error::shape(
                    node.label(),
                    format!(
                        "operator produced {} outputs, node declares {}",
                        out_metas.len(),
                        node.outputs.len()
                    ),
                ));
            }
            for (name, meta) in node.outputs.iter().zip(out_metas) {
                metas.insert(name.clone(), meta);
            }
        }
        Ok(metas)
    }

    /// Indices of nodes consuming `tensor`, in stored order.
    pub fn consumers_of(&self, tensor: &str) -> Vec<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.inputs.iter().any(|i| i == tensor))
            .map(|(i, _)| i)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops;

    fn chain_graph() -> Graph {
        // Conv -> Relu -> Softmax over a 1x1x4x4 input.
        let mut g = Graph {
            inputs: vec![ValueInfo::new("x", ElemType::F32, vec![1, 1, 4, 4])],
            outputs: vec![ValueInfo::new("p", ElemType::F32, vec![1, 1, 4, 4])],
            opset: 13,
            ..Default::default()
        };
        g.initializers.insert(
            "w".into(),
            Tensor::from_f32(vec![1, 1, 3, 3], vec![0.0; 9]).unwrap(),
        );
        g.nodes.push(
            Node::new("Conv", vec!["x".into(), "w".into()], vec!["c".into()])
                .with_name("conv")
                .with_attr("pads", AttrValue::Ints(vec![1, 1, 1, 1])),
        );
        g.nodes.push(Node::new("Relu", vec!["c".into()], vec!["r".into()]).with_name("relu"));
        g.nodes.push(
            Node::new("Softmax", vec!["r".into()], vec!["p".into()]).with_name("softmax"),
        );
        g
    }

    #[test]
    fn topo_sort_chain_is_identity() {
        let g = chain_graph();
        assert_eq!(g.topo_sort().unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn topo_sort_empty_graph() {
        let g = Graph { opset: 13, ..Default::default() };
        assert_eq!(g.topo_sort().unwrap(), Vec::<usize>::new());
    }

    #[test]
    fn topo_sort_reports_cycle_tensors() {
        let mut g = Graph { opset: 13, ..Default::default() };
        g.nodes.push(Node::new("Relu", vec!["b".into()], vec!["a".into()]));
        g.nodes.push(Node::new("Relu", vec!["a".into()], vec!["b".into()]));
        match g.topo_sort() {
            Err(Error::Cycle { tensors }) => {
                let mut t = tensors.clone();
                t.sort();
                assert_eq!(t, vec!["a".to_string(), "b".to_string()]);
            }
            other => panic!("expected cycle error, got {other:?}"),
        }
    }

    #[test]
    fn topo_sort_is_stable_on_sorted_graphs() {
        let g = chain_graph();
        let order = g.topo_sort().unwrap();
        let mut sorted = g.clone();
        sorted.nodes = order.iter().map(|&i| g.nodes[i].clone()).collect();
        let again = sorted.topo_sort().unwrap();
        assert_eq!(again, (0..g.nodes.len()).collect::<Vec<_>>());
    }

    #[test]
    fn duplicate_producer_rejected() {
        let mut g = chain_graph();
        g.nodes.push(Node::new("Relu", vec!["c".into()], vec!["r".into()]));
        assert!(matches!(g.sources(), Err(Error::Invariant(_))));
    }

    #[test]
    fn infer_shapes_conv_arithmetic() {
        // AlexNet conv1: 224x224 input, 11x11 kernel, stride 4, pad 2.
        let mut g = Graph {
            inputs: vec![ValueInfo::new("x", ElemType::F32, vec![1, 3, 224, 224])],
            outputs: vec![ValueInfo::new("y", ElemType::F32, vec![1, 96, 55, 55])],
            opset: 13,
            ..Default::default()
        };
        g.initializers.insert(
            "w".into(),
            Tensor::from_f32(vec![96, 3, 11, 11], vec![0.0; 96 * 3 * 11 * 11]).unwrap(),
        );
        g.nodes.push(
            Node::new("Conv", vec!["x".into(), "w".into()], vec!["y".into()])
                .with_attr("strides", AttrValue::Ints(vec![4, 4]))
                .with_attr("pads", AttrValue::Ints(vec![2, 2, 2, 2])),
        );
        let metas = g.infer_shapes(ops::registry()).unwrap();
        assert_eq!(metas["y"].shape, vec![1, 96, 55, 55]);
    }

    #[test]
    fn infer_shapes_relu_preserves() {
        let g = chain_graph();
        let metas = g.infer_shapes(ops::registry()).unwrap();
        assert_eq!(metas["r"].shape, vec![1, 1, 4, 4]);
        assert_eq!(metas["p"].shape, vec![1, 1, 4, 4]);
    }

    #[test]
    fn infer_shapes_gemm() {
        let mut g = Graph {
            inputs: vec![ValueInfo::new("a", ElemType::F32, vec![1, 4096])],
            outputs: vec![ValueInfo::new("y", ElemType::F32, vec![1, 1000])],
            opset: 13,
            ..Default::default()
        };
        g.initializers.insert(
            "b".into(),
            Tensor::from_f32(vec![4096, 1000], vec![0.0; 4096 * 1000]).unwrap(),
        );
        g.nodes.push(Node::new("Gemm", vec!["a".into(), "b".into()], vec!["y".into()]));
        let metas = g.infer_shapes(ops::registry()).unwrap();
        assert_eq!(metas["y"].shape, vec![1, 1000]);
    }

    #[test]
    fn unsupported_op_rejected() {
        let mut g = Graph { opset: 13, ..Default::default() };
        g.inputs.push(ValueInfo::new("x", ElemType::F32, vec![1]));
        g.nodes.push(Node::new("If", vec!["x".into()], vec!["y".into()]));
        g.outputs.push(ValueInfo::new("y", ElemType::F32, vec![1]));
        match g.validate(ops::registry()) {
            Err(Error::UnsupportedOp { op, .. }) => assert_eq!(op, "If"),
            other => panic!("expected UnsupportedOp, got {other:?}"),
        }
    }
}
