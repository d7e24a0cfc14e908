//! Dense tensors in row-major order.

use std::fmt;

use crate::error::{Error, Result};
use crate::ir::TensorMeta;

/// Element types in scope. `i64` exists to carry shape/index operands
/// (Reshape targets, Slice parameters), `f32` carries everything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElemType {
    F32,
    I64,
}

impl ElemType {
    pub fn as_str(self) -> &'static str {
        match self {
            ElemType::F32 => "f32",
            ElemType::I64 => "i64",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(ElemType::F32),
            "i64" => Ok(ElemType::I64),
            other => Err(Error::Param(format!("unknown element type '{other}'"))),
        }
    }
}

impl fmt::Display for ElemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Flat value buffer, row-major.
#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    F32(Vec<f32>),
    I64(Vec<i64>),
}

impl Values {
    pub fn len(&self) -> usize {
        match self {
            Values::F32(v) => v.len(),
            Values::I64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn elem(&self) -> ElemType {
        match self {
            Values::F32(_) => ElemType::F32,
            Values::I64(_) => ElemType::I64,
        }
    }
}

/// A dense tensor. The buffer length always equals the product of the
/// shape dimensions; construct through [`Tensor::new`] or the typed
/// helpers to keep that invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub values: Values,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, values: Values) -> Result<Self> {
        let expect: usize = shape.iter().product();
        if values.len() != expect {
            return Err(Error::Invariant(format!(
                "tensor buffer length {} does not match shape product {expect}",
                values.len()
            )));
        }
        Ok(Tensor { shape, values })
    }

    pub fn from_f32(shape: Vec<usize>, values: Vec<f32>) -> Result<Self> {
        Tensor::new(shape, Values::F32(values))
    }

    pub fn from_i64(shape: Vec<usize>, values: Vec<i64>) -> Result<Self> {
        Tensor::new(shape, Values::I64(values))
    }

    pub fn zeros_f32(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor { shape, values: Values::F32(vec![0.0; n]) }
    }

    pub fn elem(&self) -> ElemType {
        self.values.elem()
    }

    pub fn numel(&self) -> usize {
        self.values.len()
    }

    pub fn meta(&self) -> TensorMeta {
        TensorMeta { elem: self.elem(), shape: self.shape.clone() }
    }

    pub fn f32s(&self) -> Result<&[f32]> {
        match &self.values {
            Values::F32(v) => Ok(v),
            Values::I64(_) => Err(Error::Param("expected an f32 tensor".into())),
        }
    }

    pub fn i64s(&self) -> Result<&[i64]> {
        match &self.values {
            Values::I64(v) => Ok(v),
            Values::F32(_) => Err(Error::Param("expected an i64 tensor".into())),
        }
    }

    /// Slice `[start, end)` along dimension 0. Used for convolution
    /// channel splits, where dimension 0 is the output-channel axis.
    pub fn slice_dim0(&self, start: usize, end: usize) -> Result<Tensor> {
        if self.shape.is_empty() {
            return Err(Error::Param("cannot slice a scalar tensor".into()));
        }
        let rows = self.shape[0];
        if start >= end || end > rows {
            return Err(Error::Param(format!(
                "slice [{start},{end}) out of bounds for dimension of size {rows}"
            )));
        }
        let row: usize = self.shape[1..].iter().product();
        let mut shape = self.shape.clone();
        shape[0] = end - start;
        let values = match &self.values {
            Values::F32(v) => Values::F32(v[start * row..end * row].to_vec()),
            Values::I64(v) => Values::I64(v[start * row..end * row].to_vec()),
        };
        Tensor::new(shape, values)
    }

    /// Concatenate along dimension 0. All parts must agree on element type
    /// and trailing dimensions.
    pub fn concat_dim0(parts: &[&Tensor]) -> Result<Tensor> {
        let first = parts.first().ok_or_else(|| {
            Error::Param("concat_dim0 requires at least one tensor".into())
        })?;
        if first.shape.is_empty() {
            return Err(Error::Param("cannot concatenate scalar tensors".into()));
        }
        let tail = &first.shape[1..];
        let mut rows = 0usize;
        for p in parts {
            if p.elem() != first.elem() || p.shape.len() != first.shape.len() || &p.shape[1..] != tail
            {
                return Err(Error::Param(
                    "concat_dim0 operands disagree on type or trailing shape".into(),
                ));
            }
            rows += p.shape[0];
        }
        let mut shape = first.shape.clone();
        shape[0] = rows;
        let values = match first.elem() {
            ElemType::F32 => {
                let mut out = Vec::with_capacity(shape.iter().product());
                for p in parts {
                    out.extend_from_slice(p.f32s()?);
                }
                Values::F32(out)
            }
            ElemType::I64 => {
                let mut out = Vec::with_capacity(shape.iter().product());
                for p in parts {
                    out.extend_from_slice(p.i64s()?);
                }
                Values::I64(out)
            }
        };
        Tensor::new(shape, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_invariant_enforced() {
        assert!(Tensor::from_f32(vec![2, 2], vec![1.0, 2.0, 3.0]).is_err());
        assert!(Tensor::from_f32(vec![2, 2], vec![1.0; 4]).is_ok());
    }

    #[test]
    fn slice_and_concat_restore_rows() {
        let t = Tensor::from_f32(vec![4, 2], (0..8).map(|i| i as f32).collect()).unwrap();
        let mid = t.slice_dim0(1, 3).unwrap();
        assert_eq!(mid.shape, vec![2, 2]);
        assert_eq!(mid.f32s().unwrap(), &[2.0, 3.0, 4.0, 5.0]);
        let lo = t.slice_dim0(0, 1).unwrap();
        let hi = t.slice_dim0(3, 4).unwrap();
        let back = Tensor::concat_dim0(&[&lo, &mid, &hi]).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn scalar_tensor_roundtrips_meta() {
        let t = Tensor::from_f32(vec![], vec![7.0]).unwrap();
        assert_eq!(t.numel(), 1);
        assert_eq!(t.meta().shape, Vec::<usize>::new());
    }
}
