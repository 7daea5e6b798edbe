//! JSON interchange for kernels.

use serde::{Deserialize, Serialize};

use crate::error::{ChaosError, Result};
use crate::kernel::{Grid, StepKernel};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryJson {
    pub idx: Vec<usize>,
    pub val: f64,
}

/// `{ "t_max", "cells", "order", "entries": [{ "idx", "val" }] }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelJson {
    pub t_max: f64,
    pub cells: usize,
    pub order: usize,
    pub entries: Vec<EntryJson>,
}

fn to_scalar<S: Scalar>(x: f64, what: &str) -> Result<S> {
    if !x.is_finite() {
        return Err(ChaosError::Parse(format!("{what} must be finite, got {x}")));
    }
    S::from_f64(x).ok_or_else(|| ChaosError::Parse(format!("{what} {x} not representable")))
}

impl KernelJson {
    pub fn from_kernel<S: Scalar>(k: &StepKernel<S>) -> Self {
        KernelJson {
            t_max: k.grid().t_max().to_f64_lossy(),
            cells: k.grid().cells(),
            order: k.order(),
            entries: k
                .entries()
                .into_iter()
                .map(|(idx, v)| EntryJson {
                    idx,
                    val: v.to_f64_lossy(),
                })
                .collect(),
        }
    }

    pub fn to_kernel<S: Scalar>(&self) -> Result<StepKernel<S>> {
        let grid = Grid::new(to_scalar(self.t_max, "t_max")?, self.cells)?;
        let entries = self
            .entries
            .iter()
            .map(|e| Ok((e.idx.clone(), to_scalar(e.val, "entry value")?)))
            .collect::<Result<Vec<_>>>()?;
        StepKernel::from_entries(grid, self.order, entries)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl<S: Scalar> StepKernel<S> {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&KernelJson::from_kernel(self)).expect("kernel JSON is serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        KernelJson::parse(text)?.to_kernel()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_lossless() {
        let g = Grid::new(0.1 + 0.2, 7).unwrap();
        let k = StepKernel::from_entries(
            g,
            2,
            [(vec![0, 6], 1.0 / 3.0), (vec![3, 3], -2.0e-300), (vec![6, 1], 123456.789)],
        )
        .unwrap();
        let back: StepKernel<f64> = StepKernel::from_json(&k.to_json()).unwrap();
        assert_eq!(back, k);
    }

    #[test]
    fn scalar_kernel_round_trip() {
        let k = StepKernel::scalar(Grid::new(1.0, 1).unwrap(), 5.0);
        let text = k.to_json();
        assert_eq!(text, r#"{"t_max":1.0,"cells":1,"order":0,"entries":[{"idx":[],"val":5.0}]}"#);
        assert_eq!(StepKernel::<f64>::from_json(&text).unwrap(), k);
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(StepKernel::<f64>::from_json("{").is_err());
        assert!(StepKernel::<f64>::from_json(
            r#"{"t_max":1,"cells":2,"order":1,"entries":[{"idx":[2],"val":1}]}"#
        )
        .is_err());
        assert!(StepKernel::<f64>::from_json(r#"{"t_max":0,"cells":2,"order":1,"entries":[]}"#)
            .is_err());
    }
}
