use kronsketch::sketch::{LinearSketch, SketchSpec, Sketcher};
use kronsketch::Result;

use crate::config::Precision;

/// A sketcher in the requested precision behind the f64 interface.
pub enum AnySketch {
    F32(Sketcher<f32>),
    F64(Sketcher<f64>),
}

impl AnySketch {
    pub fn build(spec: &SketchSpec, precision: Precision) -> Result<Self> {
        Ok(match precision {
            Precision::F32 => AnySketch::F32(spec.build()?),
            Precision::F64 => AnySketch::F64(spec.build()?),
        })
    }
}

fn narrow(x: &[f64]) -> Vec<f32> {
    x.iter().map(|&v| v as f32).collect()
}

fn widen(x: Vec<f32>) -> Vec<f64> {
    x.into_iter().map(f64::from).collect()
}

impl LinearSketch for AnySketch {
    fn input_dim(&self) -> usize {
        match self {
            AnySketch::F32(s) => s.input_dim(),
            AnySketch::F64(s) => s.input_dim(),
        }
    }

    fn output_dim(&self) -> usize {
        match self {
            AnySketch::F32(s) => s.output_dim(),
            AnySketch::F64(s) => s.output_dim(),
        }
    }

    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            AnySketch::F32(s) => s.forward(&narrow(x)).map(widen),
            AnySketch::F64(s) => s.forward(x),
        }
    }

    fn transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        match self {
            AnySketch::F32(s) => s.transpose(&narrow(v)).map(widen),
            AnySketch::F64(s) => s.transpose(v),
        }
    }

    fn describe(&self) -> String {
        match self {
            AnySketch::F32(s) => format!("{}/f32", s.spec().algorithm),
            AnySketch::F64(s) => format!("{}/f64", s.spec().algorithm),
        }
    }
}
