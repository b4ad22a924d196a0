use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldClass;

/// Tensor basis of tilt fields: hat functions on a uniform partition of
/// [0,T] times sines (DirichletZero) or {1, cos(kπu)} (Free).
///
/// With one time node the time factor is the constant 1. Bases are nested
/// when the space modes grow and the number of time intervals doubles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TiltBasis {
    pub time_nodes: usize,
    pub space_modes: usize,
    pub class: FieldClass,
}

impl TiltBasis {
    pub fn new(time_nodes: usize, space_modes: usize, class: FieldClass) -> Result<Self> {
        if time_nodes == 0 || space_modes == 0 {
            return Err(Error::Invalid("tilt basis needs at least one time node and one mode".into()));
        }
        Ok(TiltBasis {
            time_nodes,
            space_modes,
            class,
        })
    }

    /// Number of space functions, including the constant of the Free class.
    pub fn space_len(&self) -> usize {
        match self.class {
            FieldClass::DirichletZero => self.space_modes,
            FieldClass::Free => self.space_modes + 1,
        }
    }

    pub fn len(&self) -> usize {
        self.time_nodes * self.space_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Element j is time_hat(j / space_len) · space(j % space_len).
    pub fn split(&self, j: usize) -> (usize, usize) {
        (j / self.space_len(), j % self.space_len())
    }

    /// Whether the space factor has zero gradient (the Free constant).
    pub fn is_flat(&self, p: usize) -> bool {
        self.class == FieldClass::Free && p == 0
    }

    pub fn time_hat(&self, a: usize, t: f64, horizon: f64) -> f64 {
        if self.time_nodes == 1 || horizon == 0.0 {
            return 1.0;
        }
        let step = horizon / (self.time_nodes - 1) as f64;
        (1.0 - ((t - a as f64 * step) / step).abs()).max(0.0)
    }

    fn freq(&self, p: usize) -> f64 {
        match self.class {
            FieldClass::DirichletZero => (p + 1) as f64 * PI,
            FieldClass::Free => p as f64 * PI,
        }
    }

    /// Space factor and its first two derivatives at u.
    pub fn space(&self, p: usize, u: f64) -> [f64; 3] {
        let w = self.freq(p);
        match self.class {
            FieldClass::DirichletZero => {
                let (s, c) = (w * u).sin_cos();
                [s, w * c, -w * w * s]
            }
            FieldClass::Free => {
                let (s, c) = (w * u).sin_cos();
                [c, -w * s, -w * w * c]
            }
        }
    }
}
