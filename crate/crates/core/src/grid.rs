// Copyright 2026 The spinboson-rwa Contributors
// SPDX-License-Identifier: Apache-2.0

//! Uniform time grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `t_i = i·Δt`, `i = 0..=steps`, `Δt = t_max/steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_max: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, steps: usize) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::invalid("time.t_max", format!("must be > 0, got {t_max}")));
        }
        if steps < 2 {
            return Err(Error::invalid("time.steps", format!("must be >= 2, got {steps}")));
        }
        Ok(TimeGrid { t_max, steps })
    }

    /// Grid with spacing `dt` (rounded so that `t_max` is hit exactly).
    pub fn with_spacing(t_max: f64, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("time.dt", format!("must be > 0, got {dt}")));
        }
        TimeGrid::new(t_max, ((t_max / dt).round() as usize).max(2))
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.steps as f64
    }

    /// Number of grid points (`steps + 1`).
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.steps {
            self.t_max
        } else {
            i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }
}
