//! Termination tests and trace recording shared by all solvers.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{ConvergenceTrace, DataBundle, SolverConfig, StopReason, TraceRecord};

pub(crate) struct Monitor {
    norm_sq_total: f64,
    mse_stop: f64,
    delta_stop: f64,
    max_iterations: usize,
    stride: usize,
    start: Instant,
    prev_mse: f64,
    trace: ConvergenceTrace,
}

impl Monitor {
    /// Starts the clock and records the starting point as iteration 0.
    pub fn start(bundle: &DataBundle, config: &SolverConfig, initial_se: f64) -> Result<Self> {
        if bundle.norm_sq_total() == 0.0 {
            return Err(Error::DegenerateBundle);
        }
        let mut monitor = Monitor {
            norm_sq_total: bundle.norm_sq_total(),
            mse_stop: config.mse_stop,
            delta_stop: config.delta_stop,
            max_iterations: config.max_iterations,
            stride: config.trace_stride,
            start: Instant::now(),
            prev_mse: f64::NAN,
            trace: ConvergenceTrace::default(),
        };
        let record = monitor.record_for(0, initial_se);
        monitor.trace.records.push(record);
        if !initial_se.is_finite() {
            return Err(monitor.non_finite(0));
        }
        monitor.prev_mse = record.mse;
        Ok(monitor)
    }

    fn record_for(&self, iteration: usize, se: f64) -> TraceRecord {
        TraceRecord {
            iteration,
            se,
            mse: se / self.norm_sq_total,
            elapsed_seconds: self.start.elapsed().as_secs_f64(),
        }
    }

    fn non_finite(&mut self, iteration: usize) -> Error {
        Error::NonFinite {
            iteration,
            trace: Box::new(std::mem::take(&mut self.trace)),
        }
    }

    /// Feeds the SE after `iteration` (1-based) and returns a stop reason
    /// once a criterion holds. Delta is tested before the MSE threshold, and
    /// both before the iteration cap.
    pub fn observe(&mut self, iteration: usize, se: f64) -> Result<Option<StopReason>> {
        let record = self.record_for(iteration, se);
        if !se.is_finite() {
            self.trace.records.push(record);
            return Err(self.non_finite(iteration));
        }
        let reason = if (record.mse - self.prev_mse).abs() < self.delta_stop {
            Some(StopReason::DeltaThreshold)
        } else if record.mse < self.mse_stop {
            Some(StopReason::MseThreshold)
        } else if iteration >= self.max_iterations {
            Some(StopReason::MaxIterations)
        } else {
            None
        };
        if reason.is_some() || iteration % self.stride == 0 {
            self.trace.records.push(record);
        }
        self.prev_mse = record.mse;
        self.trace.stop_reason = reason;
        Ok(reason)
    }

    /// Abort error for a non-finite intermediate at `iteration`.
    pub fn abort(&mut self, iteration: usize) -> Error {
        self.non_finite(iteration)
    }

    pub fn finish(self) -> ConvergenceTrace {
        self.trace
    }
}
