//! Neuron-range partitioning and concurrent layer evaluation.
//!
//! A layer's neurons are cut into contiguous ranges, one per worker. Worker `k`
//! evaluates range `k` on its own thread (pinned to logical core `k` when the
//! platform allows it) and the caller blocks until every worker is done.
//! Because each neuron is computed start to finish by a single worker with the
//! serial accumulation order, the output is bitwise identical to
//! [`layer_forward_serial`](crate::nn::layer_forward_serial).
//!
//! With the `parallel` feature disabled, [`ParallelExecutor`] keeps the same
//! contract but walks the ranges in order on the calling thread.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::nn::{check_inputs, forward_range, InputVector, LayerSpec};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionPlan {
    total_neurons: usize,
    ranges: Vec<Range<usize>>,
}

impl PartitionPlan {
    pub fn total_neurons(&self) -> usize {
        self.total_neurons
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    pub fn worker_count(&self) -> usize {
        self.ranges.len()
    }
}

/// Splits `neuron_count` neurons over `worker_count` workers. Sizes differ by
/// at most one; the lowest-indexed workers take the remainder.
pub fn partition(neuron_count: usize, worker_count: usize) -> Result<PartitionPlan> {
    if worker_count == 0 || worker_count > neuron_count {
        return Err(Error::InvalidWorkerCount {
            workers: worker_count,
            neurons: neuron_count,
        });
    }
    let base = neuron_count / worker_count;
    let extra = neuron_count % worker_count;
    let mut start = 0;
    let ranges = (0..worker_count)
        .map(|k| {
            let len = base + usize::from(k < extra);
            let range = start..start + len;
            start += len;
            range
        })
        .collect();
    Ok(PartitionPlan {
        total_neurons: neuron_count,
        ranges,
    })
}

fn check_plan(layer: &LayerSpec, plan: &PartitionPlan) -> Result<()> {
    if plan.total_neurons != layer.neuron_count() {
        return Err(Error::PlanMismatch {
            plan: plan.total_neurons,
            layer: layer.neuron_count(),
        });
    }
    Ok(())
}

/// Splits `out` into one mutable chunk per plan range.
fn split_by_plan<'a>(mut out: &'a mut [f32], plan: &PartitionPlan) -> Vec<&'a mut [f32]> {
    let mut chunks = Vec::with_capacity(plan.ranges.len());
    for range in &plan.ranges {
        let (head, tail) = std::mem::take(&mut out).split_at_mut(range.len());
        chunks.push(head);
        out = tail;
    }
    chunks
}

/// A fixed set of workers that evaluates partitioned layers.
///
/// Construct once outside any timed region; [`forward_into`](Self::forward_into)
/// then dispatches exactly one task per worker per call.
pub struct ParallelExecutor {
    worker_count: usize,
    pinned: bool,
    #[cfg(feature = "parallel")]
    pool: rayon::ThreadPool,
}

impl std::fmt::Debug for ParallelExecutor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParallelExecutor")
            .field("worker_count", &self.worker_count)
            .field("pinned", &self.pinned)
            .finish()
    }
}

impl ParallelExecutor {
    /// Starts `worker_count` workers and tries to pin worker `k` to logical
    /// core `k`. Refused pinning is not an error; see [`pinned`](Self::pinned).
    #[cfg(feature = "parallel")]
    pub fn new(worker_count: usize) -> Result<Self> {
        if worker_count == 0 {
            return Err(Error::ZeroCount {
                what: "worker_count",
            });
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(worker_count)
            .thread_name(|k| format!("ffbench-worker-{k}"))
            .build()
            .map_err(|e| Error::WorkerSpawn(e.to_string()))?;
        let pinned = pool
            .broadcast(|ctx| pin_current_thread(ctx.index()))
            .into_iter()
            .all(|ok| ok);
        Ok(Self {
            worker_count,
            pinned,
            pool,
        })
    }

    #[cfg(not(feature = "parallel"))]
    pub fn new(worker_count: usize) -> Result<Self> {
        if worker_count == 0 {
            return Err(Error::ZeroCount {
                what: "worker_count",
            });
        }
        Ok(Self {
            worker_count,
            pinned: false,
        })
    }

    pub fn worker_count(&self) -> usize {
        self.worker_count
    }

    /// Whether every worker was successfully bound to its core.
    pub fn pinned(&self) -> bool {
        self.pinned
    }

    pub fn forward(
        &self,
        layer: &LayerSpec,
        inputs: &InputVector,
        plan: &PartitionPlan,
    ) -> Result<Vec<f32>> {
        let mut out = vec![0.0; layer.neuron_count()];
        self.forward_into(layer, inputs, plan, &mut out)?;
        Ok(out)
    }

    pub fn forward_into(
        &self,
        layer: &LayerSpec,
        inputs: &InputVector,
        plan: &PartitionPlan,
        out: &mut [f32],
    ) -> Result<()> {
        check_inputs(layer, inputs)?;
        check_plan(layer, plan)?;
        if plan.worker_count() != self.worker_count {
            return Err(Error::InvalidConfig(format!(
                "plan has {} ranges but the executor runs {} workers",
                plan.worker_count(),
                self.worker_count
            )));
        }
        if out.len() != layer.neuron_count() {
            return Err(Error::DimensionMismatch {
                what: "output buffer",
                expected: layer.neuron_count(),
                actual: out.len(),
            });
        }
        self.run(layer, inputs.values(), plan, out);
        Ok(())
    }

    #[cfg(feature = "parallel")]
    fn run(&self, layer: &LayerSpec, inputs: &[f32], plan: &PartitionPlan, out: &mut [f32]) {
        use std::sync::Mutex;

        if self.worker_count == 1 {
            forward_range(layer, inputs, 0, out);
            return;
        }
        // One uncontended lock per chunk: broadcast closures are `Fn`, and
        // worker k is the only one that ever touches chunk k.
        let chunks: Vec<Mutex<&mut [f32]>> = split_by_plan(out, plan)
            .into_iter()
            .map(Mutex::new)
            .collect();
        self.pool.broadcast(|ctx| {
            let k = ctx.index();
            let mut chunk = chunks[k].lock().unwrap_or_else(|e| e.into_inner());
            forward_range(layer, inputs, plan.ranges[k].start, &mut chunk);
        });
    }

    #[cfg(not(feature = "parallel"))]
    fn run(&self, layer: &LayerSpec, inputs: &[f32], plan: &PartitionPlan, out: &mut [f32]) {
        for (range, chunk) in plan.ranges.iter().zip(split_by_plan(out, plan)) {
            forward_range(layer, inputs, range.start, chunk);
        }
    }
}

#[cfg(feature = "parallel")]
fn pin_current_thread(core: usize) -> bool {
    core_affinity::get_core_ids()
        .and_then(|ids| ids.get(core).copied())
        .is_some_and(core_affinity::set_for_current)
}

/// One-shot convenience: starts an executor sized to `plan`, runs it once,
/// and tears it down. Benchmarks should hold a [`ParallelExecutor`] instead.
pub fn layer_forward_parallel(
    layer: &LayerSpec,
    inputs: &InputVector,
    plan: &PartitionPlan,
) -> Result<Vec<f32>> {
    check_inputs(layer, inputs)?;
    check_plan(layer, plan)?;
    ParallelExecutor::new(plan.worker_count())?.forward(layer, inputs, plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{layer_forward_serial, make_random_inputs, make_random_layer};

    fn spans(plan: &PartitionPlan) -> Vec<(usize, usize)> {
        plan.ranges().iter().map(|r| (r.start, r.end)).collect()
    }

    #[test]
    fn two_workers_split_twenty_neurons_in_half() {
        assert_eq!(spans(&partition(20, 2).unwrap()), vec![(0, 10), (10, 20)]);
    }

    #[test]
    fn remainder_goes_to_low_workers() {
        assert_eq!(spans(&partition(21, 2).unwrap()), vec![(0, 11), (11, 21)]);
        assert_eq!(
            spans(&partition(10, 4).unwrap()),
            vec![(0, 3), (3, 6), (6, 8), (8, 10)]
        );
        assert_eq!(spans(&partition(7, 1).unwrap()), vec![(0, 7)]);
    }

    #[test]
    fn invalid_worker_counts() {
        assert_eq!(
            partition(5, 0),
            Err(Error::InvalidWorkerCount {
                workers: 0,
                neurons: 5
            })
        );
        assert!(partition(5, 6).is_err());
    }

    #[test]
    fn matches_serial_bitwise() {
        let layer = make_random_layer(50, 20, 42).unwrap();
        let x = make_random_inputs(50, 43);
        let serial = layer_forward_serial(&layer, &x).unwrap();
        for workers in [1, 2] {
            let plan = partition(20, workers).unwrap();
            assert_eq!(layer_forward_parallel(&layer, &x, &plan).unwrap(), serial);
        }

        let layer = make_random_layer(50, 200, 42).unwrap();
        let serial = layer_forward_serial(&layer, &x).unwrap();
        for workers in [2, 3, 4] {
            let plan = partition(200, workers).unwrap();
            let out = layer_forward_parallel(&layer, &x, &plan).unwrap();
            assert!(out
                .iter()
                .zip(&serial)
                .all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn rejects_mismatched_plan() {
        let layer = make_random_layer(4, 6, 1).unwrap();
        let x = make_random_inputs(4, 1);
        let plan = partition(5, 2).unwrap();
        assert_eq!(
            layer_forward_parallel(&layer, &x, &plan),
            Err(Error::PlanMismatch { plan: 5, layer: 6 })
        );

        let exec = ParallelExecutor::new(3).unwrap();
        let plan = partition(6, 2).unwrap();
        assert!(matches!(
            exec.forward(&layer, &x, &plan),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn executor_is_reusable() {
        let exec = ParallelExecutor::new(3).unwrap();
        for seed in 0..20 {
            let layer = make_random_layer(13, 7 + seed as usize, seed).unwrap();
            let x = make_random_inputs(13, seed + 100);
            let plan = partition(layer.neuron_count(), 3).unwrap();
            assert_eq!(
                exec.forward(&layer, &x, &plan).unwrap(),
                layer_forward_serial(&layer, &x).unwrap()
            );
        }
    }
}
