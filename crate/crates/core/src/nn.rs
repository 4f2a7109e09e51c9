//! Dense pre-activation kernel: `z = b + sum(a_i * w_i)` for every neuron of a
//! single layer. No activation function is applied.
//!
//! All arithmetic is `f32` and the accumulation order is fixed (bias first,
//! then ascending input index), so any evaluation that assigns whole neurons
//! to workers reproduces the serial result bit for bit.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One dense layer, weights stored row-major with one row per neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec {
    input_count: usize,
    neuron_count: usize,
    weights: Vec<f32>,
    biases: Vec<f32>,
}

impl LayerSpec {
    pub fn new(
        input_count: usize,
        neuron_count: usize,
        weights: Vec<f32>,
        biases: Vec<f32>,
    ) -> Result<Self> {
        if input_count == 0 {
            return Err(Error::ZeroCount {
                what: "input_count",
            });
        }
        if neuron_count == 0 {
            return Err(Error::ZeroCount {
                what: "neuron_count",
            });
        }
        if weights.len() != input_count * neuron_count {
            return Err(Error::DimensionMismatch {
                what: "weights",
                expected: input_count * neuron_count,
                actual: weights.len(),
            });
        }
        if biases.len() != neuron_count {
            return Err(Error::DimensionMismatch {
                what: "biases",
                expected: neuron_count,
                actual: biases.len(),
            });
        }
        check_finite("weights", &weights)?;
        check_finite("biases", &biases)?;
        Ok(Self {
            input_count,
            neuron_count,
            weights,
            biases,
        })
    }

    /// Builds a layer from explicit rows. Every row must have the same length.
    pub fn from_rows(rows: &[Vec<f32>], biases: Vec<f32>) -> Result<Self> {
        let input_count = rows.first().map_or(0, Vec::len);
        let mut weights = Vec::with_capacity(input_count * rows.len());
        for row in rows {
            if row.len() != input_count {
                return Err(Error::DimensionMismatch {
                    what: "weight row",
                    expected: input_count,
                    actual: row.len(),
                });
            }
            weights.extend_from_slice(row);
        }
        Self::new(input_count, rows.len(), weights, biases)
    }

    pub fn input_count(&self) -> usize {
        self.input_count
    }

    pub fn neuron_count(&self) -> usize {
        self.neuron_count
    }

    /// Multiply-accumulate count of one forward pass.
    pub fn operations(&self) -> u64 {
        (self.input_count * self.neuron_count) as u64
    }

    pub fn weight_row(&self, neuron: usize) -> &[f32] {
        let start = neuron * self.input_count;
        &self.weights[start..start + self.input_count]
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn biases(&self) -> &[f32] {
        &self.biases
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputVector(Vec<f32>);

impl InputVector {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        check_finite("inputs", &values)?;
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn check_finite(what: &'static str, values: &[f32]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { what, index }),
        None => Ok(()),
    }
}

/// Single-neuron pre-activation with full argument validation.
pub fn preactivation(inputs: &[f32], weight_row: &[f32], bias: f32) -> Result<f32> {
    if inputs.len() != weight_row.len() {
        return Err(Error::DimensionMismatch {
            what: "weight row",
            expected: inputs.len(),
            actual: weight_row.len(),
        });
    }
    if inputs.is_empty() {
        return Err(Error::ZeroCount { what: "inputs" });
    }
    check_finite("inputs", inputs)?;
    check_finite("weight row", weight_row)?;
    if !bias.is_finite() {
        return Err(Error::NonFinite {
            what: "bias",
            index: 0,
        });
    }
    Ok(dot_with_bias(inputs, weight_row, bias))
}

#[inline]
pub(crate) fn dot_with_bias(inputs: &[f32], weight_row: &[f32], bias: f32) -> f32 {
    let mut z = bias;
    for (a, w) in inputs.iter().zip(weight_row) {
        z += a * w;
    }
    z
}

pub(crate) fn check_inputs(layer: &LayerSpec, inputs: &InputVector) -> Result<()> {
    if inputs.len() != layer.input_count {
        return Err(Error::DimensionMismatch {
            what: "inputs",
            expected: layer.input_count,
            actual: inputs.len(),
        });
    }
    Ok(())
}

/// Evaluates neurons `first..first + out.len()` into `out`.
///
/// Callers have already validated dimensions.
#[inline]
pub(crate) fn forward_range(layer: &LayerSpec, inputs: &[f32], first: usize, out: &mut [f32]) {
    for (offset, slot) in out.iter_mut().enumerate() {
        let k = first + offset;
        *slot = dot_with_bias(inputs, layer.weight_row(k), layer.biases[k]);
    }
}

pub fn layer_forward_serial(layer: &LayerSpec, inputs: &InputVector) -> Result<Vec<f32>> {
    let mut out = vec![0.0; layer.neuron_count];
    layer_forward_serial_into(layer, inputs, &mut out)?;
    Ok(out)
}

/// Allocation-free variant used inside timed regions.
pub fn layer_forward_serial_into(
    layer: &LayerSpec,
    inputs: &InputVector,
    out: &mut [f32],
) -> Result<()> {
    check_inputs(layer, inputs)?;
    if out.len() != layer.neuron_count {
        return Err(Error::DimensionMismatch {
            what: "output buffer",
            expected: layer.neuron_count,
            actual: out.len(),
        });
    }
    forward_range(layer, inputs.values(), 0, out);
    Ok(())
}

/// Maps 24 random bits onto `[-1, 1)`. Every step is exact in `f32`, so the
/// value depends only on the generator stream.
fn unit_interval(rng: &mut ChaCha8Rng) -> f32 {
    let bits = rng.next_u32() >> 8;
    let u = bits as f32 * (1.0 / (1u32 << 24) as f32);
    2.0 * u - 1.0
}

/// Deterministic random layer: ChaCha8 seeded with `seed`, weights drawn row by
/// row, then biases, each uniform on `[-1, 1)`.
pub fn make_random_layer(input_count: usize, neuron_count: usize, seed: u64) -> Result<LayerSpec> {
    if input_count == 0 {
        return Err(Error::ZeroCount {
            what: "input_count",
        });
    }
    if neuron_count == 0 {
        return Err(Error::ZeroCount {
            what: "neuron_count",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = (0..input_count * neuron_count)
        .map(|_| unit_interval(&mut rng))
        .collect();
    let biases = (0..neuron_count).map(|_| unit_interval(&mut rng)).collect();
    LayerSpec::new(input_count, neuron_count, weights, biases)
}

/// Deterministic random input vector, uniform on `[-1, 1)`.
pub fn make_random_inputs(len: usize, seed: u64) -> InputVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    InputVector((0..len).map(|_| unit_interval(&mut rng)).collect())
}
