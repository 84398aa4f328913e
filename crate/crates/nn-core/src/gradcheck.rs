//! Finite-difference validation of the backward pass.
//!
//! The checker rebuilds the graph from scratch for every perturbed
//! evaluation, so it exercises exactly the same code path as training.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::graph::{Graph, NodeId};
use crate::tensor::Tensor;
use crate::NnError;

/// The coordinate with the largest relative error in a [`grad_check`] run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstCoordinate {
    /// Index of the parameter tensor in the `params` slice.
    pub param: usize,
    /// Flat coordinate within that tensor.
    pub coord: usize,
    /// Gradient from the backward pass.
    pub analytic: f64,
    /// Central-difference estimate.
    pub numeric: f64,
    /// `|analytic − numeric| / (|analytic| + |numeric| + 1e-12)`.
    pub rel_error: f64,
}

/// Outcome of a [`grad_check`] run.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Largest relative error over all checked coordinates.
    pub max_rel_error: f64,
    /// Number of coordinates compared.
    pub coords_checked: usize,
    /// The coordinate realizing `max_rel_error`, if any were checked.
    pub worst: Option<WorstCoordinate>,
    /// Whether `max_rel_error` is within the requested tolerance.
    pub passed: bool,
}

/// Compares analytic gradients against central differences.
///
/// `f` receives a fresh [`Graph`] plus leaf ids for `params` (in order) and
/// must return the scalar loss node; it is re-invoked for every perturbed
/// evaluation. Each parameter contributes up to `samples_per_param`
/// coordinates, drawn without replacement from a ChaCha stream seeded with
/// `seed` (`0` means check every coordinate). Central differences use step
/// `epsilon`; relative errors are `|a − n| / (|a| + |n| + 1e-12)` and the
/// check passes when the maximum stays within `tolerance`.
pub fn grad_check<F>(
    f: F,
    params: &[Tensor],
    epsilon: f64,
    tolerance: f64,
    samples_per_param: usize,
    seed: u64,
) -> Result<GradCheckReport, NnError>
where
    F: Fn(&mut Graph, &[NodeId]) -> Result<NodeId, NnError>,
{
    if epsilon <= 0.0 || !epsilon.is_finite() {
        return Err(NnError::InvalidShape(format!(
            "grad_check epsilon must be finite and positive, got {epsilon}"
        )));
    }

    // Analytic pass: one graph, one backward sweep.
    let mut graph = Graph::new();
    let ids: Vec<NodeId> = params.iter().map(|t| graph.leaf(t.clone())).collect();
    let loss = f(&mut graph, &ids)?;
    if graph.value(loss).numel() != 1 {
        return Err(NnError::NonScalarLoss {
            shape: graph.value(loss).shape().to_vec(),
        });
    }
    graph.backward(loss)?;
    let analytic: Vec<Tensor> = ids
        .iter()
        .zip(params)
        .map(|(&id, p)| graph.grad(id).cloned().unwrap_or_else(|| Tensor::zeros(p.shape())))
        .collect();
    drop(graph);

    let eval = |values: &[Tensor]| -> Result<f64, NnError> {
        let mut g = Graph::new();
        let ids: Vec<NodeId> = values.iter().map(|t| g.leaf(t.clone())).collect();
        let loss = f(&mut g, &ids)?;
        Ok(g.value(loss).data()[0])
    };

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut scratch: Vec<Tensor> = params.to_vec();
    let mut max_rel_error = 0.0f64;
    let mut coords_checked = 0usize;
    let mut worst: Option<WorstCoordinate> = None;

    for (pi, param) in params.iter().enumerate() {
        let n = param.numel();
        let coords: Vec<usize> = if samples_per_param == 0 || samples_per_param >= n {
            (0..n).collect()
        } else {
            let mut picked: Vec<usize> =
                rand::seq::index::sample(&mut rng, n, samples_per_param).into_iter().collect();
            picked.sort_unstable();
            picked
        };
        for coord in coords {
            let base = param.data()[coord];
            scratch[pi].data_mut()[coord] = base + epsilon;
            let plus = eval(&scratch)?;
            scratch[pi].data_mut()[coord] = base - epsilon;
            let minus = eval(&scratch)?;
            scratch[pi].data_mut()[coord] = base;

            let numeric = (plus - minus) / (2.0 * epsilon);
            let a = analytic[pi].data()[coord];
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs() + 1e-12);
            coords_checked += 1;
            if rel > max_rel_error || worst.is_none() {
                max_rel_error = rel;
                worst = Some(WorstCoordinate {
                    param: pi,
                    coord,
                    analytic: a,
                    numeric,
                    rel_error: rel,
                });
            }
        }
    }

    Ok(GradCheckReport {
        max_rel_error,
        coords_checked,
        worst,
        passed: max_rel_error <= tolerance,
    })
}
