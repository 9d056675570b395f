//! Central finite-difference gradient verification, meant to run at f64.
//!
//! The numeric oracle is independent of the backward pass: it re-evaluates
//! the forward graph at perturbed parameter/input values and compares the
//! two-sided difference quotient against the analytic gradient.

use crate::error::Result;
use crate::exec::Workspace;
use crate::graph::{Graph, NodeId};
use crate::params::ParamSet;
use crate::tensor::Tensor;

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// Worst relative error over all checked elements.
    pub max_rel_err: f64,
    /// `(leaf name, flat element index)` of the worst element.
    pub worst: (String, usize),
    pub checked: usize,
}

/// Relative error with a unit floor: `|a - n| / max(1, |a|, |n|)`.
fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1.0)
}

fn loss_at(
    graph: &Graph,
    params: &ParamSet<f64>,
    inputs: &[(NodeId, Tensor<f64>)],
    loss: NodeId,
) -> Result<f64> {
    let mut ws = Workspace::new(graph);
    for (id, t) in inputs {
        ws.bind(*id, t.clone())?;
    }
    Ok(ws.forward(params, loss)?.item())
}

/// Check analytic gradients of every parameter and every requires-grad input
/// against central finite differences.
pub fn check_gradients(
    graph: &Graph,
    params: &ParamSet<f64>,
    inputs: &[(NodeId, Tensor<f64>)],
    loss: NodeId,
    step: f64,
) -> Result<GradCheckReport> {
    // Analytic pass.
    let mut ws = Workspace::new(graph);
    for (id, t) in inputs {
        ws.bind(*id, t.clone())?;
    }
    ws.forward(params, loss)?;
    ws.backward(loss)?;

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst: (String::new(), 0),
        checked: 0,
    };

    let consider = |report: &mut GradCheckReport, name: &str, idx: usize, a: f64, n: f64| {
        let e = rel_err(a, n);
        report.checked += 1;
        if e > report.max_rel_err {
            report.max_rel_err = e;
            report.worst = (name.to_string(), idx);
        }
    };

    // Parameters.
    for (name, id) in graph.params() {
        let analytic = ws
            .grad(id)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(graph.shape_of(id)));
        let base = params.get(name).expect("declared param").clone();
        for i in 0..base.numel() {
            let h = step * base.data()[i].abs().max(1.0);
            let mut plus = params.clone();
            plus.get_mut(name).unwrap().data_mut()[i] += h;
            let mut minus = params.clone();
            minus.get_mut(name).unwrap().data_mut()[i] -= h;
            let fp = loss_at(graph, &plus, inputs, loss)?;
            let fm = loss_at(graph, &minus, inputs, loss)?;
            let numeric = (fp - fm) / (2.0 * h);
            consider(&mut report, name, i, analytic.data()[i], numeric);
        }
    }

    // Requires-grad inputs.
    for (id, tensor) in inputs {
        if !tensor.requires_grad() {
            continue;
        }
        let name = &graph.node(*id).name;
        let analytic = ws
            .grad(*id)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(graph.shape_of(*id)));
        for i in 0..tensor.numel() {
            let h = step * tensor.data()[i].abs().max(1.0);
            let perturb = |sign: f64| -> Result<f64> {
                let mut modified: Vec<(NodeId, Tensor<f64>)> = inputs.to_vec();
                for (mid, mt) in modified.iter_mut() {
                    if mid == id {
                        mt.data_mut()[i] += sign * h;
                    }
                }
                loss_at(graph, params, &modified, loss)
            };
            let numeric = (perturb(1.0)? - perturb(-1.0)?) / (2.0 * h);
            consider(&mut report, name, i, analytic.data()[i], numeric);
        }
    }

    Ok(report)
}
