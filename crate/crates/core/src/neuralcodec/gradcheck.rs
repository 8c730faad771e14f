use ndarray::{Array1, Array2, Axis};

use super::codec::CodecModel;
use super::mlp::{Activation, Dense, Mlp};
use crate::error::{arg, Result};
use crate::kpstream::KeypointFrame;

/// Absolute gradients below this are compared on an absolute scale.
pub const GRAD_FLOOR: f64 = 1e-6;

fn loss_rows(y: &Array2<f64>, x: &Array1<f64>) -> Array1<f64> {
    let width = x.len() as f64;
    y.axis_iter(Axis(0)).map(|r| r.iter().zip(x.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / width).collect()
}

/// Concatenated encoder and decoder with the quantizer replaced by identity.
fn chain(model: &CodecModel) -> Vec<&Dense> {
    model.encoder.layers.iter().chain(model.decoder.layers.iter()).collect()
}

/// Forward pass from layer `start`, flagging rows whose ReLU
/// pre-activations change sign relative to `base_z` (the stencil crossed
/// a kink, where central differences are meaningless).
fn forward_from(layers: &[&Dense], start: usize, h: Array2<f64>, base_z: &[Array2<f64>], crossed: &mut [bool]) -> Array2<f64> {
    layers[start..].iter().enumerate().fold(h, |h, (k, l)| {
        let z = l.pre_activation(h.view());
        if l.activation == Activation::Relu {
            let base = base_z[start + k].row(0);
            for (r, row) in z.axis_iter(Axis(0)).enumerate() {
                crossed[r] |= row.iter().zip(base.iter()).any(|(a, b)| (*a > 0.0) != (*b > 0.0));
            }
        }
        z.mapv(|v| l.activation.apply(v))
    })
}

/// Outcome of a gradient check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheck {
    /// Largest relative error over the compared parameters.
    pub max_rel_error: f64,
    pub compared: usize,
    /// Parameters skipped because their stencil crossed a ReLU kink.
    pub kinks: usize,
}

/// Largest relative error between backpropagated gradients of `L_MSE` and
/// central differences with step `epsilon`, over every weight and bias of
/// the stage-1 encoder and decoder (quantizer bypassed). Relative error is
/// `|a − f| / max(|a|, |f|, GRAD_FLOOR)`.
pub fn grad_check(model: &CodecModel, frame: &KeypointFrame, epsilon: f64) -> Result<f64> {
    Ok(grad_check_detailed(model, frame, epsilon)?.max_rel_error)
}

/// [`grad_check`] with counts. Parameters whose `±ε` stencil flips the
/// sign of any ReLU pre-activation are not differentiable there and are
/// counted in `kinks` instead of being compared.
pub fn grad_check_detailed(model: &CodecModel, frame: &KeypointFrame, epsilon: f64) -> Result<GradCheck> {
    if !(1e-7..=1e-3).contains(&epsilon) {
        return arg(format!("epsilon {epsilon} outside [1e-7, 1e-3]"));
    }
    if frame.n() != model.n {
        return arg("frame size does not match the model");
    }
    let x = Array1::from(frame.flatten());
    let x2 = x.clone().insert_axis(Axis(0));
    let layers = chain(model);
    let combined = Mlp { layers: layers.iter().map(|l| (*l).clone()).collect() };

    let cache = combined.forward_cached(x2.view());
    let d_out = (&cache.output - &x2) * (2.0 / x.len() as f64);
    let (grads, _) = combined.backward(&cache, d_out);
    let base_z: Vec<Array2<f64>> = layers.iter().enumerate().map(|(li, l)| l.pre_activation(cache.inputs[li].view())).collect();

    let mut out = GradCheck { max_rel_error: 0.0, compared: 0, kinks: 0 };
    for (li, layer) in layers.iter().enumerate() {
        let input = cache.inputs[li].row(0).to_owned();
        let base_a = if li + 1 < layers.len() { cache.inputs[li + 1].row(0).to_owned() } else { cache.output.row(0).to_owned() };
        let fan_in = layer.input_width();
        for j in 0..layer.output_width() {
            // rows 0..fan_in perturb W[i, j], row fan_in perturbs b[j]; first half +ε, second −ε
            let rows = fan_in + 1;
            let z0 = base_z[li][[0, j]];
            let mut crossed = vec![false; 2 * rows];
            let mut h = Array2::zeros((2 * rows, base_a.len()));
            for r in 0..2 * rows {
                h.row_mut(r).assign(&base_a);
            }
            for r in 0..rows {
                let coeff = if r < fan_in { input[r] } else { 1.0 };
                for (sign, row) in [(1.0, r), (-1.0, r + rows)] {
                    let z = z0 + sign * epsilon * coeff;
                    crossed[row] = layer.activation == Activation::Relu && (z > 0.0) != (z0 > 0.0);
                    h[[row, j]] = layer.activation.apply(z);
                }
            }
            let y = forward_from(&layers, li + 1, h, &base_z, &mut crossed);
            let l = loss_rows(&y, &x);
            for r in 0..rows {
                if crossed[r] || crossed[r + rows] {
                    out.kinks += 1;
                    continue;
                }
                let numeric = (l[r] - l[r + rows]) / (2.0 * epsilon);
                let analytic = if r < fan_in { grads.weights[li][[r, j]] } else { grads.bias[li][j] };
                let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRAD_FLOOR);
                out.max_rel_error = out.max_rel_error.max(err);
                out.compared += 1;
            }
        }
    }
    Ok(out)
}
