use super::network::Network;
use super::tensor::Tensor;
use crate::error::Result;

/// Largest relative disagreement between backprop and central differences
/// over every parameter coordinate:
/// `|analytic - numeric| / max(1e-8, |analytic| + |numeric|)`.
///
/// Dropout is off (evaluation mode). Parameters are restored afterwards and
/// gradients are left holding the analytic values.
pub fn grad_check(net: &mut Network, input: &Tensor, label: u8, eps: f64) -> Result<f64> {
    net.zero_grad();
    let trace = net.forward(input, None)?;
    net.backward(&trace, label)?;
    let analytic: Vec<Vec<f64>> = net.params().map(|t| t.grad().to_vec()).collect();

    let loss_at = |net: &Network| -> Result<f64> {
        let out = net.output(input)?;
        Ok(net.loss(&out, label))
    };

    let mut worst = 0.0f64;
    for (p, grads) in analytic.iter().enumerate() {
        for (k, &a) in grads.iter().enumerate() {
            let original = net.params().nth(p).expect("param").values()[k];
            set_param(net, p, k, original + eps);
            let plus = loss_at(net)?;
            set_param(net, p, k, original - eps);
            let minus = loss_at(net)?;
            set_param(net, p, k, original);

            let numeric = (plus - minus) / (2.0 * eps);
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

fn set_param(net: &mut Network, p: usize, k: usize, value: f64) {
    net.params_mut().nth(p).expect("param").values_mut()[k] = value;
}
