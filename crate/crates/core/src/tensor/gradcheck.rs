use super::{Graph, Tensor, Var};
use crate::error::{Error, Result};

/// Compares the reverse-mode gradient of a scalar function with central
/// finite differences, one coordinate at a time.
///
/// Returns `max_i |g_ad − g_fd| / max(1, |g_fd|)`. `f` is re-run from a
/// fresh graph for every perturbed evaluation, so it must be deterministic.
pub fn grad_check<F>(f: F, x: &Tensor, h: f64) -> Result<f64>
where
    F: Fn(&mut Graph, Var) -> Result<Var>,
{
    if !(1e-6..=1e-4).contains(&h) {
        return Err(Error::Usage(format!("step {h} outside [1e-6, 1e-4]")));
    }
    let mut g = Graph::new();
    let xv = g.param(x.clone());
    let y = f(&mut g, xv)?;
    if g.value(y).numel() != 1 {
        return Err(Error::Usage(format!(
            "grad_check needs a scalar function, got shape {:?}",
            g.value(y).shape()
        )));
    }
    let grads = g.backward(y)?;
    let analytic = grads
        .get(xv)
        .cloned()
        .unwrap_or_else(|| Tensor::zeros(x.shape()));

    let eval = |point: Tensor| -> Result<f64> {
        let mut g = Graph::new();
        let v = g.param(point);
        let y = f(&mut g, v)?;
        g.value(y).item()
    };

    let mut worst = 0.0f64;
    for i in 0..x.numel() {
        let mut plus = x.clone();
        plus.data_mut()[i] += h;
        let mut minus = x.clone();
        minus.data_mut()[i] -= h;
        let fd = (eval(plus)? - eval(minus)?) / (2.0 * h);
        let err = (analytic.data()[i] - fd).abs() / fd.abs().max(1.0);
        worst = worst.max(err);
    }
    Ok(worst)
}
