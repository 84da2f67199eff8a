//! Builds a small graph by hand, differentiates it and checks the result
//! against central finite differences.
//!
//! ```text
//! cargo run --example autodiff
//! ```

use hatespeech::autodiff::{grad_check_with, GradCheck, Graph, Mode, Tensor};

fn main() -> hatespeech::Result<()> {
    // loss = cross-entropy(tanh(x W + b), labels)
    let x = Tensor::matrix(2, 3, vec![0.5, -1.0, 2.0, 1.5, 0.25, -0.75])?;
    let w = Tensor::matrix(3, 2, vec![0.1, -0.2, 0.3, 0.4, -0.5, 0.6])?;
    let b = Tensor::row(vec![0.05, -0.05]).requiring_grad();
    let labels = [1, 0];

    let forward = |g: &mut Graph, v: &[hatespeech::autodiff::Var]| {
        let h = g.matmul(v[0], v[1])?;
        let h = g.add_bias(h, v[2])?;
        let h = g.tanh(h);
        g.softmax_cross_entropy(h, &labels)
    };

    let mut g = Graph::new(Mode::Eval, 0);
    let vars = [g.param(&x), g.param(&w), g.param(&b)];
    let loss = forward(&mut g, &vars)?;
    let grads = g.backward(loss)?;
    println!("loss = {:.6}", g.value(loss).item());
    println!("dL/dW = {:?}", grads.get(vars[1]).data);
    println!("dL/db = {:?}", grads.get(vars[2]).data);

    let err = grad_check_with(forward, &[x, w, b], &GradCheck::default())?;
    println!("max relative error against finite differences: {err:.2e}");
    Ok(())
}
