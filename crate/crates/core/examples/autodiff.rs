//! Reverse-mode gradients on the tape, checked against central differences.

use hidden_dissent::seed;
use hidden_dissent::tensor::{Matrix, Tape};
use rand::Rng;

fn loss(x: &Matrix, w: &Matrix) -> hidden_dissent::Result<(f64, Matrix)> {
    let mut tape = Tape::new();
    let xv = tape.constant(x.clone());
    let wv = tape.param(0, w);
    let h = tape.matmul(xv, wv)?;
    let h = tape.layer_norm(h, 1e-5);
    let s = tape.sigmoid(h);
    let out = tape.sum(s);
    let grads = tape.backward(out);
    let g = tape.param_grads(&grads).remove(0).1;
    Ok((tape.scalar(out), g))
}

fn main() -> hidden_dissent::Result<()> {
    let mut rng = seed::stream(1, &[]);
    let x = Matrix::from_fn(6, 4, |_, _| rng.random_range(-1.0..1.0));
    let w = Matrix::from_fn(4, 3, |_, _| rng.random_range(-1.0..1.0));
    let (value, grad) = loss(&x, &w)?;
    println!("loss {value:.6}");
    let eps = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..w.nrows() {
        for j in 0..w.ncols() {
            let (mut up, mut down) = (w.clone(), w.clone());
            up[(i, j)] += eps;
            down[(i, j)] -= eps;
            let numeric = (loss(&x, &up)?.0 - loss(&x, &down)?.0) / (2.0 * eps);
            let rel = (numeric - grad[(i, j)]).abs() / numeric.abs().max(grad[(i, j)].abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    println!("worst relative gradient error {worst:.2e}");
    Ok(())
}
