//! Masked multi-head self-attention on a toy document.
//!
//! Padded rows are excluded as keys, so changing them leaves the outputs
//! for real sentences untouched.

use hidden_dissent::seed;
use hidden_dissent::tensor::{self_attention, AttentionWeights, Matrix};
use rand::Rng;

fn main() -> hidden_dissent::Result<()> {
    let mut rng = seed::stream(2, &[]);
    let (d, heads) = (8, 2);
    let w = AttentionWeights::random(d, heads, &mut rng)?;
    let mut x = Matrix::from_fn(5, d, |_, _| rng.random_range(-1.0..1.0));
    // last two rows are padding
    let mask = [false, false, false, true, true];
    let before = self_attention(&x, &w, &mask)?;
    for j in 0..d {
        x[(3, j)] = 100.0;
        x[(4, j)] = -100.0;
    }
    let after = self_attention(&x, &w, &mask)?;
    let moved = (before.rows(0, 3) - after.rows(0, 3)).abs().max();
    println!("{heads} heads of width {}; largest change in unpadded rows {moved:.1e}", w.head_dim());
    println!("{:.4}", before.rows(0, 3));
    Ok(())
}
