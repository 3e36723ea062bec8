//! Dense-matrix compute core with reverse-mode automatic differentiation.
//!
//! Values are `f64` in memory; weight files store `f32`.

mod attention;
mod checkpoint;
mod params;
mod tape;

pub use attention::{
    attend, multi_head_block, residual_block, self_attention, AttentionVars, AttentionWeights,
    BlockWeights, LN_EPS,
};
pub(crate) use attention::{check_heads, glorot};
pub use checkpoint::{decode_weights, encode_weights, load_weights, save_weights, WEIGHTS_MAGIC};
pub use params::ParamSet;
pub use tape::{sigmoid, Gradients, Matrix, Tape, Var};
