//! Building blocks recorded on a [`Tape`].

use super::params::ParamId;
use super::tape::{Tape, Var};
use super::tensor::{Scalar, Tensor};
use super::EncoderError;
use crate::state::Matrix;

/// D̃^{-1/2}(A + I)D̃^{-1/2}, with D̃ the row sums of A + I.
pub fn normalized_adjacency<T: Scalar>(adj: &Matrix) -> Result<Tensor<T>, EncoderError> {
    let n = adj.rows();
    if adj.cols() != n {
        return Err(EncoderError::Shape(format!("adjacency is {}x{}, expected square", n, adj.cols())));
    }
    let a_tilde = |i: usize, j: usize| adj.get(i, j) + if i == j { 1.0 } else { 0.0 };
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| 1.0 / (0..n).map(|j| a_tilde(i, j)).sum::<f64>().sqrt())
        .collect();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(inv_sqrt[i] * a_tilde(i, j) * inv_sqrt[j]);
        }
    }
    Tensor::from_f64(n, n, &out)
}

pub fn linear<T: Scalar>(tape: &mut Tape<'_, T>, x: Var, w: ParamId, b: Option<ParamId>) -> Var {
    let wv = tape.param(w);
    let y = tape.matmul(x, wv);
    match b {
        Some(b) => {
            let bv = tape.param(b);
            tape.add_row(y, bv)
        }
        None => y,
    }
}

/// One graph convolution: ReLU(Â X W).
pub fn gcn_layer<T: Scalar>(tape: &mut Tape<'_, T>, a_hat: Var, x: Var, w: ParamId) -> Result<Var, EncoderError> {
    let (a, xs) = (tape.value(a_hat).shape(), tape.value(x).shape());
    let ws = tape.params().get(w).shape();
    if a[0] != a[1] || a[1] != xs[0] || xs[1] != ws[0] {
        return Err(EncoderError::Shape(format!(
            "gcn: adjacency {a:?}, features {xs:?}, weights {ws:?}"
        )));
    }
    let ax = tape.matmul(a_hat, x);
    let h = linear(tape, ax, w, None);
    Ok(tape.relu(h))
}

/// Projection matrices of one multi-head attention block (no biases).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AttentionParams {
    pub wq: ParamId,
    pub wk: ParamId,
    pub wv: ParamId,
    pub wo: ParamId,
}

/// Multi-head attention with queries from `q_src` and keys/values from
/// `kv_src`. Returns the projected output and every head's attention matrix.
pub fn attention<T: Scalar>(
    tape: &mut Tape<'_, T>,
    q_src: Var,
    kv_src: Var,
    p: &AttentionParams,
    heads: usize,
) -> Result<(Var, Vec<Var>), EncoderError> {
    let (qs, ks) = (tape.value(q_src).shape(), tape.value(kv_src).shape());
    if qs[1] != ks[1] || (qs[0] != ks[0]) {
        return Err(EncoderError::Shape(format!("attention: queries {qs:?}, keys {ks:?}")));
    }
    let d = qs[1];
    if heads == 0 || d % heads != 0 {
        return Err(EncoderError::Config(format!("hidden size {d} not divisible by {heads} heads")));
    }
    let dk = d / heads;
    let q = linear(tape, q_src, p.wq, None);
    let k = linear(tape, kv_src, p.wk, None);
    let v = linear(tape, kv_src, p.wv, None);
    let mut outs = Vec::with_capacity(heads);
    let mut maps = Vec::with_capacity(heads);
    for m in 0..heads {
        let qm = tape.slice_cols(q, m * dk, dk);
        let km = tape.slice_cols(k, m * dk, dk);
        let vm = tape.slice_cols(v, m * dk, dk);
        let scores = tape.matmul_t(qm, km);
        let scores = tape.scale(scores, 1.0 / (dk as f64).sqrt());
        let probs = tape.softmax_rows(scores);
        maps.push(probs);
        outs.push(tape.matmul(probs, vm));
    }
    let cat = tape.concat_cols(&outs);
    Ok((linear(tape, cat, p.wo, None), maps))
}

/// α = σ([Hs ; Hc] W_g) and H̃ = α ⊙ Hs + (1 − α) ⊙ Hc.
pub fn gated_fusion<T: Scalar>(tape: &mut Tape<'_, T>, hs: Var, hc: Var, wg: ParamId) -> Result<(Var, Var), EncoderError> {
    let (a, b) = (tape.value(hs).shape(), tape.value(hc).shape());
    let gs = tape.params().get(wg).shape();
    if a != b || gs != [2 * a[1], a[1]] {
        return Err(EncoderError::Shape(format!("gate: inputs {a:?} and {b:?}, weights {gs:?}")));
    }
    let both = tape.concat_cols(&[hs, hc]);
    let logits = linear(tape, both, wg, None);
    let alpha = tape.sigmoid(logits);
    let diff = tape.sub(hs, hc);
    let scaled = tape.mul(alpha, diff);
    Ok((tape.add(hc, scaled), alpha))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerNormParams {
    pub gamma: ParamId,
    pub beta: ParamId,
}

pub fn layer_norm<T: Scalar>(tape: &mut Tape<'_, T>, x: Var, p: &LayerNormParams) -> Var {
    let g = tape.param(p.gamma);
    let b = tape.param(p.beta);
    tape.layer_norm(x, g, b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeedForwardParams {
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
}

pub fn feed_forward<T: Scalar>(tape: &mut Tape<'_, T>, x: Var, p: &FeedForwardParams) -> Var {
    let h = linear(tape, x, p.w1, Some(p.b1));
    let h = tape.relu(h);
    linear(tape, h, p.w2, Some(p.b2))
}

/// Parameters of one modality inside one fusion layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FusionParams {
    pub self_attn: AttentionParams,
    pub cross_attn: Option<AttentionParams>,
    pub gate: Option<ParamId>,
    pub ln1: LayerNormParams,
    pub ffn: FeedForwardParams,
    pub ln2: LayerNormParams,
}

/// How self- and cross-attended features are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FusionMode {
    Gated,
    /// H̃ = Hs + Hc.
    Sum,
    /// H̃ = Hs.
    SelfOnly,
}

/// Recorded intermediates of one modality's fusion step.
#[derive(Clone, Debug)]
pub struct FusionTrace {
    pub output: Var,
    pub attention: Vec<Var>,
    pub gate: Option<Var>,
}

/// One modality's update: self-attention, cross-attention against `other`,
/// fusion, then the two residual + LayerNorm stages around the FFN.
pub fn fusion_step<T: Scalar>(
    tape: &mut Tape<'_, T>,
    h: Var,
    other: Var,
    p: &FusionParams,
    heads: usize,
    mode: FusionMode,
) -> Result<FusionTrace, EncoderError> {
    let (hs, mut maps) = attention(tape, h, h, &p.self_attn, heads)?;
    let mut gate = None;
    let fused = match (mode, p.cross_attn) {
        (FusionMode::SelfOnly, _) | (_, None) => hs,
        (mode, Some(cross)) => {
            let (hc, cmaps) = attention(tape, h, other, &cross, heads)?;
            maps.extend(cmaps);
            match (mode, p.gate) {
                (FusionMode::Gated, Some(wg)) => {
                    let (f, alpha) = gated_fusion(tape, hs, hc, wg)?;
                    gate = Some(alpha);
                    f
                }
                _ => tape.add(hs, hc),
            }
        }
    };
    let res = tape.add(h, fused);
    let h1 = layer_norm(tape, res, &p.ln1);
    let ff = feed_forward(tape, h1, &p.ffn);
    let res2 = tape.add(h1, ff);
    let output = layer_norm(tape, res2, &p.ln2);
    Ok(FusionTrace {
        output,
        attention: maps,
        gate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::params::ParamStore;
    use crate::rng::rng_from_seed;

    #[test]
    fn isolated_node_has_unit_adjacency() {
        let a: Tensor<f64> = normalized_adjacency(&Matrix::zeros(1, 1)).unwrap();
        assert_eq!(a.data(), &[1.0]);
        let two: Tensor<f64> = normalized_adjacency(&Matrix::from_vec(2, 2, vec![0.0, 1.0, 1.0, 0.0])).unwrap();
        assert!(two.data().iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn identity_gcn_passes_nonnegative_features() {
        let mut s = ParamStore::<f64>::new();
        let w = s.register("w", Tensor::identity(3)).unwrap();
        let mut t = Tape::new(&s);
        let a = t.input(normalized_adjacency(&Matrix::zeros(2, 2)).unwrap());
        let x = t.input(Tensor::from_f64(2, 3, &[1.0, 0.0, 2.0, 3.0, 4.0, 0.5]).unwrap());
        let h = gcn_layer(&mut t, a, x, w).unwrap();
        assert_eq!(t.value(h), t.value(x));
    }

    #[test]
    fn gcn_rejects_mismatched_shapes() {
        let mut s = ParamStore::<f64>::new();
        let w = s.register("w", Tensor::identity(3)).unwrap();
        let mut t = Tape::new(&s);
        let a = t.input(Tensor::identity(3));
        let x = t.input(Tensor::zeros(2, 3));
        let err = gcn_layer(&mut t, a, x, w).unwrap_err();
        assert!(err.to_string().contains("[3, 3]") && err.to_string().contains("[2, 3]"));
    }

    #[test]
    fn zero_gate_averages() {
        let mut s = ParamStore::<f64>::new();
        let wg = s.register("g", Tensor::zeros(4, 2)).unwrap();
        let mut t = Tape::new(&s);
        let hs = t.input(Tensor::from_f64(1, 2, &[1.0, 3.0]).unwrap());
        let hc = t.input(Tensor::from_f64(1, 2, &[5.0, -1.0]).unwrap());
        let (f, alpha) = gated_fusion(&mut t, hs, hc, wg).unwrap();
        assert_eq!(t.value(alpha).data(), &[0.5, 0.5]);
        assert_eq!(t.value(f).data(), &[3.0, 1.0]);
    }

    #[test]
    fn single_key_attention_is_projected_value() {
        let mut s = ParamStore::<f64>::new();
        let mut rng = rng_from_seed(4);
        let p = AttentionParams {
            wq: s.register_uniform("q", 4, 4, &mut rng).unwrap(),
            wk: s.register_uniform("k", 4, 4, &mut rng).unwrap(),
            wv: s.register_uniform("v", 4, 4, &mut rng).unwrap(),
            wo: s.register_uniform("o", 4, 4, &mut rng).unwrap(),
        };
        let mut t = Tape::new(&s);
        let h = t.input(Tensor::from_f64(1, 4, &[0.3, -0.2, 0.9, 0.1]).unwrap());
        let (out, maps) = attention(&mut t, h, h, &p, 2).unwrap();
        for m in maps {
            assert_eq!(t.value(m).data(), &[1.0]);
        }
        let hv = t.value(h).matmul(s.get(p.wv));
        let expect = hv.matmul(s.get(p.wo));
        for (a, b) in t.value(out).data().iter().zip(expect.data()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(attention(&mut t, h, h, &p, 3).is_err());
    }
}
