use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::layers::{
    attention, fusion_step, gcn_layer, linear, AttentionParams, FeedForwardParams, FusionMode, FusionParams,
    LayerNormParams,
};
use super::params::{ParamId, ParamStore};
use super::tape::{Tape, Var};
use super::tensor::{Scalar, Tensor};
use super::EncoderError;
use crate::state::{SearchState, NODE_FEATURES};

/// Encoder and policy-head dimensions plus ablation switches.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    /// Attention width d.
    pub hidden: usize,
    pub heads: usize,
    pub fusion_layers: usize,
    pub gcn_hidden: usize,
    pub gcn_layers: usize,
    pub ffn_hidden: usize,
    pub opt_embed: usize,
    pub policy_hidden: usize,
    pub action_count: usize,
    pub share_modality_params: bool,
    pub disable_cross_attention: bool,
    pub disable_gate: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            hidden: 32,
            heads: 4,
            fusion_layers: 3,
            gcn_hidden: 16,
            gcn_layers: 2,
            ffn_hidden: 128,
            opt_embed: 16,
            policy_hidden: 64,
            action_count: 29,
            share_modality_params: false,
            disable_cross_attention: false,
            disable_gate: false,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<(), EncoderError> {
        let positive = [
            ("hidden", self.hidden),
            ("heads", self.heads),
            ("gcn_hidden", self.gcn_hidden),
            ("gcn_layers", self.gcn_layers),
            ("ffn_hidden", self.ffn_hidden),
            ("opt_embed", self.opt_embed),
            ("policy_hidden", self.policy_hidden),
            ("action_count", self.action_count),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(EncoderError::Config(format!("{name} must be positive")));
            }
        }
        if !self.hidden.is_multiple_of(self.heads) {
            return Err(EncoderError::Config(format!(
                "hidden ({}) must be divisible by heads ({})",
                self.hidden, self.heads
            )));
        }
        Ok(())
    }

    pub fn embedding_len(&self) -> usize {
        2 * self.hidden + self.opt_embed
    }

    fn fusion_mode(&self) -> FusionMode {
        if self.disable_cross_attention {
            FusionMode::SelfOnly
        } else if self.disable_gate {
            FusionMode::Sum
        } else {
            FusionMode::Gated
        }
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Clone, Debug)]
struct StreamParams {
    gcn: Vec<ParamId>,
    proj_w: ParamId,
    proj_b: ParamId,
}

#[derive(Clone, Debug)]
struct HeadParams {
    opt_w: ParamId,
    opt_b: ParamId,
    fc_w: ParamId,
    fc_b: ParamId,
    logits_w: ParamId,
    logits_b: ParamId,
    value_w: ParamId,
    value_b: ParamId,
}

/// Tape handles produced by one forward pass.
#[derive(Clone, Debug)]
pub struct ModelOutput {
    pub embedding: Var,
    pub logits: Var,
    pub value: Var,
    /// Every attention matrix, self and cross, all layers and heads.
    pub attention: Vec<Var>,
    pub gates: Vec<Var>,
}

/// Encoder inputs derived from a search state.
#[derive(Clone, Debug)]
pub struct PreparedInput<T> {
    pub features: Tensor<T>,
    pub a_dis: Tensor<T>,
    pub a_sol: Tensor<T>,
    pub opt: Tensor<T>,
}

/// Columns holding coordinates or distances; 2 and 3 hold loads.
const GEOMETRIC_COLUMNS: [usize; 9] = [0, 1, 4, 5, 6, 7, 8, 9, 10];

/// Dual-GCN streams, stacked attention fusion layers, pooling and the
/// policy/value head.
#[derive(Clone, Debug)]
pub struct GamaModel<T> {
    config: EncoderConfig,
    params: ParamStore<T>,
    streams: [StreamParams; 2],
    fusion: Vec<[FusionParams; 2]>,
    head: HeadParams,
}

const MODALITIES: [&str; 2] = ["dis", "sol"];

impl<T: Scalar> GamaModel<T> {
    pub fn new(config: EncoderConfig, rng: &mut impl Rng) -> Result<Self, EncoderError> {
        config.validate()?;
        let c = &config;
        let d = c.hidden;
        let mut ps = ParamStore::new();

        let mut streams = Vec::new();
        for m in MODALITIES {
            let mut gcn = Vec::new();
            let mut fan_in = NODE_FEATURES;
            for l in 0..c.gcn_layers {
                gcn.push(ps.register_uniform(format!("gcn.{m}.{l}.w"), fan_in, c.gcn_hidden, rng)?);
                fan_in = c.gcn_hidden;
            }
            let proj_w = ps.register_uniform(format!("gcn.{m}.proj.w"), c.gcn_hidden, d, rng)?;
            let proj_b = ps.register(format!("gcn.{m}.proj.b"), Tensor::zeros(1, d))?;
            streams.push(StreamParams { gcn, proj_w, proj_b });
        }

        let mut fusion = Vec::new();
        for l in 0..c.fusion_layers {
            let mut pair = Vec::new();
            for m in MODALITIES {
                if c.share_modality_params && !pair.is_empty() {
                    pair.push(pair[0]);
                    continue;
                }
                let tag = if c.share_modality_params { "shared" } else { m };
                let prefix = format!("fusion.{l}.{tag}");
                let mut attn = |ps: &mut ParamStore<T>, kind: &str| -> Result<AttentionParams, EncoderError> {
                    Ok(AttentionParams {
                        wq: ps.register_uniform(format!("{prefix}.{kind}.wq"), d, d, rng)?,
                        wk: ps.register_uniform(format!("{prefix}.{kind}.wk"), d, d, rng)?,
                        wv: ps.register_uniform(format!("{prefix}.{kind}.wv"), d, d, rng)?,
                        wo: ps.register_uniform(format!("{prefix}.{kind}.wo"), d, d, rng)?,
                    })
                };
                let self_attn = attn(&mut ps, "self")?;
                let cross_attn = if c.disable_cross_attention {
                    None
                } else {
                    Some(attn(&mut ps, "cross")?)
                };
                let gate = if c.disable_cross_attention || c.disable_gate {
                    None
                } else {
                    Some(ps.register(format!("{prefix}.gate.w"), Tensor::zeros(2 * d, d))?)
                };
                let ln = |ps: &mut ParamStore<T>, k: &str| -> Result<LayerNormParams, EncoderError> {
                    Ok(LayerNormParams {
                        gamma: ps.register(format!("{prefix}.{k}.gamma"), Tensor::filled(1, d, T::one()))?,
                        beta: ps.register(format!("{prefix}.{k}.beta"), Tensor::zeros(1, d))?,
                    })
                };
                let ln1 = ln(&mut ps, "ln1")?;
                let ffn = FeedForwardParams {
                    w1: ps.register_uniform(format!("{prefix}.ffn.w1"), d, c.ffn_hidden, rng)?,
                    b1: ps.register(format!("{prefix}.ffn.b1"), Tensor::zeros(1, c.ffn_hidden))?,
                    w2: ps.register_uniform(format!("{prefix}.ffn.w2"), c.ffn_hidden, d, rng)?,
                    b2: ps.register(format!("{prefix}.ffn.b2"), Tensor::zeros(1, d))?,
                };
                let ln2 = ln(&mut ps, "ln2")?;
                pair.push(FusionParams {
                    self_attn,
                    cross_attn,
                    gate,
                    ln1,
                    ffn,
                    ln2,
                });
            }
            fusion.push([pair[0], pair[1]]);
        }

        let opt_in = c.action_count + 3;
        let emb = c.embedding_len();
        let head = HeadParams {
            opt_w: ps.register_uniform("opt.w", opt_in, c.opt_embed, rng)?,
            opt_b: ps.register("opt.b", Tensor::zeros(1, c.opt_embed))?,
            fc_w: ps.register_uniform("policy.fc.w", emb, c.policy_hidden, rng)?,
            fc_b: ps.register("policy.fc.b", Tensor::zeros(1, c.policy_hidden))?,
            logits_w: ps.register_uniform("policy.logits.w", c.policy_hidden, c.action_count, rng)?,
            logits_b: ps.register("policy.logits.b", Tensor::zeros(1, c.action_count))?,
            value_w: ps.register_uniform("policy.value.w", c.policy_hidden, 1, rng)?,
            value_b: ps.register("policy.value.b", Tensor::zeros(1, 1))?,
        };
        let [s0, s1]: [StreamParams; 2] = streams.try_into().expect("two streams");
        Ok(GamaModel {
            config,
            params: ps,
            streams: [s0, s1],
            fusion,
            head,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    /// The same architecture with parameters converted to another scalar.
    pub fn cast<U: Scalar>(&self) -> GamaModel<U> {
        GamaModel {
            config: self.config.clone(),
            params: self.params.cast(),
            streams: self.streams.clone(),
            fusion: self.fusion.clone(),
            head: self.head.clone(),
        }
    }

    pub fn new_tape(&self) -> Tape<'_, T> {
        Tape::new(&self.params)
    }

    /// Node features with coordinates and distances scaled by the coordinate
    /// extent and loads by the capacity, both normalized adjacencies, and the
    /// optimization-feature vector.
    pub fn prepare(&self, state: &SearchState) -> Result<PreparedInput<T>, EncoderError> {
        let x = &state.x.x;
        let n = x.rows();
        if n < 1 || state.dis.weights.rows() != n || state.sol.adjacency.rows() != n {
            return Err(EncoderError::Shape(format!(
                "state graphs {}x{} / {}x{} do not match {n} feature rows",
                state.dis.weights.rows(),
                state.dis.weights.cols(),
                state.sol.adjacency.rows(),
                state.sol.adjacency.cols()
            )));
        }
        let extent = (0..n)
            .flat_map(|i| [x.get(i, 0).abs(), x.get(i, 1).abs()])
            .fold(1.0f64, f64::max);
        let cap = if state.capacity > 0.0 { state.capacity } else { 1.0 };
        let mut feat = x.data().to_vec();
        for i in 0..n {
            for &c in &GEOMETRIC_COLUMNS {
                feat[i * NODE_FEATURES + c] /= extent;
            }
            feat[i * NODE_FEATURES + 2] /= cap;
            feat[i * NODE_FEATURES + 3] /= cap;
        }
        let a = self.config.action_count;
        let mut opt = vec![0.0; a + 3];
        if let Some(last) = state.opt.last_action {
            if last >= a {
                return Err(EncoderError::Shape(format!("last action {last} outside {a} actions")));
            }
            opt[last] = 1.0;
        }
        let (gap, eta) = state.normalized_history();
        opt[a] = state.opt.effective;
        opt[a + 1] = gap;
        opt[a + 2] = eta;
        Ok(PreparedInput {
            features: Tensor::from_f64(n, NODE_FEATURES, &feat)?,
            a_dis: super::layers::normalized_adjacency(&state.dis.weights)?,
            a_sol: super::layers::normalized_adjacency(&state.sol.adjacency)?,
            opt: Tensor::row_vector(opt.into_iter().map(T::of).collect()),
        })
    }

    /// Records the full forward pass for `input` on `tape`.
    pub fn forward(&self, tape: &mut Tape<'_, T>, input: &PreparedInput<T>) -> Result<ModelOutput, EncoderError> {
        let c = &self.config;
        let x = tape.input(input.features.clone());
        let adjs = [tape.input(input.a_dis.clone()), tape.input(input.a_sol.clone())];
        let mut h = [x; 2];
        for (k, stream) in self.streams.iter().enumerate() {
            let mut cur = x;
            for &w in &stream.gcn {
                cur = gcn_layer(tape, adjs[k], cur, w)?;
            }
            h[k] = linear(tape, cur, stream.proj_w, Some(stream.proj_b));
        }

        let mode = c.fusion_mode();
        let mut attention_maps = Vec::new();
        let mut gates = Vec::new();
        for layer in &self.fusion {
            let mut next = h;
            for k in 0..2 {
                let trace = fusion_step(tape, h[k], h[1 - k], &layer[k], c.heads, mode)?;
                attention_maps.extend(trace.attention);
                gates.extend(trace.gate);
                next[k] = trace.output;
            }
            h = next;
        }

        let fused = tape.concat_cols(&h);
        let pooled = tape.mean_rows(fused);
        let opt_in = tape.input(input.opt.clone());
        let opt = linear(tape, opt_in, self.head.opt_w, Some(self.head.opt_b));
        let opt = tape.relu(opt);
        let embedding = tape.concat_cols(&[pooled, opt]);

        let hidden = linear(tape, embedding, self.head.fc_w, Some(self.head.fc_b));
        let hidden = tape.relu(hidden);
        let logits = linear(tape, hidden, self.head.logits_w, Some(self.head.logits_b));
        let value = linear(tape, hidden, self.head.value_w, Some(self.head.value_b));
        Ok(ModelOutput {
            embedding,
            logits,
            value,
            attention: attention_maps,
            gates,
        })
    }

    /// Forward pass returning plain values: (embedding, logits, value).
    pub fn evaluate(&self, state: &SearchState) -> Result<(Vec<f64>, Vec<f64>, f64), EncoderError> {
        let input = self.prepare(state)?;
        let mut tape = self.new_tape();
        let out = self.forward(&mut tape, &input)?;
        Ok((
            tape.value(out.embedding).to_f64_vec(),
            tape.value(out.logits).to_f64_vec(),
            tape.value(out.value).data()[0].as_f64(),
        ))
    }

    /// Self-attention of a single block, exposed for tests of the attention
    /// formula on the model's own parameters.
    pub fn self_attention_params(&self, layer: usize, modality: usize) -> AttentionParams {
        self.fusion[layer][modality].self_attn
    }

    pub fn attention_block(
        &self,
        tape: &mut Tape<'_, T>,
        q: Var,
        kv: Var,
        p: &AttentionParams,
    ) -> Result<(Var, Vec<Var>), EncoderError> {
        attention(tape, q, kv, p, self.config.heads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn parameter_names_are_unique_and_counted() {
        let m = GamaModel::<f32>::new(EncoderConfig::default(), &mut rng_from_seed(0)).unwrap();
        // 2 streams × (2 GCN + proj w/b) + 3 layers × 2 modalities × 17 + 8 head
        assert_eq!(m.params().len(), 2 * 4 + 3 * 2 * 17 + 8);
        let shared = GamaModel::<f32>::new(
            EncoderConfig {
                share_modality_params: true,
                ..EncoderConfig::default()
            },
            &mut rng_from_seed(0),
        )
        .unwrap();
        assert_eq!(shared.params().len(), 2 * 4 + 3 * 17 + 8);
    }

    #[test]
    fn bad_head_count_is_a_config_error() {
        let cfg = EncoderConfig {
            heads: 5,
            ..EncoderConfig::default()
        };
        assert!(matches!(GamaModel::<f32>::new(cfg, &mut rng_from_seed(0)), Err(EncoderError::Config(_))));
    }

    #[test]
    fn hash_tracks_config() {
        let a = EncoderConfig::default();
        let b = EncoderConfig {
            disable_gate: true,
            ..EncoderConfig::default()
        };
        assert_eq!(a.hash(), EncoderConfig::default().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
