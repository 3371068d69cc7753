use std::sync::Arc;

use rand::Rng;
use routing_aos::encoder::{
    attention, gated_fusion, gcn_layer, grad_check, grad_check_with, normalized_adjacency, AttentionParams, EncoderConfig,
    GamaModel, GradCheckOptions, ParamStore, Scalar, Tape, Tensor, Var,
};
use routing_aos::rng::rng_from_seed;
use routing_aos::state::{build_distance_graph, Matrix, OptFeatures, RemainingCapacity, SearchState};
use routing_aos::vrp::{generate_instance, initial_solution, SizeClass};

fn state(customers: usize, seed: u64, actions: usize) -> SearchState {
    let inst = generate_instance(customers, SizeClass::Custom { capacity: 15 }, seed).unwrap();
    let sol = initial_solution(&inst, seed);
    SearchState::build(
        &inst,
        Arc::new(build_distance_graph(&inst)),
        &sol,
        OptFeatures {
            last_action: Some(seed as usize % actions),
            effective: 1.0,
            gap: 0.1 * sol.cost(),
            last_delta: -0.05 * sol.cost(),
        },
        sol.cost(),
        RemainingCapacity::AfterService,
    )
}

fn small_config() -> EncoderConfig {
    EncoderConfig {
        action_count: 6,
        ..EncoderConfig::default()
    }
}

/// Model with every parameter (gate and LayerNorm included) moved away from
/// its initial value, so no block starts in a degenerate configuration.
fn random_model(cfg: EncoderConfig, seed: u64) -> GamaModel<f64> {
    let mut rng = rng_from_seed(seed);
    let mut m = GamaModel::<f64>::new(cfg, &mut rng).unwrap();
    let ids: Vec<_> = m.params().ids().collect();
    for id in ids {
        for v in m.params_mut().get_mut(id).data_mut() {
            *v += rng.gen_range(-0.3..0.3);
        }
    }
    m
}

/// Fixed projection of embedding, logits and value onto one scalar.
fn loss_of<'m, T: Scalar>(model: &'m GamaModel<T>, st: &SearchState) -> impl for<'a> Fn(&mut Tape<'a, T>) -> Var + 'm {
    let input = model.prepare(st).unwrap();
    let c = model.config().clone();
    let proj = |len: usize, salt: usize| -> Tensor<T> {
        let v: Vec<f64> = (0..len)
            .map(|i| (((i * 7919 + salt * 104729) % 2003) as f64 / 1001.5) - 1.0)
            .collect();
        Tensor::from_f64(len, 1, &v).unwrap()
    };
    let (pe, pl, pv) = (proj(c.embedding_len(), 1), proj(c.action_count, 2), proj(1, 3));
    move |t| {
        let out = model.forward(t, &input).unwrap();
        let mut acc: Option<Var> = None;
        for (v, p) in [(out.embedding, pe.clone()), (out.logits, pl.clone()), (out.value, pv.clone())] {
            let pi = t.input(p);
            let s = t.matmul(v, pi);
            acc = Some(match acc {
                Some(a) => t.add(a, s),
                None => s,
            });
        }
        acc.unwrap()
    }
}

fn embedding(model: &GamaModel<f64>, st: &SearchState) -> Vec<f64> {
    model.evaluate(st).unwrap().0
}

type Dense = Vec<Vec<f64>>;

fn dense<T: Scalar>(t: &Tensor<T>) -> Dense {
    (0..t.rows())
        .map(|r| (0..t.cols()).map(|c| t.get(r, c).as_f64()).collect())
        .collect()
}

fn mm(a: &Dense, b: &Dense) -> Dense {
    let mut out = vec![vec![0.0; b[0].len()]; a.len()];
    for i in 0..a.len() {
        for j in 0..b[0].len() {
            for k in 0..b.len() {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn close(a: &Dense, b: &Dense, tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.len() == y.len() && x.iter().zip(y).all(|(p, q)| (p - q).abs() <= tol))
}

fn random_dense(rng: &mut impl Rng, rows: usize, cols: usize) -> Dense {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

fn tensor(d: &Dense) -> Tensor<f64> {
    let flat: Vec<f64> = d.iter().flatten().copied().collect();
    Tensor::from_f64(d.len(), d[0].len(), &flat).unwrap()
}

#[test]
fn attention_rows_and_gates_are_valid_across_sweep() {
    let cfg = small_config();
    let mut rng = rng_from_seed(77);
    let (mut rows, mut gates) = (0usize, 0usize);
    for pass in 0..100u64 {
        let model = random_model(cfg.clone(), pass);
        let st = state(rng.gen_range(1..=20), pass, cfg.action_count);
        let input = model.prepare(&st).unwrap();
        let mut tape = model.new_tape();
        let out = model.forward(&mut tape, &input).unwrap();
        assert_eq!(out.attention.len(), cfg.fusion_layers * 2 * 2 * cfg.heads);
        for &map in &out.attention {
            let m = tape.value(map);
            for r in 0..m.rows() {
                let s: f64 = (0..m.cols()).map(|c| m.get(r, c)).sum();
                assert!((s - 1.0).abs() <= 1e-6, "pass {pass}: row sum {s}");
                rows += 1;
            }
        }
        assert_eq!(out.gates.len(), cfg.fusion_layers * 2);
        for &g in &out.gates {
            for &a in tape.value(g).data() {
                assert!(a > 0.0 && a < 1.0, "pass {pass}: gate {a}");
                gates += 1;
            }
        }
    }
    assert!(rows > 0 && gates > 0);
}

#[test]
fn full_encoder_gradients_match_differences_f64() {
    for seed in 0..2 {
        let st = state(4, seed, 6);
        assert_eq!(st.node_count(), 5);
        let model = random_model(small_config(), seed);
        let report = grad_check(
            model.params(),
            loss_of(&model, &st),
            &GradCheckOptions {
                max_entries: Some(8),
                seed,
                ..GradCheckOptions::default()
            },
        );
        assert!(report.checked > 500, "{report:?}");
        assert!(report.max_rel_error < 1e-3, "{report:?}");
    }
}

#[test]
fn full_encoder_gradients_match_differences_f32() {
    let st = state(4, 3, 6);
    let m32: GamaModel<f32> = random_model(small_config(), 3).cast();
    let reference: GamaModel<f64> = m32.cast();
    let report = grad_check_with(
        m32.params(),
        loss_of(&m32, &st),
        reference.params(),
        loss_of(&reference, &st),
        &GradCheckOptions {
            max_entries: Some(8),
            seed: 3,
            ..GradCheckOptions::default()
        },
    );
    assert!(report.checked > 500, "{report:?}");
    assert!(report.max_rel_error < 1e-2, "{report:?}");
}

#[test]
fn pooled_embedding_is_permutation_invariant() {
    let model = random_model(small_config(), 9);
    let mut rng = rng_from_seed(9);
    for trial in 0..5 {
        let st = state(12, trial, 6);
        let n = st.node_count();
        let mut perm: Vec<usize> = (0..n).collect();
        // depot stays at index 0
        for i in (2..n).rev() {
            perm.swap(i, rng.gen_range(1..=i));
        }
        let (a, b) = (embedding(&model, &st), embedding(&model, &st.permuted(&perm)));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-5, "trial {trial}: {x} vs {y}");
        }
    }
}

#[test]
fn embedding_length_is_constant_in_graph_size() {
    let cfg = small_config();
    let model = GamaModel::<f32>::new(cfg.clone(), &mut rng_from_seed(1)).unwrap();
    assert_eq!(cfg.embedding_len(), 2 * cfg.hidden + cfg.opt_embed);
    for customers in [1, 2, 5, 20, 50, 99] {
        let st = state(customers, customers as u64, cfg.action_count);
        let (emb, logits, value) = model.evaluate(&st).unwrap();
        assert_eq!(emb.len(), cfg.embedding_len(), "|V| = {}", customers + 1);
        assert_eq!(logits.len(), cfg.action_count);
        assert!(emb.iter().chain(&logits).all(|v| v.is_finite()) && value.is_finite());
    }
}

#[test]
fn ablation_flags_keep_embedding_shape() {
    let st = state(7, 2, 6);
    let base = small_config();
    let variants = [
        base.clone(),
        EncoderConfig {
            disable_cross_attention: true,
            ..base.clone()
        },
        EncoderConfig {
            disable_gate: true,
            ..base.clone()
        },
    ];
    let embs: Vec<Vec<f64>> = variants
        .iter()
        .map(|c| embedding(&GamaModel::new(c.clone(), &mut rng_from_seed(4)).unwrap(), &st))
        .collect();
    assert!(embs.iter().all(|e| e.len() == base.embedding_len()));
    assert_ne!(embs[0], embs[1]);
}

#[test]
fn repeated_encoding_is_bit_identical() {
    let st = state(10, 5, 6);
    let model = GamaModel::<f32>::new(small_config(), &mut rng_from_seed(5)).unwrap();
    let again = GamaModel::<f32>::new(small_config(), &mut rng_from_seed(5)).unwrap();
    let a = model.evaluate(&st).unwrap();
    let b = model.evaluate(&st).unwrap();
    let c = again.evaluate(&st).unwrap();
    let bits = |v: &(Vec<f64>, Vec<f64>, f64)| -> Vec<u64> {
        v.0.iter().chain(&v.1).chain([&v.2]).map(|x| x.to_bits()).collect()
    };
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(bits(&a), bits(&c));
}

#[test]
fn gcn_matches_naive_recomputation() {
    let mut rng = rng_from_seed(21);
    let n = 5;
    let mut adj = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let w = rng.gen_range(0.0..3.0);
            adj.set(i, j, w);
            adj.set(j, i, w);
        }
    }
    let x = random_dense(&mut rng, n, 11);
    let w = random_dense(&mut rng, 11, 16);

    let mut deg = vec![0.0; n];
    for (i, d) in deg.iter_mut().enumerate() {
        for j in 0..n {
            *d += adj.get(i, j) + if i == j { 1.0 } else { 0.0 };
        }
    }
    let mut a_hat = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let a = adj.get(i, j) + if i == j { 1.0 } else { 0.0 };
            a_hat[i][j] = a / (deg[i].sqrt() * deg[j].sqrt());
        }
    }
    let mut expect = mm(&mm(&a_hat, &x), &w);
    for v in expect.iter_mut().flatten() {
        *v = v.max(0.0);
    }

    let mut store = ParamStore::<f64>::new();
    let wid = store.register("w", tensor(&w)).unwrap();
    let mut tape = Tape::new(&store);
    let a = tape.input(normalized_adjacency(&adj).unwrap());
    let xv = tape.input(tensor(&x));
    let h = gcn_layer(&mut tape, a, xv, wid).unwrap();
    assert!(close(&dense(tape.value(h)), &expect, 1e-12));
}

fn reference_attention(q_src: &Dense, kv_src: &Dense, w: [&Dense; 4], heads: usize) -> Dense {
    let (q, k, v) = (mm(q_src, w[0]), mm(kv_src, w[1]), mm(kv_src, w[2]));
    let d = q[0].len();
    let dk = d / heads;
    let mut cat = vec![vec![0.0; d]; q.len()];
    for m in 0..heads {
        for i in 0..q.len() {
            let scores: Vec<f64> = (0..k.len())
                .map(|j| (0..dk).map(|c| q[i][m * dk + c] * k[j][m * dk + c]).sum::<f64>() / (dk as f64).sqrt())
                .collect();
            let top = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
            let z: f64 = e.iter().sum();
            for c in 0..dk {
                cat[i][m * dk + c] = (0..k.len()).map(|j| e[j] / z * v[j][m * dk + c]).sum();
            }
        }
    }
    mm(&cat, w[3])
}

fn random_attention(store: &mut ParamStore<f64>, rng: &mut impl Rng, prefix: &str, d: usize) -> (AttentionParams, [Dense; 4]) {
    let ws = [0, 1, 2, 3].map(|_| random_dense(rng, d, d));
    let reg = |s: &mut ParamStore<f64>, i: usize, w: &Dense| s.register(format!("{prefix}{i}"), tensor(w)).unwrap();
    let p = AttentionParams {
        wq: reg(store, 0, &ws[0]),
        wk: reg(store, 1, &ws[1]),
        wv: reg(store, 2, &ws[2]),
        wo: reg(store, 3, &ws[3]),
    };
    (p, ws)
}

#[test]
fn self_and_cross_attention_match_reference_formula() {
    let mut rng = rng_from_seed(31);
    let mut store = ParamStore::<f64>::new();
    let (p, ws) = random_attention(&mut store, &mut rng, "a", 8);
    let h_dis = random_dense(&mut rng, 4, 8);
    let h_sol = random_dense(&mut rng, 4, 8);
    let w = [&ws[0], &ws[1], &ws[2], &ws[3]];

    let mut tape = Tape::new(&store);
    let (hd, hs) = (tape.input(tensor(&h_dis)), tape.input(tensor(&h_sol)));
    let (self_out, _) = attention(&mut tape, hd, hd, &p, 2).unwrap();
    let (cross_out, _) = attention(&mut tape, hd, hs, &p, 2).unwrap();
    assert!(close(&dense(tape.value(self_out)), &reference_attention(&h_dis, &h_dis, w, 2), 1e-12));
    assert!(close(&dense(tape.value(cross_out)), &reference_attention(&h_dis, &h_sol, w, 2), 1e-12));

    let bad = tape.input(tensor(&random_dense(&mut rng, 3, 8)));
    assert!(attention(&mut tape, hd, bad, &p, 2).is_err());
}

#[test]
fn cross_attention_on_equal_inputs_equals_self_attention() {
    let cfg = small_config();
    let model = random_model(cfg.clone(), 12);
    let p = model.self_attention_params(1, 0);
    let mut rng = rng_from_seed(12);
    let h = tensor(&random_dense(&mut rng, 6, cfg.hidden));
    let mut tape = model.new_tape();
    let a = tape.input(h.clone());
    let b = tape.input(h);
    let (s, _) = model.attention_block(&mut tape, a, a, &p).unwrap();
    let (c, _) = model.attention_block(&mut tape, a, b, &p).unwrap();
    assert_eq!(tape.value(s), tape.value(c));
}

#[test]
fn gated_fusion_matches_elementwise_formula() {
    let mut rng = rng_from_seed(41);
    let (hs, hc, wg) = (random_dense(&mut rng, 5, 4), random_dense(&mut rng, 5, 4), random_dense(&mut rng, 8, 4));
    let mut store = ParamStore::<f64>::new();
    let g = store.register("g", tensor(&wg)).unwrap();
    let mut tape = Tape::new(&store);
    let (a, b) = (tape.input(tensor(&hs)), tape.input(tensor(&hc)));
    let (fused, alpha) = gated_fusion(&mut tape, a, b, g).unwrap();

    let both: Dense = hs.iter().zip(&hc).map(|(x, y)| x.iter().chain(y).copied().collect()).collect();
    let logits = mm(&both, &wg);
    let mut expect = hs.clone();
    for i in 0..5 {
        for j in 0..4 {
            let al = 1.0 / (1.0 + (-logits[i][j]).exp());
            assert!((tape.value(alpha).get(i, j) - al).abs() < 1e-12);
            expect[i][j] = al * hs[i][j] + (1.0 - al) * hc[i][j];
        }
    }
    assert!(close(&dense(tape.value(fused)), &expect, 1e-12));

    let (same, _) = gated_fusion(&mut tape, a, a, g).unwrap();
    assert!(close(&dense(tape.value(same)), &hs, 1e-12));
}

#[test]
fn layer_norm_rows_are_standardized() {
    let mut rng = rng_from_seed(51);
    let x = random_dense(&mut rng, 6, 32);
    let mut store = ParamStore::<f64>::new();
    let gamma = store.register("g", Tensor::filled(1, 32, 1.0)).unwrap();
    let beta = store.register("b", Tensor::zeros(1, 32)).unwrap();
    let mut tape = Tape::new(&store);
    let xv = tape.input(tensor(&x));
    let (g, b) = (tape.param(gamma), tape.param(beta));
    let y = tape.layer_norm(xv, g, b);
    for row in dense(tape.value(y)) {
        let mean = row.iter().sum::<f64>() / 32.0;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 32.0;
        assert!(mean.abs() < 1e-5 && (var - 1.0).abs() < 1e-4, "mean {mean} var {var}");
    }
}

#[test]
fn zero_weight_fusion_layer_is_double_layer_norm() {
    let cfg = EncoderConfig {
        fusion_layers: 1,
        ..small_config()
    };
    let mut model = GamaModel::<f64>::new(cfg.clone(), &mut rng_from_seed(61)).unwrap();
    let ids: Vec<_> = model.params().ids().collect();
    for id in ids {
        let name = model.params().name(id).to_string();
        let attn_or_ffn = [".self.", ".cross.", ".ffn."].iter().any(|k| name.contains(k));
        if name.starts_with("fusion.") && attn_or_ffn {
            let t = model.params_mut().get_mut(id);
            *t = Tensor::zeros(t.rows(), t.cols());
        }
    }
    let st = state(6, 61, cfg.action_count);
    let input = model.prepare(&st).unwrap();
    let mut tape = model.new_tape();
    let out = model.forward(&mut tape, &input).unwrap();

    // rebuild the GCN output and push it through LN twice by hand
    let p = model.params();
    let x = tape.input(input.features.clone());
    let mut pooled = Vec::new();
    for (stream, adj) in [("dis", &input.a_dis), ("sol", &input.a_sol)] {
        let a = tape.input(adj.clone());
        let mut h = x;
        for l in 0..cfg.gcn_layers {
            h = gcn_layer(&mut tape, a, h, p.id(&format!("gcn.{stream}.{l}.w")).unwrap()).unwrap();
        }
        let w = tape.param(p.id(&format!("gcn.{stream}.proj.w")).unwrap());
        let b = tape.param(p.id(&format!("gcn.{stream}.proj.b")).unwrap());
        let hw = tape.matmul(h, w);
        let mut h = tape.add_row(hw, b);
        for ln in ["ln1", "ln2"] {
            let g = tape.param(p.id(&format!("fusion.0.{stream}.{ln}.gamma")).unwrap());
            let b = tape.param(p.id(&format!("fusion.0.{stream}.{ln}.beta")).unwrap());
            h = tape.layer_norm(h, g, b);
        }
        let m = tape.mean_rows(h);
        pooled.extend(tape.value(m).to_f64_vec());
    }
    let emb = tape.value(out.embedding).to_f64_vec();
    for (a, b) in emb.iter().zip(&pooled) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}
