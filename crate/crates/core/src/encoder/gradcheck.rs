//! Reverse-mode gradients against central finite differences.

use rand::seq::index::sample;

use super::params::ParamStore;
use super::tape::{Tape, Var};
use super::tensor::{Scalar, Tensor};

#[derive(Clone, Debug)]
pub struct GradCheckOptions {
    /// Finite-difference step.
    pub step: f64,
    /// Lower bound on the relative-error denominator, so entries whose true
    /// gradient is ~0 are judged on absolute error.
    pub floor: f64,
    /// Check at most this many entries per tensor (all when `None`).
    pub max_entries: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            step: 1e-4,
            floor: 1e-6,
            max_entries: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
    /// Analytic and numeric gradient at the worst entry.
    pub worst_values: (f64, f64),
    pub checked: usize,
    /// Entries whose ±step evaluations crossed a ReLU kink; central
    /// differences do not approximate the derivative there, so they are
    /// counted but not compared.
    pub kinks: usize,
}

fn scalar<T: Scalar>(tape: &Tape<'_, T>, v: Var) -> f64 {
    let t = tape.value(v);
    assert_eq!(t.shape(), [1, 1], "loss must be 1x1");
    t.data()[0].as_f64()
}

/// Compares d`loss`/dθ from the tape with (L(θ+h) − L(θ−h)) / 2h for every
/// (or a sample of every) parameter entry.
pub fn grad_check<T, F>(params: &ParamStore<T>, loss: F, opts: &GradCheckOptions) -> GradCheckReport
where
    T: Scalar,
    F: for<'a> Fn(&mut Tape<'a, T>) -> Var,
{
    grad_check_with(params, &loss, params, &loss, opts)
}

/// Like [`grad_check`], but the finite differences are taken on `reference`,
/// a copy of the same parameters at another precision. Used to check 32-bit
/// gradients against a 64-bit difference quotient.
pub fn grad_check_with<T, U, F, G>(
    params: &ParamStore<T>,
    loss: F,
    reference: &ParamStore<U>,
    reference_loss: G,
    opts: &GradCheckOptions,
) -> GradCheckReport
where
    T: Scalar,
    U: Scalar,
    F: for<'a> Fn(&mut Tape<'a, T>) -> Var,
    G: for<'a> Fn(&mut Tape<'a, U>) -> Var,
{
    assert_eq!(params.len(), reference.len(), "parameter stores differ");
    let analytic = {
        let mut tape = Tape::new(params);
        let out = loss(&mut tape);
        tape.backward(&[(out, Tensor::filled(1, 1, T::one()))])
    };
    let eval = |p: &ParamStore<U>| {
        let mut tape = Tape::new(p);
        let out = reference_loss(&mut tape);
        (scalar(&tape, out), tape.relu_signature())
    };
    let (_, signature) = eval(reference);
    let mut rng = crate::rng::rng_from_seed(opts.seed);
    let mut work = reference.clone();
    let mut report = GradCheckReport::default();
    for id in reference.ids() {
        let len = reference.get(id).len();
        let entries: Vec<usize> = match opts.max_entries {
            Some(k) if k < len => {
                let mut v = sample(&mut rng, len, k).into_vec();
                v.sort_unstable();
                v
            }
            _ => (0..len).collect(),
        };
        for i in entries {
            let orig = reference.get(id).data()[i];
            work.get_mut(id).data_mut()[i] = orig + U::of(opts.step);
            let (up, sig_up) = eval(&work);
            work.get_mut(id).data_mut()[i] = orig - U::of(opts.step);
            let (down, sig_down) = eval(&work);
            work.get_mut(id).data_mut()[i] = orig;
            if sig_up != signature || sig_down != signature {
                report.kinks += 1;
                continue;
            }
            let numeric = (up - down) / (2.0 * opts.step);
            let a = analytic[id.index()].data()[i].as_f64();
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(opts.floor);
            report.checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((reference.name(id).to_string(), i));
                report.worst_values = (a, numeric);
            }
        }
    }
    report
}
