use rand::Rng;

use crate::dataset::NormalizedAdjacency;
use crate::error::{Error, Result};
use crate::features::FeatureBundle;
use crate::model::{forward, ModelConfig, ModelParams};
use crate::numeric::gradcheck::{central_difference, max_relative_error};
use crate::numeric::{Tensor2, Tape, Var};

/// `mean(-ln σ(pos - neg)) + λ · penalty / B` over `B × 1` score columns.
/// `penalty` is a `1 × 1` sum of squares, or `None` for no regularization.
pub fn bpr_loss(tape: &mut Tape, pos: Var, neg: Var, penalty: Option<Var>, lambda: f64) -> Result<Var> {
    let (b, c) = tape.value(pos).shape();
    if tape.value(neg).shape() != (b, c) || c != 1 {
        return Err(Error::Shape {
            op: "bpr_loss",
            left: (b, c),
            right: tape.value(neg).shape(),
        });
    }
    if b == 0 {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let margin = tape.sub(pos, neg)?;
    let ls = tape.log_sigmoid(margin)?;
    let m = tape.mean(ls)?;
    let mut loss = tape.scale(m, -1.0)?;
    if let Some(p) = penalty {
        if lambda != 0.0 {
            let reg = tape.scale(p, lambda / b as f64)?;
            loss = tape.add(loss, reg)?;
        }
    }
    Ok(loss)
}

/// Unregularized BPR loss of two plain score vectors.
pub fn bpr_loss_from_scores(pos: &[f64], neg: &[f64]) -> Result<f64> {
    let mut tape = Tape::new();
    let p = tape.constant(Tensor2::new(pos.len(), 1, pos.to_vec())?);
    let n = tape.constant(Tensor2::new(neg.len(), 1, neg.to_vec())?);
    let loss = bpr_loss(&mut tape, p, n, None, 0.0)?;
    Ok(tape.scalar_value(loss))
}

/// Regularization setting for [`batch_objective`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularization {
    pub lambda: f64,
    pub weights: bool,
}

#[derive(Debug, Clone)]
pub struct BatchLoss {
    pub loss: f64,
    /// One gradient per tensor, in `ModelParams::named_tensors` order.
    pub grads: Vec<Tensor2>,
}

/// Forward + backward for a batch of `(user, positive, negative)` triples.
pub fn batch_objective<R: Rng + ?Sized>(
    params: &ModelParams,
    adj: &NormalizedAdjacency,
    bundle: &FeatureBundle,
    cfg: &ModelConfig,
    triples: &[(usize, usize, usize)],
    reg: Regularization,
    dropout_rng: Option<&mut R>,
) -> Result<BatchLoss> {
    let mut tape = Tape::new();
    let (loss, pv) = batch_loss_on_tape(&mut tape, params, adj, bundle, cfg, triples, reg, dropout_rng)?;
    let mut g = tape.backward(loss)?;
    Ok(BatchLoss {
        loss: tape.scalar_value(loss),
        grads: pv.iter().map(|&v| g.take(v)).collect(),
    })
}

/// Loss value only; used by gradient checks.
pub fn batch_loss_value(
    params: &ModelParams,
    adj: &NormalizedAdjacency,
    bundle: &FeatureBundle,
    cfg: &ModelConfig,
    triples: &[(usize, usize, usize)],
    reg: Regularization,
) -> Result<f64> {
    let mut tape = Tape::new();
    let (loss, _) =
        batch_loss_on_tape::<rand_chacha::ChaCha8Rng>(&mut tape, params, adj, bundle, cfg, triples, reg, None)?;
    Ok(tape.scalar_value(loss))
}

#[allow(clippy::too_many_arguments)]
fn batch_loss_on_tape<R: Rng + ?Sized>(
    tape: &mut Tape,
    params: &ModelParams,
    adj: &NormalizedAdjacency,
    bundle: &FeatureBundle,
    cfg: &ModelConfig,
    triples: &[(usize, usize, usize)],
    reg: Regularization,
    dropout_rng: Option<&mut R>,
) -> Result<(Var, Vec<Var>)> {
    let out = forward(tape, params, adj, bundle, cfg, dropout_rng)?;
    let n = params.num_users();
    let users: Vec<usize> = triples.iter().map(|t| t.0).collect();
    let pos: Vec<usize> = triples.iter().map(|t| n + t.1).collect();
    let neg: Vec<usize> = triples.iter().map(|t| n + t.2).collect();

    let score = |tape: &mut Tape, a: &[usize], b: &[usize], m: Var| -> Result<Var> {
        let ea = tape.gather_rows(m, a)?;
        let eb = tape.gather_rows(m, b)?;
        let prod = tape.mul(ea, eb)?;
        tape.row_sum(prod)
    };
    let ps = score(tape, &users, &pos, out.final_emb)?;
    let ns = score(tape, &users, &neg, out.final_emb)?;

    let penalty = if reg.lambda != 0.0 {
        let mut terms = Vec::new();
        for idx in [&users, &pos, &neg] {
            let rows = tape.gather_rows(out.e0, idx)?;
            terms.push(tape.sum_squares(rows)?);
        }
        if reg.weights {
            for k in params.weight_indices() {
                terms.push(tape.sum_squares(out.params.all[k])?);
            }
        }
        let mut total = terms[0];
        for &t in &terms[1..] {
            total = tape.add(total, t)?;
        }
        Some(total)
    } else {
        None
    };
    let loss = bpr_loss(tape, ps, ns, penalty, reg.lambda)?;
    Ok((loss, out.params.all))
}

/// Largest relative error between the analytic batch gradient and central
/// differences with step `eps`, over every entry of every parameter tensor.
/// Dropout must be off in `cfg`.
pub fn gradient_check(
    params: &ModelParams,
    adj: &NormalizedAdjacency,
    bundle: &FeatureBundle,
    cfg: &ModelConfig,
    triples: &[(usize, usize, usize)],
    reg: Regularization,
    eps: f64,
) -> Result<f64> {
    if cfg.message_dropout != 0.0 {
        return Err(Error::InvalidArgument("gradient check needs message dropout off".into()));
    }
    let analytic = batch_objective::<rand_chacha::ChaCha8Rng>(params, adj, bundle, cfg, triples, reg, None)?;
    let mut worst: f64 = 0.0;
    let mut failure = None;
    for (k, g) in analytic.grads.iter().enumerate() {
        let base = params.tensors()[k].clone();
        let numeric = central_difference(&base, eps, |x| {
            let mut probe = params.clone();
            *probe.tensors_mut()[k] = x.clone();
            match batch_loss_value(&probe, adj, bundle, cfg, triples, reg) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        });
        if let Some(e) = failure.take() {
            return Err(e);
        }
        worst = worst.max(max_relative_error(g, &numeric));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_scores_give_ln2() {
        let v = bpr_loss_from_scores(&[0.3, -1.2, 4.0], &[0.3, -1.2, 4.0]).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() <= 1e-12);
    }

    #[test]
    fn saturated_margin_vanishes() {
        assert!(bpr_loss_from_scores(&[20.0], &[0.0]).unwrap() < 1e-8);
    }

    #[test]
    fn two_pair_mean() {
        let v = bpr_loss_from_scores(&[1.0, 20.0], &[1.0, 0.0]).unwrap();
        let expected = (std::f64::consts::LN_2 + (1.0 + (-20f64).exp()).ln()) / 2.0;
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.346574).abs() < 1e-6);
    }

    #[test]
    fn empty_and_mismatched_batches_rejected() {
        assert!(bpr_loss_from_scores(&[], &[]).is_err());
        assert!(bpr_loss_from_scores(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn penalty_scaled_by_batch() {
        let mut tape = Tape::new();
        let p = tape.constant(Tensor2::new(2, 1, vec![0.0, 0.0]).unwrap());
        let n = tape.constant(Tensor2::new(2, 1, vec![0.0, 0.0]).unwrap());
        let pen = tape.constant(Tensor2::scalar(8.0).unwrap());
        let loss = bpr_loss(&mut tape, p, n, Some(pen), 0.5).unwrap();
        assert!((tape.scalar_value(loss) - (std::f64::consts::LN_2 + 2.0)).abs() < 1e-15);
    }
}
