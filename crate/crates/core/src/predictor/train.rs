use super::net::{
    encode_observation, head_forward, step_hidden_cached, HeadCache, HiddenState, NetParams,
    StepCache, ENC1_DIM, ENC2_DIM, GATE_ROWS, HEAD_HIDDEN, HIDDEN_DIM, OBS_DIM,
};
use crate::state::HdvTrajectory;
use crate::zone::ZoneConfig;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            epochs: 50,
            batch_size: 8,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedNet {
    pub params: NetParams,
    /// Mean squared error per epoch, measured on the batches as they were
    /// visited (before each update).
    pub loss_curve: Vec<f64>,
}

/// Supervised target at step `t` for candidate `l`: remaining time until
/// the labelled crossing, floored at zero once the crossing has happened
/// (the heads emit non-negative remaining times, and zero is the correct
/// remaining time for a passed candidate). Candidates never reached within
/// the horizon are masked out entirely.
fn target_tta(traj: &HdvTrajectory, t: usize, l: usize, dt: f64) -> Option<f64> {
    traj.arrivals
        .get(l)
        .map(|tau| (tau - t as f64 * dt).max(0.0))
}

/// Squared-error sum and term count for one sequence; gradients of the
/// unnormalized sum accumulate into `grads`.
pub(crate) fn sequence_grads(
    p: &NetParams,
    traj: &HdvTrajectory,
    config: &ZoneConfig,
    grads: &mut NetParams,
) -> (f64, usize) {
    let num_heads = p.num_heads();
    let dt = config.dt;
    let steps = traj.observations.len();
    if steps == 0 {
        return (0.0, 0);
    }

    // Forward sweep, caching everything the backward pass needs.
    let mut hidden = HiddenState::zero();
    let mut step_caches: Vec<StepCache> = Vec::with_capacity(steps);
    let mut head_caches: Vec<Vec<HeadCache>> = Vec::with_capacity(steps);
    let mut hiddens: Vec<HiddenState> = Vec::with_capacity(steps + 1);
    let mut errors: Vec<Vec<Option<f64>>> = Vec::with_capacity(steps);
    hiddens.push(hidden);
    let mut sq_sum = 0.0;
    let mut terms = 0usize;
    for (t, obs) in traj.observations.iter().enumerate() {
        let x0 =
            encode_observation(obs, config.v_max).expect("trajectory observations must be finite");
        let (next, cache) = step_hidden_cached(p, &hidden, &x0);
        hidden = next;
        hiddens.push(hidden);
        step_caches.push(cache);
        let mut hc_row = Vec::with_capacity(num_heads);
        let mut err_row = Vec::with_capacity(num_heads);
        for (l, head) in p.heads.iter().enumerate() {
            let (pred, hc) = head_forward(head, &hidden.h);
            hc_row.push(hc);
            match target_tta(traj, t, l, dt) {
                Some(target) => {
                    let e = pred - target;
                    sq_sum += e * e;
                    terms += 1;
                    err_row.push(Some(e));
                }
                None => err_row.push(None),
            }
        }
        head_caches.push(hc_row);
        errors.push(err_row);
    }

    // Backward sweep through time.
    let mut dh_next = [0.0; HIDDEN_DIM];
    let mut dc_next = [0.0; HIDDEN_DIM];
    for t in (0..steps).rev() {
        let h_t = &hiddens[t + 1];
        let mut dh = dh_next;
        for l in 0..num_heads {
            let Some(e) = errors[t][l] else { continue };
            let hc = &head_caches[t][l];
            let head = &p.heads[l];
            let ghead = &mut grads.heads[l];
            let dpred = 2.0 * e;
            let dz2 = if hc.z2 > 0.0 { dpred } else { 0.0 };
            ghead.b2 += dz2;
            for k in 0..HEAD_HIDDEN {
                ghead.w2[k] += dz2 * hc.h1[k];
                let dh1 = dz2 * head.w2[k];
                let dz1 = if hc.h1[k] > 0.0 { dh1 } else { 0.0 };
                ghead.b1[k] += dz1;
                for j in 0..HIDDEN_DIM {
                    ghead.w1[k][j] += dz1 * h_t.h[j];
                    dh[j] += dz1 * head.w1[k][j];
                }
            }
        }

        let cache = &step_caches[t];
        let mut dz = [0.0; GATE_ROWS];
        let mut dc_prev = [0.0; HIDDEN_DIM];
        for j in 0..HIDDEN_DIM {
            let do_ = dh[j] * cache.tanh_c[j];
            let dc = dc_next[j] + dh[j] * cache.o[j] * (1.0 - cache.tanh_c[j] * cache.tanh_c[j]);
            let di = dc * cache.g[j];
            let df = dc * cache.c_prev[j];
            let dg = dc * cache.i[j];
            dc_prev[j] = dc * cache.f[j];
            dz[j] = di * cache.i[j] * (1.0 - cache.i[j]);
            dz[HIDDEN_DIM + j] = df * cache.f[j] * (1.0 - cache.f[j]);
            dz[2 * HIDDEN_DIM + j] = dg * (1.0 - cache.g[j] * cache.g[j]);
            dz[3 * HIDDEN_DIM + j] = do_ * cache.o[j] * (1.0 - cache.o[j]);
        }
        let mut da2 = [0.0; ENC2_DIM];
        let mut dh_prev = [0.0; HIDDEN_DIM];
        for r in 0..GATE_ROWS {
            grads.b[r] += dz[r];
            for k in 0..ENC2_DIM {
                grads.wx[r][k] += dz[r] * cache.a2[k];
                da2[k] += dz[r] * p.wx[r][k];
            }
            for k in 0..HIDDEN_DIM {
                grads.wh[r][k] += dz[r] * cache.h_prev[k];
                dh_prev[k] += dz[r] * p.wh[r][k];
            }
        }

        let mut da1 = [0.0; ENC1_DIM];
        for j in 0..ENC2_DIM {
            let dz_e2 = if cache.a2[j] > 0.0 { da2[j] } else { 0.0 };
            grads.enc2_b[j] += dz_e2;
            for k in 0..ENC1_DIM {
                grads.enc2_w[j][k] += dz_e2 * cache.a1[k];
                da1[k] += dz_e2 * p.enc2_w[j][k];
            }
        }
        for k in 0..ENC1_DIM {
            let dz_e1 = if cache.a1[k] > 0.0 { da1[k] } else { 0.0 };
            grads.enc1_b[k] += dz_e1;
            for j in 0..OBS_DIM {
                grads.enc1_w[k][j] += dz_e1 * cache.x0[j];
            }
        }

        dh_next = dh_prev;
        dc_next = dc_prev;
    }

    (sq_sum, terms)
}

fn validate_dataset(
    dataset: &[HdvTrajectory],
    config: &ZoneConfig,
    context: &'static str,
) -> crate::Result<()> {
    if dataset.is_empty() {
        return Err(crate::Error::EmptyDataset(context));
    }
    let l = config.num_candidates();
    for (i, traj) in dataset.iter().enumerate() {
        if traj.arrivals.times.len() != l {
            return Err(crate::Error::InvalidConfig(format!(
                "dataset[{i}].arrivals: expected {l} entries, got {}",
                traj.arrivals.times.len()
            )));
        }
    }
    Ok(())
}

/// Mean squared error of the decoded remaining times over every unmasked
/// (step, candidate) term in the dataset.
pub fn dataset_loss(p: &NetParams, dataset: &[HdvTrajectory], config: &ZoneConfig) -> f64 {
    let mut sq = 0.0;
    let mut terms = 0usize;
    for traj in dataset {
        let mut hidden = HiddenState::zero();
        for (t, obs) in traj.observations.iter().enumerate() {
            let x0 = encode_observation(obs, config.v_max)
                .expect("trajectory observations must be finite");
            hidden = super::net::step_hidden(p, &hidden, &x0);
            for (l, head) in p.heads.iter().enumerate() {
                if let Some(target) = target_tta(traj, t, l, config.dt) {
                    let (pred, _) = head_forward(head, &hidden.h);
                    let e = pred - target;
                    sq += e * e;
                    terms += 1;
                }
            }
        }
    }
    if terms == 0 {
        0.0
    } else {
        sq / terms as f64
    }
}

/// Backprop-through-time training with plain minibatch gradient descent.
/// Fully deterministic for a given `(dataset, config, hyper)` triple: the
/// seed fixes both the initialization and the per-epoch shuffle order.
pub fn train(
    dataset: &[HdvTrajectory],
    config: &ZoneConfig,
    hyper: &TrainConfig,
) -> crate::Result<TrainedNet> {
    config.validate()?;
    validate_dataset(dataset, config, "training set")?;
    if hyper.batch_size == 0 {
        return Err(crate::Error::InvalidConfig(
            "batch_size: must be >= 1".into(),
        ));
    }
    if !hyper.learning_rate.is_finite() || hyper.learning_rate < 0.0 {
        return Err(crate::Error::InvalidConfig(format!(
            "learning_rate: must be finite and >= 0, got {}",
            hyper.learning_rate
        )));
    }

    let num_heads = config.num_candidates();
    let mut params = NetParams::init(num_heads, hyper.seed);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(hyper.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut loss_curve = Vec::with_capacity(hyper.epochs);

    for epoch in 0..hyper.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_sq = 0.0;
        let mut epoch_terms = 0usize;
        for batch in order.chunks(hyper.batch_size) {
            let mut grads = NetParams::zeros(num_heads);
            let mut batch_terms = 0usize;
            for &idx in batch {
                let (sq, n) = sequence_grads(&params, &dataset[idx], config, &mut grads);
                epoch_sq += sq;
                batch_terms += n;
            }
            epoch_terms += batch_terms;
            if batch_terms > 0 {
                params.scaled_add(-hyper.learning_rate / batch_terms as f64, &grads);
            }
        }
        let mean = if epoch_terms == 0 {
            0.0
        } else {
            epoch_sq / epoch_terms as f64
        };
        if !mean.is_finite() {
            return Err(crate::Error::TrainingDiverged { epoch, loss: mean });
        }
        loss_curve.push(mean);
    }

    Ok(TrainedNet { params, loss_curve })
}
