use super::{fnv1a, Predictor, PredictorSession};
use crate::arrival::CrossingTracker;
use crate::state::Observation;
use crate::zone::ZoneConfig;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const OBS_DIM: usize = 8;
pub const ENC1_DIM: usize = 10;
pub const ENC2_DIM: usize = 6;
pub const HIDDEN_DIM: usize = 6;
pub const HEAD_HIDDEN: usize = 8;
/// Gate pre-activations are stacked input/forget/candidate/output.
pub(crate) const GATE_ROWS: usize = 4 * HIDDEN_DIM;

/// Longitudinal offsets are commensurate with the control-zone length, so
/// one fixed scale keeps encoded positions around unit magnitude.
pub const POSITION_SCALE: f64 = 100.0;

/// Normalized input row: relative position and speed of the leader, the
/// vehicle itself (own offset is identically zero), the follower, and the
/// ramp vehicle, in that order. Sentinel neighbours encode to +-10 in the
/// position slot, far outside the real data range.
pub fn encode_observation(obs: &Observation, v_max: f64) -> crate::Result<[f64; OBS_DIM]> {
    let own = obs.own;
    let rel = |s: crate::state::VehicleState| (s.position - own.position) / POSITION_SCALE;
    let x = [
        rel(obs.leader),
        obs.leader.speed / v_max,
        0.0,
        own.speed / v_max,
        rel(obs.follower),
        obs.follower.speed / v_max,
        rel(obs.cav),
        obs.cav.speed / v_max,
    ];
    if x.iter().any(|v| !v.is_finite()) {
        return Err(crate::Error::NonFinite("observation encoding"));
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HiddenState {
    pub h: [f64; HIDDEN_DIM],
    pub c: [f64; HIDDEN_DIM],
}

impl HiddenState {
    pub fn zero() -> Self {
        HiddenState {
            h: [0.0; HIDDEN_DIM],
            c: [0.0; HIDDEN_DIM],
        }
    }
}

/// Per-candidate regression head: hidden -> 8 (relu) -> 1 (relu).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadParams {
    pub w1: [[f64; HIDDEN_DIM]; HEAD_HIDDEN],
    pub b1: [f64; HEAD_HIDDEN],
    pub w2: [f64; HEAD_HIDDEN],
    pub b2: f64,
}

/// All weights of the recurrent arrival model: a two-layer relu encoder,
/// one recurrent cell, and an output head per merging candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetParams {
    pub enc1_w: [[f64; OBS_DIM]; ENC1_DIM],
    pub enc1_b: [f64; ENC1_DIM],
    pub enc2_w: [[f64; ENC1_DIM]; ENC2_DIM],
    pub enc2_b: [f64; ENC2_DIM],
    pub wx: [[f64; ENC2_DIM]; GATE_ROWS],
    pub wh: [[f64; HIDDEN_DIM]; GATE_ROWS],
    pub b: [f64; GATE_ROWS],
    pub heads: Vec<HeadParams>,
}

fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl NetParams {
    pub fn zeros(num_heads: usize) -> Self {
        NetParams {
            enc1_w: [[0.0; OBS_DIM]; ENC1_DIM],
            enc1_b: [0.0; ENC1_DIM],
            enc2_w: [[0.0; ENC1_DIM]; ENC2_DIM],
            enc2_b: [0.0; ENC2_DIM],
            wx: [[0.0; ENC2_DIM]; GATE_ROWS],
            wh: [[0.0; HIDDEN_DIM]; GATE_ROWS],
            b: [0.0; GATE_ROWS],
            heads: vec![
                HeadParams {
                    w1: [[0.0; HIDDEN_DIM]; HEAD_HIDDEN],
                    b1: [0.0; HEAD_HIDDEN],
                    w2: [0.0; HEAD_HIDDEN],
                    b2: 0.0,
                };
                num_heads
            ],
        }
    }

    /// Seeded uniform init, each block scaled by the reciprocal square root
    /// of its fan-in (the recurrent block uses the hidden width).
    pub fn init(num_heads: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = NetParams::zeros(num_heads);
        let fill = |slot: &mut f64, scale: f64, rng: &mut ChaCha8Rng| {
            *slot = rng.gen_range(-scale..=scale);
        };
        let s1 = 1.0 / (OBS_DIM as f64).sqrt();
        for row in &mut p.enc1_w {
            for w in row {
                fill(w, s1, &mut rng);
            }
        }
        for w in &mut p.enc1_b {
            fill(w, s1, &mut rng);
        }
        let s2 = 1.0 / (ENC1_DIM as f64).sqrt();
        for row in &mut p.enc2_w {
            for w in row {
                fill(w, s2, &mut rng);
            }
        }
        for w in &mut p.enc2_b {
            fill(w, s2, &mut rng);
        }
        let sr = 1.0 / (HIDDEN_DIM as f64).sqrt();
        for row in &mut p.wx {
            for w in row {
                fill(w, sr, &mut rng);
            }
        }
        for row in &mut p.wh {
            for w in row {
                fill(w, sr, &mut rng);
            }
        }
        for w in &mut p.b {
            fill(w, sr, &mut rng);
        }
        let sh1 = 1.0 / (HIDDEN_DIM as f64).sqrt();
        let sh2 = 1.0 / (HEAD_HIDDEN as f64).sqrt();
        for head in &mut p.heads {
            for row in &mut head.w1 {
                for w in row {
                    fill(w, sh1, &mut rng);
                }
            }
            for w in &mut head.b1 {
                fill(w, sh1, &mut rng);
            }
            for w in &mut head.w2 {
                fill(w, sh2, &mut rng);
            }
            fill(&mut head.b2, sh2, &mut rng);
        }
        p
    }

    pub fn num_heads(&self) -> usize {
        self.heads.len()
    }

    pub fn param_count(&self) -> usize {
        ENC1_DIM * OBS_DIM
            + ENC1_DIM
            + ENC2_DIM * ENC1_DIM
            + ENC2_DIM
            + GATE_ROWS * ENC2_DIM
            + GATE_ROWS * HIDDEN_DIM
            + GATE_ROWS
            + self.heads.len() * (HEAD_HIDDEN * HIDDEN_DIM + HEAD_HIDDEN + HEAD_HIDDEN + 1)
    }

    /// Canonical flattening order; `load_flat` is its exact inverse.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.visit(&mut |v| out.push(v));
        out
    }

    pub fn load_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count());
        let mut it = flat.iter();
        self.visit_mut(&mut |v| *v = *it.next().unwrap());
    }

    pub fn visit(&self, f: &mut impl FnMut(f64)) {
        for row in &self.enc1_w {
            for &w in row {
                f(w);
            }
        }
        for &w in &self.enc1_b {
            f(w);
        }
        for row in &self.enc2_w {
            for &w in row {
                f(w);
            }
        }
        for &w in &self.enc2_b {
            f(w);
        }
        for row in &self.wx {
            for &w in row {
                f(w);
            }
        }
        for row in &self.wh {
            for &w in row {
                f(w);
            }
        }
        for &w in &self.b {
            f(w);
        }
        for head in &self.heads {
            for row in &head.w1 {
                for &w in row {
                    f(w);
                }
            }
            for &w in &head.b1 {
                f(w);
            }
            for &w in &head.w2 {
                f(w);
            }
            f(head.b2);
        }
    }

    pub fn visit_mut(&mut self, f: &mut impl FnMut(&mut f64)) {
        for row in &mut self.enc1_w {
            for w in row {
                f(w);
            }
        }
        for w in &mut self.enc1_b {
            f(w);
        }
        for row in &mut self.enc2_w {
            for w in row {
                f(w);
            }
        }
        for w in &mut self.enc2_b {
            f(w);
        }
        for row in &mut self.wx {
            for w in row {
                f(w);
            }
        }
        for row in &mut self.wh {
            for w in row {
                f(w);
            }
        }
        for w in &mut self.b {
            f(w);
        }
        for head in &mut self.heads {
            for row in &mut head.w1 {
                for w in row {
                    f(w);
                }
            }
            for w in &mut head.b1 {
                f(w);
            }
            for w in &mut head.w2 {
                f(w);
            }
            f(&mut head.b2);
        }
    }

    /// `self += alpha * other`, matched field by field.
    pub fn scaled_add(&mut self, alpha: f64, other: &NetParams) {
        assert_eq!(self.heads.len(), other.heads.len());
        let flat = other.to_flat();
        let mut i = 0;
        self.visit_mut(&mut |v| {
            *v += alpha * flat[i];
            i += 1;
        });
    }

    pub fn fingerprint(&self) -> u64 {
        fnv1a(
            std::iter::once(0x6e65_7470u64)
                .chain(std::iter::once(self.heads.len() as u64))
                .chain(self.to_flat().into_iter().map(f64::to_bits)),
        )
    }
}

/// Encoder forward pass; returns both relu layers (the second is the
/// recurrent cell's input).
pub(crate) fn encoder_forward(
    p: &NetParams,
    x0: &[f64; OBS_DIM],
) -> ([f64; ENC1_DIM], [f64; ENC2_DIM]) {
    let mut a1 = [0.0; ENC1_DIM];
    for k in 0..ENC1_DIM {
        let mut z = p.enc1_b[k];
        for j in 0..OBS_DIM {
            z += p.enc1_w[k][j] * x0[j];
        }
        a1[k] = relu(z);
    }
    let mut a2 = [0.0; ENC2_DIM];
    for k in 0..ENC2_DIM {
        let mut z = p.enc2_b[k];
        for j in 0..ENC1_DIM {
            z += p.enc2_w[k][j] * a1[j];
        }
        a2[k] = relu(z);
    }
    (a1, a2)
}

/// Intermediate values of one recurrent step, kept around for training.
#[derive(Clone)]
pub(crate) struct StepCache {
    pub x0: [f64; OBS_DIM],
    pub a1: [f64; ENC1_DIM],
    pub a2: [f64; ENC2_DIM],
    pub i: [f64; HIDDEN_DIM],
    pub f: [f64; HIDDEN_DIM],
    pub g: [f64; HIDDEN_DIM],
    pub o: [f64; HIDDEN_DIM],
    pub c_prev: [f64; HIDDEN_DIM],
    pub h_prev: [f64; HIDDEN_DIM],
    pub tanh_c: [f64; HIDDEN_DIM],
}

pub(crate) fn step_hidden_cached(
    p: &NetParams,
    prev: &HiddenState,
    x0: &[f64; OBS_DIM],
) -> (HiddenState, StepCache) {
    let (a1, a2) = encoder_forward(p, x0);
    let mut z = p.b;
    for r in 0..GATE_ROWS {
        for k in 0..ENC2_DIM {
            z[r] += p.wx[r][k] * a2[k];
        }
        for k in 0..HIDDEN_DIM {
            z[r] += p.wh[r][k] * prev.h[k];
        }
    }
    let mut cache = StepCache {
        x0: *x0,
        a1,
        a2,
        i: [0.0; HIDDEN_DIM],
        f: [0.0; HIDDEN_DIM],
        g: [0.0; HIDDEN_DIM],
        o: [0.0; HIDDEN_DIM],
        c_prev: prev.c,
        h_prev: prev.h,
        tanh_c: [0.0; HIDDEN_DIM],
    };
    let mut next = HiddenState::zero();
    for j in 0..HIDDEN_DIM {
        let i_g = sigmoid(z[j]);
        let f_g = sigmoid(z[HIDDEN_DIM + j]);
        let g_g = z[2 * HIDDEN_DIM + j].tanh();
        let o_g = sigmoid(z[3 * HIDDEN_DIM + j]);
        let c = f_g * prev.c[j] + i_g * g_g;
        let tc = c.tanh();
        cache.i[j] = i_g;
        cache.f[j] = f_g;
        cache.g[j] = g_g;
        cache.o[j] = o_g;
        cache.tanh_c[j] = tc;
        next.c[j] = c;
        next.h[j] = o_g * tc;
    }
    (next, cache)
}

/// One recurrent update from an encoded observation.
pub fn step_hidden(p: &NetParams, prev: &HiddenState, x0: &[f64; OBS_DIM]) -> HiddenState {
    step_hidden_cached(p, prev, x0).0
}

/// Per-head cache for the decoder backward pass.
#[derive(Clone)]
pub(crate) struct HeadCache {
    pub h1: [f64; HEAD_HIDDEN],
    pub z2: f64,
}

pub(crate) fn head_forward(head: &HeadParams, h: &[f64; HIDDEN_DIM]) -> (f64, HeadCache) {
    let mut h1 = [0.0; HEAD_HIDDEN];
    for k in 0..HEAD_HIDDEN {
        let mut z = head.b1[k];
        for j in 0..HIDDEN_DIM {
            z += head.w1[k][j] * h[j];
        }
        h1[k] = relu(z);
    }
    let mut z2 = head.b2;
    for k in 0..HEAD_HIDDEN {
        z2 += head.w2[k] * h1[k];
    }
    (relu(z2), HeadCache { h1, z2 })
}

/// Remaining travel time per candidate, always non-negative.
pub(crate) fn decode_tta(p: &NetParams, h: &HiddenState) -> Vec<f64> {
    p.heads.iter().map(|hd| head_forward(hd, &h.h).0).collect()
}

/// Absolute predicted arrival times: `now` plus the non-negative remaining
/// time each head emits. Never earlier than `now`.
pub fn decode_arrivals(p: &NetParams, h: &HiddenState, now: f64) -> Vec<f64> {
    decode_tta(p, h).into_iter().map(|tta| now + tta).collect()
}

/// Recurrent predictor wrapper satisfying the session interface.
pub struct NetPredictor {
    pub params: NetParams,
    pub config: ZoneConfig,
}

impl NetPredictor {
    pub fn new(params: NetParams, config: ZoneConfig) -> crate::Result<Self> {
        config.validate()?;
        if params.num_heads() != config.num_candidates() {
            return Err(crate::Error::InvalidConfig(format!(
                "heads: model has {} output heads but the zone defines {} candidates",
                params.num_heads(),
                config.num_candidates()
            )));
        }
        Ok(NetPredictor { params, config })
    }
}

struct NetSession<'a> {
    p: &'a NetPredictor,
    hidden: HiddenState,
    tracker: CrossingTracker,
    steps: usize,
}

impl PredictorSession for NetSession<'_> {
    fn observe(&mut self, obs: &Observation) {
        let x0 = encode_observation(obs, self.p.config.v_max)
            .expect("simulator observations are finite");
        self.hidden = step_hidden(&self.p.params, &self.hidden, &x0);
        let t = self.steps as f64 * self.p.config.dt;
        self.tracker.observe(t, obs.own.position);
        self.steps += 1;
    }

    fn predict(&self, now: f64) -> Vec<f64> {
        let mut mu = decode_arrivals(&self.p.params, &self.hidden, now);
        for (m, actual) in mu.iter_mut().zip(self.tracker.crossings()) {
            if let Some(t) = actual {
                *m = *t;
            }
        }
        mu
    }

    fn crossings(&self) -> &[Option<f64>] {
        self.tracker.crossings()
    }
}

impl Predictor for NetPredictor {
    fn session(&self, _subject: usize) -> Box<dyn PredictorSession + '_> {
        Box::new(NetSession {
            p: self,
            hidden: HiddenState::zero(),
            tracker: CrossingTracker::new(self.config.candidate_positions.clone()),
            steps: 0,
        })
    }

    fn num_candidates(&self) -> usize {
        self.config.num_candidates()
    }

    fn fingerprint(&self) -> u64 {
        let cfg = self
            .config
            .candidate_positions
            .iter()
            .map(|p| p.to_bits())
            .chain([self.config.dt.to_bits(), self.config.v_max.to_bits()]);
        fnv1a(std::iter::once(self.params.fingerprint()).chain(cfg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::VehicleState;
    use approx::assert_relative_eq;

    fn obs(
        leader: Option<(f64, f64)>,
        own: (f64, f64),
        follower: Option<(f64, f64)>,
        cav: Option<(f64, f64)>,
    ) -> Observation {
        let mk = |t: (f64, f64)| VehicleState::new(t.0, t.1);
        Observation::with_sentinels(leader.map(mk), mk(own), follower.map(mk), cav.map(mk))
    }

    #[test]
    fn encoding_of_identical_neighbour_states() {
        let o = obs(
            Some((50.0, 30.0)),
            (50.0, 30.0),
            Some((50.0, 30.0)),
            Some((50.0, 30.0)),
        );
        let x = encode_observation(&o, 35.0).unwrap();
        assert_eq!(x[0], 0.0);
        assert_eq!(x[2], 0.0);
        assert_eq!(x[4], 0.0);
        assert_eq!(x[6], 0.0);
        for idx in [1, 3, 5, 7] {
            assert_relative_eq!(x[idx], 30.0 / 35.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn encoding_scales_offsets_by_zone_length() {
        let o = obs(Some((70.0, 30.0)), (20.0, 25.0), None, None);
        let x = encode_observation(&o, 35.0).unwrap();
        assert_relative_eq!(x[0], 0.5, epsilon = 1e-15);
        // Absent neighbours sit at the sentinel offset: +-10 when scaled.
        assert_relative_eq!(x[4], -10.0, epsilon = 1e-15);
        assert_relative_eq!(x[6], 10.0, epsilon = 1e-15);
        assert_relative_eq!(x[5], 25.0 / 35.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_params_hold_hidden_at_origin() {
        let p = NetParams::zeros(3);
        let mut h = HiddenState::zero();
        let x = [0.3; OBS_DIM];
        for _ in 0..25 {
            h = step_hidden(&p, &h, &x);
            assert_eq!(h.h, [0.0; HIDDEN_DIM]);
            assert_eq!(h.c, [0.0; HIDDEN_DIM]);
        }
    }

    #[test]
    fn hidden_activations_stay_bounded() {
        let p = NetParams::init(5, 99);
        let mut h = HiddenState::zero();
        for k in 0..500 {
            let x = [((k * 37) % 13) as f64 - 6.0; OBS_DIM];
            h = step_hidden(&p, &h, &x);
            for j in 0..HIDDEN_DIM {
                assert!(h.h[j].abs() < 1.0);
                assert!(h.h[j].is_finite() && h.c[j].is_finite());
            }
        }
    }

    // Independent re-derivation of the cell equations, written against the
    // textbook formulas with explicit gate slices rather than the fused
    // update above.
    fn reference_step(p: &NetParams, prev: &HiddenState, x0: &[f64; OBS_DIM]) -> HiddenState {
        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        let dot = |w: &[f64], v: &[f64]| w.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        let mut a1 = vec![0.0; ENC1_DIM];
        for k in 0..ENC1_DIM {
            a1[k] = (dot(&p.enc1_w[k], x0) + p.enc1_b[k]).max(0.0);
        }
        let mut a2 = vec![0.0; ENC2_DIM];
        for k in 0..ENC2_DIM {
            a2[k] = (dot(&p.enc2_w[k], &a1) + p.enc2_b[k]).max(0.0);
        }
        let z: Vec<f64> = (0..GATE_ROWS)
            .map(|r| dot(&p.wx[r], &a2) + dot(&p.wh[r], &prev.h) + p.b[r])
            .collect();
        let (zi, rest) = z.split_at(HIDDEN_DIM);
        let (zf, rest) = rest.split_at(HIDDEN_DIM);
        let (zg, zo) = rest.split_at(HIDDEN_DIM);
        let mut out = HiddenState::zero();
        for j in 0..HIDDEN_DIM {
            out.c[j] = sig(zf[j]) * prev.c[j] + sig(zi[j]) * zg[j].tanh();
            out.h[j] = sig(zo[j]) * out.c[j].tanh();
        }
        out
    }

    #[test]
    fn recurrent_step_matches_reference_derivation() {
        let p = NetParams::init(4, 7);
        let mut h = HiddenState::zero();
        let mut r = HiddenState::zero();
        for k in 0..40 {
            let mut x = [0.0; OBS_DIM];
            for (j, slot) in x.iter_mut().enumerate() {
                *slot = ((k * 7 + j * 3) % 11) as f64 / 5.0 - 1.0;
            }
            h = step_hidden(&p, &h, &x);
            r = reference_step(&p, &r, &x);
            for j in 0..HIDDEN_DIM {
                assert_relative_eq!(h.h[j], r.h[j], epsilon = 1e-6);
                assert_relative_eq!(h.c[j], r.c[j], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn zero_decoder_predicts_now() {
        let p = NetParams::zeros(10);
        let h = HiddenState {
            h: [0.4; HIDDEN_DIM],
            c: [0.4; HIDDEN_DIM],
        };
        let mu = decode_arrivals(&p, &h, 12.5);
        assert_eq!(mu, vec![12.5; 10]);
    }

    #[test]
    fn decoded_arrivals_never_precede_now() {
        for seed in 0..20 {
            let p = NetParams::init(10, seed);
            let mut h = HiddenState::zero();
            for k in 0..30 {
                let x = [(k as f64 / 30.0) - 0.5; OBS_DIM];
                h = step_hidden(&p, &h, &x);
            }
            for &mu in &decode_arrivals(&p, &h, 3.25) {
                assert!(mu >= 3.25);
            }
        }
    }

    #[test]
    fn parameter_count_matches_layout() {
        let p = NetParams::zeros(10);
        assert_eq!(p.param_count(), 468 + 65 * 10);
        assert_eq!(p.to_flat().len(), p.param_count());
    }

    #[test]
    fn flat_roundtrip_is_exact() {
        let p = NetParams::init(6, 123);
        let flat = p.to_flat();
        let mut q = NetParams::zeros(6);
        q.load_flat(&flat);
        assert_eq!(p, q);
        assert_eq!(p.fingerprint(), q.fingerprint());
        let mut r = q.clone();
        r.scaled_add(1e-3, &p);
        assert_ne!(r, q);
        assert_ne!(r.fingerprint(), q.fingerprint());
    }

    #[test]
    fn seeded_init_reproducible() {
        assert_eq!(NetParams::init(3, 5), NetParams::init(3, 5));
        assert_ne!(NetParams::init(3, 5), NetParams::init(3, 6));
    }

    #[test]
    fn session_substitutes_observed_crossings() {
        let config = ZoneConfig::default();
        let params = NetParams::init(config.num_candidates(), 1);
        let net = NetPredictor::new(params, config.clone()).unwrap();
        let mut s = net.session(0);
        // Drive the subject straight through the first candidate point.
        let mut pos = config.candidate_positions[0] - 3.0;
        let v = 20.0;
        let mut step = 0usize;
        while pos < config.candidate_positions[0] + 5.0 {
            let o = obs(None, (pos, v), None, None);
            s.observe(&o);
            pos += v * config.dt;
            step += 1;
        }
        let now = (step - 1) as f64 * config.dt;
        let mu = s.predict(now);
        let crossing = s.crossings()[0].expect("first candidate was crossed");
        assert_eq!(mu[0], crossing);
        assert!(crossing < now);
        // Uncrossed candidates still come from the decoder.
        assert!(s.crossings()[config.num_candidates() - 1].is_none());
        assert!(mu[config.num_candidates() - 1] >= now);
    }
}
