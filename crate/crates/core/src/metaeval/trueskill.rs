//! Two-player TrueSkill over a sequence of pairwise comparisons.

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::{Comparison, MetaEvalError, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrueSkillParams {
    pub mu0: f64,
    pub sigma0: f64,
    pub beta_skill: f64,
    pub tau: f64,
    pub draw_probability: f64,
    pub shuffle_seed: u64,
}

impl Default for TrueSkillParams {
    fn default() -> Self {
        let sigma0 = 25.0 / 3.0;
        TrueSkillParams {
            mu0: 25.0,
            sigma0,
            beta_skill: sigma0 / 2.0,
            tau: sigma0 / 100.0,
            draw_probability: 0.10,
            shuffle_seed: 0,
        }
    }
}

impl TrueSkillParams {
    pub fn validate(&self) -> Result<(), MetaEvalError> {
        let positive = [self.mu0, self.sigma0, self.beta_skill, self.tau];
        if positive.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(MetaEvalError::InvalidParams("mu0, sigma0, beta_skill and tau must be positive".into()));
        }
        if !(self.draw_probability > 0.0 && self.draw_probability < 1.0) {
            return Err(MetaEvalError::InvalidParams(format!(
                "draw_probability must lie in (0, 1), got {}",
                self.draw_probability
            )));
        }
        Ok(())
    }

    /// Draw margin ε with `2Φ(ε / (√2 β)) − 1 = draw_probability`.
    pub fn draw_margin(&self) -> f64 {
        std_normal().inverse_cdf((self.draw_probability + 1.0) / 2.0) * std::f64::consts::SQRT_2 * self.beta_skill
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemRating {
    pub system: String,
    pub mu: f64,
    pub sigma: f64,
    /// `mu − 3·sigma`.
    pub conservative: f64,
}

fn std_normal() -> Normal {
    Normal::standard()
}

const TINY: f64 = 2.222758749e-162;

fn v_win(t: f64, e: f64) -> f64 {
    let n = std_normal();
    let x = t - e;
    let denom = n.cdf(x);
    if denom < TINY { -x } else { n.pdf(x) / denom }
}

fn w_win(t: f64, e: f64) -> f64 {
    let v = v_win(t, e);
    (v * (v + t - e)).clamp(f64::MIN_POSITIVE, 1.0)
}

fn v_draw(t: f64, e: f64) -> f64 {
    let n = std_normal();
    let abs_t = t.abs();
    let (hi, lo) = (e - abs_t, -e - abs_t);
    let denom = n.cdf(hi) - n.cdf(lo);
    let v = if denom < TINY { hi } else { (n.pdf(lo) - n.pdf(hi)) / denom };
    if t < 0.0 { -v } else { v }
}

fn w_draw(t: f64, e: f64) -> f64 {
    let n = std_normal();
    let abs_t = t.abs();
    let (hi, lo) = (e - abs_t, -e - abs_t);
    let denom = n.cdf(hi) - n.cdf(lo);
    if denom < TINY {
        return 1.0;
    }
    let v = v_draw(abs_t, e);
    (v * v + (hi * n.pdf(hi) - lo * n.pdf(lo)) / denom).clamp(f64::MIN_POSITIVE, 1.0)
}

#[derive(Debug, Clone, Copy)]
struct Skill {
    mu: f64,
    var: f64,
}

fn update(winner: &mut Skill, loser: &mut Skill, draw: bool, p: &TrueSkillParams, margin: f64) {
    let tau2 = p.tau * p.tau;
    winner.var += tau2;
    loser.var += tau2;
    let c2 = 2.0 * p.beta_skill * p.beta_skill + winner.var + loser.var;
    let c = c2.sqrt();
    let t = (winner.mu - loser.mu) / c;
    let e = margin / c;
    let (v, w) = if draw { (v_draw(t, e), w_draw(t, e)) } else { (v_win(t, e), w_win(t, e)) };
    winner.mu += winner.var / c * v;
    loser.mu -= loser.var / c * v;
    winner.var *= 1.0 - winner.var / c2 * w;
    loser.var *= 1.0 - loser.var / c2 * w;
}

/// Rates every system that appears in `comparisons`. Output is sorted by `mu`
/// descending, then by name.
pub fn trueskill_rank(
    comparisons: &[Comparison],
    params: &TrueSkillParams,
) -> Result<Vec<SystemRating>, MetaEvalError> {
    params.validate()?;
    if comparisons.is_empty() {
        return Err(MetaEvalError::Empty);
    }
    let mut order: Vec<&Comparison> = comparisons.iter().collect();
    order.sort_by(|x, y| {
        x.sentence_id
            .cmp(&y.sentence_id)
            .then_with(|| x.system_a.cmp(&y.system_a))
            .then_with(|| x.system_b.cmp(&y.system_b))
    });
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(params.shuffle_seed));

    let prior = Skill {
        mu: params.mu0,
        var: params.sigma0 * params.sigma0,
    };
    let mut skills: IndexMap<&str, Skill> = IndexMap::new();
    for c in comparisons {
        skills.entry(&c.system_a).or_insert(prior);
        skills.entry(&c.system_b).or_insert(prior);
    }
    let margin = params.draw_margin();
    for c in order {
        let mut a = skills[c.system_a.as_str()];
        let mut b = skills[c.system_b.as_str()];
        match c.outcome {
            Outcome::AWins => update(&mut a, &mut b, false, params, margin),
            Outcome::BWins => update(&mut b, &mut a, false, params, margin),
            Outcome::Tie => update(&mut a, &mut b, true, params, margin),
        }
        skills[c.system_a.as_str()] = a;
        skills[c.system_b.as_str()] = b;
    }

    let mut out: Vec<SystemRating> = skills
        .into_iter()
        .map(|(name, s)| {
            let sigma = s.var.sqrt();
            SystemRating {
                system: name.to_string(),
                mu: s.mu,
                sigma,
                conservative: s.mu - 3.0 * sigma,
            }
        })
        .collect();
    out.sort_by(|x, y| y.mu.total_cmp(&x.mu).then_with(|| x.system.cmp(&y.system)));
    Ok(out)
}
