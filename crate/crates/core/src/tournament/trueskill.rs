use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub mu: f64,
    pub sigma: f64,
}

impl Rating {
    pub fn new(mu: f64, sigma: f64) -> Self {
        Self { mu, sigma }
    }

    /// Conservative skill estimate `mu - 3 sigma`.
    pub fn display(&self) -> f64 {
        self.mu - 3.0 * self.sigma
    }
}

impl Default for Rating {
    fn default() -> Self {
        RatingConfig::default().prior()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatingConfig {
    pub mu0: f64,
    pub sigma0: f64,
    /// Performance noise per game.
    pub beta: f64,
    /// Skill drift added to each variance before an update.
    pub tau: f64,
    pub draw_probability: f64,
}

impl Default for RatingConfig {
    fn default() -> Self {
        let sigma0 = 25.0 / 3.0;
        Self {
            mu0: 25.0,
            sigma0,
            beta: sigma0 / 2.0,
            tau: sigma0 / 100.0,
            draw_probability: 0.0,
        }
    }
}

impl RatingConfig {
    pub fn validate(&self) -> Result<(), String> {
        let finite = [self.mu0, self.sigma0, self.beta, self.tau, self.draw_probability]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err("rating constants must be finite".into());
        }
        if self.sigma0 <= 0.0 || self.beta <= 0.0 || self.tau < 0.0 {
            return Err("sigma0 and beta must be positive and tau non-negative".into());
        }
        if !(0.0..1.0).contains(&self.draw_probability) {
            return Err(format!(
                "draw_probability must be in [0, 1), got {}",
                self.draw_probability
            ));
        }
        Ok(())
    }

    pub fn prior(&self) -> Rating {
        Rating::new(self.mu0, self.sigma0)
    }

    /// Half-width of the draw band on the performance difference.
    pub fn draw_margin(&self) -> f64 {
        if self.draw_probability == 0.0 {
            return 0.0;
        }
        std_normal().inverse_cdf((self.draw_probability + 1.0) / 2.0) * 2f64.sqrt() * self.beta
    }
}

fn std_normal() -> Normal {
    Normal::standard()
}

/// Mean shift of a standard normal truncated to `(eps - t, inf)`, i.e.
/// `pdf(t - eps) / cdf(t - eps)`.
pub fn v_win(t: f64, eps: f64) -> f64 {
    let n = std_normal();
    let x = t - eps;
    let denom = n.cdf(x);
    if denom < 1e-300 {
        // Mills-ratio limit for a deep underdog
        return -x;
    }
    n.pdf(x) / denom
}

/// Variance factor that goes with [`v_win`].
pub fn w_win(t: f64, eps: f64) -> f64 {
    let v = v_win(t, eps);
    let w = v * (v + t - eps);
    w.clamp(0.0, 1.0)
}

/// Rates one decisive game. Returns the updated `(winner, loser)`.
pub fn update_two_player(winner: Rating, loser: Rating, cfg: &RatingConfig) -> (Rating, Rating) {
    let var_w = winner.sigma.powi(2) + cfg.tau.powi(2);
    let var_l = loser.sigma.powi(2) + cfg.tau.powi(2);
    let c2 = 2.0 * cfg.beta.powi(2) + var_w + var_l;
    let c = c2.sqrt();
    let t = (winner.mu - loser.mu) / c;
    let eps = cfg.draw_margin() / c;
    let v = v_win(t, eps);
    let w = w_win(t, eps);
    let w_new = Rating::new(
        winner.mu + var_w / c * v,
        (var_w * (1.0 - var_w / c2 * w)).sqrt(),
    );
    let l_new = Rating::new(
        loser.mu - var_l / c * v,
        (var_l * (1.0 - var_l / c2 * w)).sqrt(),
    );
    (w_new, l_new)
}

/// A draw counts as a loss for each player against a fresh opponent at
/// the prior; that phantom opponent's rating is not kept.
pub fn update_draw(a: Rating, b: Rating, cfg: &RatingConfig) -> (Rating, Rating) {
    let prior = cfg.prior();
    (
        update_two_player(prior, a, cfg).1,
        update_two_player(prior, b, cfg).1,
    )
}
