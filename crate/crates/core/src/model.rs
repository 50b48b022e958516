//! The two scored Poisson models: reciprocal k-NN distances and moving
//! maxima of heavy-tailed marks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::{apply_scores, Neighborhood, ScoreRule, WeightFn};
use crate::simulate::{sample_marks, sample_poisson, Boundary, MarkLaw, SimWindow};
use crate::stats::{theta2_closed_form, threshold_a_tau, threshold_a_tau_movmax};
use crate::tail::{ScalingLaw, TailSample};
use crate::{simulate, tail, Pattern};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Model {
    /// Unit-rate Poisson points scored by `1 / rho_k`.
    Knn { k: usize, d: usize },
    /// Unit-rate Poisson points with i.i.d. Pareto(`alpha`) marks of the
    /// given scale, scored by weighted maxima over a neighbourhood.
    #[serde(rename = "movmax")]
    MovingMax {
        neighborhood: Neighborhood,
        weight: WeightFn,
        alpha: f64,
        d: usize,
        #[serde(default = "unit_scale")]
        mark_scale: f64,
        /// Tail constant `kappa`; required when no closed form is known.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kappa: Option<f64>,
    },
}

fn unit_scale() -> f64 {
    1.0
}

impl Model {
    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Knn { k, d } if *k == 0 || *d == 0 => Err(Error::config("knn model needs k >= 1 and d >= 1")),
            Model::Knn { .. } => Ok(()),
            Model::MovingMax { neighborhood, weight, alpha, d, mark_scale, kappa } => {
                neighborhood.validate().map_err(|e| Error::config(e.to_string()))?;
                weight.validate().map_err(|e| Error::config(e.to_string()))?;
                if !(*alpha > 0.0 && *mark_scale > 0.0) || *d == 0 {
                    return Err(Error::config("movmax model needs alpha > 0, mark_scale > 0, d >= 1"));
                }
                if let Some(k) = kappa {
                    if !(*k > 0.0) {
                        return Err(Error::config("kappa must be positive"));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::Knn { d, .. } | Model::MovingMax { d, .. } => *d,
        }
    }

    /// The same model in dimension `d`.
    pub fn with_dim(&self, d: usize) -> Model {
        let mut m = self.clone();
        match &mut m {
            Model::Knn { d: dim, .. } | Model::MovingMax { d: dim, .. } => *dim = d,
        }
        m
    }

    pub fn rule(&self) -> ScoreRule {
        match self {
            Model::Knn { k, .. } => ScoreRule::KnnReciprocal { k: *k },
            Model::MovingMax { neighborhood, weight, .. } => ScoreRule::MovingMax {
                neighborhood: neighborhood.clone(),
                weight: weight.clone(),
            },
        }
    }

    pub fn law(&self) -> ScalingLaw {
        match self {
            Model::Knn { k, d } => ScalingLaw::knn(*k, *d),
            Model::MovingMax { alpha, .. } => ScalingLaw { alpha: *alpha, beta: 0.0 },
        }
    }

    pub fn mark_law(&self) -> Option<MarkLaw> {
        match self {
            Model::Knn { .. } => None,
            Model::MovingMax { alpha, mark_scale, .. } => Some(MarkLaw::Pareto { alpha: *alpha, scale: *mark_scale }),
        }
    }

    /// `kappa` for moving maxima: the configured value, or the closed form
    /// for constant and Dirac weights on k-NN neighbourhoods and for ball
    /// neighbourhoods.
    pub fn kappa(&self) -> Result<f64> {
        match self {
            Model::Knn { .. } => Err(Error::config("kappa is defined for moving maxima only")),
            Model::MovingMax { kappa: Some(k), .. } => Ok(*k),
            Model::MovingMax { neighborhood, weight, alpha, d, .. } => match (neighborhood, weight) {
                (_, WeightFn::Dirac) => Ok(1.0),
                (Neighborhood::Knn { k }, WeightFn::Const1) => Ok((*k + 1) as f64),
                (Neighborhood::Ball { radius }, w) => Ok(1.0 + tail::ball_weight_mass(w, *alpha, *radius, *d)),
                _ => Err(Error::config("kappa has no closed form for this model; set it explicitly")),
            },
        }
    }

    /// Threshold `a_tau` with `tau^d P(xi > a_tau) -> 1`.
    pub fn a_tau(&self, tau: f64) -> Result<f64> {
        match self {
            Model::Knn { k, d } => threshold_a_tau(tau, *k, *d),
            Model::MovingMax { alpha, d, mark_scale, .. } => {
                threshold_a_tau_movmax(tau, *d, self.kappa()?, *alpha, *mark_scale)
            }
        }
    }

    /// Extremal index when a closed form is available.
    pub fn theta_closed_form(&self) -> Option<f64> {
        match self {
            Model::Knn { k: 1, .. } => Some(0.5),
            Model::Knn { k: 2, d } => theta2_closed_form(*d).ok(),
            Model::Knn { d: 1, .. } => Some(0.5),
            Model::MovingMax { weight: WeightFn::Dirac, .. } => Some(1.0),
            Model::MovingMax { neighborhood: Neighborhood::Knn { k }, weight: WeightFn::Const1, .. } => {
                Some(1.0 / (*k + 1) as f64)
            }
            _ => None,
        }
    }

    /// Scored realization on the torus `[0, tau]^d`.
    pub fn simulate_window<R: Rng + ?Sized>(&self, tau: f64, rng: &mut R) -> Result<Pattern> {
        let w = SimWindow::cube(self.dim(), tau, Boundary::Torus)?;
        let p = sample_poisson(&w, 1.0, rng)?;
        let p = match self.mark_law() {
            Some(law) => sample_marks(&p, &law, rng)?,
            None => p,
        };
        apply_scores(&p, &self.rule())
    }

    /// Window used by the moving-maxima samplers.
    pub fn sampler_window(&self) -> Result<SimWindow> {
        match self {
            Model::Knn { .. } => Err(Error::config("k-NN samplers need no window")),
            Model::MovingMax { neighborhood, d, .. } => tail::default_moving_max_window(neighborhood, *d),
        }
    }

    /// One draw of the spectral configuration.
    pub fn sample_theta<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TailSample> {
        match self {
            Model::Knn { k, d } => tail::sample_knn_spectral_theta(*k, *d, rng),
            Model::MovingMax { neighborhood, weight, alpha, .. } => {
                tail::sample_moving_max_theta(neighborhood, weight, *alpha, &self.sampler_window()?, rng)
            }
        }
    }

    /// One draw of the typical cluster.
    pub fn sample_q<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TailSample> {
        match self {
            Model::Knn { k, d } => Ok(tail::sample_knn_typical_q(*k, *d, rng)?.0),
            Model::MovingMax { neighborhood, weight, alpha, .. } => {
                Ok(tail::sample_moving_max_q(neighborhood, weight, *alpha, &self.sampler_window()?, rng)?.0)
            }
        }
    }

    /// Palm configuration `P + delta_0` (marked for moving maxima) on a
    /// hard window of side `side` centred at the origin, and its score at
    /// the origin. Returns `None` when the window holds too few points for
    /// the rule to be defined.
    pub fn palm_origin_score<R: Rng + ?Sized>(&self, side: f64, rng: &mut R) -> Result<Option<f64>> {
        let w = SimWindow::centered(self.dim(), side, Boundary::Hard)?;
        let p = sample_poisson(&w, 1.0, rng)?;
        let palm = match self.mark_law() {
            Some(law) => simulate::palm_augment_with(&sample_marks(&p, &law, rng)?, &law, rng)?,
            None => simulate::palm_augment(&p, 1.0)?,
        };
        match crate::scoring::palm_score_at_origin(&palm, &self.rule()) {
            Ok(s) => Ok(Some(s)),
            Err(Error::Domain(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }
}
