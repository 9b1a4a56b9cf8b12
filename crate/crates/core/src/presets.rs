//! The two reference configurations: `V(x) = 1 − x²`,
//! `q₀ = ½ χ_[−½, ½]` and a speed jumping at `x = 0` either down
//! (`3/2 → 1/2`, [`Preset::Fig1`]) or up (`1/2 → 3/2`, [`Preset::Fig2`]).

use crate::grid::PiecewiseConstantSpec;
use crate::kernel::NonlocalHorizon;
use crate::nonlocal::ModelConfig;
use crate::velocity::VelocityLaw;

/// Horizons swept in the reference study, `10^{-i}` for `i = 0..=4`.
pub const REFERENCE_ETAS: [f64; 5] = [1.0, 1e-1, 1e-2, 1e-3, 1e-4];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// `v = ½ + χ_{x<0}`: downward jump.
    Fig1,
    /// `v = ½ + χ_{x>0}`: upward jump.
    Fig2,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
        }
    }

    pub fn v_spec(self) -> PiecewiseConstantSpec {
        let levels = match self {
            Preset::Fig1 => vec![1.5, 0.5],
            Preset::Fig2 => vec![0.5, 1.5],
        };
        PiecewiseConstantSpec::new(vec![0.0], levels).expect("valid preset")
    }

    pub fn q0_spec(self) -> PiecewiseConstantSpec {
        PiecewiseConstantSpec::indicator(-0.5, 0.5, 0.5).expect("valid preset")
    }

    pub fn law(self) -> VelocityLaw {
        VelocityLaw::quadratic_greenshields()
    }

    pub fn model(self, eta: NonlocalHorizon, t_final: f64, cfl: f64) -> ModelConfig {
        ModelConfig::new(self.law(), self.v_spec(), self.q0_spec(), eta, t_final, cfl)
            .expect("preset data satisfy the model assumptions")
    }

    /// Computational domain used by default: wide enough that nothing
    /// reaches the right boundary before `T = 1`.
    pub fn default_domain(self) -> (f64, f64) {
        (-2.0, 3.0)
    }

    /// Window for the windowed L¹ errors.
    pub fn default_window(self) -> (f64, f64) {
        (-1.5, 2.5)
    }
}
