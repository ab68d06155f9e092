//! Panel quantile regression via the method of moments, for the
//! location-scale model with state fixed effects
//!
//! ```text
//! y_it = alpha_i + x_it' beta + (delta_i + x_it' gamma) u_it
//! ```
//!
//! together with the covariate pipeline that builds the regression
//! variables (inflation lags, year-over-year growth transforms, unexpected
//! inflation), unit-level bootstrap inference, and a Monte Carlo harness
//! that validates parameter recovery against analytic quantile truths.
//!
//! The conditional quantile implied by the model is
//! `Q_y(tau | x) = (alpha_i + delta_i q(tau)) + x' beta + x' gamma q(tau)`,
//! so every per-quantile coefficient is the affine combination
//! `beta + q(tau) gamma` of the location and scale slopes, and
//! `alpha_i + delta_i q(tau)` acts as a quantile-specific fixed effect.

pub mod design;
pub mod error;
pub mod estimator;
pub mod inference;
pub mod io;
pub mod linalg;
pub mod panel;
pub mod reference;
pub mod simulate;
pub mod time;

pub use design::{
    build_design, default_quantile_grid, unexpected_inflation, DesignMatrix, Figure,
    ForecastSeries, InflationKind, ModelSpec,
};
pub use error::{Error, ErrorClass, Result};
pub use estimator::{fit, fit_location, fit_scale, standardized_quantile, MmqrFit};
pub use inference::{cluster_bootstrap, star, CoefficientTable};
pub use panel::{GrowthMethod, PanelDataset, SeriesStats};
pub use simulate::{recovery_experiment, simulate, DgpSpec, EffectRule, InnovationLaw};
pub use time::{MonthId, QuarterId};
