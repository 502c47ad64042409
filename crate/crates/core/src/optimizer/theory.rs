//! Closed-form step-size, rate, neighborhood and radius constants for
//! `mu`-strongly convex objectives with `L`-Lipschitz gradients.

use crate::config::Method;
use crate::error::{Error, Result};

/// Multiplier applied to the FD constants: `1`, `N/(N + 4.5 d)` or `N/d`.
fn direction_factor(method: Method, num_directions: usize, dimension: usize) -> f64 {
    let n = num_directions as f64;
    let d = dimension as f64;
    match method {
        Method::Fd => 1.0,
        Method::Gs | Method::Ss => n / (n + 4.5 * d),
        Method::Rc | Method::Rs => n / d,
    }
}

/// Largest step size `alpha` covered by the descent analysis.
pub fn max_stable_step(method: Method, theta: f64, lipschitz: f64, num_directions: usize, dimension: usize) -> f64 {
    let omega1 = 1.0 / (4.0 * (1.0 + theta * theta) * lipschitz);
    direction_factor(method, num_directions, dimension) * omega1
}

/// Factor multiplying `3 L^2 nu^2 d / (8 mu)` in the neighborhood.
fn neighborhood_factor(method: Method, num_directions: usize, dimension: usize) -> f64 {
    let n = num_directions as f64;
    let d = dimension as f64;
    match method {
        Method::Fd | Method::Rc | Method::Rs => 1.0,
        Method::Gs => (8.0 * n + 24.0 * d + (d + 2.0) * (d + 4.0)) / (2.0 * n + 9.0 * d),
        Method::Ss => (8.0 * n + 24.0 * d + d * d) / ((2.0 * n + 9.0 * d) * d),
    }
}

/// Per-iteration contraction coefficient `rho` (the expected gap contracts by
/// `1 - rho`) and the asymptotic neighborhood of the optimality gap.
#[allow(clippy::too_many_arguments)]
pub fn theory_rate_and_neighborhood(
    method: Method,
    theta: f64,
    lipschitz: f64,
    strong_convexity: f64,
    radius: f64,
    num_directions: usize,
    dimension: usize,
) -> Result<(f64, f64)> {
    if !(strong_convexity > 0.0) || strong_convexity > lipschitz {
        return Err(Error::InvalidStrongConvexity {
            mu: strong_convexity,
            lipschitz,
        });
    }
    let (mu, l) = (strong_convexity, lipschitz);
    let omega3 = mu / (8.0 * (1.0 + theta * theta) * l);
    let omega4 = 3.0 * l * l * radius * radius * dimension as f64 / (8.0 * mu);
    let rate = direction_factor(method, num_directions, dimension) * omega3;
    let neighborhood = neighborhood_factor(method, num_directions, dimension) * omega4;
    Ok((rate, neighborhood))
}

/// Radius `nu` that places the neighborhood at `eps * p / 2`.
pub fn tuned_radius(
    method: Method,
    eps: f64,
    p: f64,
    strong_convexity: f64,
    lipschitz: f64,
    num_directions: usize,
    dimension: usize,
) -> f64 {
    let omega5 = (4.0 * eps * p * strong_convexity / (3.0 * lipschitz * lipschitz * dimension as f64)).sqrt();
    omega5 / neighborhood_factor(method, num_directions, dimension).sqrt()
}

/// Iterations after which the expected gap bound drops below `eps * p`, when
/// the neighborhood is `eps * p / 2`.
pub fn iteration_bound(rate: f64, initial_gap: f64, eps: f64, p: f64) -> f64 {
    let target = eps * p - eps * p / 2.0;
    if initial_gap <= target {
        return 0.0;
    }
    (initial_gap.ln() - target.ln()) / (1.0 / (1.0 - rate)).ln()
}
