//! Generalized translation and convolution.
//!
//! The translation of f at x, evaluated at y, integrates f(x'+y', rho)
//! against the kernel W_alpha(x_d, y_d, rho) rho^{2a+1} on the interval
//! (|x_d - y_d|, x_d + y_d). The substitution
//! rho^2 = x_d^2 + y_d^2 - 2 x_d y_d cos(theta) turns that weight into
//! c_alpha sin^{2a}(theta) d(theta) on [0, pi], removing both endpoint
//! singularities; with u = cos(theta) this is a Gauss-Jacobi weight with
//! exponents (a - 1/2, a - 1/2), which is the quadrature used throughout.
//! Direct rho-space Gauss-Jacobi is kept as a cross-check oracle.
//!
//! Translated ball indicators have an exact structure: the indicator cuts
//! the theta integral at cos(theta*) = (x_d^2 + y_d^2 - s)/(2 x_d y_d) with
//! s = eps^2 - |x' - y'|^2, and the partial integral of sin^{2a} is a
//! regularized incomplete beta value.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::halfspace::{GridFunction, HalfSpaceGrid, WeinsteinParams};
use crate::quad::GaussJacobi;
use crate::special::{log_gamma, regularized_incomplete_beta};

/// Normalization constant c_alpha = Gamma(a+1) / (sqrt(pi) Gamma(a+1/2)):
/// c_alpha int_0^pi sin^{2a}(theta) d(theta) = 1.
pub fn theta_weight_constant(alpha: f64) -> f64 {
    (log_gamma(alpha + 1.0).unwrap()
        - 0.5 * std::f64::consts::PI.ln()
        - log_gamma(alpha + 0.5).unwrap())
    .exp()
}

/// Precomputed theta-quadrature for the translation integral.
///
/// Stores cos(theta_i) and weights scaled by c_alpha, so the weights sum to
/// one and `sum_i w_i g(theta_i)` approximates the normalized integral.
#[derive(Debug, Clone)]
pub struct TranslationQuadrature {
    alpha: f64,
    cos_nodes: Vec<f64>,
    weights: Vec<f64>,
    tolerance: f64,
}

impl TranslationQuadrature {
    pub fn new(params: &WeinsteinParams, theta_nodes: usize, tolerance: f64) -> Result<Self> {
        if theta_nodes < 8 {
            return Err(Error::domain("translation quadrature needs >= 8 nodes"));
        }
        if !(tolerance > 0.0) {
            return Err(Error::domain("translation quadrature tolerance must be > 0"));
        }
        let a = params.alpha();
        let rule = GaussJacobi::new(theta_nodes, a - 0.5, a - 0.5)?;
        let c = theta_weight_constant(a);
        Ok(TranslationQuadrature {
            alpha: a,
            cos_nodes: rule.nodes().to_vec(),
            weights: rule.weights().iter().map(|w| w * c).collect(),
            tolerance,
        })
    }

    pub fn default_for(params: &WeinsteinParams) -> Self {
        TranslationQuadrature::new(params, 48, 1e-10).expect("valid defaults")
    }

    pub fn theta_nodes(&self) -> usize {
        self.cos_nodes.len()
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// sum_i w_i g(cos theta_i); the weights absorb c_alpha sin^{2a}.
    #[inline]
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut g: F) -> f64 {
        let mut acc = 0.0;
        for (u, w) in self.cos_nodes.iter().zip(&self.weights) {
            acc += w * g(*u);
        }
        acc
    }
}

#[inline]
fn rho_from_cos(x_d: f64, y_d: f64, u: f64) -> f64 {
    (x_d * x_d + y_d * y_d - 2.0 * x_d * y_d * u).max(0.0).sqrt()
}

// ---------------------------------------------------------------------------
// the kernel itself
// ---------------------------------------------------------------------------

/// The translation kernel W_alpha(x_d, y_d, rho); zero outside the open
/// interval (|x_d - y_d|, x_d + y_d). The value blows up at the endpoints
/// when alpha < 1/2; callers integrate it, never evaluate at the endpoints.
pub fn translation_weight(params: &WeinsteinParams, x_d: f64, y_d: f64, rho: f64) -> Result<f64> {
    if !(x_d > 0.0 && y_d > 0.0) {
        return Err(Error::domain(format!(
            "translation kernel requires x_d, y_d > 0, got ({x_d}, {y_d})"
        )));
    }
    if !rho.is_finite() || rho < 0.0 {
        return Err(Error::domain(format!("rho must be finite and >= 0, got {rho}")));
    }
    let a = params.alpha();
    let lo = (x_d - y_d).abs();
    let hi = x_d + y_d;
    if rho <= lo || rho >= hi {
        return Ok(0.0);
    }
    let ln_const = log_gamma(a + 1.0)?
        - (2.0 * a - 1.0) * std::f64::consts::LN_2
        - 0.5 * std::f64::consts::PI.ln()
        - log_gamma(a + 0.5)?
        - 2.0 * a * (x_d.ln() + y_d.ln() + rho.ln());
    let factors = ((hi * hi - rho * rho) * (rho * rho - lo * lo)).powf(a - 0.5);
    Ok(ln_const.exp() * factors)
}

// ---------------------------------------------------------------------------
// translation of callables and grid functions
// ---------------------------------------------------------------------------

/// Translation of a continuous function (even in the last variable),
/// evaluated pointwise via the theta quadrature.
///
/// On the boundary (x_d = 0 or y_d = 0) the kernel degenerates and the value
/// is the continuous limit f(x'+y', max(x_d, y_d)).
pub fn translate_point<F: Fn(&[f64]) -> f64>(
    params: &WeinsteinParams,
    f: F,
    x: &[f64],
    y: &[f64],
    quad: &TranslationQuadrature,
) -> Result<f64> {
    let d = params.dim();
    if x.len() != d || y.len() != d {
        return Err(Error::domain("point dimension mismatch"));
    }
    let (x_d, y_d) = (x[d - 1], y[d - 1]);
    if !(x_d >= 0.0 && y_d >= 0.0) {
        return Err(Error::domain("translation requires x_d, y_d >= 0"));
    }
    let mut arg = vec![0.0; d];
    for k in 0..d - 1 {
        arg[k] = x[k] + y[k];
    }
    if x_d == 0.0 || y_d == 0.0 {
        arg[d - 1] = x_d.max(y_d);
        return Ok(f(&arg));
    }
    Ok(quad.integrate(|u| {
        arg[d - 1] = rho_from_cos(x_d, y_d, u);
        f(&arg)
    }))
}

/// Cross-check oracle: the same integral evaluated in rho space with a
/// Gauss-Jacobi rule absorbing the (rho - lo)^{a-1/2} (hi - rho)^{a-1/2}
/// endpoint singularities of the kernel.
pub fn translate_point_direct<F: Fn(&[f64]) -> f64>(
    params: &WeinsteinParams,
    f: F,
    x: &[f64],
    y: &[f64],
    nodes: usize,
) -> Result<f64> {
    let d = params.dim();
    let a = params.alpha();
    let (x_d, y_d) = (x[d - 1], y[d - 1]);
    if !(x_d > 0.0 && y_d > 0.0) {
        return Err(Error::domain("direct rho quadrature requires x_d, y_d > 0"));
    }
    let rule = GaussJacobi::new(nodes, a - 0.5, a - 0.5)?;
    let lo = (x_d - y_d).abs();
    let hi = x_d + y_d;
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let ln_const = log_gamma(a + 1.0)?
        - (2.0 * a - 1.0) * std::f64::consts::LN_2
        - 0.5 * std::f64::consts::PI.ln()
        - log_gamma(a + 0.5)?
        - 2.0 * a * (x_d.ln() + y_d.ln());
    let k0 = ln_const.exp();
    let mut arg = vec![0.0; d];
    for k in 0..d - 1 {
        arg[k] = x[k] + y[k];
    }
    let mut acc = 0.0;
    for (v, w) in rule.nodes().iter().zip(rule.weights()) {
        let rho = mid + half * v;
        arg[d - 1] = rho;
        // remaining smooth factor of W rho^{2a+1}: K0 (hi+rho)^{a-1/2} (rho+lo)^{a-1/2} rho^{1-2a} * rho^{2a}
        let smooth = k0 * ((hi + rho) * (rho + lo)).powf(a - 0.5) * rho;
        acc += w * smooth * f(&arg);
    }
    Ok(acc * half.powf(2.0 * a))
}

/// Translation of a sampled function: f is interpolated multilinearly with
/// even reflection across x_d = 0 and zero extension outside the box.
pub fn translate_grid(
    params: &WeinsteinParams,
    f: &GridFunction<f64>,
    x: &[f64],
    quad: &TranslationQuadrature,
) -> Result<GridFunction<f64>> {
    let grid = f.grid();
    let d = grid.dim();
    if x.len() != d {
        return Err(Error::domain("translation point dimension mismatch"));
    }
    for k in 0..d - 1 {
        if x[k].abs() > grid.half_widths()[k] {
            return Err(Error::domain("translation point outside the grid box"));
        }
    }
    if !(0.0 <= x[d - 1] && x[d - 1] <= grid.depth()) {
        return Err(Error::domain("translation point outside the grid box"));
    }
    let x_d = x[d - 1];
    let values: Vec<f64> = (0..grid.node_count())
        .into_par_iter()
        .map(|flat| {
            let mut y = [0.0f64; 8];
            grid.node(flat, &mut y[..d]);
            let y_d = y[d - 1];
            let mut arg = [0.0f64; 8];
            for k in 0..d - 1 {
                arg[k] = x[k] + y[k];
            }
            if x_d == 0.0 {
                arg[d - 1] = y_d;
                return f.interp_even(&arg[..d]);
            }
            quad.integrate(|u| {
                arg[d - 1] = rho_from_cos(x_d, y_d, u);
                f.interp_even(&arg[..d])
            })
        })
        .collect();
    Ok(GridFunction::from_values(Arc::clone(grid), values))
}

// ---------------------------------------------------------------------------
// translated ball indicators
// ---------------------------------------------------------------------------

/// tau_x(chi_{B^+(0,eps)})(-y', y_d), evaluated in closed form.
///
/// With s = eps^2 - |x'-y'|^2: zero when s <= (x_d-y_d)^2 (in particular
/// whenever |x-y| >= eps), one when s >= (x_d+y_d)^2, and otherwise the
/// normalized partial integral of sin^{2a} up to theta*, computed through
/// the regularized incomplete beta function. Values are clamped to [0, 1].
pub fn ball_translate(params: &WeinsteinParams, x: &[f64], eps: f64, y: &[f64]) -> Result<f64> {
    let d = params.dim();
    if x.len() != d || y.len() != d {
        return Err(Error::domain("point dimension mismatch"));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::domain(format!("ball radius must be > 0, got {eps}")));
    }
    let (x_d, y_d) = (x[d - 1], y[d - 1]);
    if !(x_d >= 0.0 && y_d >= 0.0) {
        return Err(Error::domain("ball translate requires x_d, y_d >= 0"));
    }
    let mut lateral2 = 0.0;
    for k in 0..d - 1 {
        let delta = x[k] - y[k];
        lateral2 += delta * delta;
    }
    let s = eps * eps - lateral2;
    let dminus = (x_d - y_d) * (x_d - y_d);
    if s <= dminus {
        return Ok(0.0);
    }
    let dplus = (x_d + y_d) * (x_d + y_d);
    if s >= dplus {
        return Ok(1.0);
    }
    // boundary: the interval degenerates; the two cases above already
    // decided the indicator value unless x_d y_d > 0
    if x_d == 0.0 || y_d == 0.0 {
        return Ok(0.0);
    }
    let cos_star = (x_d * x_d + y_d * y_d - s) / (2.0 * x_d * y_d);
    let cos_star = cos_star.clamp(-1.0, 1.0);
    let t = ((1.0 - cos_star) * (1.0 + cos_star)).clamp(0.0, 1.0); // sin^2 theta*
    let a = params.alpha() + 0.5;
    let b = 0.5;
    let half_tail = 0.5 * regularized_incomplete_beta(a, b, t)?;
    let v = if cos_star >= 0.0 {
        half_tail
    } else {
        1.0 - half_tail
    };
    Ok(v.clamp(0.0, 1.0))
}

/// Quadrature oracle for [`ball_translate`]: adaptive integration of
/// c_alpha sin^{2a} over [0, theta*]. Used to certify the closed form.
pub fn ball_translate_quad(
    params: &WeinsteinParams,
    x: &[f64],
    eps: f64,
    y: &[f64],
    tol: f64,
) -> Result<f64> {
    let d = params.dim();
    let (x_d, y_d) = (x[d - 1], y[d - 1]);
    let mut lateral2 = 0.0;
    for k in 0..d - 1 {
        let delta = x[k] - y[k];
        lateral2 += delta * delta;
    }
    let s = eps * eps - lateral2;
    if s <= (x_d - y_d) * (x_d - y_d) {
        return Ok(0.0);
    }
    if s >= (x_d + y_d) * (x_d + y_d) {
        return Ok(1.0);
    }
    if x_d == 0.0 || y_d == 0.0 {
        return Ok(0.0);
    }
    let cos_star = ((x_d * x_d + y_d * y_d - s) / (2.0 * x_d * y_d)).clamp(-1.0, 1.0);
    let theta_star = cos_star.acos();
    let a = params.alpha();
    let c = theta_weight_constant(a);
    let v = crate::quad::adaptive_quadrature(|t| t.sin().powf(2.0 * a), 0.0, theta_star, tol)?;
    Ok((c * v).clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// convolution
// ---------------------------------------------------------------------------

/// Generalized convolution (f * g)(x) = int tau_x(f)(-y', y_d) g(y) dnu(y),
/// evaluated at every grid node. f and g must share a grid.
///
/// In two dimensions the translated values tau_x(f)(-y', y_d) depend on the
/// lateral offset x' - y' only, so per depth-row kernels are built once and
/// applied as lateral convolutions; other dimensions use the direct loops.
pub fn convolve(
    params: &WeinsteinParams,
    f: &GridFunction<f64>,
    g: &GridFunction<f64>,
    quad: &TranslationQuadrature,
) -> Result<GridFunction<f64>> {
    let grid = f.grid();
    assert!(
        grid.same_layout(g.grid()),
        "contract violation: convolution operands must share a grid"
    );
    if params.dim() == 2 {
        convolve_2d(params, f, g, quad)
    } else {
        convolve_generic(params, f, g, quad)
    }
}

fn convolve_2d(
    _params: &WeinsteinParams,
    f: &GridFunction<f64>,
    g: &GridFunction<f64>,
    quad: &TranslationQuadrature,
) -> Result<GridFunction<f64>> {
    let grid = f.grid();
    let n_lat = grid.counts()[0];
    let n_d = grid.counts()[1];
    let h = grid.spacing(0);
    let xd_nodes = grid.axis_nodes(1).to_vec();

    // out[(a, j)] = sum_b sum_jy K_a[b][j - jy + (n_lat-1)] g[(b, jy)] w_row(b)
    let out: Vec<f64> = (0..n_d)
        .into_par_iter()
        .flat_map_iter(|a| {
            let x_d = xd_nodes[a];
            // kernel slice for this output depth: offsets o = -(n-1)..=(n-1)
            let mut kernel = vec![vec![0.0f64; 2 * n_lat - 1]; n_d];
            let mut arg = [0.0f64; 2];
            for (b, row) in kernel.iter_mut().enumerate() {
                let y_d = xd_nodes[b];
                for (oi, slot) in row.iter_mut().enumerate() {
                    let offset = (oi as isize - (n_lat as isize - 1)) as f64 * h;
                    arg[0] = offset;
                    *slot = quad.integrate(|u| {
                        arg[1] = rho_from_cos(x_d, y_d, u);
                        f.interp_even(&arg)
                    });
                }
            }
            let mut row_out = vec![0.0f64; n_lat];
            for (j, out_v) in row_out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for b in 0..n_d {
                    let w = grid.row_weight(b);
                    let krow = &kernel[b];
                    let gbase = b * n_lat;
                    let mut inner = 0.0;
                    for jy in 0..n_lat {
                        inner += krow[j + (n_lat - 1) - jy] * g.values()[gbase + jy];
                    }
                    acc += inner * w;
                }
                *out_v = acc;
            }
            row_out.into_iter()
        })
        .collect();
    Ok(GridFunction::from_values(Arc::clone(grid), out))
}

fn convolve_generic(
    params: &WeinsteinParams,
    f: &GridFunction<f64>,
    g: &GridFunction<f64>,
    quad: &TranslationQuadrature,
) -> Result<GridFunction<f64>> {
    let grid = f.grid();
    let d = grid.dim();
    let values: Vec<f64> = (0..grid.node_count())
        .into_par_iter()
        .map(|xf| {
            let mut x = [0.0f64; 8];
            grid.node(xf, &mut x[..d]);
            let x_d = x[d - 1];
            let mut y = [0.0f64; 8];
            let mut arg = [0.0f64; 8];
            let mut acc = 0.0;
            for yf in 0..grid.node_count() {
                grid.node(yf, &mut y[..d]);
                for k in 0..d - 1 {
                    arg[k] = x[k] - y[k];
                }
                let tau = quad.integrate(|u| {
                    arg[d - 1] = rho_from_cos(x_d, y[d - 1], u);
                    f.interp_even(&arg[..d])
                });
                acc += tau * g.values()[yf] * grid.weight(yf);
            }
            acc
        })
        .collect();
    let _ = params;
    Ok(GridFunction::from_values(Arc::clone(grid), values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halfspace::{integrate, lp_norm};
    use crate::special::{normalized_bessel, BesselOrder};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};

    fn params() -> WeinsteinParams {
        WeinsteinParams::new(1.0, 2).unwrap()
    }

    #[test]
    fn kernel_support_and_symmetry() {
        let p = params();
        // outside the support interval the kernel vanishes
        assert_eq!(translation_weight(&p, 1.0, 2.0, 0.5).unwrap(), 0.0);
        assert_eq!(translation_weight(&p, 1.0, 2.0, 3.5).unwrap(), 0.0);
        assert_eq!(translation_weight(&p, 1.0, 2.0, 1.0).unwrap(), 0.0);
        // symmetric in (x_d, y_d), exactly
        for &rho in &[1.2, 1.9, 2.6] {
            assert_eq!(
                translation_weight(&p, 1.0, 2.0, rho).unwrap(),
                translation_weight(&p, 2.0, 1.0, rho).unwrap()
            );
            assert!(translation_weight(&p, 1.0, 2.0, rho).unwrap() > 0.0);
        }
        assert!(translation_weight(&p, 0.0, 1.0, 1.0).is_err());
        assert!(translation_weight(&p, 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn kernel_normalization_both_quadratures() {
        // int W rho^{2a+1} drho = 1, via the theta substitution (weights sum
        // to one by construction) and via direct singular quadrature
        for &alpha in &[0.2, 1.0, 1.5, 2.7] {
            let p = WeinsteinParams::new(alpha, 2).unwrap();
            let quad = TranslationQuadrature::new(&p, 48, 1e-10).unwrap();
            let theta_mass = quad.integrate(|_| 1.0);
            assert_abs_diff_eq!(theta_mass, 1.0, epsilon = 1e-12);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
            for _ in 0..25 {
                let x = [0.0, 0.05 + 2.0 * rng.gen::<f64>()];
                let y = [0.0, 0.05 + 2.0 * rng.gen::<f64>()];
                let direct = translate_point_direct(&p, |_| 1.0, &x, &y, 48).unwrap();
                assert_abs_diff_eq!(direct, 1.0, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn translate_identity_at_zero_and_symmetry() {
        let p = params();
        let quad = TranslationQuadrature::default_for(&p);
        let f = |x: &[f64]| (1.3 * x[0]).cos() * (-x[1] * x[1]).exp();
        for &y in &[[0.3, 0.7], [-1.1, 0.2], [0.0, 1.9]] {
            let v = translate_point(&p, f, &[0.0, 0.0], &y, &quad).unwrap();
            assert_abs_diff_eq!(v, f(&y), epsilon = 1e-12);
        }
        // tau_x f (y) = tau_y f (x), exactly (the defining integral is
        // symmetric in x and y)
        let x = [0.4, 1.2];
        let y = [-0.8, 0.5];
        assert_eq!(
            translate_point(&p, f, &x, &y, &quad).unwrap(),
            translate_point(&p, f, &y, &x, &quad).unwrap()
        );
    }

    #[test]
    fn theta_and_rho_quadratures_agree() {
        let p = params();
        let quad = TranslationQuadrature::new(&p, 64, 1e-10).unwrap();
        let f = |x: &[f64]| (0.9 * x[0]).cos() * (-0.5 * x[1] * x[1]).exp();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let x = [rng.gen::<f64>() - 0.5, 0.1 + 1.5 * rng.gen::<f64>()];
            let y = [rng.gen::<f64>() - 0.5, 0.1 + 1.5 * rng.gen::<f64>()];
            let a = translate_point(&p, f, &x, &y, &quad).unwrap();
            let b = translate_point_direct(&p, f, &x, &y, 64).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
        // and for a non-integer alpha with genuinely singular endpoints
        let p2 = WeinsteinParams::new(0.3, 2).unwrap();
        let quad2 = TranslationQuadrature::new(&p2, 64, 1e-10).unwrap();
        let x = [0.2, 0.9];
        let y = [-0.1, 1.4];
        let a = translate_point(&p2, f, &x, &y, &quad2).unwrap();
        let b = translate_point_direct(&p2, f, &x, &y, 64).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-10);
    }

    #[test]
    fn bessel_product_formula() {
        // int j_a(l rho) W(x_d, y_d, rho) rho^{2a+1} drho = j_a(l x_d) j_a(l y_d)
        let p = params();
        let quad = TranslationQuadrature::new(&p, 64, 1e-10).unwrap();
        let ord = BesselOrder::new(p.alpha()).unwrap();
        for &(xd, yd, l) in &[(0.7, 1.3, 1.0), (2.0, 0.4, 2.5), (1.1, 1.1, 4.0)] {
            let f = |arg: &[f64]| normalized_bessel(ord, l * arg[1]).unwrap();
            let lhs = translate_point(&p, f, &[0.0, xd], &[0.0, yd], &quad).unwrap();
            let rhs = normalized_bessel(ord, l * xd).unwrap()
                * normalized_bessel(ord, l * yd).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-8);
        }
    }

    #[test]
    fn translate_grid_identity_and_contraction() {
        let p = params();
        let quad = TranslationQuadrature::default_for(&p);
        let grid = HalfSpaceGrid::uniform(&p, 4.0, 96).unwrap();
        let f = GridFunction::sample(&grid, |x: &[f64]| {
            (-0.5 * (x[0] * x[0] + x[1] * x[1])).exp()
        });
        // tau_0 f = f exactly at nodes
        let id = translate_grid(&p, &f, &[0.0, 0.0], &quad).unwrap();
        for (a, b) in id.values().iter().zip(f.values()) {
            assert_eq!(a, b);
        }
        // contraction in L^p with a small discrete slack
        let tau = translate_grid(&p, &f, &[0.7, 0.9], &quad).unwrap();
        for &pp in &[1.0, 2.0, f64::INFINITY] {
            let before = lp_norm(&p, &f, pp).unwrap();
            let after = lp_norm(&p, &tau, pp).unwrap();
            assert!(
                after <= before * (1.0 + 1e-3),
                "p = {pp}: {after} > {before}"
            );
        }
        // outside the box: domain error
        assert!(translate_grid(&p, &f, &[5.0, 1.0], &quad).is_err());
    }

    #[test]
    fn translation_transform_identity() {
        // F_W(tau_x f)(lambda) = Psi_lambda(-x', x_d) F_W(f)(lambda)
        let p = params();
        let quad = TranslationQuadrature::default_for(&p);
        let grid = HalfSpaceGrid::uniform(&p, 6.0, 160).unwrap();
        let f = GridFunction::sample(&grid, |x: &[f64]| {
            (-0.5 * (x[0] * x[0] + x[1] * x[1])).exp()
        });
        let x = [0.6, 0.8];
        let tau = translate_grid(&p, &f, &x, &quad).unwrap();
        let pts: Vec<Vec<f64>> = vec![vec![0.5, 0.5], vec![-1.0, 0.7], vec![0.3, 1.6]];
        let lhs = crate::transform::forward_at(&p, &tau, &pts);
        let rhs_f = crate::transform::forward_at(&p, &f, &pts);
        for (i, pt) in pts.iter().enumerate() {
            let psi = crate::transform::weinstein_kernel(&p, pt, &[-x[0], x[1]]);
            let want = psi * rhs_f[i];
            let scale = rhs_f[i].norm().max(1e-6);
            assert!(
                (lhs[i] - want).norm() <= 1e-3 * scale,
                "lambda {:?}: {} vs {}",
                pt,
                lhs[i],
                want
            );
        }
    }

    #[test]
    fn ball_translate_support_range_and_frozen_value() {
        let p = params();
        // support: zero whenever |x - y| >= eps, exactly
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let x = [4.0 * rng.gen::<f64>() - 2.0, 2.0 * rng.gen::<f64>()];
            let y = [4.0 * rng.gen::<f64>() - 2.0, 2.0 * rng.gen::<f64>()];
            let eps = 0.05 + rng.gen::<f64>();
            let dist2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
            let v = ball_translate(&p, &x, eps, &y).unwrap();
            if dist2 >= eps * eps * (1.0 + 1e-12) {
                assert_eq!(v, 0.0);
            } else {
                assert!((0.0..=1.0).contains(&v));
            }
        }
        // frozen regression value (incomplete-beta oracle, 40 digits):
        // alpha = 1, d = 2, x = (0, 2), y = (0, 2), eps = 1/2
        let v = ball_translate(&p, &[0.0, 2.0], 0.5, &[0.0, 2.0]).unwrap();
        assert_relative_eq!(v, 0.0033001418742538570839, max_relative = 1e-12);
        // quadrature oracle agrees
        let q = ball_translate_quad(&p, &[0.0, 2.0], 0.5, &[0.0, 2.0], 1e-12).unwrap();
        assert_relative_eq!(v, q, max_relative = 1e-10);
    }

    #[test]
    fn ball_translate_agrees_with_translate_point_on_indicator() {
        // away from the indicator boundary the theta quadrature of the
        // sampled indicator converges to the closed form
        let p = params();
        let quad = TranslationQuadrature::new(&p, 512, 1e-10).unwrap();
        let eps = 0.8;
        let chi = move |arg: &[f64]| {
            if arg[0] * arg[0] + arg[1] * arg[1] <= eps * eps {
                1.0
            } else {
                0.0
            }
        };
        for &(x, y) in &[
            ([0.1, 0.9], [-0.2, 0.5]),
            ([0.0, 1.2], [0.3, 0.8]),
            ([0.5, 0.4], [0.1, 0.6]),
        ] {
            // chi(x'-y', rho): translate evaluated at (-y', y_d)
            let neg_y = [-y[0], y[1]];
            let via_quad = translate_point(&p, chi, &x, &neg_y, &quad).unwrap();
            let closed = ball_translate(&p, &x, eps, &y).unwrap();
            assert_abs_diff_eq!(via_quad, closed, epsilon = 2e-3);
        }
        // interior/exterior cases are exact for both
        let far_y = [3.0, 0.5];
        assert_eq!(ball_translate(&p, &[0.0, 0.5], eps, &far_y).unwrap(), 0.0);
    }

    #[test]
    fn ball_translate_mass_identity() {
        // integral over y of the translated indicator is the ball measure
        let p = params();
        let grid = HalfSpaceGrid::uniform(&p, 3.0, 256).unwrap();
        let x = [0.4, 0.9];
        let eps = 0.7;
        let tau = GridFunction::sample(&grid, |y: &[f64]| {
            ball_translate(&p, &x, eps, y).unwrap()
        });
        let mass = integrate(&p, &tau);
        assert_relative_eq!(mass, p.ball_measure(eps).unwrap(), max_relative = 1e-3);
    }

    #[test]
    fn ball_translate_boundary_degenerates_to_indicator() {
        let p = params();
        // y_d = 0: value is the plain indicator of |x - y| < eps
        assert_eq!(
            ball_translate(&p, &[0.0, 0.3], 1.0, &[0.2, 0.0]).unwrap(),
            1.0
        );
        assert_eq!(
            ball_translate(&p, &[0.0, 0.9], 1.0, &[0.8, 0.0]).unwrap(),
            0.0
        );
    }

    #[test]
    fn strong_regime_translated_indicator_bound() {
        // for alpha > d/2 - 1 and x_d > 2 eps:
        // tau_x(chi)(-y', y_d) <= c (eps/x_d)^{2a+1}; the normalized product
        // stays bounded along a ratio sweep
        let p = params();
        assert!(p.strong_regime());
        let c_bound = theta_weight_constant(p.alpha()) / (2.0 * p.alpha() + 1.0);
        for &ratio in &[2.0, 5.0, 20.0, 100.0, 1000.0] {
            let eps = 1.0;
            let xd = ratio;
            let x = [0.0, xd];
            let v = ball_translate(&p, &x, eps, &x).unwrap();
            let product = v * ratio.powf(p.weight_exponent());
            assert!(product.is_finite());
            // v at y = x is the largest value; the product approaches
            // c_alpha / (2a+1) from below as the ratio grows
            assert!(product <= c_bound * 1.05, "{product} vs {c_bound}");
        }
    }

    #[test]
    fn convolve_zero_and_commutativity() {
        let p = params();
        let quad = TranslationQuadrature::new(&p, 32, 1e-8).unwrap();
        let grid = HalfSpaceGrid::uniform(&p, 3.0, 40).unwrap();
        let f = GridFunction::sample(&grid, |x: &[f64]| {
            (-(x[0] * x[0] + x[1] * x[1])).exp()
        });
        let zero = GridFunction::sample(&grid, |_: &[f64]| 0.0);
        let conv0 = convolve(&p, &f, &zero, &quad).unwrap();
        assert!(conv0.values().iter().all(|&v| v == 0.0));

        let g = GridFunction::sample(&grid, |x: &[f64]| {
            (-2.0 * ((x[0] - 0.4).powi(2) + x[1] * x[1])).exp()
        });
        let fg = convolve(&p, &f, &g, &quad).unwrap();
        let gf = convolve(&p, &g, &f, &quad).unwrap();
        let scale = fg.values().iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (a, b) in fg.values().iter().zip(gf.values()) {
            assert!((a - b).abs() <= 2e-2 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn convolve_2d_matches_generic_path() {
        let p = params();
        let quad = TranslationQuadrature::new(&p, 16, 1e-8).unwrap();
        let grid = HalfSpaceGrid::uniform(&p, 2.0, 12).unwrap();
        let f = GridFunction::sample(&grid, |x: &[f64]| {
            (-(x[0] * x[0] + x[1] * x[1])).exp()
        });
        let g = GridFunction::sample(&grid, |x: &[f64]| {
            (-((x[0] + 0.3).powi(2) + 2.0 * x[1] * x[1])).exp()
        });
        let fast = convolve_2d(&p, &f, &g, &quad).unwrap();
        let slow = convolve_generic(&p, &f, &g, &quad).unwrap();
        for (a, b) in fast.values().iter().zip(slow.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn convolution_transform_product_identity() {
        // F_W(f * g) = F_W(f) F_W(g) on Gaussians
        let p = params();
        let quad = TranslationQuadrature::new(&p, 48, 1e-10).unwrap();
        let grid = HalfSpaceGrid::uniform(&p, 5.0, 64).unwrap();
        let f = GridFunction::sample(&grid, |x: &[f64]| {
            (-0.5 * (x[0] * x[0] + x[1] * x[1])).exp()
        });
        let g = GridFunction::sample(&grid, |x: &[f64]| {
            (-(x[0] * x[0] + x[1] * x[1])).exp()
        });
        let conv = convolve(&p, &f, &g, &quad).unwrap();
        let pts: Vec<Vec<f64>> = vec![vec![0.3, 0.4], vec![-0.6, 0.9]];
        let lhs = crate::transform::forward_at(&p, &conv, &pts);
        let rf = crate::transform::forward_at(&p, &f, &pts);
        let rg = crate::transform::forward_at(&p, &g, &pts);
        for i in 0..pts.len() {
            let want = rf[i] * rg[i];
            let scale = want.norm().max(1e-6);
            assert!(
                (lhs[i] - want).norm() <= 1e-3 * scale,
                "{} vs {}",
                lhs[i],
                want
            );
        }
    }

    #[test]
    fn young_inequality_samples() {
        let p = params();
        let quad = TranslationQuadrature::new(&p, 32, 1e-8).unwrap();
        let grid = HalfSpaceGrid::uniform(&p, 4.0, 48).unwrap();
        let f = GridFunction::sample(&grid, |x: &[f64]| {
            (-0.5 * (x[0] * x[0] + x[1] * x[1])).exp()
        });
        let g = GridFunction::sample(&grid, |x: &[f64]| {
            (-((x[0] - 0.3).powi(2) + x[1] * x[1])).exp()
        });
        let conv = convolve(&p, &f, &g, &quad).unwrap();
        for &(pp, qq, rr) in &[(1.0, 1.0, 1.0), (1.0, 2.0, 2.0), (2.0, 2.0, f64::INFINITY)] {
            let lhs = lp_norm(&p, &conv, rr).unwrap();
            let rhs = lp_norm(&p, &f, pp).unwrap() * lp_norm(&p, &g, qq).unwrap();
            assert!(
                lhs <= rhs * (1.0 + 1e-2),
                "Young ({pp},{qq},{rr}): {lhs} > {rhs}"
            );
        }
    }
}
