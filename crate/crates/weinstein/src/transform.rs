//! The Weinstein kernel and transform.
//!
//! Forward/inverse transforms come in two flavors: quadrature at arbitrary
//! frequency points (`forward_at`, `inverse_at`, the correctness oracles) and
//! a separable tensor path (`forward_tensor`, `inverse_tensor`) for full
//! spectral grids, which reorders the same sums axis by axis. Radial
//! functions get a one-dimensional Fourier-Bessel fast path, and ball
//! indicators a closed-form transform.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Result;
use crate::halfspace::{
    integrate, lp_norm, GridFunction, HalfSpaceGrid, RadialProfile, Scalar, WeinsteinParams,
};
use crate::quad::gk15_fixed;
use crate::special::{log_gamma, normalized_bessel, BesselOrder};

/// Frequency-side grid; structurally identical to the spatial grid, nodes
/// read as frequency points with strictly positive last component.
pub type SpectralGrid = HalfSpaceGrid;

/// Bessel order alpha used by the kernel.
pub fn kernel_order(params: &WeinsteinParams) -> BesselOrder {
    BesselOrder::new(params.alpha()).expect("alpha > -1/2 by construction")
}

/// Order alpha + (d-1)/2 of the radial Fourier-Bessel reduction.
pub fn radial_order(params: &WeinsteinParams) -> BesselOrder {
    BesselOrder::new(params.alpha() + 0.5 * (params.dim() as f64 - 1.0)).unwrap()
}

/// Order alpha + d/2 + 1/2 appearing in the ball indicator transform.
pub fn ball_order(params: &WeinsteinParams) -> BesselOrder {
    BesselOrder::new(params.alpha() + 0.5 * params.dim() as f64 + 0.5).unwrap()
}

/// The Weinstein kernel: exp(-i <x', lambda'>) j_alpha(x_d lambda_d).
pub fn weinstein_kernel(params: &WeinsteinParams, lambda: &[f64], x: &[f64]) -> Complex64 {
    let d = params.dim();
    debug_assert_eq!(lambda.len(), d);
    debug_assert_eq!(x.len(), d);
    let mut dot = 0.0;
    for k in 0..d - 1 {
        dot += x[k] * lambda[k];
    }
    let (s, c) = (-dot).sin_cos();
    let j = normalized_bessel(kernel_order(params), x[d - 1] * lambda[d - 1])
        .expect("finite arguments");
    Complex64::new(c * j, s * j)
}

// ---------------------------------------------------------------------------
// quadrature transforms
// ---------------------------------------------------------------------------

/// Shared core: for each target point p, sum f(y) exp(sign i <y', p'>)
/// j_alpha(y_d p_d) w(y) over source nodes in flat order.
fn transform_sum<T: Scalar>(
    params: &WeinsteinParams,
    f: &GridFunction<T>,
    points: &[Vec<f64>],
    sign: f64,
) -> Vec<Complex64> {
    let grid = f.grid();
    let d = grid.dim();
    let order = kernel_order(params);
    points
        .par_iter()
        .map(|p| {
            debug_assert_eq!(p.len(), d);
            // per-axis phase tables
            let phases: Vec<Vec<Complex64>> = (0..d - 1)
                .map(|k| {
                    grid.axis_nodes(k)
                        .iter()
                        .map(|&y| {
                            let (s, c) = (sign * y * p[k]).sin_cos();
                            Complex64::new(c, s)
                        })
                        .collect()
                })
                .collect();
            let bessel: Vec<f64> = grid
                .axis_nodes(d - 1)
                .iter()
                .map(|&y| normalized_bessel(order, y * p[d - 1]).expect("finite"))
                .collect();

            let mut idx = [0usize; 8];
            let mut sum = Complex64::new(0.0, 0.0);
            let mut comp = Complex64::new(0.0, 0.0);
            for (flat, v) in f.values().iter().enumerate() {
                grid.multi_index(flat, &mut idx[..d]);
                let mut kern = Complex64::new(bessel[idx[d - 1]], 0.0);
                for k in 0..d - 1 {
                    kern *= phases[k][idx[k]];
                }
                let w = grid.weight(flat);
                Scalar::comp_add(&mut sum, &mut comp, (kern * v.to_complex()).scale(w));
            }
            Scalar::comp_total(sum, comp)
        })
        .collect()
}

/// Forward Weinstein transform of `f` evaluated at arbitrary frequency
/// points (direct weighted quadrature, one sum per point).
pub fn forward_at<T: Scalar>(
    params: &WeinsteinParams,
    f: &GridFunction<T>,
    points: &[Vec<f64>],
) -> Vec<Complex64> {
    transform_sum(params, f, points, -1.0)
}

/// Forward transform onto a spectral grid.
pub fn forward_transform<T: Scalar>(
    params: &WeinsteinParams,
    f: &GridFunction<T>,
    spectral: &Arc<SpectralGrid>,
) -> GridFunction<Complex64> {
    assert!(
        spectral.node_count() > 0,
        "contract violation: spectral grid is empty"
    );
    let points: Vec<Vec<f64>> = (0..spectral.node_count())
        .map(|i| spectral.node_vec(i))
        .collect();
    GridFunction::from_values(Arc::clone(spectral), forward_at(params, f, &points))
}

/// Inverse transform of spectral data `g` evaluated at arbitrary spatial
/// points: f(x) = int Psi_lambda(-x', x_d) g(lambda) dnu(lambda).
pub fn inverse_at(
    params: &WeinsteinParams,
    g: &GridFunction<Complex64>,
    points: &[Vec<f64>],
) -> Vec<Complex64> {
    transform_sum(params, g, points, 1.0)
}

/// Inverse transform onto a spatial grid.
pub fn inverse_transform(
    params: &WeinsteinParams,
    g: &GridFunction<Complex64>,
    grid: &Arc<HalfSpaceGrid>,
) -> GridFunction<Complex64> {
    let points: Vec<Vec<f64>> = (0..grid.node_count()).map(|i| grid.node_vec(i)).collect();
    GridFunction::from_values(Arc::clone(grid), inverse_at(params, g, &points))
}

// ---------------------------------------------------------------------------
// separable tensor transforms
// ---------------------------------------------------------------------------

/// Contract one axis of a row-major array with kernel K (m_out x n_in rows).
fn apply_axis_kernel(
    data: &[Complex64],
    shape: &[usize],
    axis: usize,
    kernel: &[Vec<Complex64>],
) -> (Vec<Complex64>, Vec<usize>) {
    let n_in = shape[axis];
    let m_out = kernel.len();
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();

    let mut new_shape = shape.to_vec();
    new_shape[axis] = m_out;
    let mut out = vec![Complex64::new(0.0, 0.0); outer * m_out * inner];

    out.par_chunks_mut(m_out * inner)
        .enumerate()
        .for_each(|(o, chunk)| {
            let base_in = o * n_in * inner;
            for (l, krow) in kernel.iter().enumerate() {
                let base_out = l * inner;
                for (i, &k) in krow.iter().enumerate().take(n_in) {
                    if k.re == 0.0 && k.im == 0.0 {
                        continue;
                    }
                    let src = &data[base_in + i * inner..base_in + (i + 1) * inner];
                    let dst = &mut chunk[base_out..base_out + inner];
                    for (dv, sv) in dst.iter_mut().zip(src) {
                        *dv += k * sv;
                    }
                }
            }
        });
    (out, new_shape)
}

fn tensor_transform<T: Scalar>(
    params: &WeinsteinParams,
    f: &GridFunction<T>,
    target: &Arc<HalfSpaceGrid>,
    sign: f64,
) -> GridFunction<Complex64> {
    let src = f.grid();
    let d = src.dim();
    assert!(
        target.dim() == d,
        "contract violation: dimension mismatch in tensor transform"
    );
    let order = kernel_order(params);

    // shape slowest-first: [n_d, n_lat0, n_lat1, ...], matching the flat layout
    let mut shape: Vec<usize> = Vec::with_capacity(d);
    shape.push(src.counts()[d - 1]);
    shape.extend_from_slice(&src.counts()[..d - 1]);

    let mut data: Vec<Complex64> = f.values().iter().map(|v| v.to_complex()).collect();

    // lateral axes: kernel K[l][i] = h exp(sign i y_i lambda_l)
    for k in 0..d - 1 {
        let h = src.spacing(k);
        let kernel: Vec<Vec<Complex64>> = target
            .axis_nodes(k)
            .iter()
            .map(|&l| {
                src.axis_nodes(k)
                    .iter()
                    .map(|&y| {
                        let (s, c) = (sign * y * l).sin_cos();
                        Complex64::new(c * h, s * h)
                    })
                    .collect()
            })
            .collect();
        let (nd, ns) = apply_axis_kernel(&data, &shape, k + 1, &kernel);
        data = nd;
        shape = ns;
    }

    // depth axis: kernel K[l][i] = exact-cell-weight_i j_alpha(y_i lambda_l).
    // Lateral spacings and the density constant live in the other factors,
    // so strip them from the row weight here.
    {
        let c = params.density_constant();
        let lateral_h: f64 = (0..d - 1).map(|k| src.spacing(k)).product();
        let kernel: Vec<Vec<Complex64>> = target
            .axis_nodes(d - 1)
            .iter()
            .map(|&l| {
                src.axis_nodes(d - 1)
                    .iter()
                    .enumerate()
                    .map(|(i, &y)| {
                        let w = src.row_weight(i) / (c * lateral_h);
                        Complex64::new(
                            w * normalized_bessel(order, y * l).expect("finite"),
                            0.0,
                        )
                    })
                    .collect()
            })
            .collect();
        let (nd, ns) = apply_axis_kernel(&data, &shape, 0, &kernel);
        data = nd;
        shape = ns;
    }

    let c = params.density_constant();
    for v in data.iter_mut() {
        *v *= c;
    }
    let _ = shape;
    GridFunction::from_values(Arc::clone(target), data)
}

/// Separable forward transform onto a full tensor spectral grid. Agrees with
/// the direct quadrature up to floating reassociation (<= 1e-10 relative).
pub fn forward_tensor<T: Scalar>(
    params: &WeinsteinParams,
    f: &GridFunction<T>,
    spectral: &Arc<SpectralGrid>,
) -> GridFunction<Complex64> {
    assert!(
        spectral.node_count() > 0,
        "contract violation: spectral grid is empty"
    );
    tensor_transform(params, f, spectral, -1.0)
}

/// Separable inverse transform onto a spatial grid.
pub fn inverse_tensor(
    params: &WeinsteinParams,
    g: &GridFunction<Complex64>,
    grid: &Arc<HalfSpaceGrid>,
) -> GridFunction<Complex64> {
    tensor_transform(params, g, grid, 1.0)
}

// ---------------------------------------------------------------------------
// radial fast path and closed forms
// ---------------------------------------------------------------------------

/// One-dimensional Fourier-Bessel transform of order alpha + (d-1)/2 applied
/// to a radial profile: equals the Weinstein transform of the radial function
/// at any frequency of magnitude `lambda_mag`.
pub fn radial_transform(
    params: &WeinsteinParams,
    profile: &RadialProfile,
    lambda_mag: f64,
) -> Result<f64> {
    if !(lambda_mag >= 0.0) {
        return Err(crate::error::Error::domain("lambda magnitude must be >= 0"));
    }
    let order = radial_order(params);
    let gamma = params.radial_exponent();
    let j = |r: f64| normalized_bessel(order, lambda_mag * r).expect("finite");

    // piecewise GK15 on the linear interpolant, splitting long intervals so
    // the oscillation stays resolved
    let split = |a: f64, b: f64, f: &dyn Fn(f64) -> f64| -> f64 {
        let parts = (1.0 + (b - a) * lambda_mag / 3.0).ceil() as usize;
        let mut acc = 0.0;
        for i in 0..parts {
            let lo = a + (b - a) * i as f64 / parts as f64;
            let hi = a + (b - a) * (i + 1) as f64 / parts as f64;
            acc += gk15_fixed(f, lo, hi);
        }
        acc
    };

    let radii = profile.radii();
    let values = profile.values();
    // head [0, r_0]: constant F
    let f0 = values[0];
    let head = split(0.0, radii[0], &|r| f0 * j(r) * r.powf(gamma));
    let mut total = head;
    let mut last = head;
    for i in 0..radii.len() - 1 {
        let (r0, r1) = (radii[i], radii[i + 1]);
        let (g0, g1) = (values[i], values[i + 1]);
        let slope = (g1 - g0) / (r1 - r0);
        let piece = split(r0, r1, &|r| (g0 + slope * (r - r0)) * j(r) * r.powf(gamma));
        total += piece;
        last = piece;
    }
    if last.abs() > (1e-8 * total.abs()).max(1e-12) {
        return Err(crate::error::Error::domain(format!(
            "radial profile tail not negligible in transform: last interval {last:e} of {total:e}"
        )));
    }
    Ok(params.radial_constant() * total)
}

/// Closed-form Weinstein transform of the ball indicator chi_{B^+(0,eps)}:
/// eps^{2a+d+1} / (2^{a+(d+1)/2} Gamma(a+(d+3)/2)) j_{a+d/2+1/2}(|lambda| eps).
pub fn ball_indicator_transform(
    params: &WeinsteinParams,
    eps: f64,
    lambda_mag: f64,
) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(crate::error::Error::domain(format!(
            "ball radius must be > 0, got {eps}"
        )));
    }
    let a = params.alpha();
    let d = params.dim() as f64;
    let ln_c = (2.0 * a + d + 1.0) * eps.ln()
        - (a + 0.5 * (d + 1.0)) * std::f64::consts::LN_2
        - log_gamma(a + 0.5 * (d + 3.0))?;
    Ok(ln_c.exp() * normalized_bessel(ball_order(params), lambda_mag * eps)?)
}

// ---------------------------------------------------------------------------
// finite-difference operator
// ---------------------------------------------------------------------------

/// Second-order finite-difference Laplace-Bessel operator: per-axis central
/// second differences plus (2a+1)/x_d times the central first difference in
/// x_d. The boundary ring is invalid and set to zero; use
/// [`interior_sup_norm`] for norms.
pub fn apply_laplace_bessel<T: Scalar>(
    params: &WeinsteinParams,
    f: &GridFunction<T>,
) -> GridFunction<T> {
    let grid = f.grid();
    let d = grid.dim();
    assert!(
        grid.counts().iter().all(|&n| n >= 3),
        "contract violation: need at least 3 nodes per axis"
    );
    let bessel_coeff = params.weight_exponent();
    let values = f.values();

    // stride of axis k in the flat layout [depth][lat0][lat1]...
    let mut strides = vec![0usize; d];
    strides[d - 1] = grid.lateral_len();
    {
        let mut s = 1usize;
        for k in (0..d - 1).rev() {
            strides[k] = s;
            s *= grid.counts()[k];
        }
    }

    let out: Vec<T> = (0..grid.node_count())
        .into_par_iter()
        .map(|flat| {
            if !grid.is_interior(flat) {
                return T::zero();
            }
            let mut idx = [0usize; 8];
            grid.multi_index(flat, &mut idx[..d]);
            let mut acc = T::zero();
            for k in 0..d {
                let h = grid.spacing(k);
                let up = values[flat + strides[k]];
                let dn = values[flat - strides[k]];
                let center = values[flat];
                let second = (up + dn - center.scale(2.0)).scale(1.0 / (h * h));
                acc = acc + second;
                if k == d - 1 {
                    let xd = grid.axis_nodes(k)[idx[k]];
                    let first = (up - dn).scale(1.0 / (2.0 * h));
                    acc = acc + first.scale(bessel_coeff / xd);
                }
            }
            acc
        })
        .collect();
    GridFunction::from_values(Arc::clone(grid), out)
}

/// Max magnitude over interior nodes (the boundary ring of finite-difference
/// outputs is excluded).
pub fn interior_sup_norm<T: Scalar>(f: &GridFunction<T>) -> f64 {
    let grid = f.grid();
    f.values()
        .iter()
        .enumerate()
        .filter(|(i, _)| grid.is_interior(*i))
        .map(|(_, v)| v.magnitude())
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Plancherel
// ---------------------------------------------------------------------------

/// The two sides of the Plancherel identity and their relative gap.
#[derive(Clone, Copy, Debug)]
pub struct PlancherelCheck {
    pub spatial_energy: f64,
    pub spectral_energy: f64,
    pub relative_gap: f64,
}

/// Compare ||f||_2^2 against ||F_W f||_2^2 on the given spectral grid.
pub fn plancherel_check<T: Scalar>(
    params: &WeinsteinParams,
    f: &GridFunction<T>,
    spectral: &Arc<SpectralGrid>,
) -> PlancherelCheck {
    let spatial = lp_norm(params, f, 2.0).expect("p = 2 is valid").powi(2);
    let transformed = forward_tensor(params, f, spectral);
    let spectral_energy = lp_norm(params, &transformed, 2.0)
        .expect("p = 2 is valid")
        .powi(2);
    let gap = (spatial - spectral_energy).abs() / spatial.max(spectral_energy).max(1e-300);
    PlancherelCheck {
        spatial_energy: spatial,
        spectral_energy,
        relative_gap: gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halfspace::radial_integrate_fn;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn params() -> WeinsteinParams {
        WeinsteinParams::new(1.0, 2).unwrap()
    }

    #[test]
    fn kernel_normalization_bound_and_symmetry() {
        let p = params();
        assert_eq!(
            weinstein_kernel(&p, &[0.0, 0.0], &[0.7, 1.3]),
            Complex64::new(1.0, 0.0)
        );
        // deterministic pseudo-random sample
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..500 {
            let lam = [8.0 * next() - 4.0, 4.0 * next()];
            let x = [8.0 * next() - 4.0, 4.0 * next()];
            let k = weinstein_kernel(&p, &lam, &x);
            assert!(k.norm() <= 1.0 + 1e-12, "|Psi| = {} > 1", k.norm());
            // symmetry Psi_lambda(x) = Psi_x(lambda), exact
            assert_eq!(k, weinstein_kernel(&p, &x, &lam));
            // parity Psi_lambda(-z) = Psi_{-lambda}(z), exact
            let neg_x = [-x[0], -x[1]];
            let neg_lam = [-lam[0], -lam[1]];
            assert_eq!(
                weinstein_kernel(&p, &lam, &neg_x),
                weinstein_kernel(&p, &neg_lam, &x)
            );
        }
    }

    #[test]
    fn forward_at_zero_frequency_is_the_integral() {
        let p = params();
        let grid = HalfSpaceGrid::uniform(&p, 3.0, 64).unwrap();
        let f = GridFunction::sample(&grid, |x: &[f64]| (-(x[0] * x[0] + x[1] * x[1])).exp());
        let at0 = forward_at(&p, &f, &[vec![0.0, 0.0]])[0];
        let mass = integrate(&p, &f);
        assert_abs_diff_eq!(at0.re, mass, epsilon = 1e-12);
        assert_abs_diff_eq!(at0.im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn linfty_bound_by_l1_norm() {
        let p = params();
        let grid = HalfSpaceGrid::uniform(&p, 3.0, 48).unwrap();
        let f = GridFunction::sample(&grid, |x: &[f64]| {
            (x[0]).cos() * (-(x[0] * x[0] + x[1] * x[1])).exp()
        });
        let l1 = lp_norm(&p, &f, 1.0).unwrap();
        let pts: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![-3.0 + 0.15 * i as f64, 0.05 + 0.1 * i as f64])
            .collect();
        for v in forward_at(&p, &f, &pts) {
            assert!(v.norm() <= l1 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn tensor_path_agrees_with_direct_quadrature() {
        let p = params();
        let grid = HalfSpaceGrid::uniform(&p, 3.0, 24).unwrap();
        let spectral = HalfSpaceGrid::uniform(&p, 2.0, 10).unwrap();
        let f = GridFunction::sample(&grid, |x: &[f64]| {
            (1.1 * x[0]).cos() * (-(x[0] * x[0] + x[1] * x[1])).exp()
        });
        let direct = forward_transform(&p, &f, &spectral);
        let tensor = forward_tensor(&p, &f, &spectral);
        let scale = direct
            .values()
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        for (a, b) in direct.values().iter().zip(tensor.values()) {
            assert!((a - b).norm() <= 1e-10 * scale, "{a} vs {b}");
        }
        // inverse agreement too
        let inv_direct = inverse_transform(&p, &direct, &grid);
        let inv_tensor = inverse_tensor(&p, &direct, &grid);
        let iscale = inv_direct
            .values()
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        for (a, b) in inv_direct.values().iter().zip(inv_tensor.values()) {
            assert!((a - b).norm() <= 1e-10 * iscale);
        }
    }

    #[test]
    fn tensor_path_in_three_dimensions() {
        let p3 = WeinsteinParams::new(1.5, 3).unwrap();
        let grid = HalfSpaceGrid::uniform(&p3, 2.5, 12).unwrap();
        let spectral = HalfSpaceGrid::uniform(&p3, 1.5, 6).unwrap();
        let f = GridFunction::sample(&grid, |x: &[f64]| {
            (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp()
        });
        let direct = forward_transform(&p3, &f, &spectral);
        let tensor = forward_tensor(&p3, &f, &spectral);
        let scale = direct
            .values()
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        for (a, b) in direct.values().iter().zip(tensor.values()) {
            assert!((a - b).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn gaussian_is_self_reciprocal_radially() {
        // Fourier-Bessel side (the oracle): adaptive quadrature of the
        // profile reproduces exp(-lambda^2/2) to high accuracy
        for &(alpha, d) in &[(1.0, 2usize), (1.5, 2), (1.5, 3)] {
            let p = WeinsteinParams::new(alpha, d).unwrap();
            let order = radial_order(&p);
            let gamma = p.radial_exponent();
            for &lam in &[0.0, 0.5, 1.0, 2.0, 3.5] {
                let v = crate::quad::adaptive_quadrature(
                    |r| {
                        (-0.5 * r * r).exp()
                            * normalized_bessel(order, lam * r).unwrap()
                            * r.powf(gamma)
                    },
                    0.0,
                    14.0,
                    1e-13,
                )
                .unwrap()
                    * p.radial_constant();
                assert_relative_eq!(v, (-0.5 * lam * lam).exp(), max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn radial_transform_profile_path() {
        let p = params();
        // indicator: closed form of the transform
        let prof = RadialProfile::indicator(1.0, 2.0).unwrap();
        for &lam in &[0.0, 0.5, 2.0, 7.3, 19.0] {
            let got = radial_transform(&p, &prof, lam).unwrap();
            let want = ball_indicator_transform(&p, 1.0, lam).unwrap();
            assert_abs_diff_eq!(got, want, epsilon = 1e-10);
        }
        // lambda = 0 reduces to the radial integral
        let gauss = RadialProfile::from_fn(|r| (-0.5 * r * r).exp(), 12.0, 6000).unwrap();
        let at0 = radial_transform(&p, &gauss, 0.0).unwrap();
        let mass = crate::halfspace::radial_integrate(&p, &gauss).unwrap();
        assert_relative_eq!(at0, mass, max_relative = 1e-12);
        // Gaussian profile transform matches the closed form to the
        // interpolation budget
        let at2 = radial_transform(&p, &gauss, 2.0).unwrap();
        assert_relative_eq!(at2, (-2.0f64).exp(), max_relative = 1e-5);
    }

    #[test]
    fn ball_indicator_transform_properties() {
        let p = params();
        // at lambda = 0 it is the ball measure (Gamma recurrence identity)
        for &eps in &[0.3, 1.0, 2.7] {
            assert_relative_eq!(
                ball_indicator_transform(&p, eps, 0.0).unwrap(),
                p.ball_measure(eps).unwrap(),
                max_relative = 1e-13
            );
        }
        // |value| <= value at 0
        for &lam in &[0.1, 1.0, 10.0, 100.0] {
            assert!(
                ball_indicator_transform(&p, 1.0, lam).unwrap().abs()
                    <= ball_indicator_transform(&p, 1.0, 0.0).unwrap() * (1.0 + 1e-12)
            );
        }
        assert!(ball_indicator_transform(&p, 0.0, 1.0).is_err());
    }

    #[test]
    fn forward_matches_ball_indicator_closed_form() {
        let p = params();
        let grid = HalfSpaceGrid::uniform(&p, 1.5, 256).unwrap();
        let chi = GridFunction::sample(&grid, |x: &[f64]| {
            if x[0] * x[0] + x[1] * x[1] <= 1.0 {
                1.0
            } else {
                0.0
            }
        });
        let dir = [0.6, 0.8];
        let pts: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                let t = 0.5 + 2.0 * i as f64;
                vec![dir[0] * t, dir[1] * t]
            })
            .collect();
        let got = forward_at(&p, &chi, &pts);
        let scale = ball_indicator_transform(&p, 1.0, 0.0).unwrap();
        for (i, pt) in pts.iter().enumerate() {
            let lam = (pt[0] * pt[0] + pt[1] * pt[1]).sqrt();
            let want = ball_indicator_transform(&p, 1.0, lam).unwrap();
            assert!(
                (got[i].re - want).abs() <= 3e-3 * scale,
                "lambda = {lam}: {} vs {want}",
                got[i].re
            );
            assert!(got[i].im.abs() <= 3e-3 * scale);
        }
    }

    #[test]
    fn laplace_bessel_annihilates_constants_and_lateral_linears() {
        let p = params();
        let grid = HalfSpaceGrid::uniform(&p, 2.0, 32).unwrap();
        let one = GridFunction::sample(&grid, |_: &[f64]| 1.0);
        assert_eq!(interior_sup_norm(&apply_laplace_bessel(&p, &one)), 0.0);
        let lin = GridFunction::sample(&grid, |x: &[f64]| x[0]);
        assert!(interior_sup_norm(&apply_laplace_bessel(&p, &lin)) <= 1e-10);
    }

    #[test]
    fn laplace_bessel_eigen_relation_on_kernel() {
        let p = params();
        let lam = [0.6, 0.8]; // |lambda| = 1
        let grid = HalfSpaceGrid::new(&p, &[1.0], 1.0, &[256, 128]).unwrap();
        let psi = GridFunction::sample(&grid, |x: &[f64]| weinstein_kernel(&p, &lam, x).re);
        let lap = apply_laplace_bessel(&p, &psi);
        // Delta psi + |lambda|^2 psi ~ 0 at O(h^2); h = 1/128
        let mut resid = GridFunction::zeros(&grid);
        for i in 0..psi.values().len() {
            resid.values_mut()[i] = lap.values()[i] + psi.values()[i];
        }
        let r = interior_sup_norm(&resid);
        assert!(r <= 1e-3, "residual {r} too large for h = 1/128");
    }

    #[test]
    #[should_panic(expected = "at least 3 nodes")]
    fn laplace_bessel_needs_three_nodes() {
        let p = params();
        let grid = HalfSpaceGrid::new(&p, &[1.0], 1.0, &[2, 2]).unwrap();
        let f = GridFunction::sample(&grid, |_: &[f64]| 1.0);
        let _ = apply_laplace_bessel(&p, &f);
    }

    #[test]
    fn plancherel_zero_function() {
        let p = params();
        let grid = HalfSpaceGrid::uniform(&p, 2.0, 16).unwrap();
        let spectral = HalfSpaceGrid::uniform(&p, 2.0, 16).unwrap();
        let zero = GridFunction::sample(&grid, |_: &[f64]| 0.0);
        let chk = plancherel_check(&p, &zero, &spectral);
        assert_eq!(chk.spatial_energy, 0.0);
        assert_eq!(chk.spectral_energy, 0.0);
    }

    #[test]
    fn inverse_at_origin_is_spectral_mass() {
        let p = params();
        let grid = HalfSpaceGrid::uniform(&p, 3.0, 32).unwrap();
        let g = GridFunction::sample(&grid, |x: &[f64]| {
            Complex64::new((-(x[0] * x[0] + x[1] * x[1])).exp(), 0.0)
        });
        let at0 = inverse_at(&p, &g, &[vec![0.0, 0.0]])[0];
        let mass = integrate(&p, &g);
        assert_abs_diff_eq!(at0.re, mass.re, epsilon = 1e-12);
    }

    #[test]
    fn radial_consistency_of_grid_transform() {
        // forward transform of radial samples agrees with the radial path;
        // box 6 keeps the Gaussian truncation below the grid budget
        let p = params();
        let grid = HalfSpaceGrid::uniform(&p, 6.0, 192).unwrap();
        let f = GridFunction::sample(&grid, |x: &[f64]| {
            (-0.5 * (x[0] * x[0] + x[1] * x[1])).exp()
        });
        let pts: Vec<Vec<f64>> = vec![vec![0.3, 0.4], vec![0.9, 1.2], vec![0.0, 2.0]];
        let got = forward_at(&p, &f, &pts);
        for (i, pt) in pts.iter().enumerate() {
            let lam = (pt[0] * pt[0] + pt[1] * pt[1]).sqrt();
            let want = radial_integrate_fn(
                &p,
                |r| {
                    (-0.5 * r * r).exp() * normalized_bessel(radial_order(&p), lam * r).unwrap()
                },
                14.0,
                1e-12,
            )
            .unwrap();
            assert_relative_eq!(got[i].re, want, max_relative = 1e-3, epsilon = 1e-6);
            assert!(got[i].im.abs() <= 1e-6);
        }
    }
}
