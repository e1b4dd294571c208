//! Quadrature rules: Gauss-Jacobi (Golub-Welsch) and adaptive Gauss-Kronrod.
//!
//! Gauss-Jacobi with exponents (alpha - 1/2, alpha - 1/2) is the workhorse of
//! the translation operator: it absorbs the endpoint singularities of the
//! translation kernel analytically.

use crate::error::{Error, Result};
use crate::special::log_gamma;

/// Gauss-Jacobi rule on [-1, 1] for the weight (1-u)^a (1+u)^b.
///
/// `integrate_weighted(g)` returns `sum_i w_i g(u_i)`, approximating
/// `int_{-1}^{1} (1-u)^a (1+u)^b g(u) du`.
#[derive(Debug, Clone)]
pub struct GaussJacobi {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussJacobi {
    pub fn new(degree: usize, a: f64, b: f64) -> Result<Self> {
        if degree < 2 {
            return Err(Error::domain("Gauss-Jacobi degree must be at least 2"));
        }
        if !(a.is_finite() && a > -1.0 && b.is_finite() && b > -1.0) {
            return Err(Error::domain(format!(
                "Gauss-Jacobi exponents must be > -1, got ({a}, {b})"
            )));
        }

        // Golub-Welsch: eigen decomposition of the symmetric Jacobi matrix.
        let mut m = nalgebra::DMatrix::<f64>::zeros(degree, degree);
        let mut diag = (b - a) / (2.0 + a + b);
        for idx in 0..degree - 1 {
            let k = idx as f64 + 1.0;
            let denom = 2.0 * k + a + b;
            // off-diagonal^2 = 4k(k+a)(k+b)(k+a+b) / ((2k+a+b)^2 (2k+a+b+1)(2k+a+b-1));
            // at k = 1 the (k+a+b) and (2k+a+b-1) factors cancel, which keeps
            // the expression finite when a + b = -1
            let off = if idx == 0 {
                (4.0 * (1.0 + a) * (1.0 + b) / ((denom * denom) * (denom + 1.0))).sqrt()
            } else {
                2.0 / denom
                    * (k * (k + a) * (k + b) * (k + a + b) / ((denom + 1.0) * (denom - 1.0)))
                        .sqrt()
            };
            m[(idx, idx)] = diag;
            m[(idx, idx + 1)] = off;
            m[(idx + 1, idx)] = off;
            diag = (b * b - a * a) / (denom * (denom + 2.0));
        }
        m[(degree - 1, degree - 1)] = diag;

        let eigen = m.symmetric_eigen();
        // mu0 = int (1-u)^a (1+u)^b du = 2^{a+b+1} B(a+1, b+1)
        let mu0 = ((a + b + 1.0) * std::f64::consts::LN_2 + log_gamma(a + 1.0)?
            + log_gamma(b + 1.0)?
            - log_gamma(a + b + 2.0)?)
        .exp();

        let mut pairs: Vec<(f64, f64)> = eigen
            .eigenvalues
            .iter()
            .copied()
            .zip(eigen.eigenvectors.row(0).iter().map(|v| v * v * mu0))
            .collect();
        pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());

        // symmetric weights force the middle node of odd symmetric rules to 0
        if a == b && degree % 2 == 1 {
            pairs[degree / 2].0 = 0.0;
        }

        let (nodes, weights) = pairs.into_iter().unzip();
        Ok(GaussJacobi { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate_weighted<F: FnMut(f64) -> f64>(&self, mut g: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&u, &w)| w * g(u))
            .sum()
    }
}

// ---------------------------------------------------------------------------
// adaptive Gauss-Kronrod 7/15
// ---------------------------------------------------------------------------

// 15-point Kronrod abscissae (positive half) and weights, 7-point Gauss weights
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut result_kronrod = WGK[7] * fc;
    let mut result_gauss = WG[3] * fc;
    for j in 0..7 {
        let x = half * XGK[j];
        let fsum = f(center - x) + f(center + x);
        result_kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            result_gauss += WG[j / 2] * fsum;
        }
    }
    (
        result_kronrod * half,
        ((result_kronrod - result_gauss) * half).abs(),
    )
}

/// Adaptive Gauss-Kronrod quadrature of `f` on [a, b].
///
/// Bisects the interval with the largest error estimate until the total
/// estimated error is below `tol` (treated as absolute, with a matching
/// relative floor). Errors out if the budget of subdivisions is exhausted.
pub fn adaptive_quadrature<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::domain("quadrature tolerance must be positive"));
    }
    if a == b {
        return Ok(0.0);
    }
    struct Piece {
        a: f64,
        b: f64,
        value: f64,
        err: f64,
    }
    let (value, err) = gk15(&f, a, b);
    let mut pieces = vec![Piece { a, b, value, err }];
    for _ in 0..2000 {
        let total: f64 = pieces.iter().map(|p| p.value).sum();
        let total_err: f64 = pieces.iter().map(|p| p.err).sum();
        if total_err <= tol.max(tol * total.abs()) {
            return Ok(total);
        }
        // split the worst piece
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.partial_cmp(&y.1.err).unwrap())
            .unwrap();
        let p = pieces.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // interval at floating resolution; accept its estimate
            pieces.push(Piece {
                a: p.a,
                b: p.b,
                value: p.value,
                err: 0.0,
            });
            continue;
        }
        let (v1, e1) = gk15(&f, p.a, mid);
        let (v2, e2) = gk15(&f, mid, p.b);
        pieces.push(Piece {
            a: p.a,
            b: mid,
            value: v1,
            err: e1,
        });
        pieces.push(Piece {
            a: mid,
            b: p.b,
            value: v2,
            err: e2,
        });
    }
    Err(Error::domain(
        "adaptive quadrature failed to converge (possibly divergent integrand)",
    ))
}

/// Non-adaptive GK15 on [a, b], for smooth integrands on short intervals.
pub fn gk15_fixed<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    gk15(&f, a, b).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn gauss_jacobi_legendre_case() {
        // a = b = 0 reduces to Gauss-Legendre; integrate polynomials exactly
        let rule = GaussJacobi::new(5, 0.0, 0.0).unwrap();
        let int_x2 = rule.integrate_weighted(|u| u * u);
        assert_relative_eq!(int_x2, 2.0 / 3.0, max_relative = 1e-14);
        let int_x8 = rule.integrate_weighted(|u| u.powi(8));
        assert_relative_eq!(int_x8, 2.0 / 9.0, max_relative = 1e-13);
    }

    #[test]
    fn gauss_jacobi_weight_mass() {
        // sum of weights = 2^{a+b+1} B(a+1, b+1)
        for &(a, b) in &[(0.5, 0.5), (-0.25, -0.25), (1.37, 1.37), (2.0, 0.0)] {
            let rule = GaussJacobi::new(24, a, b).unwrap();
            let mass: f64 = rule.weights().iter().sum();
            let expect = ((a + b + 1.0) * std::f64::consts::LN_2
                + crate::special::log_gamma(a + 1.0).unwrap()
                + crate::special::log_gamma(b + 1.0).unwrap()
                - crate::special::log_gamma(a + b + 2.0).unwrap())
            .exp();
            assert_relative_eq!(mass, expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn gauss_jacobi_singular_endpoint_integral() {
        // int_{-1}^1 (1-u)^{-1/2}(1+u)^{-1/2} du = pi (Chebyshev weight)
        let rule = GaussJacobi::new(16, -0.5, -0.5).unwrap();
        let mass: f64 = rule.weights().iter().sum();
        assert_relative_eq!(mass, std::f64::consts::PI, max_relative = 1e-13);
        // int (1-u^2)^{-1/2} u^2 du = pi/2
        let v = rule.integrate_weighted(|u| u * u);
        assert_relative_eq!(v, std::f64::consts::PI / 2.0, max_relative = 1e-13);
    }

    #[test]
    fn gauss_jacobi_rejects_bad_input() {
        assert!(GaussJacobi::new(1, 0.0, 0.0).is_err());
        assert!(GaussJacobi::new(8, -1.0, 0.0).is_err());
        assert!(GaussJacobi::new(8, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn adaptive_handles_smooth_and_discontinuous() {
        let v = adaptive_quadrature(|x: f64| (-x * x / 2.0).exp(), 0.0, 12.0, 1e-12).unwrap();
        assert_relative_eq!(
            v,
            (std::f64::consts::PI / 2.0).sqrt(),
            max_relative = 1e-11
        );
        // indicator with an interior jump
        let v = adaptive_quadrature(
            |x: f64| if x <= 0.7317 { x * x } else { 0.0 },
            0.0,
            2.0,
            1e-10,
        )
        .unwrap();
        assert_abs_diff_eq!(v, 0.7317f64.powi(3) / 3.0, epsilon = 1e-9);
    }

    #[test]
    fn gk15_fixed_polynomial_exactness() {
        // degree-29 polynomial exactness; check x^10 on [0, 1]
        let v = gk15_fixed(|x| x.powi(10), 0.0, 1.0);
        assert_relative_eq!(v, 1.0 / 11.0, max_relative = 1e-14);
    }
}
