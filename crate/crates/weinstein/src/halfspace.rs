//! The weighted half-space: parameters, measure, grids, integration, norms.
//!
//! The ambient domain is R^{d-1} x (0, inf) carrying the measure with density
//! `x_d^{2 alpha + 1} / ((2 pi)^{(d-1)/2} 2^alpha Gamma(alpha + 1))`.
//! Grids are tensor products of cell-centered axes over a truncated box
//! [-L_i, L_i]^{d-1} x (0, L_d]; in the x_d direction every cell carries the
//! exact integral of the weight over the cell, so integration of functions
//! that are constant per x_d-cell is exact.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::log_gamma;

// ---------------------------------------------------------------------------
// parameters
// ---------------------------------------------------------------------------

/// The pair (alpha, d) that fixes the weight, the kernels and every constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeinsteinParams {
    alpha: f64,
    dim: usize,
}

impl WeinsteinParams {
    pub fn new(alpha: f64, dim: usize) -> Result<Self> {
        if !(alpha.is_finite() && alpha > -0.5) {
            return Err(Error::domain(format!(
                "alpha must be finite and > -1/2, got {alpha}"
            )));
        }
        if dim < 2 {
            return Err(Error::domain(format!("dimension must be >= 2, got {dim}")));
        }
        Ok(WeinsteinParams { alpha, dim })
    }

    pub fn alpha(self) -> f64 {
        self.alpha
    }

    pub fn dim(self) -> usize {
        self.dim
    }

    /// 2 alpha + 1, the weight exponent.
    pub fn weight_exponent(self) -> f64 {
        2.0 * self.alpha + 1.0
    }

    /// Whether alpha > d/2 - 1; gates the translated-indicator estimates.
    pub fn strong_regime(self) -> bool {
        self.alpha > self.dim as f64 / 2.0 - 1.0
    }

    /// Normalizing constant of the measure density,
    /// 1 / ((2 pi)^{(d-1)/2} 2^alpha Gamma(alpha+1)).
    pub fn density_constant(self) -> f64 {
        let d = self.dim as f64;
        (-0.5 * (d - 1.0) * (std::f64::consts::TAU).ln() - self.alpha * std::f64::consts::LN_2
            - log_gamma(self.alpha + 1.0).expect("alpha + 1 > 1/2"))
        .exp()
    }

    /// Measure density at a point of the closed half-space.
    pub fn measure_density(self, x: &[f64]) -> Result<f64> {
        assert_eq!(x.len(), self.dim, "point dimension mismatch");
        let xd = x[self.dim - 1];
        if !(xd >= 0.0) {
            return Err(Error::domain(format!(
                "measure density requires x_d >= 0, got {xd}"
            )));
        }
        Ok(xd.powf(self.weight_exponent()) * self.density_constant())
    }

    /// Closed-form measure of the half-ball of radius eps centered at 0:
    /// eps^{2a+d+1} / (2^{a+(d-1)/2} (2a+d+1) Gamma(a+(d+1)/2)).
    pub fn ball_measure(self, eps: f64) -> Result<f64> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::domain(format!("ball radius must be > 0, got {eps}")));
        }
        let a = self.alpha;
        let d = self.dim as f64;
        let expo = 2.0 * a + d + 1.0;
        Ok((expo * eps.ln()
            - (a + 0.5 * (d - 1.0)) * std::f64::consts::LN_2
            - expo.ln()
            - log_gamma(a + 0.5 * (d + 1.0))?)
        .exp())
    }

    /// Measure of the box C^+(x, eps) = B_{d-1}(x', eps) x (max(0, x_d - eps), x_d + eps).
    pub fn box_measure(self, x: &[f64], eps: f64) -> Result<f64> {
        assert_eq!(x.len(), self.dim, "point dimension mismatch");
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::domain(format!("box radius must be > 0, got {eps}")));
        }
        let xd = x[self.dim - 1];
        if !(xd >= 0.0) {
            return Err(Error::domain(format!("box center requires x_d >= 0, got {xd}")));
        }
        let a = self.alpha;
        let k = self.dim - 1;
        let lateral = unit_ball_volume(k)? * eps.powi(k as i32);
        let p = 2.0 * a + 2.0;
        let lower = (xd - eps).max(0.0);
        let depth = ((xd + eps).powf(p) - lower.powf(p)) / p;
        Ok(lateral * depth * self.density_constant())
    }

    /// The common prefactor 1 / (2^{a+(d-1)/2} Gamma(a+(d+1)/2)) of the
    /// radial reduction of the measure.
    pub fn radial_constant(self) -> f64 {
        let a = self.alpha;
        let d = self.dim as f64;
        (-(a + 0.5 * (d - 1.0)) * std::f64::consts::LN_2 - log_gamma(a + 0.5 * (d + 1.0)).unwrap())
            .exp()
    }

    /// Exponent of r in the radial reduction: 2 alpha + d.
    pub fn radial_exponent(self) -> f64 {
        2.0 * self.alpha + self.dim as f64
    }
}

/// Volume of the Euclidean unit ball in R^k (k = 0 gives 1).
pub fn unit_ball_volume(k: usize) -> Result<f64> {
    let kf = k as f64;
    Ok((0.5 * kf * std::f64::consts::PI.ln() - log_gamma(0.5 * kf + 1.0)?).exp())
}

// ---------------------------------------------------------------------------
// balls
// ---------------------------------------------------------------------------

/// Closed half-space ball B^+(center, radius).
#[derive(Clone, Debug, PartialEq)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BallSpec {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::domain(format!(
                "ball radius must be > 0, got {radius}"
            )));
        }
        match center.last() {
            Some(&cd) if cd >= 0.0 => {}
            _ => {
                return Err(Error::domain(
                    "ball center must lie in the closed half-space (x_d >= 0)",
                ))
            }
        }
        Ok(BallSpec { center, radius })
    }

    /// Half-space balls intersect iff the full balls do, since the segment
    /// between centers stays in the closed half-space.
    pub fn intersects(&self, other: &BallSpec) -> bool {
        let d2: f64 = self
            .center
            .iter()
            .zip(&other.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        d2.sqrt() <= self.radius + other.radius
    }
}

// ---------------------------------------------------------------------------
// grid
// ---------------------------------------------------------------------------

/// Tensor, cell-centered grid over [-L_i, L_i]^{d-1} x (0, L_d].
///
/// Flat index layout: x_d slowest, then lateral axes in order, last lateral
/// axis fastest; `flat = i_d * lateral_len + lateral_flat`.
#[derive(Debug)]
pub struct HalfSpaceGrid {
    alpha: f64,
    dim: usize,
    half_widths: Vec<f64>,
    depth: f64,
    counts: Vec<usize>,
    axis_nodes: Vec<Vec<f64>>,
    /// exact per-cell integrals of t^{2 alpha + 1} along the x_d axis
    depth_cell_weights: Vec<f64>,
    /// density constant times the product of lateral spacings
    weight_scale: f64,
    lateral_len: usize,
}

impl HalfSpaceGrid {
    pub fn new(
        params: &WeinsteinParams,
        half_widths: &[f64],
        depth: f64,
        counts: &[usize],
    ) -> Result<Arc<Self>> {
        let d = params.dim();
        if half_widths.len() != d - 1 || counts.len() != d {
            return Err(Error::domain(format!(
                "grid spec mismatch: expected {} lateral extents and {d} counts",
                d - 1
            )));
        }
        if half_widths.iter().any(|&w| !(w > 0.0)) || !(depth > 0.0) {
            return Err(Error::domain("grid extents must be positive"));
        }
        if counts.iter().any(|&n| n == 0) {
            return Err(Error::domain("grid counts must be positive"));
        }

        let mut axis_nodes = Vec::with_capacity(d);
        let mut weight_scale = params.density_constant();
        for k in 0..d - 1 {
            let n = counts[k];
            let h = 2.0 * half_widths[k] / n as f64;
            weight_scale *= h;
            axis_nodes.push(
                (0..n)
                    .map(|i| -half_widths[k] + (i as f64 + 0.5) * h)
                    .collect(),
            );
        }
        let nd = counts[d - 1];
        let hd = depth / nd as f64;
        axis_nodes.push((0..nd).map(|i| (i as f64 + 0.5) * hd).collect());

        let p = params.weight_exponent() + 1.0; // 2 alpha + 2 > 0
        let depth_cell_weights = (0..nd)
            .map(|i| {
                let lo = i as f64 * hd;
                let hi = (i as f64 + 1.0) * hd;
                (hi.powf(p) - lo.powf(p)) / p
            })
            .collect();

        let lateral_len = counts[..d - 1].iter().product();
        Ok(Arc::new(HalfSpaceGrid {
            alpha: params.alpha(),
            dim: d,
            half_widths: half_widths.to_vec(),
            depth,
            counts: counts.to_vec(),
            axis_nodes,
            depth_cell_weights,
            weight_scale,
            lateral_len,
        }))
    }

    /// Uniform grid: the same node count on every axis, lateral extent
    /// [-extent, extent] and depth (0, extent].
    pub fn uniform(params: &WeinsteinParams, extent: f64, n: usize) -> Result<Arc<Self>> {
        let d = params.dim();
        HalfSpaceGrid::new(params, &vec![extent; d - 1], extent, &vec![n; d])
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn node_count(&self) -> usize {
        self.lateral_len * self.counts[self.dim - 1]
    }

    pub fn lateral_len(&self) -> usize {
        self.lateral_len
    }

    pub fn axis_nodes(&self, axis: usize) -> &[f64] {
        &self.axis_nodes[axis]
    }

    /// Spacing along an axis.
    pub fn spacing(&self, axis: usize) -> f64 {
        if axis < self.dim - 1 {
            2.0 * self.half_widths[axis] / self.counts[axis] as f64
        } else {
            self.depth / self.counts[axis] as f64
        }
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim).map(|k| self.spacing(k)).fold(0.0, f64::max)
    }

    /// Decompose a flat index into per-axis indices.
    pub fn multi_index(&self, flat: usize, out: &mut [usize]) {
        let d = self.dim;
        let id = flat / self.lateral_len;
        let mut rest = flat % self.lateral_len;
        out[d - 1] = id;
        for k in (0..d - 1).rev() {
            out[k] = rest % self.counts[k];
            rest /= self.counts[k];
        }
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let d = self.dim;
        let mut lat = 0usize;
        for k in 0..d - 1 {
            lat = lat * self.counts[k] + idx[k];
        }
        idx[d - 1] * self.lateral_len + lat
    }

    /// Write node coordinates into `out`.
    pub fn node(&self, flat: usize, out: &mut [f64]) {
        let d = self.dim;
        let mut idx = [0usize; 8];
        self.multi_index(flat, &mut idx[..d]);
        for k in 0..d {
            out[k] = self.axis_nodes[k][idx[k]];
        }
    }

    pub fn node_vec(&self, flat: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.node(flat, &mut out);
        out
    }

    /// Quadrature weight of the node: density constant x lateral cell volume
    /// x exact x_d-cell weight.
    pub fn weight(&self, flat: usize) -> f64 {
        self.weight_scale * self.depth_cell_weights[flat / self.lateral_len]
    }

    /// Weight of an x_d row (shared by all lateral positions in the row).
    pub fn row_weight(&self, depth_index: usize) -> f64 {
        self.weight_scale * self.depth_cell_weights[depth_index]
    }

    /// True when the node is not on the outermost ring of any axis.
    pub fn is_interior(&self, flat: usize) -> bool {
        let d = self.dim;
        let mut idx = [0usize; 8];
        self.multi_index(flat, &mut idx[..d]);
        (0..d).all(|k| idx[k] > 0 && idx[k] + 1 < self.counts[k])
    }

    /// Locate the flat index of the grid node nearest to `point`, if the
    /// point lies within the grid box.
    pub fn nearest_node(&self, point: &[f64]) -> Option<usize> {
        let d = self.dim;
        let mut idx = vec![0usize; d];
        for k in 0..d {
            let nodes = &self.axis_nodes[k];
            let h = self.spacing(k);
            let first = nodes[0];
            let i = ((point[k] - first) / h).round();
            if i < -0.5 || i > nodes.len() as f64 - 0.5 {
                return None;
            }
            idx[k] = (i.max(0.0) as usize).min(nodes.len() - 1);
        }
        Some(self.flat_index(&idx))
    }

    /// Flat indices of all nodes inside the closed ball B^+(center, eps).
    pub fn nodes_in_ball(&self, center: &[f64], eps: f64) -> Vec<usize> {
        let d = self.dim;
        let mut ranges = Vec::with_capacity(d);
        for k in 0..d {
            let nodes = &self.axis_nodes[k];
            let h = self.spacing(k);
            let first = nodes[0];
            let lo = (((center[k] - eps) - first) / h).ceil().max(0.0) as usize;
            let hi = ((((center[k] + eps) - first) / h).floor() as isize)
                .min(nodes.len() as isize - 1);
            if (hi as isize) < lo as isize {
                return Vec::new();
            }
            ranges.push((lo, hi as usize));
        }
        let mut out = Vec::new();
        let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        let eps2 = eps * eps;
        'outer: loop {
            let dist2: f64 = (0..d)
                .map(|k| {
                    let delta = self.axis_nodes[k][idx[k]] - center[k];
                    delta * delta
                })
                .sum();
            if dist2 <= eps2 {
                out.push(self.flat_index(&idx));
            }
            // advance the multi-index
            let mut k = d;
            loop {
                if k == 0 {
                    break 'outer;
                }
                k -= 1;
                if idx[k] < ranges[k].1 {
                    idx[k] += 1;
                    for r in k + 1..d {
                        idx[r] = ranges[r].0;
                    }
                    break;
                }
            }
        }
        out
    }

    /// Structural compatibility (same discretization and weight parameters).
    pub fn same_layout(&self, other: &HalfSpaceGrid) -> bool {
        self.alpha == other.alpha
            && self.dim == other.dim
            && self.counts == other.counts
            && self.half_widths == other.half_widths
            && self.depth == other.depth
    }
}

// ---------------------------------------------------------------------------
// scalars and grid functions
// ---------------------------------------------------------------------------

/// Scalar field element: real or complex.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + 'static
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::fmt::Debug
{
    fn zero() -> Self;
    fn magnitude(self) -> f64;
    fn scale(self, s: f64) -> Self;
    fn is_finite_value(self) -> bool;
    fn to_complex(self) -> Complex64;
    /// Neumaier-compensated accumulation.
    fn comp_add(sum: &mut Self, comp: &mut Self, v: Self);
    fn comp_total(sum: Self, comp: Self) -> Self;
}

#[inline]
fn neumaier(sum: &mut f64, comp: &mut f64, v: f64) {
    let t = *sum + v;
    if sum.abs() >= v.abs() {
        *comp += (*sum - t) + v;
    } else {
        *comp += (v - t) + *sum;
    }
    *sum = t;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn comp_add(sum: &mut Self, comp: &mut Self, v: Self) {
        neumaier(sum, comp, v);
    }
    fn comp_total(sum: Self, comp: Self) -> Self {
        sum + comp
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn is_finite_value(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn to_complex(self) -> Complex64 {
        self
    }
    fn comp_add(sum: &mut Self, comp: &mut Self, v: Self) {
        neumaier(&mut sum.re, &mut comp.re, v.re);
        neumaier(&mut sum.im, &mut comp.im, v.im);
    }
    fn comp_total(sum: Self, comp: Self) -> Self {
        sum + comp
    }
}

/// Sampled scalar field on a grid.
#[derive(Clone, Debug)]
pub struct GridFunction<T: Scalar = f64> {
    grid: Arc<HalfSpaceGrid>,
    values: Vec<T>,
}

impl<T: Scalar> GridFunction<T> {
    pub fn from_values(grid: Arc<HalfSpaceGrid>, values: Vec<T>) -> Self {
        assert_eq!(
            values.len(),
            grid.node_count(),
            "contract violation: value count must equal grid node count"
        );
        GridFunction { grid, values }
    }

    pub fn sample<F: Fn(&[f64]) -> T + Sync>(grid: &Arc<HalfSpaceGrid>, f: F) -> Self {
        let mut buf = vec![0.0; grid.dim()];
        let values = (0..grid.node_count())
            .map(|i| {
                grid.node(i, &mut buf);
                f(&buf)
            })
            .collect();
        GridFunction {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn zeros(grid: &Arc<HalfSpaceGrid>) -> Self {
        GridFunction {
            grid: Arc::clone(grid),
            values: vec![T::zero(); grid.node_count()],
        }
    }

    pub fn grid(&self) -> &Arc<HalfSpaceGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn map<F: Fn(T) -> T>(&self, f: F) -> Self {
        GridFunction {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Multilinear interpolation with even reflection across x_d = 0 and
    /// zero extension outside the box. Values landing within 1e-9 cells of a
    /// node snap to the node, so node-coincident queries are exact.
    pub fn interp_even(&self, point: &[f64]) -> T
    where
        T: Scalar,
    {
        let grid = &self.grid;
        let d = grid.dim();
        debug_assert_eq!(point.len(), d);

        let mut base = [0usize; 8];
        let mut frac = [0.0f64; 8];
        for k in 0..d {
            let mut c = point[k];
            if k == d - 1 {
                c = c.abs(); // even reflection
            }
            let nodes = grid.axis_nodes(k);
            let h = grid.spacing(k);
            let mut u = (c - nodes[0]) / h;
            // snap to exact nodes
            let r = u.round();
            if (u - r).abs() < 1e-9 {
                u = r;
            }
            if k == d - 1 {
                // even reflection about 0 maps the first half-cell onto itself
                if u < 0.0 {
                    u = -1.0 - u; // reflect about node -1/2 boundary, i.e. f(-x_d)=f(x_d)
                }
            }
            if u < -1.0 || u > nodes.len() as f64 {
                return T::zero();
            }
            let i0 = u.floor();
            let f = u - i0;
            let i0 = i0 as isize;
            // clamp edges: treat outside as zero via weights below
            base[k] = i0.max(-1) as usize; // -1 encoded as usize::MAX
            if i0 < 0 {
                base[k] = usize::MAX;
            }
            frac[k] = f;
        }

        // accumulate over the 2^d corner stencil
        let mut acc = T::zero();
        let corners = 1usize << d;
        for c in 0..corners {
            let mut w = 1.0;
            let mut idx = [0usize; 8];
            let mut valid = true;
            for k in 0..d {
                let hi_side = (c >> k) & 1 == 1;
                let i = if base[k] == usize::MAX {
                    if hi_side {
                        0isize
                    } else {
                        -1isize
                    }
                } else {
                    base[k] as isize + if hi_side { 1 } else { 0 }
                };
                let wk = if hi_side { frac[k] } else { 1.0 - frac[k] };
                if wk == 0.0 {
                    valid = false;
                    break;
                }
                if i < 0 {
                    if k == d - 1 {
                        // even reflection: node -1 mirrors node 0
                        idx[k] = 0;
                        w *= wk;
                        continue;
                    }
                    valid = false;
                    break;
                }
                let i = i as usize;
                if i >= self.grid.counts()[k] {
                    valid = false;
                    break;
                }
                idx[k] = i;
                w *= wk;
            }
            if valid && w != 0.0 {
                let flat = self.grid.flat_index(&idx[..d]);
                acc = acc + self.values[flat].scale(w);
            }
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// integration and norms
// ---------------------------------------------------------------------------

/// Weighted midpoint-rule integral of `f` over the grid box.
pub fn integrate<T: Scalar>(params: &WeinsteinParams, f: &GridFunction<T>) -> T {
    assert_eq!(
        params.alpha(),
        f.grid().alpha(),
        "contract violation: parameter/grid alpha mismatch"
    );
    let grid = f.grid();
    let lat = grid.lateral_len();
    let mut sum = T::zero();
    let mut comp = T::zero();
    for (i, &v) in f.values().iter().enumerate() {
        let w = grid.row_weight(i / lat);
        T::comp_add(&mut sum, &mut comp, v.scale(w));
    }
    T::comp_total(sum, comp)
}

/// Discrete L^p norm with respect to the weighted measure; `p = inf` gives
/// the max of |f| over nodes.
pub fn lp_norm<T: Scalar>(params: &WeinsteinParams, f: &GridFunction<T>, p: f64) -> Result<f64> {
    assert_eq!(
        params.alpha(),
        f.grid().alpha(),
        "contract violation: parameter/grid alpha mismatch"
    );
    if p.is_infinite() && p > 0.0 {
        return Ok(f
            .values()
            .iter()
            .map(|v| v.magnitude())
            .fold(0.0, f64::max));
    }
    if !(p >= 1.0) {
        return Err(Error::domain(format!("p must be >= 1 or infinity, got {p}")));
    }
    let grid = f.grid();
    let lat = grid.lateral_len();
    let mut sum = 0.0;
    let mut comp = 0.0;
    for (i, v) in f.values().iter().enumerate() {
        let w = grid.row_weight(i / lat);
        neumaier(&mut sum, &mut comp, v.magnitude().powf(p) * w);
    }
    Ok((sum + comp).powf(1.0 / p))
}

// ---------------------------------------------------------------------------
// radial profiles
// ---------------------------------------------------------------------------

/// One-dimensional radial profile F(r) given by samples at increasing radii.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    radii: Vec<f64>,
    values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() || radii.len() < 2 {
            return Err(Error::domain(
                "radial profile needs matching radii/values with at least 2 samples",
            ));
        }
        if radii[0] <= 0.0 {
            return Err(Error::domain("radial profile radii must start > 0"));
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("radial profile radii must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("radial profile values must be finite"));
        }
        Ok(RadialProfile { radii, values })
    }

    /// Dense sampling of a closed-form profile on (0, rmax].
    pub fn from_fn<F: Fn(f64) -> f64>(f: F, rmax: f64, n: usize) -> Result<Self> {
        if !(rmax > 0.0) || n < 2 {
            return Err(Error::domain("from_fn needs rmax > 0 and n >= 2"));
        }
        let radii: Vec<f64> = (1..=n).map(|i| rmax * i as f64 / n as f64).collect();
        let values = radii.iter().map(|&r| f(r)).collect();
        RadialProfile::new(radii, values)
    }

    /// Indicator of [0, eps], sampled with a tight double knot at the jump so
    /// piecewise-linear integration resolves it to ~1e-13.
    pub fn indicator(eps: f64, rmax: f64) -> Result<Self> {
        if !(eps > 0.0 && rmax > eps) {
            return Err(Error::domain("indicator profile needs 0 < eps < rmax"));
        }
        let radii = vec![eps * 0.5, eps, eps * (1.0 + 1e-13), rmax];
        let values = vec![1.0, 1.0, 0.0, 0.0];
        RadialProfile::new(radii, values)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Piecewise-linear evaluation (constant extension below the first and
    /// beyond the last radius).
    pub fn value(&self, r: f64) -> f64 {
        if r <= self.radii[0] {
            return self.values[0];
        }
        if r >= *self.radii.last().unwrap() {
            return *self.values.last().unwrap();
        }
        let i = match self
            .radii
            .binary_search_by(|probe| probe.partial_cmp(&r).unwrap())
        {
            Ok(i) => return self.values[i],
            Err(i) => i,
        };
        let (r0, r1) = (self.radii[i - 1], self.radii[i]);
        let t = (r - r0) / (r1 - r0);
        self.values[i - 1] * (1.0 - t) + self.values[i] * t
    }
}

/// Integral of a radial function with respect to the measure, via the radial
/// reduction `radial_constant * int_0^inf F(r) r^{2a+d} dr`.
///
/// Integrates the piecewise-linear interpolant of the profile exactly per
/// interval (power-rule antiderivatives); the part below the first sample is
/// taken constant. A nonzero tail is flagged as a divergence.
/// r1^p - r0^p without cancellation for narrow intervals.
fn pow_diff(r0: f64, r1: f64, p: f64) -> f64 {
    if r0 == 0.0 {
        return r1.powf(p);
    }
    let u = (r1 - r0) / r0;
    if u < 0.25 {
        r0.powf(p) * (p * u.ln_1p()).exp_m1()
    } else {
        r1.powf(p) - r0.powf(p)
    }
}

pub fn radial_integrate(params: &WeinsteinParams, profile: &RadialProfile) -> Result<f64> {
    let gamma = params.radial_exponent();
    let mut sum = 0.0;
    let mut comp = 0.0;
    // [0, r_0]: constant F = values[0]
    let head = profile.values()[0] * profile.radii()[0].powf(gamma + 1.0) / (gamma + 1.0);
    neumaier(&mut sum, &mut comp, head);
    let mut last_contribution = head;
    for i in 0..profile.radii().len() - 1 {
        let (r0, r1) = (profile.radii()[i], profile.radii()[i + 1]);
        let (f0, f1) = (profile.values()[i], profile.values()[i + 1]);
        let slope = (f1 - f0) / (r1 - r0);
        // int_{r0}^{r1} (f0 + slope (r - r0)) r^gamma dr, with the power
        // differences taken cancellation-free so tight double knots work
        let d1 = pow_diff(r0, r1, gamma + 1.0) / (gamma + 1.0);
        let d2 = pow_diff(r0, r1, gamma + 2.0) / (gamma + 2.0);
        let piece = f0 * d1 + slope * (d2 - r0 * d1);
        neumaier(&mut sum, &mut comp, piece);
        last_contribution = piece;
    }
    let total = sum + comp;
    if last_contribution.abs() > (1e-8 * total.abs()).max(1e-12) {
        return Err(Error::domain(format!(
            "radial profile tail not negligible: last interval contributes {last_contribution:e} of {total:e}"
        )));
    }
    Ok(params.radial_constant() * total)
}

/// Same integral for a closed-form profile, by adaptive quadrature. This is
/// the high-accuracy path used for oracles and corpus normalization.
pub fn radial_integrate_fn<F: Fn(f64) -> f64>(
    params: &WeinsteinParams,
    f: F,
    rmax: f64,
    tol: f64,
) -> Result<f64> {
    let gamma = params.radial_exponent();
    let v = crate::quad::adaptive_quadrature(|r| f(r) * r.powf(gamma), 0.0, rmax, tol)?;
    Ok(params.radial_constant() * v)
}
