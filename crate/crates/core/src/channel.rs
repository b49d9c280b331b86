//! Physical-optics and Lambertian channel-gain computation for single mirror
//! elements, plus assembly of the alignment-based multi-patch MIMO channel
//! and the received-signal model.
//!
//! Two gain models coexist:
//!
//! * [`power_density`] / [`patch_gain`] integrate the physical-optics power
//!   density over the mirror and detector apertures with tensor
//!   Gauss-Legendre rules. This is the "exact" simulation path used by the
//!   figure-style experiments.
//! * [`lambertian_gain`] is the point-source proportional model used by the
//!   coherence analysis and the estimation pipeline, with an explicit scale
//!   factor that can be calibrated against the quadrature model.

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normal_from_angles, source_image_point, Plane, UnitVec3, Vec3};
use crate::linalg::{gauss_legendre, scale_interval, Mat};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Led {
    pub center: Vec3,
    pub normal: UnitVec3,
    /// Radius of the circular emitting aperture, meters.
    pub radius: f64,
    /// Lambertian index m.
    pub lambertian_index: f64,
    /// Emitted optical power, watts.
    pub emitted_power: f64,
}

impl Led {
    pub fn validate(&self) -> Result<()> {
        if self.radius <= 0.0 {
            return Err(Error::Validation("LED radius must be positive".into()));
        }
        if self.lambertian_index < 1.0 {
            return Err(Error::Validation("Lambertian index must be >= 1".into()));
        }
        if self.emitted_power <= 0.0 {
            return Err(Error::Validation("emitted power must be positive".into()));
        }
        Ok(())
    }

    /// Plane containing the emitting aperture.
    pub fn transmission_plane(&self) -> Plane {
        Plane::new(self.center, self.normal)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Pd {
    pub center: Vec3,
    pub normal: UnitVec3,
    /// Side length of the square detector aperture, meters.
    pub side: f64,
    /// Field-of-view semi-angle, radians.
    pub fov_semi_angle: f64,
    pub filter_gain: f64,
}

impl Pd {
    pub fn validate(&self) -> Result<()> {
        if self.side <= 0.0 {
            return Err(Error::Validation("PD side must be positive".into()));
        }
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&self.fov_semi_angle)
            || self.fov_semi_angle == 0.0
        {
            return Err(Error::Validation(
                "FOV semi-angle must lie in (0, pi/2)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OirsElement {
    pub center: Vec3,
    pub roll: f64,
    pub yaw: f64,
    /// Side length of the square mirror aperture, meters.
    pub side: f64,
    pub reflectivity: f64,
}

impl OirsElement {
    pub fn validate(&self) -> Result<()> {
        if self.side <= 0.0 {
            return Err(Error::Validation("element side must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.reflectivity) || self.reflectivity == 0.0 {
            return Err(Error::Validation("reflectivity must lie in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn normal(&self) -> Result<UnitVec3> {
        normal_from_angles(self.roll, self.yaw)
    }
}

/// Grid of OIRS elements in a common mounting plane.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OirsArray {
    pub elements: Vec<OirsElement>,
    pub n_v: usize,
    pub n_h: usize,
    /// Center-to-center spacing, meters.
    pub spacing: f64,
    pub plane: Plane,
}

impl OirsArray {
    /// Builds a rectangular grid centered on `plane.point`. Row index grows
    /// along the plane's "vertical" in-plane axis, column index along the
    /// horizontal one. All elements start at the neutral orientation.
    pub fn grid(
        center: Vec3,
        plane_normal: UnitVec3,
        n_v: usize,
        n_h: usize,
        side: f64,
        spacing: f64,
        reflectivity: f64,
    ) -> Result<OirsArray> {
        if n_v == 0 || n_h == 0 {
            return Err(Error::Validation("OIRS grid must be non-empty".into()));
        }
        // In-plane axes: horizontal = normal x Z (or X when vertical-mounted
        // normal is Z), vertical = horizontal x normal.
        let up = if plane_normal.as_vec().cross(Vec3::Z).norm() < 1e-9 {
            Vec3::X
        } else {
            Vec3::Z
        };
        let horiz = up.cross(plane_normal.as_vec()).normalize()?;
        let vert = plane_normal.as_vec().cross(horiz.as_vec()).normalize()?;
        let mut elements = Vec::with_capacity(n_v * n_h);
        for i in 0..n_v {
            for j in 0..n_h {
                let di = (i as f64) - (n_v as f64 - 1.0) / 2.0;
                let dj = (j as f64) - (n_h as f64 - 1.0) / 2.0;
                let c = center + vert.as_vec() * (di * spacing) + horiz.as_vec() * (dj * spacing);
                elements.push(OirsElement {
                    center: c,
                    roll: 0.0,
                    yaw: 0.0,
                    side,
                    reflectivity,
                });
            }
        }
        Ok(OirsArray {
            elements,
            n_v,
            n_h,
            spacing,
            plane: Plane::new(center, plane_normal),
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Flat index of the element in row i (1-based), column j (1-based):
    /// n = (i-1) * N_h + j, also 1-based.
    pub fn flat_index(&self, i: usize, j: usize) -> usize {
        (i - 1) * self.n_h + j
    }
}

/// Node counts for the tensor-product quadrature over the mirror aperture
/// and the detector aperture.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub element_nodes: usize,
    pub pd_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { element_nodes: 16, pd_nodes: 8 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.element_nodes < 2 || self.pd_nodes < 2 {
            return Err(Error::Validation("quadrature resolution must be >= 2x2".into()));
        }
        Ok(())
    }

    pub fn refined(&self) -> QuadratureSpec {
        QuadratureSpec {
            element_nodes: self.element_nodes * 2,
            pd_nodes: self.pd_nodes * 2,
        }
    }
}

/// In-plane orthonormal axes for a square aperture lying in `plane`.
fn aperture_axes(normal: UnitVec3) -> Result<(UnitVec3, UnitVec3)> {
    let up = if normal.as_vec().cross(Vec3::Z).norm() < 1e-9 {
        Vec3::X
    } else {
        Vec3::Z
    };
    let a1 = up.cross(normal.as_vec()).normalize()?;
    let a2 = normal.as_vec().cross(a1.as_vec()).normalize()?;
    Ok((a1, a2))
}

/// Physical-optics power density (W/m^2) at the point `p` on the detection
/// plane, produced by a single mirror element illuminated by `led`.
///
/// The density integrates, over mirror points R, the Lambertian emission of
/// the source image aperture weighted by the projected mirror area and an
/// indicator that the image point of `p` through R lands inside the LED
/// disc.
pub fn power_density(
    p: Vec3,
    pd_normal: UnitVec3,
    elem: &OirsElement,
    led: &Led,
    quad: &QuadratureSpec,
) -> Result<f64> {
    quad.validate()?;
    elem.validate()?;
    led.validate()?;
    let n = elem.normal()?;
    let (a1, a2) = aperture_axes(n)?;
    let half = elem.side / 2.0;
    let (nodes, weights) = gauss_legendre(quad.element_nodes);
    let (xs, wx) = scale_interval(&nodes, &weights, -half, half);
    let (ys, wy) = scale_interval(&nodes, &weights, -half, half);
    let m = led.lambertian_index;
    let tx_plane = led.transmission_plane();
    let led_area = std::f64::consts::PI * led.radius * led.radius;
    let prefactor = led.emitted_power * elem.reflectivity * (m + 1.0)
        / (2.0 * std::f64::consts::PI * led_area);

    let mut acc = 0.0;
    for (ix, &x) in xs.iter().enumerate() {
        for (iy, &y) in ys.iter().enumerate() {
            let r = elem.center + a1.as_vec() * x + a2.as_vec() * y;
            let pr = p - r;
            let dist2 = pr.dot(pr);
            if dist2 < 1e-20 {
                return Err(Error::Domain(
                    "field point coincides with an integration node".into(),
                ));
            }
            let pr_hat = match pr.normalize() {
                Ok(u) => u,
                Err(_) => continue,
            };
            // Image of p through the mirror at R, in the LED plane.
            let image = match source_image_point(r, n, p, &tx_plane) {
                Some(i) => i,
                None => continue,
            };
            if (image - led.center).norm() > led.radius {
                continue;
            }
            // Irradiance angle measured from the LED center to the mirror
            // node.
            let lr = match (r - led.center).normalize() {
                Ok(u) => u,
                Err(_) => continue,
            };
            let cos_theta = led.normal.dot(lr);
            if cos_theta <= 0.0 {
                continue;
            }
            // Receiver projection and mirror projection; the latter carries
            // the negated mirror-normal dot from the flux orientation.
            // pr_hat points from the mirror node toward p: the receiver sees
            // the ray arriving along -pr_hat, the mirror emits along +pr_hat.
            let cos_phi = -pd_normal.dot_vec(pr_hat.as_vec());
            let mirror_proj = n.dot_vec(pr_hat.as_vec());
            if cos_phi <= 0.0 || mirror_proj <= 0.0 {
                continue;
            }
            let integrand = cos_theta.powf(m - 1.0) / dist2 * cos_phi * mirror_proj;
            acc += wx[ix] * wy[iy] * integrand;
        }
    }
    Ok(prefactor * acc)
}

/// Channel gain of one mirror element: outer quadrature of [`power_density`]
/// over the detector aperture, times the optical filter gain.
pub fn patch_gain(
    elem: &OirsElement,
    led: &Led,
    pd: &Pd,
    quad: &QuadratureSpec,
) -> Result<f64> {
    pd.validate()?;
    let (a1, a2) = aperture_axes(pd.normal)?;
    let half = pd.side / 2.0;
    let (nodes, weights) = gauss_legendre(quad.pd_nodes);
    let (xs, wx) = scale_interval(&nodes, &weights, -half, half);
    let (ys, wy) = scale_interval(&nodes, &weights, -half, half);
    let mut acc = 0.0;
    for (ix, &x) in xs.iter().enumerate() {
        for (iy, &y) in ys.iter().enumerate() {
            let p = pd.center + a1.as_vec() * x + a2.as_vec() * y;
            acc += wx[ix] * wy[iy] * power_density(p, pd.normal, elem, led, quad)?;
        }
    }
    Ok(acc * pd.filter_gain)
}

/// Point-source evaluation of [`power_density`] at the detector center,
/// times the aperture area and filter gain. Cheaper than [`patch_gain`] and
/// adequate when the detector is small relative to the footprint.
pub fn point_gain(
    elem: &OirsElement,
    led: &Led,
    pd: &Pd,
    quad: &QuadratureSpec,
) -> Result<f64> {
    pd.validate()?;
    let density = power_density(pd.center, pd.normal, elem, led, quad)?;
    Ok(density * pd.side * pd.side * pd.filter_gain)
}

/// Proportional Lambertian gain of the aligned reflected path L -> R -> U:
/// `k * (N1.lr)^m * (N2.ur) / (d1 + d2)^2` inside the receiver FOV, else 0.
pub fn lambertian_gain(r: Vec3, u: Vec3, led: &Led, pd: &Pd, k: f64) -> Result<f64> {
    let lr = (r - led.center)
        .normalize()
        .map_err(|_| Error::Domain("mirror point coincides with LED".into()))?;
    let ur = (r - u)
        .normalize()
        .map_err(|_| Error::Domain("mirror point coincides with PD".into()))?;
    let d1 = (r - led.center).norm();
    let d2 = (r - u).norm();
    let cos_theta = led.normal.dot(lr);
    let cos_phi = pd.normal.dot(ur);
    if cos_phi < pd.fov_semi_angle.cos() {
        return Ok(0.0);
    }
    if cos_theta <= 0.0 {
        return Ok(0.0);
    }
    Ok(k * cos_theta.powf(led.lambertian_index) * cos_phi / ((d1 + d2) * (d1 + d2)))
}

/// Binary alignment matrices: G[n][t] marks element n aimed at LED t,
/// F[n][r] marks element n aimed at PD r, and V combines them per pair.
#[derive(Debug, Clone)]
pub struct AlignmentConfig {
    pub g: Mat,
    pub f: Mat,
    pub v: Mat,
}

impl AlignmentConfig {
    /// Builds from per-element assignments: `assign[n] = Some((n_t, n_r))`
    /// (0-based) when element n serves that pair.
    pub fn from_assignments(
        n: usize,
        n_t: usize,
        n_r: usize,
        assign: &[Option<(usize, usize)>],
    ) -> Result<AlignmentConfig> {
        if assign.len() != n {
            return Err(Error::Dimension { expected: n, got: assign.len() });
        }
        let mut g = Mat::zeros(n, n_t);
        let mut f = Mat::zeros(n, n_r);
        for (row, a) in assign.iter().enumerate() {
            if let Some((t, r)) = a {
                if *t >= n_t || *r >= n_r {
                    return Err(Error::Validation(format!(
                        "assignment ({t}, {r}) out of range at element {row}"
                    )));
                }
                g[(row, *t)] = 1.0;
                f[(row, *r)] = 1.0;
            }
        }
        let v = Self::combine(&g, &f)?;
        Ok(AlignmentConfig { g, f, v })
    }

    /// V column r + t * N_r = F[:,r] (.) G[:,t].
    pub fn combine(g: &Mat, f: &Mat) -> Result<Mat> {
        let n = g.rows();
        if f.rows() != n {
            return Err(Error::Dimension { expected: n, got: f.rows() });
        }
        let (n_t, n_r) = (g.cols(), f.cols());
        let mut v = Mat::zeros(n, n_t * n_r);
        for t in 0..n_t {
            for r in 0..n_r {
                for row in 0..n {
                    v[(row, r + t * n_r)] = f[(row, r)] * g[(row, t)];
                }
            }
        }
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        for m in [&self.g, &self.f] {
            for i in 0..m.rows() {
                let s: f64 = (0..m.cols()).map(|j| m[(i, j)]).sum();
                if s > 1.0 + 1e-12 {
                    return Err(Error::Validation(format!(
                        "alignment row {i} sums to {s} > 1"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_t(&self) -> usize {
        self.g.cols()
    }

    pub fn n_r(&self) -> usize {
        self.f.cols()
    }
}

/// Cascaded per-element, per-pair channel matrix H_c, N x (N_t * N_r), with
/// column ordering r + t * N_r (receiver-major within each transmitter).
#[derive(Debug, Clone)]
pub struct CascadedChannel {
    pub h_c: Mat,
    pub n_r: usize,
}

impl CascadedChannel {
    pub fn new(h_c: Mat, n_r: usize) -> Result<CascadedChannel> {
        if n_r == 0 || !h_c.cols().is_multiple_of(n_r) {
            return Err(Error::Dimension { expected: n_r, got: h_c.cols() });
        }
        for j in 0..h_c.cols() {
            for i in 0..h_c.rows() {
                if h_c[(i, j)] < 0.0 || !h_c[(i, j)].is_finite() {
                    return Err(Error::Validation("channel entries must be finite and >= 0".into()));
                }
            }
        }
        Ok(CascadedChannel { h_c, n_r })
    }

    pub fn n_t(&self) -> usize {
        self.h_c.cols() / self.n_r
    }

    pub fn n_elements(&self) -> usize {
        self.h_c.rows()
    }

    pub fn entry(&self, elem: usize, n_t: usize, n_r: usize) -> f64 {
        self.h_c[(elem, n_r + n_t * self.n_r)]
    }
}

/// Effective MIMO channel under an alignment: H[r][t] = sum over elements of
/// f[n,r] g[n,t] h_c[n, (r,t)].
pub fn assemble_channel(channel: &CascadedChannel, align: &AlignmentConfig) -> Result<Mat> {
    align.validate()?;
    let n = channel.n_elements();
    if align.g.rows() != n {
        return Err(Error::Dimension { expected: n, got: align.g.rows() });
    }
    let n_t = channel.n_t();
    let n_r = channel.n_r;
    if align.n_t() != n_t || align.n_r() != n_r {
        return Err(Error::Dimension { expected: n_t * n_r, got: align.n_t() * align.n_r() });
    }
    let mut h = Mat::zeros(n_r, n_t);
    for t in 0..n_t {
        for r in 0..n_r {
            let mut acc = 0.0;
            for row in 0..n {
                acc += align.f[(row, r)] * align.g[(row, t)] * channel.entry(row, t, r);
            }
            h[(r, t)] = acc;
        }
    }
    Ok(h)
}

/// Same channel via the vectorized identity vec(H) = blkdiag(V)^T vec(H_c).
pub fn assemble_channel_vectorized(
    channel: &CascadedChannel,
    align: &AlignmentConfig,
) -> Result<Mat> {
    align.validate()?;
    let n_t = channel.n_t();
    let n_r = channel.n_r;
    let d = align.v.blkdiag_columns();
    let hv = Mat::from_vec(channel.h_c.rows() * channel.h_c.cols(), 1, channel.h_c.vec())?;
    let vec_h = d.transpose().matmul(&hv)?;
    Mat::from_vec(n_r, n_t, vec_h.vec())
}

/// Received pilot block Y = H X + Z with i.i.d. Gaussian noise, reproducible
/// under the seed.
pub fn simulate_received(h: &Mat, x: &Mat, sigma: f64, seed: u64) -> Result<Mat> {
    if sigma < 0.0 {
        return Err(Error::Validation("noise std must be >= 0".into()));
    }
    for j in 0..x.cols() {
        for i in 0..x.rows() {
            if x[(i, j)] < 0.0 {
                return Err(Error::Validation("pilot entries must be >= 0".into()));
            }
        }
    }
    let mut y = h.matmul(x)?;
    if sigma > 0.0 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::Numeric(e.to_string()))?;
        for j in 0..y.cols() {
            for i in 0..y.rows() {
                y[(i, j)] += normal.sample(&mut rng);
            }
        }
    }
    Ok(y)
}
