//! Reference rectangles, their closed-form Neumann spectra, and the boundary
//! perturbation profiles applied to the bottom edge.

use crate::error::{invalid, Error, Result};
use std::fmt;
use std::path::Path;

/// Default sample count for profile discretizations.
const DEFAULT_PROFILE_INTERVALS: usize = 4096;

/// Boundary condition along the vertical sides (x = 0 and x = T).
/// The horizontal edges always carry Neumann conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcX {
    Neumann,
    Periodic,
}

impl fmt::Display for BcX {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BcX::Neumann => write!(f, "neumann"),
            BcX::Periodic => write!(f, "periodic"),
        }
    }
}

/// Reference rectangle `(0, T) x (0, R)`.
#[derive(Debug, Clone, Copy)]
pub struct RectangleSpec {
    pub width: f64,
    pub height: f64,
    pub bc_x: BcX,
}

impl RectangleSpec {
    pub fn new(width: f64, height: f64, bc_x: BcX) -> Result<Self> {
        if !(width > 0.0 && width.is_finite() && height > 0.0 && height.is_finite()) {
            return Err(invalid("rectangle sides must be positive and finite"));
        }
        Ok(RectangleSpec { width, height, bc_x })
    }
}

/// Parity of the x-factor for periodic modes; Neumann modes are always `Cos`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Cos,
    Sin,
}

/// Closed-form Laplace-Neumann eigenfunction on the reference rectangle,
/// normalized to unit L2 norm.
#[derive(Debug, Clone)]
pub struct ReferenceMode {
    pub j: usize,
    pub k: usize,
    pub parity: Parity,
    /// Laplace eigenvalue; the operator `1 - Laplace` has eigenvalue
    /// `lambda + 1`.
    pub lambda: f64,
    /// Angular frequency of the x-factor.
    cx: f64,
    /// Angular frequency of the y-factor.
    cy: f64,
    /// Normalization of the x-factor.
    ax: f64,
    /// Normalization of the y-factor.
    ay: f64,
}

impl ReferenceMode {
    fn new(spec: &RectangleSpec, j: usize, k: usize, parity: Parity) -> Self {
        let t = spec.width;
        let r = spec.height;
        let cx = match spec.bc_x {
            BcX::Neumann => std::f64::consts::PI * j as f64 / t,
            BcX::Periodic => 2.0 * std::f64::consts::PI * j as f64 / t,
        };
        let cy = std::f64::consts::PI * k as f64 / r;
        let ax = if j == 0 { (1.0 / t).sqrt() } else { (2.0 / t).sqrt() };
        let ay = if k == 0 { (1.0 / r).sqrt() } else { (2.0 / r).sqrt() };
        ReferenceMode { j, k, parity, lambda: cx * cx + cy * cy, cx, cy, ax, ay }
    }

    fn x_factor(&self, x: f64) -> f64 {
        match self.parity {
            Parity::Cos => self.ax * (self.cx * x).cos(),
            Parity::Sin => self.ax * (self.cx * x).sin(),
        }
    }

    fn x_factor_d(&self, x: f64) -> f64 {
        match self.parity {
            Parity::Cos => -self.ax * self.cx * (self.cx * x).sin(),
            Parity::Sin => self.ax * self.cx * (self.cx * x).cos(),
        }
    }

    fn y_factor(&self, y: f64) -> f64 {
        self.ay * (self.cy * y).cos()
    }

    fn y_factor_d(&self, y: f64) -> f64 {
        -self.ay * self.cy * (self.cy * y).sin()
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.x_factor(x) * self.y_factor(y)
    }

    pub fn grad(&self, x: f64, y: f64) -> [f64; 2] {
        [
            self.x_factor_d(x) * self.y_factor(y),
            self.x_factor(x) * self.y_factor_d(y),
        ]
    }

    /// Laplacian assembled from per-factor second derivatives (used to check
    /// the stored eigenvalue against the evaluators).
    pub fn laplacian(&self, x: f64, y: f64) -> f64 {
        let fxx = -self.cx * self.cx * self.x_factor(x);
        let gyy = -self.cy * self.cy * self.y_factor(y);
        fxx * self.y_factor(y) + self.x_factor(x) * gyy
    }

    /// Trace on the unperturbed bottom edge y = 0.
    pub fn trace(&self, x: f64) -> f64 {
        self.x_factor(x) * self.ay
    }

    /// Tangential derivative of the trace on y = 0. The normal derivative
    /// vanishes there, so the full boundary gradient is tangential.
    pub fn trace_dx(&self, x: f64) -> f64 {
        self.x_factor_d(x) * self.ay
    }
}

/// Enumerates the `count` lowest closed-form modes, eigenvalues ascending.
/// Ties are ordered by smaller k, then cos before sin.
pub fn reference_spectrum(spec: &RectangleSpec, count: usize) -> Vec<ReferenceMode> {
    // Generous index bound: j = count already exceeds the count-th smallest
    // eigenvalue in either direction.
    let bound = count + 2;
    let mut modes = Vec::new();
    for j in 0..=bound {
        for k in 0..=bound {
            match spec.bc_x {
                BcX::Neumann => modes.push(ReferenceMode::new(spec, j, k, Parity::Cos)),
                BcX::Periodic => {
                    modes.push(ReferenceMode::new(spec, j, k, Parity::Cos));
                    if j > 0 {
                        modes.push(ReferenceMode::new(spec, j, k, Parity::Sin));
                    }
                }
            }
        }
    }
    modes.sort_by(|a, b| {
        let pa = matches!(a.parity, Parity::Sin) as u8;
        let pb = matches!(b.parity, Parity::Sin) as u8;
        (a.lambda, a.k, pa, a.j)
            .partial_cmp(&(b.lambda, b.k, pb, b.j))
            .unwrap()
    });
    modes.truncate(count);
    modes
}

/// One eigenvalue cluster of the reference spectrum: the modes sharing (up to
/// `gap_tol`) the m-th distinct eigenvalue, plus its spectral neighborhood.
#[derive(Debug, Clone)]
pub struct ModeCluster {
    /// 1-based index among distinct eigenvalues.
    pub m: usize,
    /// Cluster eigenvalue (of the first member).
    pub lambda: f64,
    pub modes: Vec<ReferenceMode>,
    /// Number of reference modes strictly below the cluster.
    pub offset: usize,
    /// Eigenvalue of the previous cluster, if any.
    pub below: Option<f64>,
    /// Eigenvalue of the next cluster.
    pub above: f64,
}

impl ModeCluster {
    pub fn multiplicity(&self) -> usize {
        self.modes.len()
    }
}

/// Groups the sorted mode list into clusters (eigenvalues within
/// `gap_tol * (1 + |Lambda|)` of their predecessor) and returns the m-th
/// (1-based). Errors if the list is too short to certify the cluster and its
/// upper neighbor.
pub fn cluster_at(modes: &[ReferenceMode], m: usize, gap_tol: f64) -> Result<ModeCluster> {
    if m == 0 {
        return Err(invalid("cluster index is 1-based"));
    }
    if modes.is_empty() {
        return Err(invalid("empty mode list"));
    }
    let mut clusters: Vec<(usize, usize)> = Vec::new(); // [start, end)
    let mut start = 0;
    for i in 1..modes.len() {
        if modes[i].lambda - modes[i - 1].lambda > gap_tol * (1.0 + modes[i - 1].lambda.abs()) {
            clusters.push((start, i));
            start = i;
        }
    }
    clusters.push((start, modes.len()));
    if clusters.len() < m + 1 {
        return Err(Error::ClusterResolution(format!(
            "mode list holds {} clusters; need cluster {m} plus its upper neighbor — enumerate more modes",
            clusters.len()
        )));
    }
    let (lo, hi) = clusters[m - 1];
    let below = if m >= 2 { Some(modes[clusters[m - 2].0].lambda) } else { None };
    let above = modes[clusters[m].0].lambda;
    Ok(ModeCluster {
        m,
        lambda: modes[lo].lambda,
        modes: modes[lo..hi].to_vec(),
        offset: lo,
        below,
        above,
    })
}

/// Periodic Lipschitz profile on [0, 1], sampled at uniform nodes with
/// piecewise-linear interpolation. Used as the oscillation shape and as the
/// boundary data of the cell problem.
#[derive(Debug, Clone)]
pub struct EtaProfile {
    /// Node values, `values[0] == values[n]`.
    values: Vec<f64>,
}

impl EtaProfile {
    pub fn from_samples(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(invalid("eta profile needs at least two nodes"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("eta profile must be finite and non-negative"));
        }
        if values[0] != values[values.len() - 1] {
            return Err(invalid("eta profile must be periodic: first and last nodes must agree"));
        }
        Ok(EtaProfile { values })
    }

    pub fn constant(c: f64) -> Result<Self> {
        EtaProfile::from_samples(vec![c, c])
    }

    /// Unit sawtooth: 2X on [0, 1/2], 2(1-X) on [1/2, 1]. Piecewise linear
    /// with nodes exactly at the breakpoints.
    pub fn sawtooth() -> Self {
        EtaProfile { values: vec![0.0, 1.0, 0.0] }
    }

    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    pub fn node_values(&self) -> &[f64] {
        &self.values
    }

    /// Value and one-sided (right) slope at `x`, with exact periodic wrap.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let n = self.intervals();
        let wrapped = x - x.floor();
        let pos = wrapped * n as f64;
        let mut idx = pos.floor() as usize;
        if idx >= n {
            idx = n - 1;
        }
        let frac = pos - idx as f64;
        let a = self.values[idx];
        let b = self.values[idx + 1];
        let slope = (b - a) * n as f64;
        (a + (b - a) * frac, slope)
    }

    /// Exact mean of the piecewise-linear interpolant.
    pub fn mean(&self) -> f64 {
        let n = self.intervals();
        let mut acc = 0.0;
        for i in 0..n {
            acc += 0.5 * (self.values[i] + self.values[i + 1]);
        }
        acc / n as f64
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(*v))
    }

    pub fn lipschitz(&self) -> f64 {
        let n = self.intervals();
        (0..n)
            .map(|i| ((self.values[i + 1] - self.values[i]) * n as f64).abs())
            .fold(0.0_f64, f64::max)
    }
}

/// How a profile was constructed. `Sampled` covers profiles loaded from disk
/// whose construction parameters are no longer known.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    UniformShift { c: f64 },
    Smooth { amplitude: f64 },
    Oscillation { delta: f64 },
    Sampled,
}

impl ProfileKind {
    fn tag(&self) -> &'static str {
        match self {
            ProfileKind::UniformShift { .. } => "uniform_shift",
            ProfileKind::Smooth { .. } => "smooth",
            ProfileKind::Oscillation { .. } => "oscillation",
            ProfileKind::Sampled => "sampled",
        }
    }
}

/// Bottom-edge perturbation `h <= 0` on `[0, T]`: the perturbed domain is
/// `{ -h(x) < y < R }`, carved out of the reference rectangle from below.
/// Node values on a uniform grid, piecewise-linear in between.
#[derive(Debug, Clone)]
pub struct PerturbationProfile {
    pub kind: ProfileKind,
    width: f64,
    samples: Vec<f64>,
}

impl PerturbationProfile {
    fn validated(kind: ProfileKind, width: f64, samples: Vec<f64>) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(invalid("profile width must be positive"));
        }
        if samples.len() < 2 {
            return Err(invalid("profile needs at least two nodes"));
        }
        if samples.iter().any(|h| !h.is_finite() || *h > 0.0) {
            return Err(invalid(
                "profile values must be finite and non-positive (inward perturbation)",
            ));
        }
        Ok(PerturbationProfile { kind, width, samples })
    }

    /// Constant inward shift by `c >= 0`.
    pub fn uniform_shift(width: f64, c: f64) -> Result<Self> {
        if !(c >= 0.0) {
            return Err(invalid("shift must be non-negative"));
        }
        let n = DEFAULT_PROFILE_INTERVALS;
        Self::validated(ProfileKind::UniformShift { c }, width, vec![-c; n + 1])
    }

    /// Smooth cosine bump of amplitude `d`: `h(x) = -d (1 - cos(2 pi x/T))/2`.
    pub fn smooth_cosine(width: f64, amplitude: f64) -> Result<Self> {
        if !(amplitude >= 0.0) {
            return Err(invalid("amplitude must be non-negative"));
        }
        let n = DEFAULT_PROFILE_INTERVALS;
        let samples = (0..=n)
            .map(|i| {
                let x = i as f64 / n as f64;
                -amplitude * 0.5 * (1.0 - (2.0 * std::f64::consts::PI * x).cos())
            })
            .collect();
        Self::validated(ProfileKind::Smooth { amplitude }, width, samples)
    }

    /// Oscillation `h(x) = -delta * eta(x / delta)` with period `delta`;
    /// `T / delta` must be an integer. Sample nodes land exactly on the eta
    /// breakpoints, so piecewise-linear eta is represented exactly.
    pub fn oscillation(width: f64, eta: &EtaProfile, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid("oscillation period must be positive"));
        }
        let periods = width / delta;
        let n_periods = periods.round();
        if (periods - n_periods).abs() > 1e-9 || n_periods < 1.0 {
            return Err(invalid(format!(
                "width/delta = {periods} must be a positive integer (whole periods)"
            )));
        }
        let n_periods = n_periods as usize;
        let per = eta.intervals();
        // At least the default resolution, in whole eta intervals per period.
        let repeat = (DEFAULT_PROFILE_INTERVALS / (n_periods * per)).max(1);
        let n = n_periods * per * repeat;
        let samples = (0..=n)
            .map(|i| {
                let frac_of_period = (i % (per * repeat)) as f64 / (per * repeat) as f64;
                let (v, _) = eta.eval(frac_of_period);
                -delta * v
            })
            .collect();
        Self::validated(ProfileKind::Oscillation { delta }, width, samples)
    }

    /// Profile from explicit uniform-grid samples.
    pub fn from_samples(width: f64, samples: Vec<f64>) -> Result<Self> {
        Self::validated(ProfileKind::Sampled, width, samples)
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn intervals(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Value and one-sided (right) slope at `x` in `[0, T]`.
    pub fn eval(&self, x: f64) -> Result<(f64, f64)> {
        if !(0.0..=self.width).contains(&x) {
            return Err(invalid(format!(
                "profile evaluated at x = {x} outside [0, {}]",
                self.width
            )));
        }
        let n = self.intervals();
        let pos = x / self.width * n as f64;
        let mut idx = pos.floor() as usize;
        if idx >= n {
            idx = n - 1;
        }
        let frac = pos - idx as f64;
        let a = self.samples[idx];
        let b = self.samples[idx + 1];
        let slope = (b - a) * n as f64 / self.width;
        Ok((a + (b - a) * frac, slope))
    }

    /// Maximum carve-out depth `max |h|`.
    pub fn depth(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, h| m.max(-h))
    }

    /// Hausdorff-style distance proxy between the reference and perturbed
    /// domains: for bottom-edge graphs this is exactly `max |h|`.
    pub fn distance_proxy(&self) -> f64 {
        self.depth()
    }

    /// Same shape scaled by `s >= 0`. A uniform shift stays a uniform shift;
    /// other kinds become plain sampled profiles.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(invalid("scale factor must be non-negative"));
        }
        let kind = match &self.kind {
            ProfileKind::UniformShift { c } => ProfileKind::UniformShift { c: c * s },
            _ => ProfileKind::Sampled,
        };
        let samples = self.samples.iter().map(|h| h * s).collect();
        Self::validated(kind, self.width, samples)
    }

    /// Writes the interchange format: a header line `kind T R bc_x`, then one
    /// `x h` pair per node with strictly increasing x from 0 to T.
    pub fn write_to(&self, path: &Path, spec: &RectangleSpec) -> Result<()> {
        use std::io::Write;
        let mut out = String::new();
        out.push_str(&format!(
            "{} {:.17e} {:.17e} {}\n",
            self.kind.tag(),
            self.width,
            spec.height,
            spec.bc_x
        ));
        let n = self.intervals();
        for (i, h) in self.samples.iter().enumerate() {
            let x = self.width * i as f64 / n as f64;
            out.push_str(&format!("{x:.17e} {h:.17e}\n"));
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(out.as_bytes())?;
        Ok(())
    }

    /// Reads the interchange format written by [`write_to`](Self::write_to).
    pub fn read_from(path: &Path) -> Result<(RectangleSpec, PerturbationProfile)> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| invalid("profile file is empty"))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 4 {
            return Err(invalid("profile header must be `kind T R bc_x`"));
        }
        let kind_tag = parts[0];
        let width: f64 = parts[1]
            .parse()
            .map_err(|_| invalid("unparsable width in profile header"))?;
        let height: f64 = parts[2]
            .parse()
            .map_err(|_| invalid("unparsable height in profile header"))?;
        let bc_x = match parts[3] {
            "neumann" => BcX::Neumann,
            "periodic" => BcX::Periodic,
            other => return Err(invalid(format!("unknown boundary condition `{other}`"))),
        };
        let spec = RectangleSpec::new(width, height, bc_x)?;
        let mut xs = Vec::new();
        let mut hs = Vec::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let x: f64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| invalid("unparsable x in profile line"))?;
            let h: f64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| invalid("unparsable h in profile line"))?;
            if it.next().is_some() {
                return Err(invalid("profile lines must hold exactly `x h`"));
            }
            xs.push(x);
            hs.push(h);
        }
        if xs.len() < 2 {
            return Err(invalid("profile file needs at least two nodes"));
        }
        let n = xs.len() - 1;
        if xs[0] != 0.0 || (xs[n] - width).abs() > 1e-12 * width {
            return Err(invalid("profile x grid must run from 0 to T"));
        }
        let step = width / n as f64;
        for (i, &x) in xs.iter().enumerate() {
            if (x - step * i as f64).abs() > 1e-9 * width {
                return Err(invalid("profile x grid must be uniform and strictly increasing"));
            }
        }
        let kind = match kind_tag {
            "uniform_shift" => ProfileKind::UniformShift { c: -hs[0] },
            "smooth" | "oscillation" | "sampled" => ProfileKind::Sampled,
            other => return Err(invalid(format!("unknown profile kind `{other}`"))),
        };
        let profile = PerturbationProfile::validated(kind, width, hs)?;
        Ok((spec, profile))
    }
}
