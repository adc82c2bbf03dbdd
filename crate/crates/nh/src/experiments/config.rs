//! Study configuration files: line-oriented `key = value` entries under
//! `[section]` headers. Unknown sections, unknown keys, and duplicates are
//! hard errors so typos never silently change a study.

use crate::error::{Error, Result};
use crate::geometry::{BcX, EtaProfile, PerturbationProfile, RectangleSpec};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Abstract,
    Rect,
    Perturb,
    Sharpness,
    Cell,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Abstract => "abstract",
            StudyKind::Rect => "rect",
            StudyKind::Perturb => "perturb",
            StudyKind::Sharpness => "sharpness",
            StudyKind::Cell => "cell",
        }
    }
}

/// Perturbation family swept by the perturb study; both are nested
/// (non-positive) profiles scaled by the sweep value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileFamily {
    UniformShift,
    SmoothCosine,
}

impl ProfileFamily {
    pub fn name(self) -> &'static str {
        match self {
            ProfileFamily::UniformShift => "uniform_shift",
            ProfileFamily::SmoothCosine => "smooth_cosine",
        }
    }

    pub fn build(self, width: f64, d: f64) -> Result<PerturbationProfile> {
        match self {
            ProfileFamily::UniformShift => PerturbationProfile::uniform_shift(width, d),
            ProfileFamily::SmoothCosine => PerturbationProfile::smooth_cosine(width, d),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RectConfig {
    pub spec: RectangleSpec,
    /// Mesh resolutions, strictly increasing; the convergence order is
    /// fitted across them.
    pub resolutions: Vec<usize>,
    /// Number of nonzero eigenvalues compared against the reference
    /// spectrum.
    pub modes: usize,
    pub tol: f64,
}

#[derive(Debug, Clone)]
pub struct PerturbConfig {
    pub spec: RectangleSpec,
    pub m: usize,
    pub family: ProfileFamily,
    /// Sweep amplitudes, strictly decreasing.
    pub d_values: Vec<f64>,
    /// Finest mesh; the Richardson check reruns at half resolution.
    pub n_x: usize,
    pub n_y: usize,
    pub tol: f64,
}

#[derive(Debug, Clone)]
pub struct SharpnessConfig {
    pub spec: RectangleSpec,
    pub m: usize,
    /// Optional singleton cluster tracked alongside the main one (a mode
    /// with zero tangential trace derivative, where both formulas agree).
    pub control_m: Option<usize>,
    pub eta: EtaProfile,
    /// Oscillation counts N; the sweep runs delta = width / N, strictly
    /// decreasing as N increases.
    pub periods: Vec<usize>,
    /// Mesh elements per oscillation period, horizontally and vertically;
    /// the cell problem is solved on the same per-period lattice so the
    /// homogenized constants match the sweep's discrete boundary layer.
    pub per_x: usize,
    pub per_y: usize,
    pub tol: f64,
    /// Truncation height of the cell strip.
    pub cell_height: f64,
    /// Rows of the cell mesh, derived as `cell_height * per_y`.
    pub cell_n_y: usize,
}

#[derive(Debug, Clone)]
pub struct CellStudyConfig {
    pub eta: EtaProfile,
    pub height: f64,
    pub n_x: usize,
    pub n_y: usize,
    /// Number of refinement levels, doubling the mesh each time.
    pub refinements: usize,
}

#[derive(Debug, Clone)]
pub struct FamilyConfig {
    /// Number of seeded instances (seeds `0..count`).
    pub count: usize,
    /// Perturbation magnitude `t`.
    pub scale: f64,
    /// Subspace rotation angle.
    pub angle: f64,
    /// Ambient dimensions cycle through `dim_min..=dim_max` across seeds.
    pub dim_min: usize,
    pub dim_max: usize,
}

#[derive(Debug, Clone)]
pub struct TsweepConfig {
    /// Perturbation magnitudes, strictly decreasing.
    pub scales: Vec<f64>,
    pub seed: u64,
    pub dim: usize,
    /// Rotation angle; zero keeps the correction purely scale-driven so the
    /// fitted exponents are clean.
    pub angle: f64,
}

#[derive(Debug, Clone)]
pub struct AbstractConfig {
    pub m: usize,
    pub family: FamilyConfig,
    pub tsweep: Option<TsweepConfig>,
}

#[derive(Debug, Clone)]
pub enum StudySpec {
    Abstract(AbstractConfig),
    Rect(RectConfig),
    Perturb(PerturbConfig),
    Sharpness(SharpnessConfig),
    Cell(CellStudyConfig),
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    /// Output directory; a CLI `--out` overrides it.
    pub out: Option<PathBuf>,
    pub study: StudySpec,
}

impl StudyConfig {
    pub fn kind(&self) -> StudyKind {
        match self.study {
            StudySpec::Abstract(_) => StudyKind::Abstract,
            StudySpec::Rect(_) => StudyKind::Rect,
            StudySpec::Perturb(_) => StudyKind::Perturb,
            StudySpec::Sharpness(_) => StudyKind::Sharpness,
            StudySpec::Cell(_) => StudyKind::Cell,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = parse_raw(text)?;
        let mut study = cfg.require_section("study")?;
        let kind = parse_kind(&study.require("kind")?)?;
        let out = study.take("out")?.map(|v| PathBuf::from(v.0));
        study.expect_empty()?;
        let spec = match kind {
            StudyKind::Abstract => StudySpec::Abstract(build_abstract(&mut cfg)?),
            StudyKind::Rect => StudySpec::Rect(build_rect(&mut cfg)?),
            StudyKind::Perturb => StudySpec::Perturb(build_perturb(&mut cfg)?),
            StudyKind::Sharpness => StudySpec::Sharpness(build_sharpness(&mut cfg)?),
            StudyKind::Cell => StudySpec::Cell(build_cell(&mut cfg)?),
        };
        cfg.expect_empty()?;
        Ok(StudyConfig { out, study: spec })
    }
}

fn config_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

struct Entry {
    key: String,
    value: String,
    line: usize,
}

struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

struct Sections {
    sections: Vec<Section>,
}

fn parse_raw(text: &str) -> Result<Sections> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw_line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(inner) = trimmed.strip_prefix('[') {
            let name = inner
                .strip_suffix(']')
                .ok_or_else(|| config_err(line, "section header must look like [name]"))?
                .trim();
            if name.is_empty() {
                return Err(config_err(line, "empty section name"));
            }
            if sections.iter().any(|s| s.name == name) {
                return Err(config_err(line, format!("duplicate section [{name}]")));
            }
            sections.push(Section { name: name.to_string(), line, entries: Vec::new() });
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| config_err(line, "expected `key = value` or a [section] header"))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(config_err(line, "empty key or value"));
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| config_err(line, "key appears before any [section] header"))?;
        if section.entries.iter().any(|e| e.key == key) {
            return Err(config_err(
                line,
                format!("duplicate key '{key}' in [{}]", section.name),
            ));
        }
        section.entries.push(Entry { key: key.to_string(), value: value.to_string(), line });
    }
    Ok(Sections { sections })
}

impl Sections {
    fn take_section(&mut self, name: &str) -> Option<SectionReader> {
        self.sections
            .iter()
            .position(|s| s.name == name)
            .map(|i| SectionReader { section: self.sections.remove(i) })
    }

    fn require_section(&mut self, name: &str) -> Result<SectionReader> {
        self.take_section(name)
            .ok_or_else(|| Error::Config(format!("missing required section [{name}]")))
    }

    fn expect_empty(self) -> Result<()> {
        if let Some(s) = self.sections.first() {
            return Err(config_err(
                s.line,
                format!("unknown section [{}] for this study kind", s.name),
            ));
        }
        Ok(())
    }
}

struct SectionReader {
    section: Section,
}

/// A raw `value` string with the line it came from.
struct Value(String, usize);

impl SectionReader {
    fn name(&self) -> &str {
        &self.section.name
    }

    fn take(&mut self, key: &str) -> Result<Option<Value>> {
        match self.section.entries.iter().position(|e| e.key == key) {
            Some(i) => {
                let e = self.section.entries.remove(i);
                Ok(Some(Value(e.value, e.line)))
            }
            None => Ok(None),
        }
    }

    fn require(&mut self, key: &str) -> Result<Value> {
        self.take(key)?.ok_or_else(|| {
            Error::Config(format!(
                "line {}: [{}] is missing required key '{key}'",
                self.section.line,
                self.name()
            ))
        })
    }

    fn f64(&mut self, key: &str) -> Result<f64> {
        let v = self.require(key)?;
        parse_f64(&v, key)
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.take(key)? {
            Some(v) => parse_f64(&v, key),
            None => Ok(default),
        }
    }

    fn usize(&mut self, key: &str) -> Result<usize> {
        let v = self.require(key)?;
        parse_usize(&v, key)
    }

    fn usize_opt(&mut self, key: &str) -> Result<Option<usize>> {
        match self.take(key)? {
            Some(v) => parse_usize(&v, key).map(Some),
            None => Ok(None),
        }
    }

    fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        Ok(self.usize_opt(key)?.unwrap_or(default))
    }

    fn f64_list(&mut self, key: &str) -> Result<Vec<f64>> {
        let v = self.require(key)?;
        v.0.split(',')
            .map(|part| parse_f64(&Value(part.trim().to_string(), v.1), key))
            .collect()
    }

    fn usize_list(&mut self, key: &str) -> Result<Vec<usize>> {
        let v = self.require(key)?;
        v.0.split(',')
            .map(|part| parse_usize(&Value(part.trim().to_string(), v.1), key))
            .collect()
    }

    fn expect_empty(self) -> Result<()> {
        if let Some(e) = self.section.entries.first() {
            return Err(config_err(
                e.line,
                format!("unknown key '{}' in [{}]", e.key, self.section.name),
            ));
        }
        Ok(())
    }
}

fn parse_f64(v: &Value, key: &str) -> Result<f64> {
    let x: f64 = v
        .0
        .parse()
        .map_err(|_| config_err(v.1, format!("'{key}' expects a number, got '{}'", v.0)))?;
    if !x.is_finite() {
        return Err(config_err(v.1, format!("'{key}' must be finite")));
    }
    Ok(x)
}

fn parse_usize(v: &Value, key: &str) -> Result<usize> {
    v.0.parse()
        .map_err(|_| config_err(v.1, format!("'{key}' expects a non-negative integer, got '{}'", v.0)))
}

fn parse_kind(v: &Value) -> Result<StudyKind> {
    match v.0.as_str() {
        "abstract" => Ok(StudyKind::Abstract),
        "rect" => Ok(StudyKind::Rect),
        "perturb" => Ok(StudyKind::Perturb),
        "sharpness" => Ok(StudyKind::Sharpness),
        "cell" => Ok(StudyKind::Cell),
        other => Err(config_err(
            v.1,
            format!("unknown study kind '{other}' (abstract|rect|perturb|sharpness|cell)"),
        )),
    }
}

fn parse_geometry(cfg: &mut Sections) -> Result<RectangleSpec> {
    let mut g = cfg.require_section("geometry")?;
    let width = g.f64("width")?;
    let height = g.f64("height")?;
    let bc = g.require("bc_x")?;
    let bc_x = match bc.0.as_str() {
        "neumann" => BcX::Neumann,
        "periodic" => BcX::Periodic,
        other => {
            return Err(config_err(bc.1, format!("unknown bc_x '{other}' (neumann|periodic)")))
        }
    };
    let line = g.section.line;
    g.expect_empty()?;
    RectangleSpec::new(width, height, bc_x)
        .map_err(|e| config_err(line, format!("[geometry]: {e}")))
}

fn parse_eta(cfg: &mut Sections) -> Result<EtaProfile> {
    let mut p = cfg.require_section("profile")?;
    let v = p.require("eta")?;
    let eta = if v.0 == "sawtooth" {
        EtaProfile::sawtooth()
    } else {
        let samples: Vec<f64> = v
            .0
            .split(',')
            .map(|part| parse_f64(&Value(part.trim().to_string(), v.1), "eta"))
            .collect::<Result<_>>()?;
        EtaProfile::from_samples(samples).map_err(|e| config_err(v.1, format!("eta: {e}")))?
    };
    p.expect_empty()?;
    Ok(eta)
}

fn check_decreasing(values: &[f64], key: &str) -> Result<()> {
    if values.len() < 3 {
        return Err(Error::Config(format!(
            "'{key}' needs at least 3 sweep values for slope fits, got {}",
            values.len()
        )));
    }
    for pair in values.windows(2) {
        if !(pair[1] < pair[0]) {
            return Err(Error::Config(format!("'{key}' must be strictly decreasing")));
        }
    }
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Config(format!("'{key}' values must be positive")));
    }
    Ok(())
}

fn build_abstract(cfg: &mut Sections) -> Result<AbstractConfig> {
    let mut cl = cfg.require_section("cluster")?;
    let m = cl.usize("m")?;
    cl.expect_empty()?;
    if m == 0 {
        return Err(Error::Config("cluster index m is 1-based".into()));
    }

    let mut fam = cfg.require_section("family")?;
    let family = FamilyConfig {
        count: fam.usize("count")?,
        scale: fam.f64("scale")?,
        angle: fam.f64_or("angle", 0.05)?,
        dim_min: fam.usize_or("dim_min", 12)?,
        dim_max: fam.usize_or("dim_max", 40)?,
    };
    fam.expect_empty()?;
    if family.count == 0 {
        return Err(Error::Config("'count' must be at least 1".into()));
    }
    if !(6 <= family.dim_min && family.dim_min <= family.dim_max && family.dim_max <= 64) {
        return Err(Error::Config("need 6 <= dim_min <= dim_max <= 64".into()));
    }
    if !(family.scale >= 0.0) {
        return Err(Error::Config("'scale' must be non-negative".into()));
    }

    let tsweep = match cfg.take_section("tsweep") {
        Some(mut ts) => {
            let scales = ts.f64_list("scales")?;
            check_decreasing(&scales, "scales")?;
            let sweep = TsweepConfig {
                scales,
                seed: ts.usize_or("seed", 7)? as u64,
                dim: ts.usize_or("dim", 12)?,
                angle: ts.f64_or("angle", 0.0)?,
            };
            ts.expect_empty()?;
            if !(6 <= sweep.dim && sweep.dim <= 64) {
                return Err(Error::Config("tsweep 'dim' must be in 6..=64".into()));
            }
            Some(sweep)
        }
        None => None,
    };
    Ok(AbstractConfig { m, family, tsweep })
}

fn build_rect(cfg: &mut Sections) -> Result<RectConfig> {
    let spec = parse_geometry(cfg)?;
    let mut mesh = cfg.require_section("mesh")?;
    let resolutions = mesh.usize_list("resolutions")?;
    let tol = mesh.f64_or("tol", 1e-9)?;
    mesh.expect_empty()?;
    if resolutions.len() < 3 {
        return Err(Error::Config("'resolutions' needs at least 3 levels for the order fit".into()));
    }
    for pair in resolutions.windows(2) {
        if !(pair[0] < pair[1]) {
            return Err(Error::Config("'resolutions' must be strictly increasing".into()));
        }
    }
    if resolutions[0] < 4 {
        return Err(Error::Config("'resolutions' must start at 4 or more".into()));
    }
    let mut modes = 5;
    if let Some(mut sp) = cfg.take_section("spectrum") {
        modes = sp.usize_or("modes", 5)?;
        sp.expect_empty()?;
    }
    if modes == 0 {
        return Err(Error::Config("'modes' must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Config("'tol' must be positive".into()));
    }
    Ok(RectConfig { spec, resolutions, modes, tol })
}

fn build_perturb(cfg: &mut Sections) -> Result<PerturbConfig> {
    let spec = parse_geometry(cfg)?;
    let mut cl = cfg.require_section("cluster")?;
    let m = cl.usize("m")?;
    cl.expect_empty()?;
    if m == 0 {
        return Err(Error::Config("cluster index m is 1-based".into()));
    }

    let mut mesh = cfg.require_section("mesh")?;
    let n_x = mesh.usize("n_x")?;
    let n_y = mesh.usize("n_y")?;
    let tol = mesh.f64_or("tol", 1e-8)?;
    mesh.expect_empty()?;
    if n_x < 16 || n_y < 16 || n_x % 2 != 0 || n_y % 2 != 0 {
        return Err(Error::Config(
            "'n_x' and 'n_y' must be even and at least 16 (the Richardson check halves them)".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::Config("'tol' must be positive".into()));
    }

    let mut sweep = cfg.require_section("sweep")?;
    let fam = sweep.require("profile")?;
    let family = match fam.0.as_str() {
        "uniform_shift" => ProfileFamily::UniformShift,
        "smooth_cosine" => ProfileFamily::SmoothCosine,
        other => {
            return Err(config_err(
                fam.1,
                format!("unknown profile '{other}' (uniform_shift|smooth_cosine)"),
            ))
        }
    };
    let d_values = sweep.f64_list("d")?;
    sweep.expect_empty()?;
    check_decreasing(&d_values, "d")?;
    if d_values[0] >= 0.5 * spec.height {
        return Err(Error::Config("largest 'd' must stay below half the rectangle height".into()));
    }
    Ok(PerturbConfig { spec, m, family, d_values, n_x, n_y, tol })
}

fn build_sharpness(cfg: &mut Sections) -> Result<SharpnessConfig> {
    let spec = parse_geometry(cfg)?;
    if spec.bc_x != BcX::Periodic {
        return Err(Error::Config("the sharpness study needs bc_x = periodic".into()));
    }
    let mut cl = cfg.require_section("cluster")?;
    let m = cl.usize("m")?;
    let control_m = cl.usize_opt("control_m")?;
    cl.expect_empty()?;
    if m == 0 || control_m == Some(0) {
        return Err(Error::Config("cluster indices are 1-based".into()));
    }
    if control_m == Some(m) {
        return Err(Error::Config("'control_m' must differ from 'm'".into()));
    }

    let eta = parse_eta(cfg)?;
    let first = eta.node_values()[0];
    if eta.node_values().iter().all(|v| *v == first) {
        return Err(Error::Config(
            "a constant eta has no oscillation; sweep it with the perturb study".into(),
        ));
    }

    let mut sweep = cfg.require_section("sweep")?;
    let periods = sweep.usize_list("periods")?;
    sweep.expect_empty()?;
    if periods.len() < 3 {
        return Err(Error::Config("'periods' needs at least 3 sweep values for slope fits".into()));
    }
    for pair in periods.windows(2) {
        if !(pair[0] < pair[1]) {
            return Err(Error::Config("'periods' must be strictly increasing".into()));
        }
    }
    if periods[0] == 0 {
        return Err(Error::Config("'periods' must be positive".into()));
    }

    let mut mesh = cfg.require_section("mesh")?;
    let per_x = mesh.usize("per_period_x")?;
    let per_y = mesh.usize("per_period_y")?;
    let tol = mesh.f64_or("tol", 1e-7)?;
    mesh.expect_empty()?;
    if per_x < 16 {
        return Err(Error::Config("'per_period_x' must be at least 16".into()));
    }
    if per_y < 2 {
        return Err(Error::Config("'per_period_y' must be at least 2".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Config("'tol' must be positive".into()));
    }

    let mut cell = cfg.require_section("cell")?;
    let cell_height = cell.f64("height")?;
    cell.expect_empty()?;
    let rows = cell_height * per_y as f64;
    if !(cell_height > 0.0) || (rows - rows.round()).abs() > 1e-9 || rows.round() < 8.0 {
        return Err(Error::Config(
            "cell 'height' times 'per_period_y' must be an integer of at least 8 \
             (the cell mesh reuses the sweep's per-period lattice)"
                .into(),
        ));
    }
    let cell_n_y = rows.round() as usize;
    Ok(SharpnessConfig {
        spec,
        m,
        control_m,
        eta,
        periods,
        per_x,
        per_y,
        tol,
        cell_height,
        cell_n_y,
    })
}

fn build_cell(cfg: &mut Sections) -> Result<CellStudyConfig> {
    let eta = parse_eta(cfg)?;
    let mut cell = cfg.require_section("cell")?;
    let height = cell.f64("height")?;
    let n_x = cell.usize("n_x")?;
    let n_y = cell.usize("n_y")?;
    let refinements = cell.usize_or("refinements", 4)?;
    cell.expect_empty()?;
    if !(height > 0.0) {
        return Err(Error::Config("cell 'height' must be positive".into()));
    }
    if n_x == 0 || n_y < 8 {
        return Err(Error::Config("cell mesh needs n_x >= 1 and n_y >= 8".into()));
    }
    if refinements < 3 {
        return Err(Error::Config("'refinements' must be at least 3 for convergence orders".into()));
    }
    Ok(CellStudyConfig { eta, height, n_x, n_y, refinements })
}

#[cfg(test)]
mod tests {
    use super::*;

    const PERTURB: &str = "\
# smooth-profile sweep
[study]
kind = perturb
out = out/perturb

[geometry]
width = 1.0
height = 1.0
bc_x = neumann

[cluster]
m = 2

[mesh]
n_x = 128
n_y = 128

[sweep]
profile = smooth_cosine
d = 0.04, 0.02, 0.01, 0.005
";

    #[test]
    fn full_perturb_config_parses() {
        let cfg = StudyConfig::parse_str(PERTURB).unwrap();
        assert_eq!(cfg.kind(), StudyKind::Perturb);
        assert_eq!(cfg.out.as_deref(), Some(Path::new("out/perturb")));
        let StudySpec::Perturb(p) = &cfg.study else { panic!("wrong variant") };
        assert_eq!(p.m, 2);
        assert_eq!(p.family, ProfileFamily::SmoothCosine);
        assert_eq!(p.d_values, vec![0.04, 0.02, 0.01, 0.005]);
        assert_eq!(p.n_x, 128);
        assert_eq!(p.tol, 1e-8);
    }

    #[test]
    fn unknown_key_is_an_error_naming_the_key() {
        let bad = PERTURB.replace("n_y = 128", "n_y = 128\nn_z = 4");
        let err = StudyConfig::parse_str(&bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("n_z"), "{msg}");
        assert!(msg.contains("[mesh]"), "{msg}");
    }

    #[test]
    fn unknown_section_is_an_error() {
        let bad = format!("{PERTURB}\n[cell]\nheight = 4.5\n");
        let err = StudyConfig::parse_str(&bad).unwrap_err();
        assert!(err.to_string().contains("unknown section [cell]"));
    }

    #[test]
    fn duplicate_keys_and_sections_are_errors() {
        let dup_key = PERTURB.replace("m = 2", "m = 2\nm = 3");
        assert!(StudyConfig::parse_str(&dup_key).unwrap_err().to_string().contains("duplicate key"));
        let dup_sec = format!("{PERTURB}\n[mesh]\nn_x = 64\n");
        assert!(StudyConfig::parse_str(&dup_sec)
            .unwrap_err()
            .to_string()
            .contains("duplicate section"));
    }

    #[test]
    fn sweep_must_be_strictly_decreasing_with_three_points() {
        let bad = PERTURB.replace("d = 0.04, 0.02, 0.01, 0.005", "d = 0.04, 0.04, 0.01");
        assert!(StudyConfig::parse_str(&bad).is_err());
        let short = PERTURB.replace("d = 0.04, 0.02, 0.01, 0.005", "d = 0.04, 0.02");
        assert!(StudyConfig::parse_str(&short).is_err());
    }

    #[test]
    fn missing_section_and_missing_key_are_errors() {
        let no_cluster = PERTURB.replace("[cluster]\nm = 2\n", "");
        assert!(StudyConfig::parse_str(&no_cluster)
            .unwrap_err()
            .to_string()
            .contains("[cluster]"));
        let no_kind = PERTURB.replace("kind = perturb\n", "");
        assert!(StudyConfig::parse_str(&no_kind).unwrap_err().to_string().contains("kind"));
    }

    #[test]
    fn keys_before_a_section_are_rejected() {
        let err = StudyConfig::parse_str("kind = rect\n[study]\nkind = rect\n").unwrap_err();
        assert!(err.to_string().contains("before any [section]"));
    }

    #[test]
    fn sharpness_config_derives_the_matched_cell_mesh() {
        let text = "\
[study]
kind = sharpness

[geometry]
width = 1.0
height = 1.0
bc_x = periodic

[cluster]
m = 3
control_m = 2

[profile]
eta = sawtooth

[sweep]
periods = 8, 16, 32, 64

[mesh]
per_period_x = 16
per_period_y = 6
tol = 1e-7

[cell]
height = 4.5
";
        let cfg = StudyConfig::parse_str(text).unwrap();
        let StudySpec::Sharpness(s) = &cfg.study else { panic!("wrong variant") };
        assert_eq!(s.cell_n_y, 27);
        assert_eq!(s.control_m, Some(2));
        assert_eq!(s.eta.intervals(), 2);
        let non_periodic = text.replace("bc_x = periodic", "bc_x = neumann");
        assert!(StudyConfig::parse_str(&non_periodic).is_err());
        let ragged_cell = text.replace("height = 4.5", "height = 4.3");
        assert!(StudyConfig::parse_str(&ragged_cell).is_err());
        let flat_eta = text.replace("eta = sawtooth", "eta = 0.5, 0.5");
        assert!(StudyConfig::parse_str(&flat_eta)
            .unwrap_err()
            .to_string()
            .contains("constant eta"));
    }

    #[test]
    fn abstract_and_cell_configs_parse() {
        let text = "\
[study]
kind = abstract

[cluster]
m = 2

[family]
count = 100
scale = 1e-3
angle = 0.05

[tsweep]
scales = 1e-3, 5e-4, 2.5e-4, 1.25e-4
";
        let cfg = StudyConfig::parse_str(text).unwrap();
        let StudySpec::Abstract(a) = &cfg.study else { panic!("wrong variant") };
        assert_eq!(a.family.count, 100);
        assert_eq!(a.family.dim_max, 40);
        let ts = a.tsweep.as_ref().unwrap();
        assert_eq!(ts.scales.len(), 4);
        assert_eq!(ts.seed, 7);
        assert_eq!(ts.angle, 0.0);

        let cell = "\
[study]
kind = cell

[profile]
eta = 0.0, 1.0, 0.0

[cell]
height = 4.5
n_x = 16
n_y = 72
refinements = 4
";
        let cfg = StudyConfig::parse_str(cell).unwrap();
        let StudySpec::Cell(c) = &cfg.study else { panic!("wrong variant") };
        assert_eq!(c.eta.node_values(), &[0.0, 1.0, 0.0]);
        assert_eq!(c.refinements, 4);
    }

    #[test]
    fn eta_must_be_periodic_and_kind_must_be_known() {
        let bad_eta = "\
[study]
kind = cell

[profile]
eta = 0.0, 1.0, 0.5

[cell]
height = 4.5
n_x = 16
n_y = 72
";
        assert!(StudyConfig::parse_str(bad_eta).is_err());
        let bad_kind = "[study]\nkind = spectral\n";
        assert!(StudyConfig::parse_str(bad_kind)
            .unwrap_err()
            .to_string()
            .contains("unknown study kind"));
    }
}
