//! Run configuration: TOML schema, validation and resolution into a plan.
//!
//! Units in the file are the conventional laboratory ones (GHz, MHz, THz,
//! ns, m, K, kg, T) and are converted to ns / rad·ns⁻¹ on resolution.
//! Relative paths are resolved against the config file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use combforge::atom::AtomSpec;
use combforge::comb::{FrequencyComb, MediumSpec, Polarization};
use combforge::doppler::DEFAULT_ORDER;
use combforge::propagation::{GaussianPulse, GridConfig};
use combforge::scenario::{cesium_channel, CombSetup, DipoleScale};
use combforge::sweep::WidthSearch;
use combforge::units::{ghz_to_rad_per_ns, mhz_to_rad_per_ns, thz_to_rad_per_ns};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub run: RunSection,
    pub atom: Option<AtomSection>,
    #[serde(default)]
    pub field: FieldSection,
    pub comb: Option<CombSection>,
    pub medium: Option<MediumSection>,
    pub pulse: Option<PulseSection>,
    #[serde(default)]
    pub grid: GridSection,
    pub spectrum: Option<SpectrumSection>,
    pub sweep: Option<SweepSection>,
    pub doppler: Option<DopplerSection>,
    pub fit: Option<FitSection>,
    pub toy: Option<ToySection>,
    #[serde(default)]
    pub channel: BTreeMap<String, ChannelSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub polarization: Option<String>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSection {
    /// Atom-spec TOML; the built-in Cs-133 data when absent.
    pub path: Option<PathBuf>,
    #[serde(default = "default_ground")]
    pub ground: String,
    #[serde(default = "default_excited")]
    pub excited: String,
}

fn default_ground() -> String {
    "6s1/2".into()
}

fn default_excited() -> String {
    "8p3/2".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    #[serde(default = "default_tesla")]
    pub tesla: f64,
}

fn default_tesla() -> f64 {
    0.1
}

impl Default for FieldSection {
    fn default() -> Self {
        FieldSection { tesla: default_tesla() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombKind {
    Atomic,
    Uniform,
    File,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombSection {
    pub kind: CombKind,
    pub linewidth_mhz: Option<f64>,
    // atomic
    pub target_peak_depth: Option<f64>,
    pub dipole_cm: Option<f64>,
    pub populations: Option<Vec<f64>>,
    // uniform
    pub teeth: Option<usize>,
    pub spacing_ghz: Option<f64>,
    pub offset_ghz: Option<f64>,
    pub coupling_per_ns_m: Option<f64>,
    /// 2π g L / Δ at the medium length.
    pub effective_depth: Option<f64>,
    pub carrier_thz: Option<f64>,
    // file
    pub path: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSection {
    pub density_m3: f64,
    pub length_m: f64,
    #[serde(default)]
    pub temperature_k: f64,
    pub mass_kg: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    #[serde(default = "one")]
    pub amplitude: f64,
    pub width_ns: Option<f64>,
    #[serde(default)]
    pub center_ns: f64,
    pub carrier_detuning_ghz: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub points: Option<usize>,
    pub span_ns: Option<f64>,
    pub start_ns: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub points: Option<usize>,
    pub min_ghz: Option<f64>,
    pub max_ghz: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub lengths_m: Option<Vec<f64>>,
    pub min_m: Option<f64>,
    pub max_m: Option<f64>,
    pub count: Option<usize>,
    pub polarizations: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DopplerSection {
    pub temperatures_k: Vec<f64>,
    #[serde(default = "default_order")]
    pub order: usize,
    pub trace_temperature_k: Option<f64>,
    pub width_min_ns: Option<f64>,
    pub width_max_ns: Option<f64>,
    pub width_tolerance_ns: Option<f64>,
}

fn default_order() -> usize {
    DEFAULT_ORDER
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    /// sweep.csv to fit; `<out>/sweep.csv` when absent.
    pub sweep: Option<PathBuf>,
    #[serde(default = "default_curve_points")]
    pub curve_points: usize,
    pub curve_max_m: Option<f64>,
}

fn default_curve_points() -> usize {
    200
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToySection {
    #[serde(default = "default_toy_teeth")]
    pub teeth: usize,
    #[serde(default = "default_toy_spacing")]
    pub spacing_ghz: f64,
    pub width_ns: f64,
    pub linewidth_mhz: f64,
    #[serde(default = "default_toy_depth")]
    pub effective_depth: f64,
}

fn default_toy_teeth() -> usize {
    10
}

fn default_toy_spacing() -> f64 {
    0.5
}

fn default_toy_depth() -> f64 {
    0.005
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub target_peak_depth: Option<f64>,
    pub dipole_cm: Option<f64>,
    pub width_ns: Option<f64>,
    pub carrier_detuning_ghz: Option<f64>,
    pub center_ns: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Echo,
    Doppler,
    Sweep,
    Fit,
    Toy,
}

/// How the comb is obtained.
#[derive(Debug, Clone)]
pub enum CombSource {
    Atomic(CombSetup),
    Uniform {
        teeth: usize,
        spacing: f64,
        linewidth: f64,
        coupling: f64,
        offset: Option<f64>,
        carrier: f64,
    },
    File(FrequencyComb),
}

/// One polarization channel: the comb scale and the probe pulse.
#[derive(Debug, Clone)]
pub struct Channel {
    pub polarization: Polarization,
    pub scale: Option<DipoleScale>,
    /// Absent when the config has no [pulse] (spectrum runs).
    pub pulse: Option<GaussianPulse>,
}

#[derive(Debug, Clone)]
pub struct DopplerPlan {
    pub temperatures: Vec<f64>,
    pub order: usize,
    pub trace_temperature: f64,
    pub search: Option<WidthSearch>,
}

#[derive(Debug, Clone)]
pub struct FitPlan {
    pub sweep: PathBuf,
    pub curve_points: usize,
    pub curve_max: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct ToyPlan {
    pub teeth: usize,
    pub spacing: f64,
    pub width: f64,
    pub linewidth: f64,
    pub effective_depth: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SpectrumPlan {
    pub points: usize,
    pub range: Option<(f64, f64)>,
}

/// Fully validated configuration.
#[derive(Debug, Clone)]
pub struct Plan {
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub comb: Option<CombSource>,
    pub medium: Option<MediumSpec>,
    pub channels: Vec<Channel>,
    pub grid: GridConfig,
    pub spectrum: SpectrumPlan,
    pub lengths: Option<Vec<f64>>,
    pub doppler: Option<DopplerPlan>,
    pub fit: Option<FitPlan>,
    pub toy: Option<ToyPlan>,
}

/// Collects every problem instead of stopping at the first one.
#[derive(Default)]
struct Problems(Vec<String>);

impl Problems {
    fn push(&mut self, msg: impl Into<String>) {
        self.0.push(msg.into());
    }

    fn positive(&mut self, name: &str, v: f64) {
        if !(v > 0.0) || !v.is_finite() {
            self.push(format!("{name} must be a finite number > 0, got {v}"));
        }
    }

    fn non_negative(&mut self, name: &str, v: f64) {
        if !(v >= 0.0) || !v.is_finite() {
            self.push(format!("{name} must be a finite number >= 0, got {v}"));
        }
    }

    fn finite(&mut self, name: &str, v: f64) {
        if !v.is_finite() {
            self.push(format!("{name} must be finite, got {v}"));
        }
    }

    fn missing(&mut self, what: &str, command: Command) {
        self.push(format!("{what} is required by the {} command", command.name()));
    }
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Echo => "echo",
            Command::Doppler => "doppler",
            Command::Sweep => "sweep",
            Command::Fit => "fit",
            Command::Toy => "toy",
        }
    }

    fn needs_comb(self) -> bool {
        matches!(self, Command::Spectrum | Command::Echo | Command::Doppler | Command::Sweep)
    }

    fn needs_pulse(self) -> bool {
        matches!(self, Command::Echo | Command::Doppler | Command::Sweep)
    }
}

pub fn load(path: &Path) -> Result<RawConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn resolve_path(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn parse_polarization(p: &mut Problems, s: &str) -> Option<Polarization> {
    match s.parse() {
        Ok(pol) => Some(pol),
        Err(e) => {
            p.push(e.to_string());
            None
        }
    }
}

/// Validates the whole configuration and resolves it for `command`.
///
/// `out` and `workers` from the command line take precedence over [run].
pub fn resolve(
    raw: &RawConfig,
    command: Command,
    base: &Path,
    out: Option<&Path>,
    workers: Option<usize>,
) -> Result<Plan, CliError> {
    let mut p = Problems::default();

    let workers = workers.or(raw.run.workers);
    if workers == Some(0) {
        p.push("workers must be >= 1");
    }
    let out = match (out, &raw.run.out) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) => resolve_path(base, o),
        (None, None) => PathBuf::from("."),
    };

    let atom = match raw.atom.as_ref().and_then(|a| a.path.as_ref()) {
        Some(path) => match AtomSpec::load(&resolve_path(base, path)) {
            Ok(a) => Some(a),
            Err(e) => {
                p.push(format!("[atom] path {}: {e}", path.display()));
                None
            }
        },
        None => Some(AtomSpec::cesium()),
    };
    p.finite("[field] tesla", raw.field.tesla);

    let medium = raw.medium.as_ref().map(|m| {
        p.positive("[medium] density_m3", m.density_m3);
        p.positive("[medium] length_m", m.length_m);
        p.non_negative("[medium] temperature_k", m.temperature_k);
        let mass = m.mass_kg.or(atom.as_ref().map(|a| a.mass_kg)).unwrap_or(f64::NAN);
        p.positive("[medium] mass_kg", mass);
        MediumSpec {
            density: m.density_m3,
            length: m.length_m,
            temperature: m.temperature_k,
            mass,
        }
    });

    let grid = GridConfig {
        points: raw.grid.points,
        span: raw.grid.span_ns,
        start: raw.grid.start_ns,
    };
    if let Some(n) = grid.points {
        if n < 16 {
            p.push(format!("[grid] points must be >= 16, got {n}"));
        }
    }
    if let Some(s) = grid.span {
        p.positive("[grid] span_ns", s);
    }
    if let Some(s) = grid.start {
        p.finite("[grid] start_ns", s);
    }

    let comb = raw.comb.as_ref().and_then(|c| comb_source(&mut p, c, raw, atom.as_ref(), medium.as_ref(), base));
    if let (Some(CombSource::Atomic(_)), None) = (&comb, &medium) {
        p.push("[medium] is required for an atomic comb");
    }
    if let (Some(CombSection { kind: CombKind::Uniform, effective_depth: Some(_), .. }), None) = (&raw.comb, &medium) {
        p.push("[medium] is required to convert [comb] effective_depth");
    }

    let spectrum = match &raw.spectrum {
        Some(s) => {
            let points = s.points.unwrap_or(4001);
            if points < 2 {
                p.push("[spectrum] points must be >= 2");
            }
            let range = match (s.min_ghz, s.max_ghz) {
                (Some(a), Some(b)) => {
                    if !(a < b) {
                        p.push(format!("[spectrum] min_ghz ({a}) must be below max_ghz ({b})"));
                    }
                    Some((ghz_to_rad_per_ns(a), ghz_to_rad_per_ns(b)))
                }
                (None, None) => None,
                _ => {
                    p.push("[spectrum] min_ghz and max_ghz must be given together");
                    None
                }
            };
            SpectrumPlan { points, range }
        }
        None => SpectrumPlan { points: 4001, range: None },
    };

    let lengths = raw.sweep.as_ref().map(|s| sweep_lengths(&mut p, s));

    for name in raw.channel.keys() {
        parse_polarization(&mut p, name);
    }
    let polarizations = channel_polarizations(&mut p, raw, comb.as_ref(), command);
    let channels = polarizations
        .iter()
        .map(|&pol| channel(&mut p, raw, raw.pulse.as_ref(), pol, comb.as_ref()))
        .collect();

    let doppler = raw.doppler.as_ref().map(|d| {
        if d.temperatures_k.is_empty() {
            p.push("[doppler] temperatures_k must not be empty");
        }
        for &t in &d.temperatures_k {
            p.non_negative("[doppler] temperatures_k entry", t);
        }
        if d.order == 0 || d.order % 2 == 0 {
            p.push(format!("[doppler] order must be odd and >= 1, got {}", d.order));
        }
        let trace_temperature = d
            .trace_temperature_k
            .or(medium.as_ref().map(|m| m.temperature))
            .unwrap_or(0.0);
        p.non_negative("[doppler] trace_temperature_k", trace_temperature);
        let search = match (d.width_min_ns, d.width_max_ns) {
            (Some(min), Some(max)) => {
                p.positive("[doppler] width_min_ns", min);
                if !(max > min) {
                    p.push(format!("[doppler] width_max_ns ({max}) must exceed width_min_ns ({min})"));
                }
                let tolerance = d.width_tolerance_ns.unwrap_or(0.01);
                p.positive("[doppler] width_tolerance_ns", tolerance);
                Some(WidthSearch { min, max, tolerance })
            }
            (None, None) => None,
            _ => {
                p.push("[doppler] width_min_ns and width_max_ns must be given together");
                None
            }
        };
        DopplerPlan {
            temperatures: d.temperatures_k.clone(),
            order: d.order,
            trace_temperature,
            search,
        }
    });

    let fit = match (&raw.fit, command) {
        (Some(f), _) => Some(FitPlan {
            sweep: f.sweep.as_ref().map(|s| resolve_path(base, s)).unwrap_or_else(|| out.join("sweep.csv")),
            curve_points: f.curve_points,
            curve_max: f.curve_max_m,
        }),
        (None, Command::Fit) => Some(FitPlan {
            sweep: out.join("sweep.csv"),
            curve_points: default_curve_points(),
            curve_max: None,
        }),
        _ => None,
    };
    if let Some(f) = &fit {
        if f.curve_points < 2 {
            p.push("[fit] curve_points must be >= 2");
        }
        if let Some(m) = f.curve_max {
            p.positive("[fit] curve_max_m", m);
        }
    }

    let toy = raw.toy.as_ref().map(|t| {
        if t.teeth == 0 {
            p.push("[toy] teeth must be >= 1");
        }
        p.positive("[toy] spacing_ghz", t.spacing_ghz);
        p.positive("[toy] width_ns", t.width_ns);
        p.positive("[toy] linewidth_mhz", t.linewidth_mhz);
        p.positive("[toy] effective_depth", t.effective_depth);
        ToyPlan {
            teeth: t.teeth,
            spacing: ghz_to_rad_per_ns(t.spacing_ghz),
            width: t.width_ns,
            linewidth: mhz_to_rad_per_ns(t.linewidth_mhz),
            effective_depth: t.effective_depth,
        }
    });

    // Per-command requirements.
    if command.needs_comb() {
        if raw.comb.is_none() {
            p.missing("[comb]", command);
        }
        if raw.medium.is_none() {
            p.missing("[medium]", command);
        }
    }
    if command.needs_pulse() && raw.pulse.is_none() {
        p.missing("[pulse]", command);
    }
    if matches!(command, Command::Sweep | Command::Doppler) && raw.sweep.is_none() {
        p.missing("[sweep]", command);
    }
    if command == Command::Doppler && raw.doppler.is_none() {
        p.missing("[doppler]", command);
    }
    if command == Command::Toy && raw.toy.is_none() {
        p.missing("[toy]", command);
    }
    if command == Command::Fit {
        if let Some(f) = &fit {
            if !f.sweep.is_file() {
                p.push(format!("sweep file {} does not exist", f.sweep.display()));
            }
        }
    }

    if p.0.is_empty() {
        Ok(Plan {
            out,
            workers,
            comb,
            medium,
            channels,
            grid,
            spectrum,
            lengths,
            doppler,
            fit,
            toy,
        })
    } else {
        Err(CliError::Validation(p.0.join("\n")))
    }
}

fn comb_source(
    p: &mut Problems,
    c: &CombSection,
    raw: &RawConfig,
    atom: Option<&AtomSpec>,
    medium: Option<&MediumSpec>,
    base: &Path,
) -> Option<CombSource> {
    let linewidth = c.linewidth_mhz.map(mhz_to_rad_per_ns);
    if let Some(l) = c.linewidth_mhz {
        p.positive("[comb] linewidth_mhz", l);
    }
    let stray = |p: &mut Problems, allowed: &[&str]| {
        let given = [
            ("target_peak_depth", c.target_peak_depth.is_some()),
            ("dipole_cm", c.dipole_cm.is_some()),
            ("populations", c.populations.is_some()),
            ("teeth", c.teeth.is_some()),
            ("spacing_ghz", c.spacing_ghz.is_some()),
            ("offset_ghz", c.offset_ghz.is_some()),
            ("coupling_per_ns_m", c.coupling_per_ns_m.is_some()),
            ("effective_depth", c.effective_depth.is_some()),
            ("carrier_thz", c.carrier_thz.is_some()),
            ("path", c.path.is_some()),
        ];
        for (key, present) in given {
            if present && !allowed.contains(&key) {
                p.push(format!("[comb] {key} does not apply to this comb kind"));
            }
        }
    };
    match c.kind {
        CombKind::Atomic => {
            stray(p, &["target_peak_depth", "dipole_cm", "populations"]);
            if c.target_peak_depth.is_some() && c.dipole_cm.is_some() {
                p.push("[comb] give target_peak_depth or dipole_cm, not both");
            }
            if let Some(d) = c.target_peak_depth {
                p.positive("[comb] target_peak_depth", d);
            }
            if let Some(d) = c.dipole_cm {
                p.non_negative("[comb] dipole_cm", d);
            }
            let atom = atom?.clone();
            let section = raw.atom.as_ref();
            let ground = section.map(|a| a.ground.clone()).unwrap_or_else(default_ground);
            let excited = section.map(|a| a.excited.clone()).unwrap_or_else(default_excited);
            for label in [&ground, &excited] {
                if let Err(e) = atom.manifold(label) {
                    p.push(format!("[atom] {e}"));
                }
            }
            let mut setup = CombSetup::cesium();
            setup.atom = atom;
            setup.ground = ground;
            setup.excited = excited;
            setup.field = raw.field.tesla;
            if let Some(l) = linewidth {
                setup.linewidth = l;
            }
            if let Some(m) = medium {
                setup.medium = *m;
            }
            setup.populations = c.populations.clone();
            Some(CombSource::Atomic(setup))
        }
        CombKind::Uniform => {
            stray(p, &["teeth", "spacing_ghz", "offset_ghz", "coupling_per_ns_m", "effective_depth", "carrier_thz"]);
            let teeth = c.teeth.unwrap_or(0);
            if teeth == 0 {
                p.push("[comb] teeth must be >= 1 for a uniform comb");
            }
            let spacing = c.spacing_ghz.unwrap_or(f64::NAN);
            p.positive("[comb] spacing_ghz", spacing);
            let linewidth = linewidth.unwrap_or_else(|| mhz_to_rad_per_ns(5.0));
            let spacing = ghz_to_rad_per_ns(spacing);
            let coupling = match (c.coupling_per_ns_m, c.effective_depth) {
                (Some(g), None) => {
                    p.non_negative("[comb] coupling_per_ns_m", g);
                    g
                }
                (None, Some(d)) => {
                    p.non_negative("[comb] effective_depth", d);
                    let length = medium.map(|m| m.length).unwrap_or(1.0);
                    d * spacing / (std::f64::consts::TAU * length)
                }
                _ => {
                    p.push("[comb] give exactly one of coupling_per_ns_m or effective_depth");
                    0.0
                }
            };
            let offset = c.offset_ghz.map(|o| {
                p.finite("[comb] offset_ghz", o);
                ghz_to_rad_per_ns(o)
            });
            let carrier = c.carrier_thz.unwrap_or(773.21);
            p.positive("[comb] carrier_thz", carrier);
            Some(CombSource::Uniform {
                teeth,
                spacing,
                linewidth,
                coupling,
                offset,
                carrier: thz_to_rad_per_ns(carrier),
            })
        }
        CombKind::File => {
            stray(p, &["path"]);
            if c.linewidth_mhz.is_some() {
                p.push("[comb] linewidth_mhz does not apply to a comb file");
            }
            let Some(path) = &c.path else {
                p.push("[comb] path is required for a comb file");
                return None;
            };
            match FrequencyComb::load(&resolve_path(base, path)) {
                Ok(comb) => Some(CombSource::File(comb)),
                Err(e) => {
                    p.push(format!("[comb] path {}: {e}", path.display()));
                    None
                }
            }
        }
    }
}

fn sweep_lengths(p: &mut Problems, s: &SweepSection) -> Vec<f64> {
    let lengths = match (&s.lengths_m, s.min_m, s.max_m, s.count) {
        (Some(l), None, None, None) => l.clone(),
        (None, Some(min), Some(max), Some(count)) => {
            p.positive("[sweep] min_m", min);
            if !(max > min) {
                p.push(format!("[sweep] max_m ({max}) must exceed min_m ({min})"));
            }
            if count < 2 {
                p.push("[sweep] count must be >= 2");
                Vec::new()
            } else {
                (0..count)
                    .map(|k| min + (max - min) * k as f64 / (count - 1) as f64)
                    .collect()
            }
        }
        _ => {
            p.push("[sweep] give either lengths_m or all of min_m, max_m and count");
            return Vec::new();
        }
    };
    if lengths.is_empty() {
        p.push("[sweep] length range is empty");
    }
    for &l in &lengths {
        p.positive("[sweep] length", l);
    }
    lengths
}

/// Polarizations a command runs over. Uniform and file combs carry their
/// own polarization; atomic combs use [sweep] polarizations for sweeps and
/// [run] polarization otherwise.
fn channel_polarizations(
    p: &mut Problems,
    raw: &RawConfig,
    comb: Option<&CombSource>,
    command: Command,
) -> Vec<Polarization> {
    match comb {
        Some(CombSource::Uniform { .. }) => return vec![Polarization::Pi],
        Some(CombSource::File(c)) => return vec![c.polarization()],
        _ => {}
    }
    let single = match &raw.run.polarization {
        Some(s) => parse_polarization(p, s),
        None => Some(Polarization::SigmaPlus),
    };
    let list = raw.sweep.as_ref().and_then(|s| s.polarizations.as_ref());
    let mut out = Vec::new();
    if let Some(list) = list {
        for s in list {
            if let Some(pol) = parse_polarization(p, s) {
                if out.contains(&pol) {
                    p.push(format!("[sweep] polarization {pol} listed twice"));
                }
                out.push(pol);
            }
        }
        if out.is_empty() {
            p.push("[sweep] polarizations must not be empty");
        }
    }
    if matches!(command, Command::Sweep | Command::Doppler) && !out.is_empty() {
        out
    } else {
        single.into_iter().collect()
    }
}

fn channel(
    p: &mut Problems,
    raw: &RawConfig,
    pulse: Option<&PulseSection>,
    pol: Polarization,
    comb: Option<&CombSource>,
) -> Channel {
    let overrides = raw.channel.get(pol.name());
    let empty = ChannelSection::default();
    let o = overrides.unwrap_or(&empty);
    let atomic = matches!(comb, Some(CombSource::Atomic(_)));
    let defaults = if atomic { cesium_channel(pol).ok() } else { None };
    let section = raw.comb.as_ref();

    let scale = if atomic {
        let depth = o.target_peak_depth.or(section.and_then(|c| c.target_peak_depth));
        let dipole = o.dipole_cm.or(section.and_then(|c| c.dipole_cm));
        if o.target_peak_depth.is_some() && o.dipole_cm.is_some() {
            p.push(format!("[channel.{}] give target_peak_depth or dipole_cm, not both", pol.name()));
        }
        if let Some(d) = o.target_peak_depth {
            p.positive(&format!("[channel.{}] target_peak_depth", pol.name()), d);
        }
        if let Some(d) = o.dipole_cm {
            p.non_negative(&format!("[channel.{}] dipole_cm", pol.name()), d);
        }
        match (o.dipole_cm, o.target_peak_depth, dipole, depth) {
            (Some(d), _, _, _) => Some(DipoleScale::Absolute(d)),
            (None, Some(t), _, _) => Some(DipoleScale::PeakDepth(t)),
            (None, None, Some(d), _) => Some(DipoleScale::Absolute(d)),
            (None, None, None, Some(t)) => Some(DipoleScale::PeakDepth(t)),
            _ => {
                let hint = defaults
                    .map(|d| format!(" (the shipped Cs calibration is target_peak_depth = {})", d.target_peak_depth))
                    .unwrap_or_default();
                p.push(format!(
                    "no dipole scale for {pol}: set target_peak_depth or dipole_cm in [comb] or [channel.{}]{hint}",
                    pol.name()
                ));
                None
            }
        }
    } else {
        if o.target_peak_depth.is_some() || o.dipole_cm.is_some() {
            p.push(format!("[channel.{}] dipole scale only applies to atomic combs", pol.name()));
        }
        None
    };
    Channel {
        polarization: pol,
        scale,
        pulse: pulse.and_then(|pulse| channel_pulse(p, pulse, o, pol)),
    }
}

fn channel_pulse(p: &mut Problems, pulse: &PulseSection, o: &ChannelSection, pol: Polarization) -> Option<GaussianPulse> {
    let width = o.width_ns.or(pulse.width_ns);
    let carrier = o.carrier_detuning_ghz.or(pulse.carrier_detuning_ghz);
    let center = o.center_ns.unwrap_or(pulse.center_ns);
    let (Some(width), Some(carrier)) = (width, carrier) else {
        p.push(format!(
            "pulse width_ns and carrier_detuning_ghz must be set in [pulse] or [channel.{}]",
            pol.name()
        ));
        return None;
    };
    p.positive("[pulse] amplitude", pulse.amplitude);
    p.positive(&format!("pulse width_ns ({pol})"), width);
    p.finite(&format!("pulse carrier_detuning_ghz ({pol})"), carrier);
    p.finite(&format!("pulse center_ns ({pol})"), center);
    Some(GaussianPulse {
        amplitude: pulse.amplitude,
        width,
        center,
        carrier_offset: ghz_to_rad_per_ns(carrier),
    })
}
