//! Command pipelines. Each returns the files to write; nothing touches the
//! output directory until the whole computation has succeeded.

use std::f64::consts::PI;
use std::fmt::Write as _;

use combforge::comb::{
    absorption_spectrum, centered_uniform_comb, uniform_comb, FrequencyComb, MediumSpec, Polarization,
};
use combforge::doppler::{thermal_average, ThermalSpec, DEFAULT_ORDER};
use combforge::echo::{analyze_echo, efficiency_backward_model, EchoReport, EfficiencyFit};
use combforge::propagation::{GaussianPulse, GridConfig, PropagationOptions, Propagator, TimeGrid};
use combforge::sweep::{efficiency_vs_temperature, fit_sweep, length_sweep, SweepPoint};
use combforge::toy::ToyModel;
use combforge::units::{rad_per_ns_to_ghz, SPEED_OF_LIGHT_M_PER_NS};
use serde::Serialize;

use crate::config::{Channel, CombSource, Command, Plan, ToyPlan};
use crate::error::CliError;

pub type Output = Vec<(String, String)>;

pub fn run(command: Command, plan: &Plan) -> Result<Output, CliError> {
    match command {
        Command::Spectrum => spectrum(plan),
        Command::Echo => echo(plan),
        Command::Doppler => doppler(plan),
        Command::Sweep => sweep(plan),
        Command::Fit => fit(plan),
        Command::Toy => toy(plan),
    }
}

fn csv(kind: &str, columns: &str) -> String {
    format!("# combforge {kind} v1\n# {columns}\n")
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn medium(plan: &Plan) -> MediumSpec {
    plan.medium.expect("validated: medium present")
}

fn build_comb(plan: &Plan, channel: &Channel) -> Result<FrequencyComb, CliError> {
    let source = plan.comb.as_ref().expect("validated: comb present");
    Ok(match source {
        CombSource::Atomic(setup) => {
            let scale = channel.scale.expect("validated: atomic channel has a scale");
            setup.comb(channel.polarization, scale)?
        }
        &CombSource::Uniform {
            teeth,
            spacing,
            linewidth,
            coupling,
            offset,
            carrier,
        } => match offset {
            Some(o) => uniform_comb(teeth, spacing, linewidth, coupling, o, carrier)?,
            None => centered_uniform_comb(teeth, spacing, linewidth, coupling, carrier)?,
        },
        CombSource::File(comb) => comb.clone(),
    })
}

fn pulse(channel: &Channel) -> &GaussianPulse {
    channel.pulse.as_ref().expect("validated: pulse present")
}

fn thermal_order(plan: &Plan) -> usize {
    plan.doppler.as_ref().map_or(DEFAULT_ORDER, |d| d.order)
}

fn spectrum(plan: &Plan) -> Result<Output, CliError> {
    let medium = medium(plan);
    let comb = build_comb(plan, &plan.channels[0])?;
    let omegas: Vec<f64> = {
        let (lo, hi) = plan.spectrum.range.unwrap_or_else(|| {
            let pad = 20.0 * comb.teeth().iter().map(|t| t.linewidth).fold(0.0, f64::max);
            let lo = comb.teeth().iter().map(|t| -t.detuning).fold(f64::INFINITY, f64::min);
            let hi = comb.teeth().iter().map(|t| -t.detuning).fold(f64::NEG_INFINITY, f64::max);
            (lo - pad, hi + pad)
        });
        let n = plan.spectrum.points;
        (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
    };
    let chi = absorption_spectrum(&comb, &omegas)?;
    let depth_scale = comb.carrier() * medium.length / (2.0 * SPEED_OF_LIGHT_M_PER_NS);
    let mut out = csv("spectrum", "omega_GHz,im_chi,optical_depth");
    for (w, x) in omegas.iter().zip(&chi) {
        writeln!(out, "{},{},{}", rad_per_ns_to_ghz(*w), x, x * depth_scale).unwrap();
    }
    Ok(vec![
        ("comb.csv".into(), comb.to_csv(Some(medium.length))),
        ("spectrum.csv".into(), out),
    ])
}

fn trace_csv(times: &[f64], intensity_in: &[f64], intensity_out: &[f64]) -> String {
    let mut out = csv("trace", "t_ns,intensity_in,intensity_out");
    for ((t, a), b) in times.iter().zip(intensity_in).zip(intensity_out) {
        writeln!(out, "{t},{a},{b}").unwrap();
    }
    out
}

#[derive(Serialize)]
struct EchoRun {
    polarization: Polarization,
    length_m: f64,
    temperature_k: f64,
    teeth: usize,
    grid: TimeGrid,
    report: EchoReport,
}

fn echo(plan: &Plan) -> Result<Output, CliError> {
    let medium = medium(plan);
    let channel = &plan.channels[0];
    let comb = build_comb(plan, channel)?;
    let pulse = pulse(channel);
    let grid = TimeGrid::resolve(&plan.grid, pulse, Some(&comb))?;
    let prop = Propagator::new(grid);
    let input = prop.input(pulse);
    let times = input.times();
    let intensity_in = input.intensity();
    let mut files = Vec::new();
    let intensity_out = if medium.temperature > 0.0 {
        let spec = ThermalSpec::for_comb(&comb, medium.temperature, medium.mass, thermal_order(plan))?;
        thermal_average(pulse, &comb, medium.length, &spec, &prop)?
    } else {
        let field = prop.propagate(pulse, &comb, medium.length, PropagationOptions::default())?;
        files.push(("field.csv".to_string(), field.to_csv()));
        field.intensity()
    };
    let report = analyze_echo(&times, &intensity_in, &intensity_out, comb.mean_spacing())?;
    let summary = EchoRun {
        polarization: channel.polarization,
        length_m: medium.length,
        temperature_k: medium.temperature,
        teeth: comb.len(),
        grid,
        report,
    };
    files.push(("trace.csv".into(), trace_csv(&times, &intensity_in, &intensity_out)));
    files.push(("report.json".into(), json(&summary)?));
    Ok(files)
}

fn doppler(plan: &Plan) -> Result<Output, CliError> {
    let medium = medium(plan);
    let d = plan.doppler.as_ref().expect("validated: doppler present");
    let lengths = plan.lengths.as_ref().expect("validated: sweep present");
    let mut files = Vec::new();
    let mut reports = Vec::new();
    let mut table = csv(
        "efficiency_vs_temperature",
        "polarization,temperature_K,pulse_width_ns,alpha_per_m,epsilon,r_squared,max_eta_forward,eta_backward",
    );
    for channel in &plan.channels {
        let comb = build_comb(plan, channel)?;
        let pulse = pulse(channel);
        let grid = TimeGrid::resolve(&plan.grid, pulse, Some(&comb))?;
        let prop = Propagator::new(grid);
        let input = prop.input(pulse);
        let (times, intensity_in) = (input.times(), input.intensity());
        let spec = ThermalSpec::for_comb(&comb, d.trace_temperature, medium.mass, d.order)?;
        let out = thermal_average(pulse, &comb, medium.length, &spec, &prop)?;
        let report = analyze_echo(&times, &intensity_in, &out, comb.mean_spacing())?;
        files.push((
            format!("doppler_trace_{}.csv", channel.polarization),
            trace_csv(&times, &intensity_in, &out),
        ));
        reports.push(EchoRun {
            polarization: channel.polarization,
            length_m: medium.length,
            temperature_k: d.trace_temperature,
            teeth: comb.len(),
            grid,
            report,
        });
        let points = efficiency_vs_temperature(
            pulse,
            &comb,
            lengths,
            &d.temperatures,
            medium.mass,
            d.order,
            &prop,
            d.search,
        )?;
        for p in points {
            writeln!(
                table,
                "{},{},{},{},{},{},{},{}",
                channel.polarization,
                p.temperature,
                p.pulse_width,
                p.alpha,
                p.epsilon,
                p.r_squared,
                p.max_eta_forward,
                p.eta_backward
            )
            .unwrap();
        }
    }
    files.push(("doppler_report.json".into(), json(&reports)?));
    files.push(("efficiency_vs_temperature.csv".into(), table));
    Ok(files)
}

fn sweep(plan: &Plan) -> Result<Output, CliError> {
    let medium = medium(plan);
    let lengths = plan.lengths.as_ref().expect("validated: sweep present");
    let mut out = csv("sweep", "polarization,length_m,transmission,eta_forward,echo_delay_ns");
    for channel in &plan.channels {
        let comb = build_comb(plan, channel)?;
        let pulse = pulse(channel);
        let prop = Propagator::new(TimeGrid::resolve(&plan.grid, pulse, Some(&comb))?);
        let spec = ThermalSpec::for_comb(&comb, medium.temperature, medium.mass, thermal_order(plan))?;
        for p in length_sweep(pulse, &comb, lengths, &spec, &prop)? {
            let delay = p.echo_delay.map(|d| d.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{}",
                channel.polarization, p.length, p.transmission, p.eta_forward, delay
            )
            .unwrap();
        }
    }
    Ok(vec![("sweep.csv".into(), out)])
}

/// Rows of a sweep.csv, grouped by polarization in order of appearance.
pub fn parse_sweep(text: &str) -> Result<Vec<(Polarization, Vec<SweepPoint>)>, CliError> {
    let bad = |line: usize, msg: &str| CliError::Validation(format!("sweep.csv line {line}: {msg}"));
    let mut groups: Vec<(Polarization, Vec<SweepPoint>)> = Vec::new();
    let mut versioned = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(h) = line.strip_prefix('#') {
            versioned |= h.trim() == "combforge sweep v1";
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad(i + 1, &format!("expected 5 columns, found {}", f.len())));
        }
        let pol: Polarization = f[0].parse().map_err(|e: combforge::Error| bad(i + 1, &e.to_string()))?;
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(i + 1, &format!("bad number '{s}'")));
        let point = SweepPoint {
            length: num(f[1])?,
            transmission: num(f[2])?,
            eta_forward: num(f[3])?,
            echo_delay: if f[4].trim().is_empty() { None } else { Some(num(f[4])?) },
        };
        match groups.iter_mut().find(|g| g.0 == pol) {
            Some(g) => g.1.push(point),
            None => groups.push((pol, vec![point])),
        }
    }
    if !versioned {
        return Err(CliError::Validation("sweep.csv: missing '# combforge sweep v1' header".into()));
    }
    if groups.is_empty() {
        return Err(CliError::Validation("sweep.csv has no data rows".into()));
    }
    Ok(groups)
}

#[derive(Serialize)]
struct FitEntry {
    polarization: Polarization,
    transmission: EfficiencyFit,
    forward: EfficiencyFit,
    max_eta_forward: f64,
    eta_backward_saturation: f64,
}

fn fit(plan: &Plan) -> Result<Output, CliError> {
    let f = plan.fit.as_ref().expect("validated: fit present");
    let text = std::fs::read_to_string(&f.sweep)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", f.sweep.display())))?;
    let groups = parse_sweep(&text)?;
    let mut entries = Vec::new();
    let mut curve = csv("eta_b", "polarization,length_m,eta_backward");
    for (pol, points) in &groups {
        let fits = fit_sweep(points)?;
        let max_len = f
            .curve_max
            .unwrap_or_else(|| points.iter().map(|p| p.length).fold(0.0, f64::max));
        for k in 0..f.curve_points {
            let l = max_len * k as f64 / (f.curve_points - 1) as f64;
            let eta = efficiency_backward_model(fits.forward.alpha * l, fits.forward.epsilon)?;
            writeln!(curve, "{pol},{l},{eta}").unwrap();
        }
        entries.push(FitEntry {
            polarization: *pol,
            max_eta_forward: fits.forward.max_forward(),
            eta_backward_saturation: fits.forward.backward_saturation(),
            transmission: fits.transmission,
            forward: fits.forward,
        });
    }
    Ok(vec![("fit.json".into(), json(&entries)?), ("eta_b.csv".into(), curve)])
}

#[derive(Serialize)]
struct ToyReport {
    teeth: usize,
    spacing_ghz: f64,
    width_ns: f64,
    effective_depth: f64,
    window_ns: (f64, f64),
    transmission: f64,
    /// Least-squares factor mapping the propagated intensity onto P(t).
    scale: f64,
    relative_l2_error: f64,
}

fn toy(plan: &Plan) -> Result<Output, CliError> {
    let ToyPlan {
        teeth,
        spacing,
        width,
        linewidth,
        effective_depth,
    } = plan.toy.expect("validated: toy present");
    let period = 2.0 * PI / spacing;
    let comb = centered_uniform_comb(teeth, spacing, linewidth, effective_depth * spacing / (2.0 * PI), 1e6)?;
    let pulse = GaussianPulse::new(1.0, width, 0.0, 0.0)?;
    let grid = GridConfig {
        points: plan.grid.points.or(Some(1 << 17)),
        span: plan.grid.span.or(Some(100.0 * period)),
        start: plan.grid.start,
    };
    let out = combforge::propagation::propagate(&pulse, &comb, 1.0, &grid, PropagationOptions::default())?;
    let input = Propagator::new(out.grid).input(&pulse);
    let transmission = analyze_echo(&input.times(), &input.intensity(), &out.intensity(), spacing)?.transmission;

    let model = ToyModel::new(teeth, -(teeth as f64 + 1.0) / 2.0 * spacing, spacing, 1.0, width)?;
    let window = (period / 2.0, 1.5 * period);
    let mut rows = Vec::new();
    for (t, i) in out.times().into_iter().zip(out.intensity()) {
        if t >= window.0 && t < window.1 {
            rows.push((t, model.emission_probability(t)?, model.emission_probability_exact(t)?, i));
        }
    }
    let pi: f64 = rows.iter().map(|r| r.1 * r.3).sum();
    let ii: f64 = rows.iter().map(|r| r.3 * r.3).sum();
    let pp: f64 = rows.iter().map(|r| r.1 * r.1).sum();
    let scale = if ii > 0.0 { pi / ii } else { 0.0 };
    let err = rows.iter().map(|r| (r.1 - scale * r.3).powi(2)).sum::<f64>().sqrt() / pp.sqrt();

    let mut table = csv("toy", "t_ns,p_analytic,p_exact,intensity_scaled");
    for (t, p, q, i) in &rows {
        writeln!(table, "{t},{p},{q},{}", scale * i).unwrap();
    }
    let report = ToyReport {
        teeth,
        spacing_ghz: rad_per_ns_to_ghz(spacing),
        width_ns: width,
        effective_depth,
        window_ns: window,
        transmission,
        scale,
        relative_l2_error: err,
    };
    Ok(vec![("toy.csv".into(), table), ("toy_report.json".into(), json(&report)?)])
}
