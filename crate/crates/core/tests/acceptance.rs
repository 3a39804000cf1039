//! Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use combforge::angular::{spin_operators, Spin};
use combforge::comb::{centered_uniform_comb, FrequencyComb, Polarization};
use combforge::doppler::{thermal_average, velocity_nodes, ThermalSpec};
use combforge::echo::{analyze_echo, efficiency_forward};
use combforge::hyperfine::{build_hamiltonian, diagonalize, ManifoldSpec};
use combforge::pi_pulse::pi_pulse_unitary;
use combforge::propagation::{
    propagate, GaussianPulse, GridConfig, PropagationOptions, Propagator, TimeGrid,
};
use combforge::scenario::{cesium_channel, CombSetup, DipoleScale};
use combforge::sweep::{fit_sweep, length_sweep};
use combforge::toy::ToyModel;
use combforge::units::{ghz_to_rad_per_ns, mhz_to_rad_per_ns};
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

fn report(name: &str, pass: bool, detail: &str) {
    println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}

/// Comb spacing 2π·0.5 GHz.
fn half_ghz() -> f64 {
    ghz_to_rad_per_ns(0.5)
}

/// Coupling giving an effective comb depth d̃ = 2π g L / Δ at L = 1 m.
fn coupling_for_depth(depth: f64, spacing: f64) -> f64 {
    depth * spacing / (2.0 * PI)
}

fn uniform_comb_echo_law() -> bool {
    let start = Instant::now();
    let dw = half_ghz();
    let comb = centered_uniform_comb(10, dw, mhz_to_rad_per_ns(5.0), coupling_for_depth(0.3, dw), 1e6).unwrap();
    let pulse = GaussianPulse::new(1.0, 0.05, 0.0, 0.0).unwrap();
    let out = propagate(&pulse, &comb, 1.0, &GridConfig::default(), PropagationOptions::default()).unwrap();
    let input = Propagator::new(out.grid).input(&pulse);
    let r = efficiency_forward(&input, &out, comb.mean_spacing()).unwrap();
    let elapsed = start.elapsed();

    let dt = out.grid.dt;
    let first = r.first_echo_time.unwrap_or(f64::NAN);
    let second = r
        .echo_times
        .iter()
        .copied()
        .find(|&t| t > first + PI / dw)
        .unwrap_or(f64::NAN);
    let pass = dt <= 0.01
        && (first - r.transmitted_time - 2.0).abs() <= dt
        && (first - 2.0).abs() <= dt
        && (second - 4.0).abs() <= dt
        && elapsed < Duration::from_secs(1);
    report(
        "uniform-comb echo law",
        pass,
        &format!(
            "first echo {first:.4} ns, second {second:.4} ns, transmitted {:.4} ns, dt {dt:.4} ns, {:.3} s",
            r.transmitted_time,
            elapsed.as_secs_f64()
        ),
    );
    pass
}

fn toy_oracle_equivalence() -> bool {
    let start = Instant::now();
    let dw = half_ghz();
    let (tau, gamma) = (0.005, 0.002);
    let comb = centered_uniform_comb(10, dw, gamma, coupling_for_depth(0.005, dw), 1e6).unwrap();
    let pulse = GaussianPulse::new(1.0, tau, 0.0, 0.0).unwrap();
    let grid = GridConfig {
        points: Some(1 << 17),
        span: Some(200.0),
        start: None,
    };
    let out = propagate(&pulse, &comb, 1.0, &grid, PropagationOptions::default()).unwrap();
    let input = Propagator::new(out.grid).input(&pulse);
    let transmission = analyze_echo(&input.times(), &input.intensity(), &out.intensity(), dw)
        .unwrap()
        .transmission;

    let toy = ToyModel::new(10, -5.5 * dw, dw, 1.0, tau).unwrap();
    let period = 2.0 * PI / dw;
    let (mut pp, mut pi, mut ii) = (0.0, 0.0, 0.0);
    let mut pairs = Vec::new();
    for (t, i) in out.times().into_iter().zip(out.intensity()) {
        if t >= period / 2.0 && t < 1.5 * period {
            let p = toy.emission_probability(t).unwrap();
            pp += p * p;
            pi += p * i;
            ii += i * i;
            pairs.push((p, i));
        }
    }
    // Compare shapes: best-fit scale, then relative L2 residual.
    let scale = pi / ii;
    let err = pairs.iter().map(|(p, i)| (p - scale * i).powi(2)).sum::<f64>().sqrt() / pp.sqrt();
    let elapsed = start.elapsed();
    let pass = err < 1e-2 && transmission > 0.99 && elapsed < Duration::from_secs(1);
    report(
        "toy-oracle equivalence",
        pass,
        &format!(
            "relative L2 {err:.2e}, transmission {transmission:.5}, {:.3} s",
            elapsed.as_secs_f64()
        ),
    );
    pass
}

fn forward_efficiency_bound() -> bool {
    let start = Instant::now();
    let dw = half_ghz();
    let pulse = GaussianPulse::new(1.0, 0.05, 0.0, 0.0).unwrap();
    let mut best = (0.0, 0.0, 0.0);
    for finesse in [10.0, 30.0, 100.0, 200.0] {
        let comb = centered_uniform_comb(100, dw, dw / finesse, 1.0, 1e6).unwrap();
        let cfg = GridConfig {
            points: Some(1 << 17),
            ..GridConfig::default()
        };
        let prop = Propagator::new(TimeGrid::resolve(&cfg, &pulse, Some(&comb)).unwrap());
        let transfer = prop.transfer(&pulse, &comb, PropagationOptions::default()).unwrap();
        let input = prop.input(&pulse);
        for k in 0..31 {
            let depth = 0.5 + 0.1 * k as f64;
            let out = prop.propagate_with(&pulse, &transfer, depth * dw / (2.0 * PI)).unwrap();
            let eta = efficiency_forward(&input, &out, dw).unwrap().eta_forward;
            if eta > best.0 {
                best = (eta, finesse, depth);
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = best.0 <= 0.56 && best.0 >= 0.50 && elapsed < Duration::from_secs(60);
    report(
        "forward-efficiency bound",
        pass,
        &format!(
            "max eta_f {:.4} at finesse {} depth {:.2}, {:.2} s",
            best.0,
            best.1,
            best.2,
            elapsed.as_secs_f64()
        ),
    );
    pass
}

struct Channel {
    polarization: Polarization,
    comb: FrequencyComb,
    pulse: GaussianPulse,
    propagator: Propagator,
    mass: f64,
}

fn cesium(polarization: Polarization) -> Channel {
    let setup = CombSetup::cesium();
    let defaults = cesium_channel(polarization).unwrap();
    let comb = setup
        .comb(polarization, DipoleScale::PeakDepth(defaults.target_peak_depth))
        .unwrap();
    let pulse = GaussianPulse::new(1.0, defaults.pulse_width, 0.0, defaults.carrier_offset).unwrap();
    let grid = TimeGrid::resolve(&GridConfig::default(), &pulse, Some(&comb)).unwrap();
    Channel {
        polarization,
        comb,
        pulse,
        propagator: Propagator::new(grid),
        mass: setup.medium.mass,
    }
}

fn sweep_lengths() -> Vec<f64> {
    (1..=8).map(|k| 0.0125 * k as f64).collect()
}

fn cesium_efficiency_laws() -> bool {
    let start = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for (polarization, alpha_ref, eps_ref) in [
        (Polarization::SigmaPlus, 32.09, 0.902),
        (Polarization::SigmaMinus, 66.77, 0.895),
    ] {
        let ch = cesium(polarization);
        let spec = ThermalSpec::for_comb(&ch.comb, 0.0, ch.mass, 41).unwrap();
        let points = length_sweep(&ch.pulse, &ch.comb, &sweep_lengths(), &spec, &ch.propagator).unwrap();
        let fits = fit_sweep(&points).unwrap();
        let delay = points
            .iter()
            .find(|p| (p.length - 0.05).abs() < 1e-12)
            .and_then(|p| p.echo_delay)
            .unwrap_or(f64::NAN);
        let f = &fits.forward;
        let alpha = fits.transmission.alpha;
        let ok = f.r_squared >= 0.99
            && (f.epsilon - eps_ref).abs() <= 0.05
            && (alpha - alpha_ref).abs() <= 0.10 * alpha_ref
            && (0.43..=0.53).contains(&f.max_forward())
            && (0.85..=0.95).contains(&f.backward_saturation())
            && (delay - 3.0).abs() <= 0.3 * 3.0;
        pass &= ok;
        details.push(format!(
            "{}: R2 {:.4}, eps {:.4}, alpha {:.2} (forward {:.2}), max eta_f {:.4}, eta_b sat {:.4}, echo {:.3} ns",
            ch.polarization,
            f.r_squared,
            f.epsilon,
            alpha,
            f.alpha,
            f.max_forward(),
            f.backward_saturation(),
            delay
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(600);
    report(
        "cesium efficiency-law reproduction",
        pass,
        &format!("{}; {:.1} s", details.join("; "), elapsed.as_secs_f64()),
    );
    pass
}

fn doppler_robustness() -> bool {
    let start = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for polarization in [Polarization::SigmaPlus, Polarization::SigmaMinus] {
        let ch = cesium(polarization);
        let input = ch.propagator.input(&ch.pulse);
        let (times, intensity_in) = (input.times(), input.intensity());
        let dt = ch.propagator.grid().dt;
        let echo = |temperature: f64, order: usize| {
            let spec = ThermalSpec::for_comb(&ch.comb, temperature, ch.mass, order).unwrap();
            let out = thermal_average(&ch.pulse, &ch.comb, 0.05, &spec, &ch.propagator).unwrap();
            analyze_echo(&times, &intensity_in, &out, ch.comb.mean_spacing()).unwrap()
        };
        let cold = echo(0.0, 41);
        let warm = echo(100.0, 41);
        let warm_fine = echo(100.0, 81);
        let t_cold = cold.first_echo_time.unwrap_or(f64::NAN);
        let t_warm = warm.first_echo_time.unwrap_or(f64::NAN);
        let shift = (t_warm - t_cold).abs();
        let convergence = (warm_fine.eta_forward - warm.eta_forward).abs() / warm.eta_forward;

        let hot = ThermalSpec::for_comb(&ch.comb, 300.0, ch.mass, 41).unwrap();
        let points = length_sweep(&ch.pulse, &ch.comb, &sweep_lengths(), &hot, &ch.propagator).unwrap();
        let eta_b = fit_sweep(&points).unwrap().forward.backward_saturation();

        let ok = shift <= dt * (1.0 + 1e-9) && eta_b >= 0.80 && convergence < 1e-3;
        pass &= ok;
        details.push(format!(
            "{}: echo {t_cold:.4} ns at 0 K vs {t_warm:.4} ns at 100 K ({:.1} steps), eta_b(300 K) {eta_b:.4}, order 41->81 change {convergence:.1e}",
            ch.polarization,
            shift / dt
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(300);
    report(
        "doppler robustness",
        pass,
        &format!("{}; {:.1} s", details.join("; "), elapsed.as_secs_f64()),
    );
    pass
}

fn max_dev(a: &combforge::angular::Operator, b: &combforge::angular::Operator) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn angular_invariants() -> Result<(), String> {
    for twice in 0..=9 {
        let j = Spin::from_twice(twice);
        let s = spin_operators(j);
        let i = Complex64::new(0.0, 1.0);
        let checks = [
            max_dev(&(&s.x * &s.y - &s.y * &s.x), &(&s.z * i)),
            max_dev(&(&s.y * &s.z - &s.z * &s.y), &(&s.x * i)),
            max_dev(&(&s.z * &s.x - &s.x * &s.z), &(&s.y * i)),
            max_dev(
                &s.casimir(),
                &(combforge::angular::identity(j.dim()) * Complex64::new(j.casimir(), 0.0)),
            ),
        ];
        if checks.iter().any(|&c| c > 1e-12) {
            return Err(format!("j = {j}: deviations {checks:?}"));
        }
        for op in [&s.x, &s.y, &s.z] {
            if op != &op.adjoint() {
                return Err(format!("j = {j}: operator not Hermitian"));
            }
        }
    }
    Ok(())
}

fn manifold_strategy() -> impl Strategy<Value = (ManifoldSpec, f64)> {
    (0u32..=7, 0u32..=2, prop::bool::ANY, -5.0..5.0f64, -2.0..2.0f64, 0.0..2.0f64).prop_map(
        |(twice_i, l, up, a, gi, b)| {
            let s = Spin::HALF;
            let twice_j = if l == 0 || up { 2 * l + 1 } else { 2 * l - 1 };
            let spec = ManifoldSpec {
                label: "random".into(),
                nuclear_spin: Spin::from_twice(twice_i),
                j: Spin::from_twice(twice_j),
                l,
                s,
                hyperfine_a: a,
                g_nuclear: gi,
                energy_offset: 0.0,
            };
            (spec, b)
        },
    )
}

fn hamiltonian_invariants(runner: &mut TestRunner) -> Result<(), String> {
    runner
        .run(&manifold_strategy(), |(spec, b)| {
            let h = build_hamiltonian(&spec, b).unwrap();
            prop_assert!(h == h.adjoint());
            let eig = diagonalize(&h).unwrap();
            let v = &eig.vectors;
            let d = combforge::angular::Operator::from_diagonal(
                &eig.values.iter().map(|&e| Complex64::new(e, 0.0)).collect::<Vec<_>>().into(),
            );
            let rebuilt = v * d * v.adjoint();
            let scale = h.iter().map(|z| z.norm()).fold(1e-300, f64::max);
            prop_assert!(max_dev(&rebuilt, &h) <= 1e-9 * scale);
            let trace: f64 = (0..h.nrows()).map(|k| h[(k, k)].re).sum();
            let sum: f64 = eig.values.iter().sum();
            prop_assert!((trace - sum).abs() <= 1e-9 * scale * h.nrows() as f64);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn propagation_invariants(runner: &mut TestRunner) -> Result<(), String> {
    let strategy = (1usize..6, 1.0..6.0f64, 0.02..0.5f64, 0.0..5.0f64, -8.0..8.0f64, 0.03..0.2f64, -5.0..5.0f64, 0.0..0.5f64);
    runner
        .run(&strategy, |(n, spacing, gamma, coupling, offset, tau, carrier, length)| {
            let comb = combforge::comb::uniform_comb(n, spacing, gamma, coupling, offset, 1e6).unwrap();
            let pulse = GaussianPulse::new(1.0, tau, 0.0, carrier).unwrap();
            let prop = Propagator::new(TimeGrid::new(-3.0, 0.004, 1 << 12).unwrap());
            let opts = PropagationOptions::default();
            let out = prop.propagate(&pulse, &comb, length, opts).unwrap();
            let input = prop.input(&pulse);
            let (e_out, e_spec, e_in) = (out.energy(), out.spectral_energy(), input.spectral_energy());
            prop_assert!((e_out - e_spec).abs() <= 1e-9 * e_spec, "Parseval {e_out} vs {e_spec}");
            prop_assert!(e_out <= e_in * (1.0 + 1e-9), "passivity {e_out} > {e_in}");
            let a = 2.7;
            let scaled = prop.propagate(&pulse.scaled(a), &comb, length, opts).unwrap();
            let peak = out.time_field.iter().map(|z| z.norm()).fold(1e-300, f64::max);
            for (x, y) in scaled.time_field.iter().zip(&out.time_field) {
                prop_assert!((x - y * a).norm() <= 1e-9 * a * peak);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn pi_pulse_invariants(runner: &mut TestRunner) -> Result<(), String> {
    let minus = -combforge::angular::identity(6);
    if max_dev(&pi_pulse_unitary(3, 2.0 * PI).unwrap(), &minus) > 1e-12 {
        return Err("U(2π) != -I".into());
    }
    let strategy = (1usize..5, 0.0..PI, 0.0..PI, prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 8));
    runner
        .run(&strategy, |(n, t1, t2, raw)| {
            let u1 = pi_pulse_unitary(n, t1).unwrap();
            let u2 = pi_pulse_unitary(n, t2).unwrap();
            let u12 = pi_pulse_unitary(n, t1 + t2).unwrap();
            prop_assert!(max_dev(&(&u1 * &u2), &u12) <= 1e-12);
            let psi = nalgebra_vector(&raw[..2 * n]);
            let before = psi.norm();
            let after = (&u1 * &psi).norm();
            prop_assert!((before - after).abs() <= 1e-12 * before.max(1.0));
            let upi = pi_pulse_unitary(n, PI).unwrap();
            prop_assert!(max_dev(&(&upi * &upi), &(-combforge::angular::identity(2 * n))) <= 1e-12);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn nalgebra_vector(raw: &[(f64, f64)]) -> combforge::angular::Operator {
    combforge::angular::Operator::from_iterator(raw.len(), 1, raw.iter().map(|&(re, im)| Complex64::new(re, im)))
}

fn thermal_invariants(runner: &mut TestRunner) -> Result<(), String> {
    let strategy = (0.0..1000.0f64, 1e-26..1e-24f64, 0usize..50);
    runner
        .run(&strategy, |(t, mass, half_order)| {
            let spec = ThermalSpec::new(t, mass, 1.6e7, 2 * half_order + 1).unwrap();
            let nodes = velocity_nodes(&spec).unwrap();
            let total: f64 = nodes.iter().map(|n| n.1).sum();
            prop_assert!((total - 1.0).abs() <= 1e-12, "weights sum to {total}");
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn invariant_suite() -> bool {
    let start = Instant::now();
    let mut runner = TestRunner::new(Config {
        cases: 64,
        failure_persistence: None,
        ..Config::default()
    });
    let results = [
        ("angular", angular_invariants()),
        ("hamiltonian", hamiltonian_invariants(&mut runner)),
        ("propagation", propagation_invariants(&mut runner)),
        ("pi pulse", pi_pulse_invariants(&mut runner)),
        ("thermal weights", thermal_invariants(&mut runner)),
    ];
    let failures: Vec<String> = results
        .iter()
        .filter_map(|(name, r)| r.as_ref().err().map(|e| format!("{name}: {e}")))
        .collect();
    let pass = failures.is_empty();
    report(
        "invariant suite",
        pass,
        &if pass {
            format!("5 groups, 64 cases each, {:.2} s", start.elapsed().as_secs_f64())
        } else {
            failures.join("; ")
        },
    );
    pass
}

fn main() {
    let checks: [fn() -> bool; 6] = [
        uniform_comb_echo_law,
        toy_oracle_equivalence,
        forward_efficiency_bound,
        cesium_efficiency_laws,
        doppler_robustness,
        invariant_suite,
    ];
    let failed = checks.iter().filter(|check| !check()).count();
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
