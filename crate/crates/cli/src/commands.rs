//! One function per subcommand, each turning a resolved run into an artifact.

use modegate::config::{ParityChoice, ResolvedRun};
use modegate::pulse::Parity;
use modegate::verify::{verify, VerifyOptions, VerifyReport};
use modegate::Result;
use serde_json::json;

use crate::output::{Artifact, Cell, Table};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Samples in the fig4 pulse table; `τ/2` falls exactly on the middle one.
pub const FIG4_SAMPLES: usize = 10_001;

pub fn modes(run: &ResolvedRun) -> Result<Artifact> {
    let s = &run.spectrum;
    let n = s.ion_count();
    let mut headers = vec![
        "mode".to_string(),
        "frequency_hz".into(),
        "omega_rad_s".into(),
        "k".into(),
        "delta_k".into(),
    ];
    headers.extend((0..n).map(|i| format!("nu_{i}")));
    headers.extend((0..n).map(|i| format!("eta_{i}")));
    let mut table = Table::new(headers);
    for p in 0..s.mode_count() {
        let w = s.frequencies[p];
        let mut row: Vec<Cell> = vec![
            p.into(),
            (w / TWO_PI).into(),
            w.into(),
            run.k[p].into(),
            run.delta_k[p].into(),
        ];
        row.extend(s.participation[p].iter().map(|&x| Cell::from(x)));
        row.extend(s.lamb_dicke[p].iter().map(|&x| Cell::from(x)));
        table.push(row);
    }
    let json = json!({
        "tau": run.tau,
        "k": run.k,
        "delta_k": run.delta_k,
        "fit_residual": run.fit_residual,
        "spectrum": s,
    });
    Ok(Artifact { table, json })
}

pub fn design(run: &ResolvedRun, parity: ParityChoice) -> Result<Artifact> {
    let report = run.design_report(&parity.parities())?;
    let mut table = Table::new([
        "parity",
        "selected_l",
        "l",
        "omega_hz",
        "chi",
        "chi_sign",
        "alpha",
        "delta_k_limit",
        "alpha0",
        "power_ratio",
    ]);
    for d in &report.designs {
        let tolerance = report.budget.as_ref().map(|b| match d.parity {
            Parity::Odd => &b.odd,
            Parity::Even => &b.even,
        });
        table.push(vec![
            d.parity.to_string().into(),
            d.selected_l.into(),
            d.design.pulse.l.into(),
            d.omega_hz.into(),
            d.design.chi.into(),
            d.design.chi_sign.into(),
            d.design.alpha.into(),
            tolerance.map_or(f64::NAN, |t| t.limit).into(),
            tolerance.map_or(f64::NAN, |t| t.alpha0).into(),
            report.power_ratio.unwrap_or(f64::NAN).into(),
        ]);
    }
    let json = serde_json::to_value(&report).expect("report serializes");
    Ok(Artifact { table, json })
}

pub fn fig3(run: &ResolvedRun, parity: ParityChoice) -> Result<Artifact> {
    let scan = run.scan()?;
    let keep = parity.parities();
    let mut table = Table::new(["l", "parity", "value", "resonant"]);
    for row in scan.rows.iter().filter(|r| keep.contains(&r.parity)) {
        table.push(vec![
            row.l.into(),
            row.parity.to_string().into(),
            row.value.into(),
            row.resonant.into(),
        ]);
    }
    Ok(Artifact::from_table(table))
}

pub fn fig4(run: &ResolvedRun) -> Result<Artifact> {
    let report = run.design_report(&[Parity::Odd, Parity::Even])?;
    let odd = &report.designs[0].design.pulse;
    let even = &report.designs[1].design.pulse;
    let mut table = Table::new(["t", "g_odd", "g_even"]);
    let last = (FIG4_SAMPLES - 1) as f64;
    for s in 0..FIG4_SAMPLES {
        let t = run.tau * (s as f64 / last);
        table.push(vec![
            t.into(),
            odd.eval_unchecked(t).into(),
            even.eval_unchecked(t).into(),
        ]);
    }
    Ok(Artifact::from_table(table))
}

fn shift_table(run: &ResolvedRun, parities: &[Parity]) -> Result<Table> {
    let report = run.design_report(parities)?;
    let sweeps = report
        .designs
        .iter()
        .map(|d| run.sweep(&d.design))
        .collect::<Result<Vec<_>>>()?;
    let mut headers = vec!["delta_omega".to_string()];
    headers.extend(report.designs.iter().map(|d| format!("alpha_{}", d.parity)));
    let mut table = Table::new(headers);
    for (r, first) in sweeps[0].rows.iter().enumerate() {
        let mut row = vec![Cell::from(first.delta_omega)];
        row.extend(sweeps.iter().map(|s| Cell::from(s.rows[r].alpha)));
        table.push(row);
    }
    Ok(table)
}

pub fn fig5(run: &ResolvedRun) -> Result<Artifact> {
    Ok(Artifact::from_table(shift_table(
        run,
        &[Parity::Odd, Parity::Even],
    )?))
}

pub fn sweep(run: &ResolvedRun, parity: ParityChoice) -> Result<Artifact> {
    Ok(Artifact::from_table(shift_table(run, &parity.parities())?))
}

pub fn engineer(run: &ResolvedRun) -> Result<Artifact> {
    let solutions = run.search()?;
    let n = run.spectrum.mode_count();
    let mut headers = vec![
        "rank".to_string(),
        "tau_us".into(),
        "residual".into(),
        "center_residual".into(),
    ];
    headers.extend((0..n).map(|p| format!("k_{p}")));
    headers.extend((0..n).map(|p| format!("frequency_hz_{p}")));
    let mut table = Table::new(headers);
    for (rank, s) in solutions.iter().enumerate() {
        let mut row: Vec<Cell> = vec![
            rank.into(),
            (s.tau * 1e6).into(),
            s.residual.into(),
            s.center_residual.into(),
        ];
        row.extend(s.k.iter().map(|&k| Cell::from(k)));
        row.extend(s.frequencies.iter().map(|&w| Cell::from(w / TWO_PI)));
        table.push(row);
    }
    let json = json!({ "windows": run.windows, "solutions": solutions });
    Ok(Artifact { table, json })
}

pub fn verify_run(run: &ResolvedRun, options: &VerifyOptions) -> Result<(Artifact, VerifyReport)> {
    let report = verify(run, options)?;
    let mut table = Table::new(["check", "instances", "max_error", "tolerance", "passed"]);
    for c in &report.checks {
        table.push(vec![
            c.name.clone().into(),
            c.instances.into(),
            c.max_error.into(),
            c.tolerance.into(),
            c.passed.into(),
        ]);
    }
    let json = serde_json::to_value(&report).expect("report serializes");
    Ok((Artifact { table, json }, report))
}
