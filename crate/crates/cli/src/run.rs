use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use semiprop::exactref::{exact_free, exact_harmonic, exact_wall, propagate_grid_snapshots, GridWavefunction};
use semiprop::rootsearch::{wmap_scan, FamilyLabel, MemberStatus, WScan};
use semiprop::semiclassics::{assemble, Assembly, System};
use semiprop::{CoherentState, Complex64, PotentialModel};

use crate::compare::{compare, ComparisonReport, ReportEntry, WaveTable, PHASE_FLOOR};
use crate::scenario::Scenario;

/// Everything computed for one packet width and one time.
#[derive(Debug, Clone)]
pub struct CaseResult {
    pub b: f64,
    pub t: f64,
    pub tables: Vec<(String, WaveTable)>,
    pub assemblies: Vec<Assembly>,
    /// Split-operator wavefunction on its own grid, when one was needed.
    pub exact_grid: Option<GridWavefunction>,
}

impl CaseResult {
    pub fn table(&self, label: &str) -> Option<&WaveTable> {
        self.tables.iter().find(|(l, _)| l == label).map(|(_, t)| t)
    }

    pub fn assembly(&self, label: &str) -> Option<&Assembly> {
        self.assemblies.iter().find(|a| a.formula.label() == label)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub cases: Vec<CaseResult>,
    pub report: ComparisonReport,
    pub files: Vec<PathBuf>,
}

impl RunOutput {
    pub fn case(&self, b: f64, t: f64) -> Option<&CaseResult> {
        self.cases.iter().find(|c| c.b == b && c.t == t)
    }
}

/// Whether the exact wavefunction has a closed form for this scenario.
fn has_closed_form(system: &System, state: &CoherentState) -> bool {
    match system {
        System::HardWall | System::Smooth(PotentialModel::Free) => true,
        System::Smooth(m @ PotentialModel::Harmonic { .. }) => exact_harmonic(state, m, 0.0, 0.0).is_ok(),
        System::Smooth(_) => false,
    }
}

fn closed_form(system: &System, state: &CoherentState, x: f64, t: f64) -> Result<Complex64> {
    Ok(match system {
        System::HardWall => exact_wall(state, x, t)?,
        System::Smooth(m @ PotentialModel::Harmonic { .. }) => exact_harmonic(state, m, x, t)?,
        System::Smooth(_) => exact_free(state, x, t),
    })
}

fn suffix(scenario: &Scenario, b: f64) -> String {
    if scenario.states.len() > 1 {
        format!("_b{b}")
    } else {
        String::new()
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

/// Computes every requested formula and the reference, without writing.
pub fn evaluate(scenario: &Scenario) -> Result<(Vec<CaseResult>, ComparisonReport)> {
    let grid = scenario.x_grid.points();
    let mut cases = Vec::new();
    let mut report = ComparisonReport::default();
    for state in &scenario.states {
        let settings = scenario.settings_for(state);
        let snapshots = if scenario.exact && !has_closed_form(&scenario.system, state) {
            let mut order: Vec<f64> = scenario.times.clone();
            order.sort_by(f64::total_cmp);
            order.dedup();
            let spec = &scenario.exact_grid;
            let snaps = propagate_grid_snapshots(&scenario.model(), state, &order, spec.grid, spec.dt, spec.leak_tolerance)
                .context("exact grid propagation")?;
            Some(order.into_iter().zip(snaps).collect::<Vec<_>>())
        } else {
            None
        };
        for &t in &scenario.times {
            let mut case = CaseResult { b: state.b(), t, tables: Vec::new(), assemblies: Vec::new(), exact_grid: None };
            let exact = if scenario.exact {
                let mut table = WaveTable::default();
                match &snapshots {
                    Some(snaps) => {
                        let psi = &snaps.iter().find(|(s, _)| *s == t).expect("snapshot for every time").1;
                        for &x in &grid {
                            table.push(x, psi.value_at(x), "EXACT", "-");
                        }
                        case.exact_grid = Some(psi.clone());
                    }
                    None => {
                        for &x in &grid {
                            table.push(x, closed_form(&scenario.system, state, x, t)?, "EXACT", "-");
                        }
                    }
                }
                Some(table)
            } else {
                None
            };
            for &formula in &scenario.formulas {
                let assembly = assemble(&scenario.system, state, formula, &grid, t, &settings)
                    .with_context(|| format!("{} at T = {t}, b = {}", formula.label(), state.b()))?;
                let mut table = WaveTable::default();
                for s in &assembly.samples {
                    table.push(s.x_f, s.psi, formula.label(), &s.flags.describe());
                }
                if let Some(ex) = &exact {
                    let comparison = compare(&table.x, &table.psi, &ex.x, &ex.psi, PHASE_FLOOR)?;
                    let flagged = assembly.samples.iter().filter(|s| s.flags.any()).count();
                    report.entries.push(ReportEntry {
                        formula: formula.label().to_string(),
                        b: state.b(),
                        t,
                        comparison,
                        flagged,
                    });
                }
                case.tables.push((formula.label().to_string(), table));
                case.assemblies.push(assembly);
            }
            if let Some(ex) = exact {
                case.tables.push(("EXACT".to_string(), ex));
            }
            cases.push(case);
        }
    }
    Ok((cases, report))
}

/// Runs a scenario and writes its CSVs, the resolved config and the report
/// into `out`.
pub fn run_scenario(scenario: &Scenario, out: &Path) -> Result<RunOutput> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let (cases, report) = evaluate(scenario)?;
    let mut files = Vec::new();

    let path = out.join("config.cfg");
    fs::write(&path, scenario.resolved().to_string())?;
    files.push(path);

    for case in &cases {
        let sfx = suffix(scenario, case.b);
        for (label, table) in &case.tables {
            let path = out.join(format!("psi_{}_T{}{sfx}.csv", label.to_ascii_lowercase(), case.t));
            let mut w = create(&path)?;
            table.write_csv(&mut w)?;
            w.flush()?;
            files.push(path);
        }
        if let Some(snapshot) = &case.exact_grid {
            let path = out.join(format!("exact_grid_T{}{sfx}.csv", case.t));
            let mut w = create(&path)?;
            snapshot.write_csv(&mut w)?;
            w.flush()?;
            files.push(path);
        }
    }
    if !report.entries.is_empty() {
        let path = out.join("report.csv");
        let mut w = create(&path)?;
        report.write_csv(&mut w)?;
        w.flush()?;
        files.push(path);
    }
    Ok(RunOutput { cases, report, files })
}

/// The w-plane picture at one time for one packet width.
#[derive(Debug, Clone)]
pub struct MapData {
    pub b: f64,
    pub scan: WScan,
    pub assembly: Assembly,
}

fn family_name(label: FamilyLabel) -> String {
    match label {
        FamilyLabel::Main => "main".to_string(),
        FamilyLabel::Secondary(k) => format!("secondary{k}"),
    }
}

/// Scans the map `w -> X_T(w)`, traces the families and writes `scan`,
/// `families`, `caustics` and `cuts` CSVs plus the resolved config.
pub fn emit_map_data(scenario: &Scenario, t: f64, out: &Path) -> Result<Vec<MapData>> {
    let System::Smooth(model) = scenario.system else {
        anyhow::bail!("the w-map needs a smooth potential");
    };
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    fs::write(out.join("config.cfg"), scenario.resolved().to_string())?;
    let grid = scenario.x_grid.points();
    let mut maps = Vec::new();
    for state in &scenario.states {
        let settings = scenario.settings_for(state);
        let assembly = assemble(&scenario.system, state, semiprop::semiclassics::Formula::Ct, &grid, t, &settings)?;
        let scan = match &assembly.scan {
            Some(s) => s.clone(),
            None => wmap_scan(&model, state, t, &settings.lattice_for(state), &settings.scan_integrator()),
        };
        let sfx = suffix(scenario, state.b());

        let mut w = create(&out.join(format!("scan_T{t}{sfx}.csv")))?;
        scan.write_csv(&mut w)?;
        w.flush()?;

        let mut w = create(&out.join(format!("families_T{t}{sfx}.csv")))?;
        writeln!(w, "family,x_f,re_w,im_w,re_f,im_f,contributing")?;
        for fam in &assembly.families {
            for m in &fam.members {
                writeln!(
                    w,
                    "{},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{}",
                    family_name(fam.label),
                    m.x_f,
                    m.w.re,
                    m.w.im,
                    m.f.re,
                    m.f.im,
                    m.status == MemberStatus::Contributing
                )?;
            }
        }
        w.flush()?;

        let mut w = create(&out.join(format!("caustics_T{t}{sfx}.csv")))?;
        writeln!(w, "re_w,im_w,re_x_t,im_x_t,residual,distance_over_b")?;
        for c in &assembly.caustics {
            writeln!(
                w,
                "{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}",
                c.w_c.re,
                c.w_c.im,
                c.x_t.re,
                c.x_t.im,
                c.residual,
                c.w_c.norm() / state.b()
            )?;
        }
        w.flush()?;

        let mut w = create(&out.join(format!("cuts_T{t}{sfx}.csv")))?;
        writeln!(w, "family,kept_x_f,removed_x_f,jump")?;
        for c in &assembly.cuts {
            writeln!(w, "{},{:.11e},{:.11e},{:.11e}", family_name(c.family), c.kept_x_f, c.removed_x_f, c.jump)?;
        }
        w.flush()?;

        maps.push(MapData { b: state.b(), scan, assembly });
    }
    Ok(maps)
}
